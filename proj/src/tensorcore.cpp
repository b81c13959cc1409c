#include "qmarg/tensorcore.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace qmarg {

namespace {

// Linear-index offsets of the kept and of the traced-out subsystems, so that
// every basis index of the full space is kept[a] + traced[t] exactly once.
struct SplitOffsets {
  std::vector<Eigen::Index> kept;
  std::vector<Eigen::Index> traced;
};

std::vector<Eigen::Index> offsets_of(const std::vector<std::size_t>& dims,
                                     const std::vector<std::size_t>& strides,
                                     const Subsystems& subsystems) {
  std::vector<Eigen::Index> out{0};
  for (std::size_t s : subsystems) {
    std::vector<Eigen::Index> next;
    next.reserve(out.size() * dims[s]);
    for (Eigen::Index base : out)
      for (std::size_t i = 0; i < dims[s]; ++i)
        next.push_back(base + static_cast<Eigen::Index>(i * strides[s]));
    out = std::move(next);
  }
  return out;
}

SplitOffsets split_offsets(const SystemDims& dims, const Subsystems& keep) {
  const auto& d = dims.dims();
  std::vector<std::size_t> strides(d.size(), 1);
  for (std::size_t i = d.size(); i-- > 1;) strides[i - 1] = strides[i] * d[i];
  return {offsets_of(d, strides, keep), offsets_of(d, strides, dims.complement(keep))};
}

void require_order(const HermitianMatrix& h, const SystemDims& dims) {
  if (static_cast<std::size_t>(h.order()) != dims.total()) {
    std::ostringstream os;
    os << "matrix order " << h.order() << " does not match subsystem dimensions (total "
       << dims.total() << ")";
    throw DimensionError(os.str());
  }
}

}  // namespace

// ---------------------------------------------------------------- SystemDims

SystemDims::SystemDims(std::vector<std::size_t> dims) : dims_(std::move(dims)), total_(1) {
  if (dims_.empty()) throw DimensionError("a system needs at least one subsystem");
  for (std::size_t n : dims_) {
    if (n == 0) throw DimensionError("subsystem dimensions must be positive");
    total_ *= n;
  }
}

std::size_t SystemDims::total_of(const Subsystems& subsystems) const {
  std::size_t n = 1;
  for (std::size_t s : subsystems) n *= dims_.at(s);
  return n;
}

Subsystems SystemDims::complement(const Subsystems& subsystems) const {
  Subsystems out;
  for (std::size_t i = 0; i < dims_.size(); ++i)
    if (std::find(subsystems.begin(), subsystems.end(), i) == subsystems.end()) out.push_back(i);
  return out;
}

SystemDims SystemDims::restricted_to(const Subsystems& subsystems) const {
  std::vector<std::size_t> d;
  for (std::size_t s : subsystems) d.push_back(dims_.at(s));
  return SystemDims(std::move(d));
}

void SystemDims::validate(const Subsystems& subsystems) const {
  for (std::size_t i = 0; i < subsystems.size(); ++i) {
    if (subsystems[i] >= dims_.size())
      throw DimensionError("subsystem index " + std::to_string(subsystems[i]) +
                           " out of range for a " + std::to_string(dims_.size()) +
                           "-partite system");
    if (i > 0 && subsystems[i] <= subsystems[i - 1])
      throw DimensionError("subsystem index sets must be strictly ascending");
  }
}

// ----------------------------------------------------------- HermitianMatrix

HermitianMatrix::HermitianMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("Hermitian matrix must be square");
  m_ = (m + m.adjoint()) / 2.0;
}

HermitianMatrix HermitianMatrix::checked(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) throw DimensionError("Hermitian matrix must be square");
  const double asym = m.size() == 0 ? 0.0 : (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (asym > tol) {
    std::ostringstream os;
    os << "matrix is not Hermitian: max |H - H*| = " << asym;
    throw PreconditionError(os.str());
  }
  return HermitianMatrix(m);
}

HermitianMatrix HermitianMatrix::zero(Eigen::Index order) {
  return HermitianMatrix(Matrix::Zero(order, order));
}

HermitianMatrix HermitianMatrix::identity(Eigen::Index order) {
  return HermitianMatrix(Matrix::Identity(order, order));
}

HermitianMatrix HermitianMatrix::operator+(const HermitianMatrix& o) const {
  HermitianMatrix h;
  h.m_ = m_ + o.m_;
  return h;
}

HermitianMatrix HermitianMatrix::operator-(const HermitianMatrix& o) const {
  HermitianMatrix h;
  h.m_ = m_ - o.m_;
  return h;
}

HermitianMatrix HermitianMatrix::operator*(double s) const {
  HermitianMatrix h;
  h.m_ = m_ * s;
  return h;
}

double inner(const HermitianMatrix& a, const HermitianMatrix& b) {
  return (a.matrix().conjugate().cwiseProduct(b.matrix())).sum().real();
}

// ------------------------------------------------------------- DensityMatrix

DensityMatrix::DensityMatrix(HermitianMatrix h, SystemDims dims)
    : h_(std::move(h)), dims_(std::move(dims)) {
  require_order(h_, dims_);
  if (std::abs(h_.trace() - 1.0) > kTraceTolerance) {
    std::ostringstream os;
    os << "density matrix must have unit trace (trace = " << h_.trace() << ")";
    throw PreconditionError(os.str());
  }
  const double min_eig = hermitian_eig(h_).values.minCoeff();
  if (min_eig < -kPsdTolerance) {
    std::ostringstream os;
    os << "density matrix must be positive semidefinite (min eigenvalue = " << min_eig << ")";
    throw PreconditionError(os.str());
  }
}

DensityMatrix::DensityMatrix(HermitianMatrix h)
    : DensityMatrix(h, SystemDims({static_cast<std::size_t>(std::max<Eigen::Index>(h.order(), 1))})) {}

// ------------------------------------------------------------------ Spectrum

Spectrum::Spectrum(RealVector values) : values_(std::move(values)) {
  std::sort(values_.data(), values_.data() + values_.size(), std::greater<>());
}

Spectrum::Spectrum(const std::vector<double>& values)
    : Spectrum(RealVector(Eigen::Map<const RealVector>(values.data(),
                                                       static_cast<Eigen::Index>(values.size())))) {}

bool Spectrum::is_probability(double tol) const {
  if (values_.size() == 0) return false;
  return values_.minCoeff() >= -tol && std::abs(values_.sum() - 1.0) <= tol;
}

Spectrum Spectrum::normalized() const {
  const double s = sum();
  if (!(s > 0)) throw PreconditionError("cannot normalize a spectrum with nonpositive sum");
  return Spectrum(RealVector(values_ / s));
}

Matrix EigDecomposition::reconstruct() const {
  return vectors * values.cast<Complex>().asDiagonal() * vectors.adjoint();
}

// ------------------------------------------------------------------- kernels

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

HermitianMatrix partial_trace(const HermitianMatrix& rho, const SystemDims& dims,
                              const Subsystems& keep) {
  require_order(rho, dims);
  dims.validate(keep);
  if (keep.empty()) throw DimensionError("partial trace needs a nonempty kept set; use trace()");
  const SplitOffsets off = split_offsets(dims, keep);
  const auto nk = static_cast<Eigen::Index>(off.kept.size());
  const Matrix& m = rho.matrix();
  Matrix out = Matrix::Zero(nk, nk);
  for (Eigen::Index a = 0; a < nk; ++a)
    for (Eigen::Index b = 0; b < nk; ++b) {
      Complex s = 0;
      for (Eigen::Index t : off.traced) s += m(off.kept[a] + t, off.kept[b] + t);
      out(a, b) = s;
    }
  return HermitianMatrix(out);
}

RealMatrix subsystem_permutation(const SystemDims& dims, const Subsystems& keep) {
  dims.validate(keep);
  const SplitOffsets off = split_offsets(dims, keep);
  const auto n = static_cast<Eigen::Index>(dims.total());
  const auto nk = static_cast<Eigen::Index>(off.kept.size());
  RealMatrix p = RealMatrix::Zero(n, n);
  for (std::size_t t = 0; t < off.traced.size(); ++t)
    for (Eigen::Index a = 0; a < nk; ++a)
      p(static_cast<Eigen::Index>(t) * nk + a, off.kept[a] + off.traced[t]) = 1.0;
  return p;
}

Matrix embed_on_subsystems(const Matrix& block, const SystemDims& dims, const Subsystems& keep) {
  dims.validate(keep);
  const auto n = static_cast<Eigen::Index>(dims.total());
  if (static_cast<std::size_t>(block.rows()) != dims.total_of(keep) || block.rows() != block.cols())
    throw DimensionError("block order does not match the kept subsystems");
  if (keep.empty()) return block(0, 0) * Matrix::Identity(n, n);
  const SplitOffsets off = split_offsets(dims, keep);
  const auto nk = static_cast<Eigen::Index>(off.kept.size());
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index t : off.traced)
    for (Eigen::Index a = 0; a < nk; ++a)
      for (Eigen::Index b = 0; b < nk; ++b) out(off.kept[a] + t, off.kept[b] + t) = block(a, b);
  return out;
}

EigDecomposition hermitian_eig(const HermitianMatrix& h) {
  const Eigen::Index n = h.order();
  EigDecomposition out{Matrix(n, n), RealVector(n)};
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h.matrix());
  if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver did not converge");
  const RealVector& asc = solver.eigenvalues();
  const Matrix& vecs = solver.eigenvectors();

  // Emit clusters from the top down, keeping the backend order of the
  // eigenpairs inside each (values there may be out of order by at most the
  // cluster width).
  std::vector<std::pair<Eigen::Index, Eigen::Index>> clusters;  // [begin, end) in ascending order
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i + 1;
    while (j < n && asc(j) - asc(j - 1) <= kDegeneracyTolerance) ++j;
    clusters.emplace_back(i, j);
    i = j;
  }
  Eigen::Index col = 0;
  for (auto it = clusters.rbegin(); it != clusters.rend(); ++it)
    for (Eigen::Index i = it->first; i < it->second; ++i, ++col) {
      out.values(col) = asc(i);
      out.vectors.col(col) = vecs.col(i);
    }

  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index arg = 0;
    out.vectors.col(c).cwiseAbs().maxCoeff(&arg);
    const Complex pivot = out.vectors(arg, c);
    if (std::abs(pivot) > 0) out.vectors.col(c) *= std::conj(pivot) / std::abs(pivot);
  }
  return out;
}

std::size_t numerical_rank(const RealVector& descending_values) {
  if (descending_values.size() == 0) return 0;
  const double threshold = kRankTolerance * std::max(1.0, descending_values(0));
  return static_cast<std::size_t>((descending_values.array() > threshold).count());
}

std::size_t numerical_rank(const HermitianMatrix& h) { return numerical_rank(hermitian_eig(h).values); }

// -------------------------------------------------------------------- random

Matrix random_unitary(std::size_t n, std::mt19937_64& rng) {
  if (n == 0) throw DimensionError("unitary order must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(n);
  Matrix g(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im) / std::sqrt(2.0);
    }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(m, m);
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < m; ++j) {
    const Complex d = r(j, j);
    if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

Matrix random_unitary(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_unitary(n, rng);
}

Spectrum random_probability_vector(std::size_t n, std::mt19937_64& rng) {
  if (n == 0) throw DimensionError("probability vector length must be positive");
  std::exponential_distribution<double> expo(1.0);
  RealVector p(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = expo(rng);
  p /= p.sum();
  return Spectrum(std::move(p));
}

Spectrum random_probability_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_probability_vector(n, rng);
}

DensityMatrix random_density(const SystemDims& dims, std::mt19937_64& rng) {
  const Matrix u = random_unitary(dims.total(), rng);
  const Spectrum p = random_probability_vector(dims.total(), rng);
  return DensityMatrix(HermitianMatrix(u * p.values().cast<Complex>().asDiagonal() * u.adjoint()),
                       dims);
}

DensityMatrix random_density(const SystemDims& dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_density(dims, rng);
}

}  // namespace qmarg
