#include "qmarg/oracle.hpp"

#include <cmath>
#include <numbers>

#include "qmarg/constructive.hpp"

namespace qmarg {

namespace {

constexpr double kPinvCutoff = 1e-12;
constexpr double kConsistencyResidual = 1e-8;

Matrix commuting_phases(const DensityMatrix& rho, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const EigDecomposition eig = hermitian_eig(rho.hermitian());
  Vector phases(eig.values.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) phases(i) = std::polar(1.0, angle(rng));
  return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

}  // namespace

RealVector parametrize(const HermitianMatrix& h) {
  const Eigen::Index n = h.order();
  RealVector x(n * n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) x(k++) = h(i, i).real();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      x(k++) = std::sqrt(2.0) * h(i, j).real();
      x(k++) = std::sqrt(2.0) * h(i, j).imag();
    }
  return x;
}

HermitianMatrix unparametrize(const RealVector& x, Eigen::Index order) {
  if (x.size() != order * order) throw DimensionError("parameter vector length does not match order");
  Matrix m(order, order);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < order; ++i) m(i, i) = x(k++);
  for (Eigen::Index i = 0; i < order; ++i)
    for (Eigen::Index j = i + 1; j < order; ++j) {
      const Complex v(x(k), x(k + 1));
      k += 2;
      m(i, j) = v / std::sqrt(2.0);
      m(j, i) = std::conj(m(i, j));
    }
  return HermitianMatrix(m);
}

VectorizedConstraints vectorize_constraints(const ConstraintSet& cs) {
  const auto n = static_cast<Eigen::Index>(cs.dims().total());
  Eigen::Index rows = 0;
  for (const auto& c : cs.constraints()) rows += c.target.order() * c.target.order();
  VectorizedConstraints vc{RealMatrix::Zero(rows, n * n), RealVector::Zero(rows), cs.dims()};

  // Column p of A is the stacked marginals of the p-th basis matrix.
  const RealMatrix basis = RealMatrix::Identity(n * n, n * n);
  for (Eigen::Index p = 0; p < n * n; ++p) {
    const HermitianMatrix e = unparametrize(basis.col(p), n);
    Eigen::Index row = 0;
    for (const auto& c : cs.constraints()) {
      const RealVector block = parametrize(partial_trace(e, cs.dims(), c.keep));
      vc.a.block(row, p, block.size(), 1) = block;
      row += block.size();
    }
  }
  Eigen::Index row = 0;
  for (const auto& c : cs.constraints()) {
    const RealVector block = parametrize(c.target);
    vc.b.segment(row, block.size()) = block;
    row += block.size();
  }
  return vc;
}

HermitianMatrix pseudoinverse_projection(const HermitianMatrix& z, const VectorizedConstraints& vc) {
  const auto n = static_cast<Eigen::Index>(vc.dims.total());
  if (z.order() != n) throw DimensionError("matrix order does not match constraint dimensions");
  Eigen::JacobiSVD<RealMatrix> svd(vc.a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& sv = svd.singularValues();
  const double cutoff = sv.size() ? kPinvCutoff * sv(0) : 0.0;
  RealVector inv = RealVector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  auto pinv_apply = [&](const RealVector& r) -> RealVector {
    return svd.matrixV() * inv.asDiagonal() * (svd.matrixU().transpose() * r);
  };

  const double inconsistency = (vc.a * pinv_apply(vc.b) - vc.b).norm();
  if (inconsistency > kConsistencyResidual)
    throw InconsistentConstraintsError(
        "constraint system has no solution (least-squares residual " + std::to_string(inconsistency) + ")",
        inconsistency);

  const RealVector x = parametrize(z);
  return unparametrize(x - pinv_apply(vc.a * x - vc.b), n);
}

double variational_inequality_check(const HermitianMatrix& z, const HermitianMatrix& x_star,
                                    const std::vector<HermitianMatrix>& feasible_samples) {
  const HermitianMatrix dz = z - x_star;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& y : feasible_samples) worst = std::max(worst, inner(dz, y - x_star));
  return worst;
}

std::vector<HermitianMatrix> feasible_samples(const DensityMatrix& rho1, const DensityMatrix& rho2,
                                              std::size_t count, std::mt19937_64& rng) {
  std::vector<HermitianMatrix> base;
  base.emplace_back(kron(rho1.matrix(), rho2.matrix()));
  base.push_back(greedy_minmatch(rho1, rho2).state.hermitian());
  base.push_back(interlace_decomposition(rho1, rho2).state.hermitian());
  const RankInterval roots = roots_of_unity_interval(rho1, rho2);
  const RankInterval sweep = rank_sweep_interval(rho1, rho2);
  for (std::size_t k = roots.low; k <= roots.high; ++k)
    base.push_back(rank_k_roots_of_unity(rho1, rho2, k).hermitian());
  for (std::size_t k = sweep.low; k <= sweep.high; ++k) base.push_back(rank_sweep(rho1, rho2, k).hermitian());

  std::uniform_int_distribution<std::size_t> pick(0, base.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto conjugated = [&](const HermitianMatrix& h) {
    const Matrix w = kron(commuting_phases(rho1, rng), commuting_phases(rho2, rng));
    return HermitianMatrix(w * h.matrix() * w.adjoint());
  };

  std::vector<HermitianMatrix> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    HermitianMatrix y = conjugated(base[pick(rng)]);
    if (i % 2 == 1) {
      const double t = unit(rng);
      y = y * t + conjugated(base[pick(rng)]) * (1.0 - t);
    }
    out.push_back(std::move(y));
  }
  return out;
}

}  // namespace qmarg
