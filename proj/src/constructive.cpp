#include "qmarg/constructive.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace qmarg {

namespace {

// Spectral values at or below this are exhausted.
constexpr double kExhausted = 1e-12;
// Interlacing comparisons tolerate round-off of this size.
constexpr double kInterlaceSlack = 1e-12;

struct Eigenbasis {
  Matrix vectors;
  RealVector values;  // descending, clipped at 0, zeroed below the rank threshold
  std::size_t rank;
};

Eigenbasis eigenbasis_of(const HermitianMatrix& rho) {
  EigDecomposition eig = hermitian_eig(rho);
  const std::size_t rank = numerical_rank(eig.values);
  RealVector values = eig.values.cwiseMax(0.0);
  for (auto i = static_cast<Eigen::Index>(rank); i < values.size(); ++i) values(i) = 0.0;
  return {std::move(eig.vectors), std::move(values), rank};
}

DensityMatrix bipartite_state(const Matrix& m, const DensityMatrix& rho1, const DensityMatrix& rho2) {
  return DensityMatrix(HermitianMatrix(m), SystemDims::bipartite(static_cast<std::size_t>(rho1.order()),
                                                                 static_cast<std::size_t>(rho2.order())));
}

Matrix sum_of_outer_products(const std::vector<Vector>& vectors, Eigen::Index n) {
  Matrix m = Matrix::Zero(n, n);
  for (const Vector& w : vectors) m += w * w.adjoint();
  return m;
}

Vector kron_vec(const Vector& x, const Vector& y) {
  Vector out(x.size() * y.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out.segment(i * y.size(), y.size()) = x(i) * y;
  return out;
}

void require_rank(std::size_t k, const RankInterval& range, const char* what) {
  if (k < range.low || k > range.high) {
    std::ostringstream os;
    os << what << ": rank " << k << " outside the admissible interval [" << range.low << ", "
       << range.high << "]";
    throw PreconditionError(os.str());
  }
}

// Roots-of-unity construction on diagonal spectra a, b (both summing to one),
// in the product basis.
Matrix roots_of_unity_diagonal(const RealVector& a, const RealVector& b, std::size_t k) {
  const Eigen::Index n1 = a.size();
  const Eigen::Index n2 = b.size();
  Matrix rho = Matrix::Zero(n1 * n2, n1 * n2);
  const double kk = static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    Vector u(n1), v(n2);
    for (Eigen::Index j = 0; j < n1; ++j)
      u(j) = std::polar(std::sqrt(a(j)), 2.0 * std::numbers::pi * static_cast<double>(i * static_cast<std::size_t>(j) % k) / kk);
    for (Eigen::Index j = 0; j < n2; ++j)
      v(j) = std::polar(std::sqrt(b(j)), 2.0 * std::numbers::pi * static_cast<double>(i * static_cast<std::size_t>(j) % k) / kk);
    const Vector z = kron_vec(u, v);
    rho += z * z.adjoint() / kk;
  }
  return rho;
}

// State with diagonal marginals diag(a), diag(b) (equal positive sums, all
// entries positive) and rank exactly k, in the product basis.
Matrix sweep_diagonal(const RealVector& a, const RealVector& b, std::size_t k) {
  const auto p = static_cast<std::size_t>(a.size());
  const auto q = static_cast<std::size_t>(b.size());
  const double t = a.sum();
  if (p == 1 || q == 1) {
    const RealVector prod = kron(Matrix(a.cast<Complex>().asDiagonal()), Matrix(b.cast<Complex>().asDiagonal()))
                                .diagonal()
                                .real() /
                            t;
    return Matrix(prod.cast<Complex>().asDiagonal());
  }
  if (k <= p + q - 1) return t * roots_of_unity_diagonal(a / t, b / t, k);

  const auto qi = static_cast<Eigen::Index>(q);
  Matrix out = Matrix::Zero(a.size() * qi, a.size() * qi);
  if (q >= p) {
    // diag(a) (x) (b_q / t) e_q e_q^T plus a rank-(k - p) state on the first q - 1 levels.
    const double bq = b(qi - 1);
    const Matrix inner = sweep_diagonal(a * (1.0 - bq / t), b.head(qi - 1), k - p);
    for (Eigen::Index i = 0; i < a.size(); ++i)
      for (Eigen::Index j = 0; j < a.size(); ++j)
        out.block(i * qi, j * qi, qi - 1, qi - 1) = inner.block(i * (qi - 1), j * (qi - 1), qi - 1, qi - 1);
    for (Eigen::Index i = 0; i < a.size(); ++i) out(i * qi + qi - 1, i * qi + qi - 1) += a(i) * bq / t;
  } else {
    const auto pi = static_cast<Eigen::Index>(p);
    const double ap = a(pi - 1);
    const Matrix inner = sweep_diagonal(a.head(pi - 1), b * (1.0 - ap / t), k - q);
    out.topLeftCorner(inner.rows(), inner.cols()) = inner;
    for (Eigen::Index j = 0; j < qi; ++j) out((pi - 1) * qi + j, (pi - 1) * qi + j) += ap * b(j) / t;
  }
  return out;
}

// Lifts a state written in the product of the leading eigenvectors back to
// the full space: (U_r (x) V_r) m (U_r (x) V_r)*.
Matrix lift(const Matrix& m, const Eigenbasis& e1, const Eigenbasis& e2) {
  const Matrix basis = kron(e1.vectors.leftCols(static_cast<Eigen::Index>(e1.rank)),
                            e2.vectors.leftCols(static_cast<Eigen::Index>(e2.rank)));
  return basis * m * basis.adjoint();
}

// One interlacing chain: (dominant, dominated) index pairs, dominant side first.
struct Chain {
  int dominant_side;  // 0: a-values dominate (S-block), 1: b-values dominate (T-block)
  std::vector<Eigen::Index> dominant;
  std::vector<Eigen::Index> dominated;
};

// Greedy chain extraction. Each chain starts at the largest free value of
// either spectrum and alternates sides, always taking the largest free value
// of the other side that does not exceed the current one. Values left over
// stay in the remainder for the next round.
std::vector<Chain> interlacing_chains(const RealVector& alpha, const RealVector& beta) {
  const RealVector* vals[2] = {&alpha, &beta};
  std::vector<bool> free[2] = {std::vector<bool>(static_cast<std::size_t>(alpha.size())),
                               std::vector<bool>(static_cast<std::size_t>(beta.size()))};
  for (int s = 0; s < 2; ++s)
    for (Eigen::Index i = 0; i < vals[s]->size(); ++i)
      free[s][static_cast<std::size_t>(i)] = (*vals[s])(i) > kExhausted;

  // Largest free value on `side` not exceeding `bound`; ties go to the lower index.
  auto best = [&](int side, double bound) -> Eigen::Index {
    Eigen::Index arg = -1;
    for (Eigen::Index i = 0; i < vals[side]->size(); ++i) {
      if (!free[side][static_cast<std::size_t>(i)]) continue;
      const double v = (*vals[side])(i);
      if (v > bound + kInterlaceSlack) continue;
      if (arg < 0 || v > (*vals[side])(arg)) arg = i;
    }
    return arg;
  };
  auto any_free = [&](int side) {
    return std::find(free[side].begin(), free[side].end(), true) != free[side].end();
  };

  std::vector<Chain> chains;
  const double inf = std::numeric_limits<double>::infinity();
  while (any_free(0) && any_free(1)) {
    const Eigen::Index ia = best(0, inf);
    const Eigen::Index ib = best(1, inf);
    int side = 0;
    Eigen::Index cur = ia;
    if (ia < 0 || (ib >= 0 && beta(ib) > alpha(ia))) {
      side = 1;
      cur = ib;
    }
    Chain chain{side, {}, {}};
    while (true) {
      const Eigen::Index partner = best(1 - side, (*vals[side])(cur));
      if (partner < 0) break;
      chain.dominant.push_back(cur);
      chain.dominated.push_back(partner);
      free[side][static_cast<std::size_t>(cur)] = false;
      free[1 - side][static_cast<std::size_t>(partner)] = false;
      cur = best(side, (*vals[1 - side])(partner));
      if (cur < 0) break;
    }
    if (chain.dominant.empty()) {
      free[side][static_cast<std::size_t>(cur)] = false;  // no partner at all: remainder
      continue;
    }
    chains.push_back(std::move(chain));
  }
  return chains;
}

RealVector gather(const RealVector& v, const std::vector<Eigen::Index>& idx) {
  RealVector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  return out;
}

Matrix gather_cols(const Matrix& m, const std::vector<Eigen::Index>& idx) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(idx[i]);
  return out;
}

// w = sum_j sqrt(alpha_j) (u_j (x) v_j) over the common nonzero spectrum of an
// isospectral pair, eigenvectors paired in descending order.
Vector pure_vector(const HermitianMatrix& c1, const HermitianMatrix& c2) {
  const EigDecomposition e1 = hermitian_eig(c1);
  const EigDecomposition e2 = hermitian_eig(c2);
  Vector w = Vector::Zero(c1.order() * c2.order());
  const Eigen::Index m = std::min(c1.order(), c2.order());
  for (Eigen::Index j = 0; j < m; ++j) {
    const double alpha = e1.values(j);
    if (alpha <= kExhausted) break;
    w += std::sqrt(alpha) * kron_vec(e1.vectors.col(j), e2.vectors.col(j));
  }
  return w;
}

}  // namespace

// --------------------------------------------------------------- pure states

DensityMatrix pure_state_from_isospectral(const DensityMatrix& rho1, const DensityMatrix& rho2,
                                          double tol) {
  const EigDecomposition e1 = hermitian_eig(rho1.hermitian());
  const EigDecomposition e2 = hermitian_eig(rho2.hermitian());
  const Eigen::Index m = std::max(e1.values.size(), e2.values.size());
  RealVector a = RealVector::Zero(m), b = RealVector::Zero(m);
  a.head(e1.values.size()) = e1.values.cwiseMax(0.0);
  b.head(e2.values.size()) = e2.values.cwiseMax(0.0);
  const double mismatch = (a - b).cwiseAbs().maxCoeff();
  if (mismatch > tol) {
    std::ostringstream os;
    os << "marginals are not isospectral (max eigenvalue mismatch " << mismatch << ")";
    throw PreconditionError(os.str());
  }
  Vector w = Vector::Zero(rho1.order() * rho2.order());
  for (Eigen::Index i = 0; i < std::min(rho1.order(), rho2.order()); ++i)
    if (a(i) > 0.0) w += std::sqrt(a(i)) * kron_vec(e1.vectors.col(i), e2.vectors.col(i));
  return bipartite_state(w * w.adjoint(), rho1, rho2);
}

// ------------------------------------------------------------- rank families

RankInterval roots_of_unity_interval(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  const std::size_t r1 = numerical_rank(rho1.hermitian());
  const std::size_t r2 = numerical_rank(rho2.hermitian());
  return {std::max(r1, r2), r1 + r2 - 1};
}

RankInterval rank_sweep_interval(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  const std::size_t r1 = numerical_rank(rho1.hermitian());
  const std::size_t r2 = numerical_rank(rho2.hermitian());
  return {std::max(r1, r2), r1 * r2};
}

DensityMatrix rank_k_roots_of_unity(const DensityMatrix& rho1, const DensityMatrix& rho2, std::size_t k) {
  require_rank(k, roots_of_unity_interval(rho1, rho2), "roots-of-unity construction");
  const Eigenbasis e1 = eigenbasis_of(rho1.hermitian());
  const Eigenbasis e2 = eigenbasis_of(rho2.hermitian());
  const RealVector a = e1.values.head(static_cast<Eigen::Index>(e1.rank));
  const RealVector b = e2.values.head(static_cast<Eigen::Index>(e2.rank));
  return bipartite_state(lift(roots_of_unity_diagonal(a / a.sum(), b / b.sum(), k), e1, e2), rho1, rho2);
}

DensityMatrix rank_sweep(const DensityMatrix& rho1, const DensityMatrix& rho2, std::size_t k) {
  require_rank(k, rank_sweep_interval(rho1, rho2), "rank sweep");
  const Eigenbasis e1 = eigenbasis_of(rho1.hermitian());
  const Eigenbasis e2 = eigenbasis_of(rho2.hermitian());
  const RealVector a = e1.values.head(static_cast<Eigen::Index>(e1.rank));
  RealVector b = e2.values.head(static_cast<Eigen::Index>(e2.rank));
  b *= a.sum() / b.sum();
  return bipartite_state(lift(sweep_diagonal(a, b, k), e1, e2), rho1, rho2);
}

// ------------------------------------------------------------------ downdate

RealVector rank_one_downdate(const RealVector& a, const RealVector& b) {
  if (a.size() != b.size()) throw DimensionError("downdate needs spectra of equal length");
  const Eigen::Index k = a.size();
  for (Eigen::Index i = 0; i < k; ++i) {
    auto fail = [&](const std::string& lhs, double x, const std::string& rhs, double y) {
      std::ostringstream os;
      os << "interlacing violated: " << lhs << " = " << x << " < " << rhs << " = " << y;
      throw PreconditionError(os.str());
    };
    const std::string ai = "a[" + std::to_string(i + 1) + "]";
    const std::string bi = "b[" + std::to_string(i + 1) + "]";
    if (a(i) < b(i) - kInterlaceSlack) fail(ai, a(i), bi, b(i));
    if (i + 1 < k && b(i) < a(i + 1) - kInterlaceSlack) fail(bi, b(i), "a[" + std::to_string(i + 2) + "]", a(i + 1));
    if (b(i) < -kInterlaceSlack) fail(bi, b(i), "0", 0.0);
  }

  // Deflate matched pairs a_i = b_i; this covers a_i = 0 and repeated a-values.
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < k; ++i)
    if (std::abs(a(i) - b(i)) > kInterlaceSlack) active.push_back(i);

  RealVector d = RealVector::Zero(k);
  for (Eigen::Index i : active) {
    double num = 1.0, den = 1.0;
    for (Eigen::Index j : active) {
      num *= b(j) - a(i);
      if (j != i) den *= a(j) - a(i);
    }
    double radicand = num / -den;
    if (radicand < 0.0) {
      if (radicand < -kInterlaceSlack)
        throw NumericalError("downdate radicand " + std::to_string(radicand) + " is negative");
      radicand = 0.0;
    }
    d(i) = std::sqrt(radicand);
  }
  return d;
}

// ------------------------------------------------------- decomposition states

DecomposedState interlace_decomposition(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  const Eigen::Index n1 = rho1.order();
  const Eigen::Index n2 = rho2.order();
  Matrix a_rem = rho1.matrix();
  Matrix b_rem = rho2.matrix();
  IsospectralDecomposition dec;
  const std::size_t max_rounds = static_cast<std::size_t>(n1 + n2) + 1;

  for (std::size_t round = 0;; ++round) {
    const EigDecomposition ea = hermitian_eig(HermitianMatrix(a_rem));
    const EigDecomposition eb = hermitian_eig(HermitianMatrix(b_rem));
    if (ea.values(0) <= kExhausted || eb.values(0) <= kExhausted) break;
    if (round == max_rounds) throw NumericalError("interlace decomposition did not terminate");

    Matrix c = Matrix::Zero(n1, n1);
    Matrix ct = Matrix::Zero(n2, n2);
    for (const Chain& chain : interlacing_chains(ea.values, eb.values)) {
      const bool a_dominates = chain.dominant_side == 0;
      const auto& ia = a_dominates ? chain.dominant : chain.dominated;
      const auto& ib = a_dominates ? chain.dominated : chain.dominant;
      const RealVector av = gather(ea.values, ia);
      const RealVector bv = gather(eb.values, ib);
      const Matrix ua = gather_cols(ea.vectors, ia);
      const Matrix vb = gather_cols(eb.vectors, ib);
      RealMatrix block_a = av.asDiagonal();
      RealMatrix block_b = bv.asDiagonal();
      if (a_dominates) {
        const RealVector x = rank_one_downdate(av, bv);
        block_a -= x * x.transpose();
      } else {
        const RealVector y = rank_one_downdate(bv, av);
        block_b -= y * y.transpose();
      }
      c += ua * block_a.cast<Complex>() * ua.adjoint();
      ct += vb * block_b.cast<Complex>() * vb.adjoint();
    }
    HermitianMatrix hc(c), hct(ct);
    dec.weights.push_back(hc.trace());
    dec.vectors.push_back(pure_vector(hc, hct));
    a_rem -= hc.matrix();
    b_rem -= hct.matrix();
    dec.pairs.emplace_back(std::move(hc), std::move(hct));
  }
  DensityMatrix state = bipartite_state(sum_of_outer_products(dec.vectors, n1 * n2), rho1, rho2);
  return {std::move(state), std::move(dec)};
}

DecomposedState greedy_minmatch(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  const EigDecomposition e1 = hermitian_eig(rho1.hermitian());
  const EigDecomposition e2 = hermitian_eig(rho2.hermitian());
  const Eigen::Index n1 = rho1.order();
  const Eigen::Index n2 = rho2.order();
  const Eigen::Index m = std::min(n1, n2);
  RealVector a = e1.values.cwiseMax(0.0);
  RealVector b = e2.values.cwiseMax(0.0);

  auto descending_order = [](const RealVector& v) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index x, Eigen::Index y) { return v(x) > v(y); });
    return idx;
  };

  IsospectralDecomposition dec;
  const std::size_t max_rounds = static_cast<std::size_t>(n1 + n2);
  for (std::size_t round = 0; a.maxCoeff() > kExhausted && b.maxCoeff() > kExhausted; ++round) {
    if (round == max_rounds) throw NumericalError("greedy matching did not terminate");
    const auto sa = descending_order(a);
    const auto sb = descending_order(b);
    RealVector ca = RealVector::Zero(n1), cb = RealVector::Zero(n2);
    Vector w = Vector::Zero(n1 * n2);
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto ia = sa[static_cast<std::size_t>(j)];
      const auto ib = sb[static_cast<std::size_t>(j)];
      const double c = std::min(a(ia), b(ib));
      if (c <= 0.0) continue;
      ca(ia) = c;
      cb(ib) = c;
      w += std::sqrt(c) * kron_vec(e1.vectors.col(ia), e2.vectors.col(ib));
    }
    a -= ca;
    b -= cb;
    dec.pairs.emplace_back(HermitianMatrix(e1.vectors * ca.cast<Complex>().asDiagonal() * e1.vectors.adjoint()),
                           HermitianMatrix(e2.vectors * cb.cast<Complex>().asDiagonal() * e2.vectors.adjoint()));
    dec.weights.push_back(ca.sum());
    dec.vectors.push_back(std::move(w));
  }
  DensityMatrix state = bipartite_state(sum_of_outer_products(dec.vectors, n1 * n2), rho1, rho2);
  return {std::move(state), std::move(dec)};
}

}  // namespace qmarg
