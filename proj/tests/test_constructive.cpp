#include <doctest.h>

#include <cmath>

#include "qmarg/constructive.hpp"
#include "qmarg/entropy.hpp"
#include "qmarg/oracle.hpp"
#include "support.hpp"

using namespace qmarg;
using namespace qmarg::testing;

namespace {

double residual(const HermitianMatrix& x, const DensityMatrix& r1, const DensityMatrix& r2) {
  return marginal_residual(x, ConstraintSet::bipartite(r1.hermitian(), r2.hermitian()));
}

double lambda_max(const HermitianMatrix& x) { return hermitian_eig(x).values(0); }

void check_state(const HermitianMatrix& x, const DensityMatrix& r1, const DensityMatrix& r2) {
  CHECK(residual(x, r1, r2) <= 1e-10);
  CHECK(std::abs(x.trace() - 1.0) <= 1e-10);
  CHECK(hermitian_eig(x).values.minCoeff() >= -1e-10);
}

void check_decomposition(const DecomposedState& d, const DensityMatrix& r1, const DensityMatrix& r2) {
  const auto& dec = d.decomposition;
  Matrix sum1 = Matrix::Zero(r1.order(), r1.order());
  Matrix sum2 = Matrix::Zero(r2.order(), r2.order());
  for (std::size_t i = 0; i < dec.pairs.size(); ++i) {
    const auto& [c, ct] = dec.pairs[i];
    sum1 += c.matrix();
    sum2 += ct.matrix();
    CHECK(std::abs(c.trace() - dec.weights[i]) < 1e-10);
    CHECK(std::abs(ct.trace() - dec.weights[i]) < 1e-10);
    // Isospectral: nonzero eigenvalues agree.
    RealVector e1 = hermitian_eig(c).values, e2 = hermitian_eig(ct).values;
    const Eigen::Index m = std::min(e1.size(), e2.size());
    CHECK((e1.head(m) - e2.head(m)).cwiseAbs().maxCoeff() < 1e-10);
    if (e1.size() > m) CHECK(e1.tail(e1.size() - m).cwiseAbs().maxCoeff() < 1e-10);
    if (e2.size() > m) CHECK(e2.tail(e2.size() - m).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK(max_abs(sum1 - r1.matrix()) < 1e-10);
  CHECK(max_abs(sum2 - r2.matrix()) < 1e-10);
  check_state(d.state.hermitian(), r1, r2);
}

DensityMatrix random_marginal(std::size_t n, std::size_t rank, std::mt19937_64& rng) {
  const Spectrum p = random_probability_vector(rank, rng);
  RealVector v = RealVector::Zero(static_cast<Eigen::Index>(n));
  v.head(p.size()) = p.values();
  const Matrix u = random_unitary(n, rng);
  return DensityMatrix(HermitianMatrix(u * v.cast<Complex>().asDiagonal() * u.adjoint()));
}

}  // namespace

TEST_SUITE("constructive") {

TEST_CASE("pure state from isospectral marginals") {
  const DensityMatrix half(HermitianMatrix::identity(2) * 0.5);
  const DensityMatrix bell = pure_state_from_isospectral(half, half);
  CHECK(numerical_rank(bell.hermitian()) == 1);
  check_state(bell.hermitian(), half, half);

  const DensityMatrix r = diagonal_density({0.7, 0.3});
  const DensityMatrix w = pure_state_from_isospectral(r, r);
  Matrix expected = Matrix::Zero(4, 4);
  const double a = std::sqrt(0.7), b = std::sqrt(0.3);
  expected(0, 0) = 0.7;
  expected(3, 3) = 0.3;
  expected(0, 3) = expected(3, 0) = a * b;
  CHECK(max_abs(w.matrix() - expected) < 1e-12);
  CHECK(residual(w.hermitian(), r, r) < 1e-12);

  CHECK_THROWS_AS(pure_state_from_isospectral(r, diagonal_density({0.6, 0.4})), PreconditionError);
}

TEST_CASE("pure state on rotated marginals of different sizes") {
  std::mt19937_64 rng(1);
  const Spectrum p = random_probability_vector(2, rng);
  RealVector v3 = RealVector::Zero(3);
  v3.head(2) = p.values();
  const Matrix u = random_unitary(2, rng), v = random_unitary(3, rng);
  const DensityMatrix r1(HermitianMatrix(u * p.values().cast<Complex>().asDiagonal() * u.adjoint()));
  const DensityMatrix r2(HermitianMatrix(v * v3.cast<Complex>().asDiagonal() * v.adjoint()));
  const DensityMatrix w = pure_state_from_isospectral(r1, r2);
  CHECK(numerical_rank(w.hermitian()) == 1);
  check_state(w.hermitian(), r1, r2);
}

TEST_CASE("roots of unity construction") {
  const DensityMatrix e = diagonal_density({1.0, 0.0});
  const DensityMatrix one = rank_k_roots_of_unity(e, e, 1);
  CHECK(std::abs(one.matrix()(0, 0) - 1.0) < 1e-14);
  CHECK(numerical_rank(one.hermitian()) == 1);

  const DensityMatrix r1 = diagonal_density(kEx42a), r2 = diagonal_density(kEx42b);
  const RankInterval iv = roots_of_unity_interval(r1, r2);
  CHECK(iv.low == 4);
  CHECK(iv.high == 6);
  const DensityMatrix x = rank_k_roots_of_unity(r1, r2, 4);
  CHECK(numerical_rank(x.hermitian()) == 4);
  CHECK(residual(x.hermitian(), r1, r2) <= 1e-12);
  CHECK(von_neumann(x.hermitian()) == doctest::Approx(1.27929).epsilon(2e-3));
  for (std::size_t k = iv.low; k <= iv.high; ++k) {
    const DensityMatrix y = rank_k_roots_of_unity(r1, r2, k);
    CHECK(numerical_rank(y.hermitian()) == k);
    check_state(y.hermitian(), r1, r2);
  }
  CHECK_THROWS_AS(rank_k_roots_of_unity(r1, r2, 3), PreconditionError);
  CHECK_THROWS_AS(rank_k_roots_of_unity(r1, r2, 7), PreconditionError);

  std::mt19937_64 rng(2);
  const DensityMatrix a = random_marginal(2, 2, rng), b = random_marginal(3, 3, rng);
  const DensityMatrix z = rank_k_roots_of_unity(a, b, 3);
  CHECK(numerical_rank(z.hermitian()) == 3);
  CHECK(residual(z.hermitian(), a, b) < 1e-12);
}

TEST_CASE("rank sweep") {
  const DensityMatrix r1 = diagonal_density({0.6, 0.4}), r2 = diagonal_density({0.5, 0.3, 0.2});
  const DensityMatrix top = rank_sweep(r1, r2, 6);
  CHECK(max_abs(top.matrix() - kron(r1.matrix(), r2.matrix())) < 1e-12);

  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 3; ++rep) {
    const DensityMatrix a = random_marginal(3, 3, rng), b = random_marginal(4, 4, rng);
    const RankInterval iv = rank_sweep_interval(a, b);
    CHECK(iv.low == 4);
    CHECK(iv.high == 12);
    for (std::size_t k = 4; k <= 12; ++k) {
      const DensityMatrix x = rank_sweep(a, b, k);
      CHECK(numerical_rank(x.hermitian()) == k);
      CHECK(residual(x.hermitian(), a, b) <= 1e-10);
    }
    CHECK_THROWS_AS(rank_sweep(a, b, 3), PreconditionError);
    CHECK_THROWS_AS(rank_sweep(a, b, 13), PreconditionError);
  }

  const DensityMatrix iso = diagonal_density({0.5, 0.3, 0.2});
  const DensityMatrix base = rank_sweep(iso, iso, 3);
  CHECK(numerical_rank(base.hermitian()) == 3);
  check_state(base.hermitian(), iso, iso);
}

TEST_CASE("rank sweep with rank-deficient marginals") {
  std::mt19937_64 rng(4);
  const DensityMatrix a = random_marginal(4, 2, rng), b = random_marginal(3, 3, rng);
  const RankInterval iv = rank_sweep_interval(a, b);
  CHECK(iv.low == 3);
  CHECK(iv.high == 6);
  for (std::size_t k = iv.low; k <= iv.high; ++k) {
    const DensityMatrix x = rank_sweep(a, b, k);
    CHECK(numerical_rank(x.hermitian()) == k);
    check_state(x.hermitian(), a, b);
  }
}

TEST_CASE("rank one downdate") {
  const RealVector a{{0.7, 0.3}};
  CHECK(rank_one_downdate(a, a).norm() == 0.0);

  const RealVector d = rank_one_downdate(a, RealVector{{0.5, 0.1}});
  CHECK(std::abs(d(0) - std::sqrt(0.3)) < 1e-12);
  CHECK(std::abs(d(1) - std::sqrt(0.1)) < 1e-12);
  const HermitianMatrix m((RealMatrix(a.asDiagonal()) - d * d.transpose()).cast<Complex>());
  const RealVector e = hermitian_eig(m).values;
  CHECK(std::abs(e(0) - 0.5) < 1e-10);
  CHECK(std::abs(e(1) - 0.1) < 1e-10);

  const RealVector a3{{0.5, 0.5, 0.0}}, b3{{0.5, 0.2, 0.0}};
  const RealVector d3 = rank_one_downdate(a3, b3);
  const HermitianMatrix m3((RealMatrix(a3.asDiagonal()) - d3 * d3.transpose()).cast<Complex>());
  CHECK((hermitian_eig(m3).values - b3).cwiseAbs().maxCoeff() < 1e-10);

  CHECK_THROWS_AS(rank_one_downdate(a, RealVector{{0.8, 0.1}}), PreconditionError);
  CHECK_THROWS_AS(rank_one_downdate(a, RealVector{{0.5, 0.4}}), PreconditionError);
  CHECK_THROWS_AS(rank_one_downdate(a, RealVector{{0.5}}), DimensionError);
}

TEST_CASE("interlace decomposition on the printed examples") {
  const DensityMatrix iso = diagonal_density({0.6, 0.3, 0.1});
  const DecomposedState one = interlace_decomposition(iso, iso);
  CHECK(one.decomposition.pairs.size() == 1);
  CHECK(numerical_rank(one.state.hermitian()) == 1);

  const DensityMatrix a2 = diagonal_density(kEx42a), b2 = diagonal_density(kEx42b);
  const DecomposedState d2 = interlace_decomposition(a2, b2);
  check_decomposition(d2, a2, b2);
  CHECK(numerical_rank(d2.state.hermitian()) <= 3);
  CHECK(lambda_max(d2.state.hermitian()) == doctest::Approx(0.9313).epsilon(2e-3));
  CHECK(von_neumann(d2.state.hermitian()) == doctest::Approx(0.297223).epsilon(2e-3));

  const DensityMatrix a3 = diagonal_density(kEx43a), b3 = diagonal_density(kEx43b);
  const DecomposedState d3 = interlace_decomposition(a3, b3);
  check_decomposition(d3, a3, b3);
  CHECK(numerical_rank(d3.state.hermitian()) == 4);
  CHECK(lambda_max(d3.state.hermitian()) == doctest::Approx(0.690947).epsilon(2e-3));

  const DensityMatrix a4 = diagonal_density(kEx44a), b4 = diagonal_density(kEx44b);
  const DecomposedState d4 = interlace_decomposition(a4, b4);
  check_decomposition(d4, a4, b4);
  CHECK(numerical_rank(d4.state.hermitian()) == 3);
  CHECK(lambda_max(d4.state.hermitian()) == doctest::Approx(0.840737).epsilon(2e-3));
  CHECK(von_neumann(d4.state.hermitian()) == doctest::Approx(0.515135).epsilon(2e-3));
}

TEST_CASE("greedy min-matching on the printed examples") {
  const DensityMatrix a2 = diagonal_density(kEx42a), b2 = diagonal_density(kEx42b);
  const DecomposedState g2 = greedy_minmatch(a2, b2);
  check_decomposition(g2, a2, b2);
  const RealVector e = hermitian_eig(g2.state.hermitian()).values;
  CHECK(numerical_rank(e) == 3);
  CHECK(std::abs(e(0) - 0.9531) < 1e-12);
  CHECK(std::abs(e(1) - 0.0350) < 1e-12);
  CHECK(std::abs(e(2) - 0.0119) < 1e-12);
  CHECK(von_neumann(g2.state.hermitian()) == doctest::Approx(0.215848).epsilon(2e-3));

  const DecomposedState g3 = greedy_minmatch(diagonal_density(kEx43a), diagonal_density(kEx43b));
  CHECK(lambda_max(g3.state.hermitian()) == doctest::Approx(0.750675).epsilon(2e-3));
  const DecomposedState g4 = greedy_minmatch(diagonal_density(kEx44a), diagonal_density(kEx44b));
  CHECK(lambda_max(g4.state.hermitian()) == doctest::Approx(0.914875).epsilon(2e-3));
}

TEST_CASE("greedy gives rank 3 where a rank 2 state exists") {
  const DensityMatrix r1 = diagonal_density({0.7, 0.3}), r2 = diagonal_density({0.6, 0.2, 0.2});
  CHECK(numerical_rank(greedy_minmatch(r1, r2).state.hermitian()) == 3);

  Vector w1 = Vector::Zero(6), w2 = Vector::Zero(6);
  w1(0) = std::sqrt(3.0 / 5.0);  // e1 (x) e1
  w1(4) = std::sqrt(1.0 / 10.0); // e2 (x) e2
  w2(1) = std::sqrt(1.0 / 10.0); // e1 (x) e2
  w2(5) = std::sqrt(1.0 / 5.0);  // e2 (x) e3
  const HermitianMatrix x(w1 * w1.adjoint() + w2 * w2.adjoint());
  CHECK(numerical_rank(x) == 2);
  check_state(x, r1, r2);
}

TEST_CASE("greedy vectors are orthogonal and lambda_max is maximal") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    std::uniform_int_distribution<std::size_t> n1(1, 4), n2(1, 6);
    const std::size_t m = n1(rng), n = n2(rng);
    const DensityMatrix a = random_marginal(m, m, rng), b = random_marginal(n, n, rng);
    const DecomposedState g = greedy_minmatch(a, b);
    check_decomposition(g, a, b);
    const auto& vs = g.decomposition.vectors;
    for (std::size_t i = 0; i < vs.size(); ++i)
      for (std::size_t j = 0; j < vs.size(); ++j) {
        const double expected = i == j ? g.decomposition.weights[i] : 0.0;
        CHECK(std::abs(vs[i].dot(vs[j]) - expected) < 1e-10);
      }
    CHECK(g.decomposition.pairs.size() <= std::max(m, n));
    const double top = lambda_max(g.state.hermitian());
    const Spectrum sa(hermitian_eig(a.hermitian()).values), sb(hermitian_eig(b.hermitian()).values);
    double minsum = 0.0;
    for (Eigen::Index i = 0; i < std::min(sa.size(), sb.size()); ++i) minsum += std::min(sa[i], sb[i]);
    CHECK(std::abs(top - minsum) < 1e-10);
    for (const auto& y : feasible_samples(a, b, 10, rng)) CHECK(lambda_max(y) <= top + 1e-8);
  }
}

TEST_CASE("interlace rank bound on random marginals") {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    const DensityMatrix a = random_marginal(3, 3, rng), b = random_marginal(5, 5, rng);
    const DecomposedState d = interlace_decomposition(a, b);
    check_decomposition(d, a, b);
    CHECK(d.decomposition.pairs.size() <= 5);
    CHECK(numerical_rank(d.state.hermitian()) <= 5);
  }
}

}  // TEST_SUITE
