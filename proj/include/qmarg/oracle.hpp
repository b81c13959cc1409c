#pragma once

// Brute-force reference implementations used by the tests: projections onto
// affine marginal sets through an explicit matrix and its pseudo-inverse, and
// generators of feasible points for optimality checks. Meant for N <= 16.

#include <random>
#include <vector>

#include "qmarg/projections.hpp"

namespace qmarg {

/// Real coordinates of a Hermitian matrix: diagonal entries, then
/// sqrt(2) Re h_ij and sqrt(2) Im h_ij for i < j (row-major). The map is an
/// isometry from the Frobenius norm to the Euclidean norm.
RealVector parametrize(const HermitianMatrix& h);
HermitianMatrix unparametrize(const RealVector& x, Eigen::Index order);

struct VectorizedConstraints {
  RealMatrix a;  // one row block per constraint, one row per target parameter
  RealVector b;
  SystemDims dims;
};

VectorizedConstraints vectorize_constraints(const ConstraintSet& cs);

/// z - A^+(A z - b), with singular values below 1e-12 sigma_max dropped.
/// Throws InconsistentConstraintsError if the least-squares residual of the
/// system exceeds 1e-8.
HermitianMatrix pseudoinverse_projection(const HermitianMatrix& z, const VectorizedConstraints& vc);

/// max over samples of Re <z - x_star, y - x_star>.
double variational_inequality_check(const HermitianMatrix& z, const HermitianMatrix& x_star,
                                    const std::vector<HermitianMatrix>& feasible_samples);

/// Random points of S(rho1, rho2): local-unitary conjugates that fix both
/// marginals applied to constructive outputs, and convex combinations of
/// those. The commuting unitaries are random phases in the marginal eigenbases.
std::vector<HermitianMatrix> feasible_samples(const DensityMatrix& rho1, const DensityMatrix& rho2,
                                              std::size_t count, std::mt19937_64& rng);

}  // namespace qmarg
