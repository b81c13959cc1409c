#pragma once

// Frobenius-norm projections onto the sets used by the solvers:
//   - the affine set of matrices with prescribed marginals (bipartite closed
//     form and the general multipartite inclusion-exclusion form),
//   - the unitary orbit of a fixed spectrum,
//   - the positive semidefinite cone.

#include <map>
#include <string>
#include <vector>

#include "qmarg/tensorcore.hpp"

namespace qmarg {

/// Prescribed reduced state `target` on the subsystems `keep`.
struct MarginalConstraint {
  Subsystems keep;
  HermitianMatrix target;
};

/// A family of marginal constraints on one factorization. Targets are kept as
/// Hermitian matrices so that trace-inconsistent families can still be
/// represented and diagnosed by check_consistency().
class ConstraintSet {
 public:
  /// Throws DimensionError on invalid, empty or duplicate keep-sets and on
  /// targets whose order differs from the product of the kept dimensions.
  ConstraintSet(SystemDims dims, std::vector<MarginalConstraint> constraints);

  /// {({0}, rho1), ({1}, rho2)} on dims (n1, n2).
  static ConstraintSet bipartite(const HermitianMatrix& rho1, const HermitianMatrix& rho2);

  const SystemDims& dims() const { return dims_; }
  const std::vector<MarginalConstraint>& constraints() const { return constraints_; }
  std::size_t size() const { return constraints_.size(); }

 private:
  SystemDims dims_;
  std::vector<MarginalConstraint> constraints_;
};

struct ConsistencyReport {
  bool consistent = false;
  /// Reduced state forced on every nonempty intersection of keep-sets, taken
  /// from the first listed constraint containing the intersection.
  std::map<Subsystems, HermitianMatrix> derived_marginals;
  double max_discrepancy = 0.0;
  /// Human-readable account of the worst violation, empty when consistent.
  std::string detail;
};

inline constexpr double kDefaultConsistencyTolerance = 1e-8;

/// For every subfamily of constraints with a nonempty common intersection I,
/// reduces each member's target to I and records the largest pairwise
/// Frobenius discrepancy; also compares every target trace with 1.
ConsistencyReport check_consistency(const ConstraintSet& cs,
                                    double tol = kDefaultConsistencyTolerance);

/// Nearest point of {X : tr_2 X = rho1, tr_1 X = rho2} (closed form for two parties):
/// X = P - I/n1 (x) (tr_1 P - rho2) - (tr_2 P - rho1) (x) I/n2 + (tr P - 1)/(n1 n2) I.
HermitianMatrix project_bipartite_affine(const HermitianMatrix& p, const HermitianMatrix& rho1,
                                         const HermitianMatrix& rho2);

/// U diag(c) U* for the descending eigendecomposition P = U diag(mu) U*.
HermitianMatrix project_spectrum(const HermitianMatrix& p, const Spectrum& c);

/// U diag(max(lambda_i, 0)) U*.
HermitianMatrix project_psd(const HermitianMatrix& z);

/// P_J^T (I/n_{J^c} (x) (tr_{J^c} Z - sigma)) P_J. With an empty `keep`,
/// sigma is 1x1 and the result is (tr Z - sigma)/N * I.
HermitianMatrix marginal_correction(const HermitianMatrix& z, const HermitianMatrix& sigma,
                                    const SystemDims& dims, const Subsystems& keep);

/// Precomputed inclusion-exclusion projector onto the affine set of all
/// matrices meeting the constraints. Terms with identical intersections are
/// merged; terms whose signs cancel are dropped.
class MarginalProjector {
 public:
  /// Throws InconsistentConstraintsError when check_consistency(cs, tol) fails.
  explicit MarginalProjector(const ConstraintSet& cs, double tol = kDefaultConsistencyTolerance);

  HermitianMatrix operator()(const HermitianMatrix& z) const;

  const ConstraintSet& constraints() const { return cs_; }

  struct Term {
    Subsystems keep;         // intersection of keep-sets (possibly empty)
    HermitianMatrix target;  // forced reduced state on `keep` (1x1 trace when empty)
    int coefficient;         // net inclusion-exclusion sign count
  };
  const std::vector<Term>& terms() const { return terms_; }

 private:
  ConstraintSet cs_;
  std::vector<Term> terms_;
};

/// One-shot MarginalProjector(cs)(z).
HermitianMatrix project_marginals(const HermitianMatrix& z, const ConstraintSet& cs);

/// Err(X) = sum_i || tr_{J_i^c}(X) - target_i ||_F.
double marginal_residual(const HermitianMatrix& x, const ConstraintSet& cs);

}  // namespace qmarg
