#pragma once

// Iterative schemes over the marginal-constrained set:
//   - alternating projection onto (marginals) x (fixed spectrum),
//   - alternating projection onto (marginals) x (rank <= r),
//   - Dykstra projection onto (marginals) x (PSD cone),
//   - nonmonotone spectral projected gradient for entropy minimization.
// Non-convergence is reported through SolveReport, never thrown.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qmarg/projections.hpp"

namespace qmarg {

enum class DykstraMode { WithIncrements, PlainAlternation };

/// Projector NSPG uses for {marginals} intersected with the PSD cone.
enum class InnerProjection { DualNewton, Dykstra };

struct NspgOptions {
  std::size_t window = 10;                // M
  double decrease = 1e-4;                 // gamma
  double sigma1 = 0.1;
  double sigma2 = 0.9;
  double alpha_min = 1e-10;
  /// BB quotients are never positive for the concave entropy, so every step
  /// uses alpha_max; projecting rho - alpha grad f loses about log10(alpha)
  /// digits, which breaks the descent property well before 1e10.
  double alpha_max = 10.0;
  double stationarity_tolerance = 1e-8;
  InnerProjection inner = InnerProjection::DualNewton;
  double inner_tolerance = 1e-12;         // scaled by max(1, |Z|)
  std::size_t inner_max_sweeps = 5000;    // Dykstra sweeps, or Newton steps
};

struct SolveOptions {
  std::size_t max_iterations = 1000;  // N
  double tolerance = 1e-12;           // delta
  std::uint64_t seed = 0;
  DykstraMode dykstra_mode = DykstraMode::WithIncrements;
  NspgOptions nspg;
  std::size_t restarts = 1;
  /// Starting point; when absent each solver draws its own from `seed`.
  std::optional<HermitianMatrix> initial;

  /// Throws PreconditionError on out-of-range settings.
  void validate() const;
};

enum class SolveStatus {
  Converged,
  IterationLimit,
  LineSearchCollapse,
  InnerProjectionFailed,
};

const char* to_string(SolveStatus status);

struct SolveReport {
  HermitianMatrix solution;
  std::size_t iterations = 0;
  /// One entry per iteration: Err for the projection schemes, the
  /// stationarity measure |P(rho - grad f) - rho| for NSPG.
  std::vector<double> residual_history;
  /// NSPG only: f(rho_t) per iteration, starting with f(rho_0).
  std::vector<double> objective_history;
  bool converged = false;
  SolveStatus status = SolveStatus::IterationLimit;
  std::string message;
  /// Err of the returned solution.
  double residual = 0.0;
  std::uint64_t seed = 0;
  std::chrono::duration<double> wall_time{0.0};
};

/// Alternating projection: marginals, then the unitary orbit of c. Starts
/// from U diag(p) U* (Haar U, random probability p) unless opts.initial is set.
SolveReport solve_with_spectrum(const ConstraintSet& cs, const Spectrum& c, const SolveOptions& opts);

/// Alternating projection: marginals, then keep the r largest clipped
/// eigenvalues (no trace renormalization). Random density start by default.
SolveReport solve_with_rank_cap(const ConstraintSet& cs, std::size_t r, const SolveOptions& opts);

/// Projection of z onto {marginals} intersected with the PSD cone. In
/// WithIncrements mode a correction term is carried on the PSD leg (the
/// marginal set is affine and needs none); PlainAlternation drops it.
/// Converged when the PSD iterate has Err <= delta and moved by <= delta.
SolveReport dykstra_project(const HermitianMatrix& z, const ConstraintSet& cs, const SolveOptions& opts);

/// The same projection computed on the dual: y minimizes
/// 1/2 |P_psd(z + A* y)|^2 - <b, y>, with A the stacked marginal map, by
/// semismooth Newton steps. The result is P_psd(z + A* y) and is exactly PSD.
/// Converged when Err <= delta * max(1, |z|). Quadratic local
/// convergence, also when the projection is rank deficient, where Dykstra
/// slows down badly.
SolveReport dual_newton_project(const HermitianMatrix& z, const ConstraintSet& cs, const SolveOptions& opts);

/// Entropy objective; the solver minimizes f = S (von Neumann or Renyi).
/// The maximum over the marginal set is the product state and needs no solver.
struct EntropyObjective {
  enum class Kind { VonNeumann, Renyi } kind = Kind::VonNeumann;
  double alpha = 2.0;

  static EntropyObjective von_neumann() { return {}; }
  static EntropyObjective renyi(double alpha) { return {Kind::Renyi, alpha}; }

  double entropy(const HermitianMatrix& rho) const;
  double value(const HermitianMatrix& rho) const { return entropy(rho); }
  HermitianMatrix gradient(const HermitianMatrix& rho) const;
};

/// Nonmonotone spectral projected gradient on {marginals} intersected with
/// the PSD cone. The start is the Dykstra projection of opts.initial, or of a
/// random density drawn from opts.seed.
SolveReport nspg_minimize(const ConstraintSet& cs, const EntropyObjective& objective, const SolveOptions& opts);

/// Runs `solve` for seeds opts.seed, opts.seed + 1, ... (opts.restarts runs)
/// concurrently. Reports come back in seed order.
std::vector<SolveReport> run_restarts(const std::function<SolveReport(const SolveOptions&)>& solve,
                                      const SolveOptions& opts);

/// First converged report in seed order, else the one with the smallest residual.
const SolveReport& select_restart(const std::vector<SolveReport>& reports);

}  // namespace qmarg
