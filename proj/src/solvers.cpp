#include "qmarg/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <future>
#include <limits>
#include <optional>
#include <sstream>

#include "qmarg/entropy.hpp"
#include "qmarg/oracle.hpp"

namespace qmarg {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kLineSearchFloor = 1e-16;

void require_order(const ConstraintSet& cs, Eigen::Index order, const char* what) {
  if (static_cast<std::size_t>(order) != cs.dims().total())
    throw DimensionError(std::string(what) + " has order " + std::to_string(order) + ", expected " +
                         std::to_string(cs.dims().total()));
}

HermitianMatrix random_start(const ConstraintSet& cs, const SolveOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  return random_density(cs.dims(), rng).hermitian();
}

HermitianMatrix starting_point(const ConstraintSet& cs, const SolveOptions& opts) {
  if (opts.initial) {
    require_order(cs, opts.initial->order(), "initial point");
    return *opts.initial;
  }
  return random_start(cs, opts);
}

HermitianMatrix keep_top_eigenvalues(const HermitianMatrix& x, std::size_t r) {
  const EigDecomposition eig = hermitian_eig(x);
  RealVector s = eig.values.cwiseMax(0.0);
  for (auto i = static_cast<Eigen::Index>(r); i < s.size(); ++i) s(i) = 0.0;
  return HermitianMatrix(eig.vectors * s.cast<Complex>().asDiagonal() * eig.vectors.adjoint());
}

void finish(SolveReport& report, Clock::time_point start) {
  report.wall_time = Clock::now() - start;
  if (report.converged) report.status = SolveStatus::Converged;
}

// Every PSD matrix with the prescribed marginals lives on the product of the
// supports of its one-site marginals. When one of those supports is proper
// the set has no positive definite point, the dual optimum of the projection
// sits at infinity and both projectors crawl. Frobenius distance and entropy
// are unchanged by W* . W on that product, so such problems are solved there.
constexpr double kSupportTolerance = 1e-13;

struct SupportReduction {
  Matrix w;                              // isometry onto the product of supports
  std::optional<ConstraintSet> reduced;  // empty when every support is full

  HermitianMatrix restrict(const HermitianMatrix& z) const { return HermitianMatrix(w.adjoint() * z.matrix() * w); }
  HermitianMatrix lift(const HermitianMatrix& x) const { return HermitianMatrix(w * x.matrix() * w.adjoint()); }
};

SupportReduction reduce_to_support(const ConstraintSet& cs) {
  const SystemDims& dims = cs.dims();
  std::vector<Matrix> bases(dims.count());
  bool proper = false;
  for (std::size_t i = 0; i < dims.count(); ++i) {
    bases[i] = Matrix::Identity(static_cast<Eigen::Index>(dims[i]), static_cast<Eigen::Index>(dims[i]));
    for (const auto& c : cs.constraints()) {
      const auto it = std::find(c.keep.begin(), c.keep.end(), i);
      if (it == c.keep.end()) continue;
      const Subsystems site{static_cast<std::size_t>(it - c.keep.begin())};
      const EigDecomposition e = hermitian_eig(partial_trace(c.target, dims.restricted_to(c.keep), site));
      const double cut = kSupportTolerance * std::max(1.0, e.values(0));
      const auto r = static_cast<Eigen::Index>((e.values.array() > cut).count());
      if (r > 0 && r < e.values.size()) {
        bases[i] = e.vectors.leftCols(r);
        proper = true;
      }
      break;
    }
  }
  SupportReduction red;
  if (!proper) return red;

  auto product = [&](const Subsystems& keep) {
    Matrix m = Matrix::Identity(1, 1);
    for (std::size_t j : keep) m = kron(m, bases[j]);
    return m;
  };
  std::vector<std::size_t> rdims;
  Subsystems all;
  for (std::size_t i = 0; i < dims.count(); ++i) {
    rdims.push_back(static_cast<std::size_t>(bases[i].cols()));
    all.push_back(i);
  }
  red.w = product(all);
  std::vector<MarginalConstraint> constraints;
  for (const auto& c : cs.constraints()) {
    const Matrix v = product(c.keep);
    constraints.push_back({c.keep, HermitianMatrix(v.adjoint() * c.target.matrix() * v)});
  }
  red.reduced.emplace(SystemDims(rdims), std::move(constraints));
  return red;
}

SolveReport lifted(SolveReport report, const SupportReduction& red, const ConstraintSet& cs) {
  report.solution = red.lift(report.solution);
  report.residual = marginal_residual(report.solution, cs);
  return report;
}

// Shared loop for the two alternating-projection schemes.
template <typename Step>
SolveReport alternate(const ConstraintSet& cs, const MarginalProjector& phi, HermitianMatrix x,
                      const SolveOptions& opts, Step&& second_projection) {
  const auto start = Clock::now();
  SolveReport report;
  report.seed = opts.seed;
  report.residual = marginal_residual(x, cs);
  for (std::size_t k = 1; k <= opts.max_iterations; ++k) {
    x = second_projection(phi(x));
    report.residual = marginal_residual(x, cs);
    report.residual_history.push_back(report.residual);
    report.iterations = k;
    if (report.residual <= opts.tolerance) {
      report.converged = true;
      break;
    }
  }
  report.solution = std::move(x);
  if (!report.converged) report.message = "iteration limit reached";
  finish(report, start);
  return report;
}

struct DykstraResult {
  HermitianMatrix x;
  std::size_t sweeps = 0;
  bool converged = false;
  std::vector<double> history;
};

DykstraResult dykstra_core(const HermitianMatrix& z, const ConstraintSet& cs, const MarginalProjector& phi,
                           double tol, std::size_t max_sweeps, DykstraMode mode, bool record) {
  DykstraResult out;
  HermitianMatrix x = z;
  Matrix increment = Matrix::Zero(z.order(), z.order());
  for (std::size_t k = 1; k <= max_sweeps; ++k) {
    const HermitianMatrix y = phi(x);
    HermitianMatrix next;
    if (mode == DykstraMode::WithIncrements) {
      const HermitianMatrix shifted(y.matrix() + increment);
      next = project_psd(shifted);
      increment = shifted.matrix() - next.matrix();
    } else {
      next = project_psd(y);
    }
    const double step = (next - x).norm();
    const double err = marginal_residual(next, cs);
    if (record) out.history.push_back(err);
    x = std::move(next);
    out.sweeps = k;
    if (err <= tol && step <= tol) {
      out.converged = true;
      break;
    }
  }
  out.x = std::move(x);
  return out;
}

// Semismooth Newton on the dual of min |X - z|^2 / 2 over {A X = b, X >= 0}.
class DualNewton {
 public:
  explicit DualNewton(const ConstraintSet& cs) : cs_(cs), vc_(vectorize_constraints(cs)) {}

  DykstraResult project(const HermitianMatrix& z, double tol, std::size_t max_steps, bool record) const {
    RealVector y = RealVector::Zero(vc_.a.rows());
    return project(z, tol, max_steps, record, y);
  }

  // P(base - alpha dir) by continuation over alpha = 1, 10, 100, ..., each
  // stage warm-started from the scaled multipliers of the previous one. A
  // cold start at large alpha lands where P_psd has no curvature at all.
  DykstraResult project_along(const HermitianMatrix& base, const HermitianMatrix& dir, double alpha, double tol,
                              std::size_t max_steps) const {
    RealVector y = RealVector::Zero(vc_.a.rows());
    double s = std::min(1.0, alpha);
    while (true) {
      const HermitianMatrix z = base - dir * s;
      const bool last = s >= alpha;
      DykstraResult d = project(z, last ? tol * std::max(1.0, z.norm()) : 1e-8 * std::max(1.0, z.norm()),
                                max_steps, false, y);
      if (last || !d.converged) return d;
      const double next = std::min(alpha, 10.0 * s);
      y *= next / s;
      s = next;
    }
  }

  // Warm-started from y; y holds the final multipliers on return.
  DykstraResult project(const HermitianMatrix& z, double tol, std::size_t max_steps, bool record,
                        RealVector& y) const {
    const Eigen::Index n = z.order();
    const Eigen::Index m = vc_.a.rows();
    DykstraResult out;
    Point cur = evaluate(z, y);
    double best = std::numeric_limits<double>::infinity();
    double best_at_window = best;
    for (std::size_t k = 1; k <= max_steps; ++k) {
      if (record) out.history.push_back(cur.err);
      out.sweeps = k;
      if (cur.err <= tol) {
        out.converged = true;
        break;
      }
      best = std::min(best, cur.err);
      if (k % kStallWindow == 0) {
        if (best > 0.5 * best_at_window) break;
        best_at_window = best;
      }

      // Generalized Jacobian of P_psd at the current point: Q (Omega o Q* H Q) Q*.
      const RealVector pos = cur.values.cwiseMax(0.0);
      RealMatrix omega(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
          const double gap = cur.values(i) - cur.values(j);
          omega(i, j) = std::abs(gap) > kDegeneracyTolerance ? (pos(i) - pos(j)) / gap
                                                              : (cur.values(i) > 0.0 ? 1.0 : 0.0);
        }
      RealMatrix v(m, m);
      for (Eigen::Index j = 0; j < m; ++j) {
        const Matrix h = cur.vectors.adjoint() * unparametrize(vc_.a.row(j).transpose(), n).matrix() * cur.vectors;
        const Matrix jh = cur.vectors * omega.cast<Complex>().cwiseProduct(h) * cur.vectors.adjoint();
        v.col(j) = vc_.a * parametrize(HermitianMatrix(jh));
      }
      // The marginal map is redundant (shared traces), so V is singular; the
      // shift keeps the system solvable and vanishes as g -> 0.
      const double gnorm = cur.g.norm();
      v.diagonal().array() += std::min(1e-2, gnorm);
      RealVector d = -v.ldlt().solve(cur.g);
      double slope = cur.g.dot(d);
      if (!(slope < 0.0)) {
        d = -cur.g;
        slope = -cur.g.squaredNorm();
      }
      // Armijo on the dual value, or a plain decrease of |g| once the dual
      // differences drop below its floating-point resolution.
      double t = 1.0;
      Point trial = evaluate(z, y + d);
      while (trial.dual > cur.dual + 1e-4 * t * slope && trial.g.norm() > 0.9 * gnorm) {
        t *= 0.5;
        if (t < 1e-12) break;
        trial = evaluate(z, y + t * d);
      }
      if (t < 1e-12) break;
      y += t * d;
      cur = std::move(trial);
    }
    out.x = std::move(cur.x);
    return out;
  }

 private:
  struct Point {
    HermitianMatrix x;
    Matrix vectors;
    RealVector values;
    RealVector g;  // A x - b
    double err;
    double dual;
  };

  static constexpr std::size_t kStallWindow = 20;

  Point evaluate(const HermitianMatrix& z, const RealVector& y) const {
    const HermitianMatrix w = z + unparametrize(vc_.a.transpose() * y, z.order());
    EigDecomposition eig = hermitian_eig(w);
    const RealVector pos = eig.values.cwiseMax(0.0);
    HermitianMatrix x(eig.vectors * pos.cast<Complex>().asDiagonal() * eig.vectors.adjoint());
    RealVector g = vc_.a * parametrize(x) - vc_.b;
    const double err = marginal_residual(x, cs_);
    const double dual = 0.5 * pos.squaredNorm() - vc_.b.dot(y);
    return {std::move(x), std::move(eig.vectors), std::move(eig.values), std::move(g), err, dual};
  }

  const ConstraintSet& cs_;
  VectorizedConstraints vc_;
};

}  // namespace

// ------------------------------------------------------------------- options

void SolveOptions::validate() const {
  auto fail = [](const std::string& what) { throw PreconditionError("invalid solver option: " + what); };
  if (max_iterations < 1) fail("max_iterations must be at least 1");
  if (!(tolerance > 0.0)) fail("tolerance must be positive");
  if (restarts < 1) fail("restarts must be at least 1");
  if (nspg.window < 1) fail("window M must be at least 1");
  if (!(nspg.decrease > 0.0 && nspg.decrease < 1.0)) fail("decrease gamma must lie in (0, 1)");
  if (!(0.0 < nspg.sigma1 && nspg.sigma1 < nspg.sigma2 && nspg.sigma2 < 1.0))
    fail("need 0 < sigma1 < sigma2 < 1");
  if (!(0.0 < nspg.alpha_min && nspg.alpha_min < nspg.alpha_max)) fail("need 0 < alpha_min < alpha_max");
  if (!(nspg.stationarity_tolerance > 0.0)) fail("stationarity tolerance must be positive");
  if (!(nspg.inner_tolerance > 0.0) || nspg.inner_max_sweeps < 1) fail("inner projection settings");
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::IterationLimit: return "iteration-limit";
    case SolveStatus::LineSearchCollapse: return "line-search-collapse";
    case SolveStatus::InnerProjectionFailed: return "inner-projection-failed";
  }
  return "unknown";
}

// ------------------------------------------------------ alternating schemes

SolveReport solve_with_spectrum(const ConstraintSet& cs, const Spectrum& c, const SolveOptions& opts) {
  opts.validate();
  if (static_cast<std::size_t>(c.size()) != cs.dims().total())
    throw DimensionError("spectrum has " + std::to_string(c.size()) + " entries, expected " +
                         std::to_string(cs.dims().total()));
  if (!c.is_probability()) {
    std::ostringstream os;
    os << "prescribed spectrum must be a probability vector (sum " << c.sum() << ")";
    throw PreconditionError(os.str());
  }
  const MarginalProjector phi(cs);

  HermitianMatrix x0;
  if (opts.initial) {
    x0 = starting_point(cs, opts);
    // Feasible start: nothing to do.
    const RealVector eig = hermitian_eig(x0).values;
    if ((eig - c.values()).norm() <= opts.tolerance && marginal_residual(x0, cs) <= opts.tolerance) {
      SolveReport report;
      report.seed = opts.seed;
      report.solution = x0;
      report.residual = marginal_residual(x0, cs);
      report.converged = true;
      report.status = SolveStatus::Converged;
      return report;
    }
  } else {
    std::mt19937_64 rng(opts.seed);
    const Matrix u = random_unitary(cs.dims().total(), rng);
    const Spectrum p = random_probability_vector(cs.dims().total(), rng);
    x0 = HermitianMatrix(u * p.values().cast<Complex>().asDiagonal() * u.adjoint());
  }
  return alternate(cs, phi, std::move(x0), opts,
                   [&](const HermitianMatrix& x) { return project_spectrum(x, c); });
}

SolveReport solve_with_rank_cap(const ConstraintSet& cs, std::size_t r, const SolveOptions& opts) {
  opts.validate();
  if (r < 1) throw PreconditionError("rank cap must be at least 1");
  const MarginalProjector phi(cs);
  return alternate(cs, phi, starting_point(cs, opts), opts,
                   [&](const HermitianMatrix& x) { return keep_top_eigenvalues(x, r); });
}

SolveReport dykstra_project(const HermitianMatrix& z, const ConstraintSet& cs, const SolveOptions& opts) {
  opts.validate();
  require_order(cs, z.order(), "matrix");
  const auto start = Clock::now();
  const MarginalProjector phi(cs);
  if (opts.dykstra_mode == DykstraMode::WithIncrements) {
    const SupportReduction red = reduce_to_support(cs);
    if (red.reduced) return lifted(dykstra_project(red.restrict(z), *red.reduced, opts), red, cs);
  }
  DykstraResult d = dykstra_core(z, cs, phi, opts.tolerance, opts.max_iterations, opts.dykstra_mode, true);
  SolveReport report;
  report.seed = opts.seed;
  report.solution = std::move(d.x);
  report.iterations = d.sweeps;
  report.residual_history = std::move(d.history);
  report.residual = report.residual_history.empty() ? marginal_residual(report.solution, cs)
                                                    : report.residual_history.back();
  report.converged = d.converged;
  if (!report.converged) report.message = "iteration limit reached";
  finish(report, start);
  return report;
}

SolveReport dual_newton_project(const HermitianMatrix& z, const ConstraintSet& cs, const SolveOptions& opts) {
  opts.validate();
  require_order(cs, z.order(), "matrix");
  const auto start = Clock::now();
  const MarginalProjector phi(cs);  // consistency check
  const SupportReduction red = reduce_to_support(cs);
  if (red.reduced) return lifted(dual_newton_project(red.restrict(z), *red.reduced, opts), red, cs);
  const double tol = opts.tolerance * std::max(1.0, z.norm());
  DykstraResult d = DualNewton(cs).project(z, tol, opts.max_iterations, true);
  SolveReport report;
  report.seed = opts.seed;
  report.solution = std::move(d.x);
  report.iterations = d.sweeps;
  report.residual_history = std::move(d.history);
  report.residual = marginal_residual(report.solution, cs);
  report.converged = d.converged;
  if (!report.converged) report.message = "Newton iteration stalled before reaching the tolerance";
  finish(report, start);
  return report;
}

// ---------------------------------------------------------------------- NSPG

double EntropyObjective::entropy(const HermitianMatrix& rho) const {
  return kind == Kind::VonNeumann ? qmarg::von_neumann(rho) : qmarg::renyi(rho, alpha);
}

HermitianMatrix EntropyObjective::gradient(const HermitianMatrix& rho) const {
  if (kind == Kind::VonNeumann) return grad_von_neumann_objective(rho) * -1.0;
  return grad_renyi(rho, alpha);
}

SolveReport nspg_minimize(const ConstraintSet& cs, const EntropyObjective& objective, const SolveOptions& opts) {
  opts.validate();
  if (objective.kind == EntropyObjective::Kind::Renyi && !(objective.alpha > 0.0 && objective.alpha != 1.0))
    throw PreconditionError("Renyi order must be positive and different from 1");
  const auto start = Clock::now();
  const MarginalProjector phi(cs);
  if (const SupportReduction red = reduce_to_support(cs); red.reduced) {
    SolveOptions inner = opts;
    if (opts.initial) {
      require_order(cs, opts.initial->order(), "initial point");
      inner.initial = red.restrict(*opts.initial);
    }
    return lifted(nspg_minimize(*red.reduced, objective, inner), red, cs);
  }
  const NspgOptions& p = opts.nspg;

  SolveReport report;
  report.seed = opts.seed;

  // The inner tolerance scales with the matrix being projected, since
  // round-off in the eigen-solves grows with it.
  const DualNewton newton(cs);
  auto project = [&](const HermitianMatrix& z, bool& ok) {
    const double tol = p.inner_tolerance * std::max(1.0, z.norm());
    DykstraResult d = p.inner == InnerProjection::DualNewton
                          ? newton.project(z, tol, p.inner_max_sweeps, false)
                          : dykstra_core(z, cs, phi, tol, p.inner_max_sweeps, opts.dykstra_mode, false);
    ok = d.converged;
    return std::move(d.x);
  };
  auto inner_failure = [&](HermitianMatrix rho) {
    report.solution = std::move(rho);
    report.status = SolveStatus::InnerProjectionFailed;
    report.message = "inner projection did not converge within " + std::to_string(p.inner_max_sweeps) + " steps";
    report.residual = marginal_residual(report.solution, cs);
    finish(report, start);
    return report;
  };

  // P(rho - alpha grad); continuation for the Newton projector.
  auto project_step = [&](const HermitianMatrix& from, const HermitianMatrix& g, double step, bool& ok) {
    if (p.inner == InnerProjection::Dykstra) return project(from - g * step, ok);
    DykstraResult d = newton.project_along(from, g, step, p.inner_tolerance, p.inner_max_sweeps);
    ok = d.converged;
    return std::move(d.x);
  };

  bool ok = true;
  HermitianMatrix rho = project(starting_point(cs, opts), ok);
  if (!ok) return inner_failure(std::move(rho));

  double f = objective.value(rho);
  HermitianMatrix grad = objective.gradient(rho);
  std::deque<double> window{f};
  report.objective_history.push_back(f);
  double alpha = std::clamp(1.0, p.alpha_min, p.alpha_max);

  for (std::size_t t = 1; t <= opts.max_iterations; ++t) {
    const HermitianMatrix stationary = project_step(rho, grad, 1.0, ok);
    if (!ok) return inner_failure(std::move(rho));
    const double measure = (stationary - rho).norm();
    report.residual_history.push_back(measure);
    report.iterations = t;
    if (measure <= p.stationarity_tolerance) {
      report.converged = true;
      break;
    }

    HermitianMatrix trial = project_step(rho, grad, alpha, ok);
    if (!ok) return inner_failure(std::move(rho));
    // With a long step the projected point is only accurate relative to
    // alpha |grad|; a second projection from close by restores feasibility.
    if (alpha * grad.norm() > 1.0) {
      trial = project(trial, ok);
      if (!ok) return inner_failure(std::move(rho));
    }
    const HermitianMatrix d = trial - rho;
    const double slope = inner(d, grad);
    const double f_max = *std::max_element(window.begin(), window.end());

    double lambda = 1.0;
    HermitianMatrix next;
    double f_next = 0.0;
    while (true) {
      next = rho + d * lambda;
      f_next = objective.value(next);
      if (f_next <= f_max + p.decrease * lambda * slope) break;
      lambda *= (p.sigma1 + p.sigma2) / 2.0;
      if (lambda < kLineSearchFloor) {
        report.solution = std::move(rho);
        report.status = SolveStatus::LineSearchCollapse;
        report.message = "line search step fell below 1e-16";
        report.residual = marginal_residual(report.solution, cs);
        finish(report, start);
        return report;
      }
    }

    const HermitianMatrix grad_next = objective.gradient(next);
    const HermitianMatrix s = next - rho;
    const double sy = inner(s, grad_next - grad);
    alpha = sy <= 0.0 ? p.alpha_max : std::clamp(inner(s, s) / sy, p.alpha_min, p.alpha_max);

    rho = std::move(next);
    grad = grad_next;
    f = f_next;
    report.objective_history.push_back(f);
    window.push_back(f);
    if (window.size() > p.window) window.pop_front();
  }

  report.solution = std::move(rho);
  report.residual = marginal_residual(report.solution, cs);
  if (!report.converged) report.message = "not stationary at the iteration limit";
  finish(report, start);
  return report;
}

// ------------------------------------------------------------------ restarts

std::vector<SolveReport> run_restarts(const std::function<SolveReport(const SolveOptions&)>& solve,
                                      const SolveOptions& opts) {
  opts.validate();
  std::vector<std::future<SolveReport>> futures;
  for (std::size_t i = 0; i < opts.restarts; ++i) {
    SolveOptions o = opts;
    o.seed = opts.seed + i;
    o.restarts = 1;
    futures.push_back(std::async(std::launch::async, solve, std::move(o)));
  }
  std::vector<SolveReport> reports;
  for (auto& f : futures) reports.push_back(f.get());
  return reports;
}

const SolveReport& select_restart(const std::vector<SolveReport>& reports) {
  if (reports.empty()) throw PreconditionError("no restart reports to choose from");
  for (const auto& r : reports)
    if (r.converged) return r;
  return *std::min_element(reports.begin(), reports.end(),
                           [](const SolveReport& a, const SolveReport& b) { return a.residual < b.residual; });
}

}  // namespace qmarg
