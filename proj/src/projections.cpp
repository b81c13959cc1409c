#include "qmarg/projections.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <sstream>

namespace qmarg {

namespace {

Subsystems intersect(const Subsystems& a, const Subsystems& b) {
  Subsystems out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool contains(const Subsystems& outer, const Subsystems& inner) {
  return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

std::string format_set(const Subsystems& s) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i] + 1;
  os << '}';
  return os.str();
}

// Reduce a target living on `keep` further down to `sub` (sub within keep).
HermitianMatrix reduce_target(const HermitianMatrix& target, const SystemDims& dims,
                              const Subsystems& keep, const Subsystems& sub) {
  if (sub == keep) return target;
  Subsystems local;
  for (std::size_t s : sub)
    local.push_back(static_cast<std::size_t>(std::find(keep.begin(), keep.end(), s) - keep.begin()));
  return partial_trace(target, dims.restricted_to(keep), local);
}

// Every nonempty subfamily, as (members, common intersection).
template <typename F>
void for_each_subfamily(const ConstraintSet& cs, F&& visit) {
  const std::size_t m = cs.size();
  for (std::size_t mask = 1; mask < (std::size_t{1} << m); ++mask) {
    std::vector<std::size_t> members;
    Subsystems common;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(mask & (std::size_t{1} << i))) continue;
      common = members.empty() ? cs.constraints()[i].keep : intersect(common, cs.constraints()[i].keep);
      members.push_back(i);
    }
    visit(members, common);
  }
}

}  // namespace

// ------------------------------------------------------------- ConstraintSet

ConstraintSet::ConstraintSet(SystemDims dims, std::vector<MarginalConstraint> constraints)
    : dims_(std::move(dims)), constraints_(std::move(constraints)) {
  if (constraints_.size() > 20) throw DimensionError("at most 20 marginal constraints are supported");
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const auto& c = constraints_[i];
    dims_.validate(c.keep);
    if (c.keep.empty()) throw DimensionError("marginal constraints need a nonempty kept set");
    if (static_cast<std::size_t>(c.target.order()) != dims_.total_of(c.keep))
      throw DimensionError("target of constraint on " + format_set(c.keep) + " has order " +
                           std::to_string(c.target.order()) + ", expected " +
                           std::to_string(dims_.total_of(c.keep)));
    for (std::size_t j = 0; j < i; ++j)
      if (constraints_[j].keep == c.keep)
        throw DimensionError("duplicate constraint on " + format_set(c.keep));
  }
}

ConstraintSet ConstraintSet::bipartite(const HermitianMatrix& rho1, const HermitianMatrix& rho2) {
  return ConstraintSet(SystemDims::bipartite(static_cast<std::size_t>(rho1.order()),
                                             static_cast<std::size_t>(rho2.order())),
                       {{{0}, rho1}, {{1}, rho2}});
}

// --------------------------------------------------------------- consistency

ConsistencyReport check_consistency(const ConstraintSet& cs, double tol) {
  ConsistencyReport report;
  const auto& cons = cs.constraints();
  for (const auto& c : cons) {
    const double dev = std::abs(c.target.trace() - 1.0);
    if (dev > report.max_discrepancy) {
      report.max_discrepancy = dev;
      std::ostringstream os;
      os << "target on " << format_set(c.keep) << " has trace " << c.target.trace();
      report.detail = os.str();
    }
  }
  for_each_subfamily(cs, [&](const std::vector<std::size_t>& members, const Subsystems& common) {
    if (common.empty()) return;
    if (!report.derived_marginals.count(common)) {
      for (const auto& c : cons)
        if (contains(c.keep, common)) {
          report.derived_marginals.emplace(common, reduce_target(c.target, cs.dims(), c.keep, common));
          break;
        }
    }
    if (members.size() < 2) return;
    std::vector<HermitianMatrix> reduced;
    for (std::size_t i : members)
      reduced.push_back(reduce_target(cons[i].target, cs.dims(), cons[i].keep, common));
    for (std::size_t a = 0; a < reduced.size(); ++a)
      for (std::size_t b = a + 1; b < reduced.size(); ++b) {
        const double dev = (reduced[a] - reduced[b]).norm();
        if (dev > report.max_discrepancy) {
          report.max_discrepancy = dev;
          std::ostringstream os;
          os << "targets on " << format_set(cons[members[a]].keep) << " and "
             << format_set(cons[members[b]].keep) << " disagree on " << format_set(common)
             << " by " << dev;
          report.detail = os.str();
        }
      }
  });
  report.consistent = report.max_discrepancy <= tol;
  if (report.consistent) report.detail.clear();
  return report;
}

// ---------------------------------------------------------------- projectors

HermitianMatrix project_bipartite_affine(const HermitianMatrix& p, const HermitianMatrix& rho1,
                                         const HermitianMatrix& rho2) {
  const auto n1 = rho1.order();
  const auto n2 = rho2.order();
  if (p.order() != n1 * n2)
    throw DimensionError("matrix order " + std::to_string(p.order()) +
                         " does not match marginal orders " + std::to_string(n1) + " x " +
                         std::to_string(n2));
  const SystemDims dims = SystemDims::bipartite(static_cast<std::size_t>(n1), static_cast<std::size_t>(n2));
  const Matrix tr1 = partial_trace(p, dims, {1}).matrix();  // traces out subsystem 1
  const Matrix tr2 = partial_trace(p, dims, {0}).matrix();
  const Matrix id1 = Matrix::Identity(n1, n1);
  const Matrix id2 = Matrix::Identity(n2, n2);
  const Matrix x = p.matrix() - kron(id1 / static_cast<double>(n1), tr1 - rho2.matrix()) -
                   kron(tr2 - rho1.matrix(), id2 / static_cast<double>(n2)) +
                   (p.trace() - 1.0) / static_cast<double>(n1 * n2) * Matrix::Identity(n1 * n2, n1 * n2);
  return HermitianMatrix(x);
}

HermitianMatrix project_spectrum(const HermitianMatrix& p, const Spectrum& c) {
  if (c.size() != p.order())
    throw DimensionError("spectrum length " + std::to_string(c.size()) + " does not match order " +
                         std::to_string(p.order()));
  const EigDecomposition eig = hermitian_eig(p);
  return HermitianMatrix(eig.vectors * c.values().cast<Complex>().asDiagonal() * eig.vectors.adjoint());
}

HermitianMatrix project_psd(const HermitianMatrix& z) {
  const EigDecomposition eig = hermitian_eig(z);
  const RealVector clipped = eig.values.cwiseMax(0.0);
  return HermitianMatrix(eig.vectors * clipped.cast<Complex>().asDiagonal() * eig.vectors.adjoint());
}

HermitianMatrix marginal_correction(const HermitianMatrix& z, const HermitianMatrix& sigma,
                                    const SystemDims& dims, const Subsystems& keep) {
  dims.validate(keep);
  if (static_cast<std::size_t>(z.order()) != dims.total())
    throw DimensionError("matrix order does not match subsystem dimensions");
  if (static_cast<std::size_t>(sigma.order()) != dims.total_of(keep))
    throw DimensionError("marginal order " + std::to_string(sigma.order()) + " does not match " +
                         std::to_string(dims.total_of(keep)));
  const double n_traced = static_cast<double>(dims.total() / dims.total_of(keep));
  if (keep.empty()) {
    const double delta = (z.trace() - sigma.trace()) / static_cast<double>(dims.total());
    return HermitianMatrix::identity(z.order()) * delta;
  }
  const Matrix delta = (partial_trace(z, dims, keep).matrix() - sigma.matrix()) / n_traced;
  return HermitianMatrix(embed_on_subsystems(delta, dims, keep));
}

MarginalProjector::MarginalProjector(const ConstraintSet& cs, double tol) : cs_(cs) {
  const ConsistencyReport report = check_consistency(cs_, tol);
  if (!report.consistent)
    throw InconsistentConstraintsError("inconsistent marginal constraints: " + report.detail,
                                       report.max_discrepancy);
  std::map<Subsystems, int> coefficients;
  for_each_subfamily(cs_, [&](const std::vector<std::size_t>& members, const Subsystems& common) {
    coefficients[common] += members.size() % 2 == 1 ? -1 : 1;
  });
  for (const auto& [keep, coefficient] : coefficients) {
    if (coefficient == 0) continue;
    HermitianMatrix target = keep.empty()
                                 ? HermitianMatrix(Matrix::Constant(1, 1, cs_.constraints().front().target.trace()))
                                 : report.derived_marginals.at(keep);
    terms_.push_back({keep, std::move(target), coefficient});
  }
}

HermitianMatrix MarginalProjector::operator()(const HermitianMatrix& z) const {
  Matrix out = z.matrix();
  for (const Term& t : terms_)
    out += static_cast<double>(t.coefficient) * marginal_correction(z, t.target, cs_.dims(), t.keep).matrix();
  return HermitianMatrix(out);
}

HermitianMatrix project_marginals(const HermitianMatrix& z, const ConstraintSet& cs) {
  return MarginalProjector(cs)(z);
}

double marginal_residual(const HermitianMatrix& x, const ConstraintSet& cs) {
  double err = 0.0;
  for (const auto& c : cs.constraints())
    err += (partial_trace(x, cs.dims(), c.keep) - c.target).norm();
  return err;
}

}  // namespace qmarg
