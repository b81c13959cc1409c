#include "qmarg/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "qmarg/constructive.hpp"
#include "qmarg/entropy.hpp"
#include "qmarg/projections.hpp"
#include "qmarg/solvers.hpp"

namespace qmarg::cli {

using json = nlohmann::json;

namespace {

constexpr double kHermitianInputTolerance = 1e-9;
// Printed spectra are rounded; sums this close to 1 are rescaled with a note.
constexpr double kRenormalizeSlack = 1e-3;
constexpr double kSpectrumTolerance = 1e-10;

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(what + ": " + e.what());
  }
}

std::size_t parse_count(const std::string& token, const std::string& what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(token, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != token.size() || token.front() == '-')
    throw InputError("bad " + what + " '" + token + "'");
  return static_cast<std::size_t>(v);
}

std::vector<std::size_t> parse_list(const std::string& text, const std::string& what) {
  std::vector<std::size_t> values;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) values.push_back(parse_count(token, what));
  if (values.empty()) throw InputError("empty " + what);
  return values;
}

// 1-based command-line indices to a 0-based ascending keep-set.
Subsystems parse_keep(const std::string& text) {
  Subsystems keep;
  for (std::size_t i : parse_list(text, "subsystem index")) {
    if (i == 0) throw InputError("subsystem indices are 1-based");
    keep.push_back(i - 1);
  }
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end())
    throw InputError("repeated subsystem index in '" + text + "'");
  return keep;
}

std::string keep_label(const Subsystems& keep) {
  std::string s;
  for (std::size_t i : keep) s += (s.empty() ? "" : ",") + std::to_string(i + 1);
  return s;
}

SystemDims parse_dims(const std::string& text) {
  std::vector<std::size_t> dims = parse_list(text, "dimension");
  for (std::size_t d : dims)
    if (d == 0) throw InputError("dimensions must be positive");
  return SystemDims(dims);
}

std::string number(double x) { return json(x).dump(); }

struct LoadedMarginal {
  Subsystems keep;
  std::string path;
  MatrixFile file;
};

struct Problem {
  SystemDims dims{std::vector<std::size_t>{1}};
  std::vector<LoadedMarginal> marginals;
  std::optional<ConstraintSet> constraints;
};

SystemDims infer_dims(const std::vector<LoadedMarginal>& ms) {
  std::size_t count = 0;
  for (const auto& m : ms) count = std::max(count, m.keep.back() + 1);
  std::vector<std::size_t> dims(count, 0);
  for (const auto& m : ms) {
    std::vector<std::size_t> local;
    if (m.file.dims.count() == m.keep.size())
      local = m.file.dims.dims();
    else if (m.keep.size() == 1)
      local = {m.file.dims.total()};
    else
      throw InputError("cannot infer subsystem dimensions from " + m.path + "; pass --dims");
    for (std::size_t i = 0; i < local.size(); ++i) {
      std::size_t& d = dims[m.keep[i]];
      if (d != 0 && d != local[i])
        throw InputError("conflicting dimensions for subsystem " + std::to_string(m.keep[i] + 1));
      d = local[i];
    }
  }
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (dims[i] == 0) throw InputError("dimension of subsystem " + std::to_string(i + 1) + " unknown; pass --dims");
  return SystemDims(dims);
}

Problem load_problem(const std::vector<std::string>& marginal_args, const std::string& dims_flag) {
  Problem p;
  for (const auto& arg : marginal_args) {
    const auto colon = arg.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == arg.size())
      throw InputError("--marginal expects <keepset>:<file>, got '" + arg + "'");
    LoadedMarginal m{parse_keep(arg.substr(0, colon)), arg.substr(colon + 1), MatrixFile{}};
    m.file = load_matrix(m.path);
    p.marginals.push_back(std::move(m));
  }
  if (!dims_flag.empty())
    p.dims = parse_dims(dims_flag);
  else if (!p.marginals.empty())
    p.dims = infer_dims(p.marginals);
  else
    throw InputError("no --marginal given and no --dims");
  if (!p.marginals.empty()) {
    std::vector<MarginalConstraint> cs;
    for (const auto& m : p.marginals) cs.push_back({m.keep, as_hermitian(m.file, m.path)});
    p.constraints.emplace(p.dims, std::move(cs));
  }
  return p;
}

const ConstraintSet& require_constraints(const Problem& p) {
  if (!p.constraints) throw InputError("at least one --marginal is required");
  return *p.constraints;
}

void print_consistency(const ConsistencyReport& r, std::ostream& os) {
  os << "consistent: " << (r.consistent ? "yes" : "no") << "\n";
  os << "max_discrepancy: " << number(r.max_discrepancy) << "\n";
  if (!r.detail.empty()) os << "detail: " << r.detail << "\n";
  for (const auto& [keep, m] : r.derived_marginals)
    os << "derived marginal on {" << keep_label(keep) << "}: trace " << number(m.trace()) << "\n";
}

// Exit code 1 with the report on stderr when the family is inconsistent.
bool consistent_or_report(const ConstraintSet& cs, std::ostream& err) {
  const ConsistencyReport r = check_consistency(cs);
  if (r.consistent) return true;
  err << "error: inconsistent marginals\n";
  print_consistency(r, err);
  return false;
}

std::pair<DensityMatrix, DensityMatrix> bipartite_marginals(const Problem& p) {
  const ConstraintSet& cs = require_constraints(p);
  const MarginalConstraint* first = nullptr;
  const MarginalConstraint* second = nullptr;
  for (const auto& c : cs.constraints()) {
    if (c.keep == Subsystems{0}) first = &c;
    if (c.keep == Subsystems{1}) second = &c;
  }
  if (cs.dims().count() != 2 || cs.size() != 2 || !first || !second)
    throw InputError("this command needs exactly --marginal 1:<file> and --marginal 2:<file>");
  return {DensityMatrix(first->target), DensityMatrix(second->target)};
}

Spectrum load_spectrum(const std::string& path, std::size_t expected, std::ostream& err) {
  const Spectrum s(load_values(path));
  if (static_cast<std::size_t>(s.size()) != expected)
    throw InputError("spectrum has " + std::to_string(s.size()) + " values, expected " + std::to_string(expected));
  if (s.is_probability(kSpectrumTolerance)) return s;
  const bool nonnegative = s.values().minCoeff() >= -kSpectrumTolerance;
  if (nonnegative && std::abs(s.sum() - 1.0) <= kRenormalizeSlack) {
    err << "note: spectrum sums to " << number(s.sum()) << "; renormalized to 1\n";
    return s.normalized();
  }
  throw InputError("spectrum is not a probability vector (sum " + number(s.sum()) + ")");
}

json describe(const HermitianMatrix& x, const ConstraintSet* cs) {
  const RealVector values = hermitian_eig(x).values;
  json d;
  d["rank"] = numerical_rank(values);
  d["lambda_max"] = values.maxCoeff();
  d["lambda_min"] = values.minCoeff();
  d["entropy"] = von_neumann(x);
  d["trace"] = x.trace();
  if (cs) d["residual"] = marginal_residual(x, *cs);
  d["eigenvalues"] = std::vector<double>(values.data(), values.data() + values.size());
  return d;
}

void print_fields(const json& j, std::ostream& out) {
  for (const char* key : {"status", "iterations", "rank", "lambda_max", "lambda_min", "entropy", "trace", "residual"}) {
    if (!j.contains(key)) continue;
    out << key << ": ";
    if (j[key].is_string())
      out << j[key].get<std::string>();
    else if (j[key].is_number_float())
      out << std::setprecision(10) << j[key].get<double>();
    else
      out << j[key].dump();
    out << "\n";
  }
}

void emit(const std::string& dir, const HermitianMatrix& x, const SystemDims& dims, const json& report) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir + ": " + ec.message());
  save_matrix((std::filesystem::path(dir) / "solution.json").string(), MatrixFile{dims, x.matrix()});
  write_text((std::filesystem::path(dir) / "report.json").string(), report.dump(2) + "\n");
}

void write_matrix_or_print(const std::string& path, const MatrixFile& file, std::ostream& out) {
  if (path.empty())
    out << format_matrix(file);
  else
    save_matrix(path, file);
}

// ---------------------------------------------------------------------------
// Options shared by the subcommands.

struct Options {
  std::string input;
  std::string keep;
  std::vector<std::string> marginals;
  std::string dims;
  std::string spectrum;
  std::size_t cap = 0;
  std::size_t k = 0;
  double alpha = 0.0;
  double tol = SolveOptions{}.tolerance;
  std::size_t max_iter = SolveOptions{}.max_iterations;
  std::uint64_t seed = 0;
  std::size_t restarts = 1;
  std::string init = "random";
  std::string out;
  std::string mode = "dykstra";
  bool alpha_given = false;
};

void add_marginals(CLI::App* app, Options& o) {
  app->add_option("--marginal", o.marginals, "<keepset>:<file>, 1-based keep-set, e.g. 2,3:rho.json")
      ->allow_extra_args(false);
  app->add_option("--dims", o.dims, "subsystem dimensions, e.g. 2,2,2 (inferred from the marginals if omitted)");
}

void add_solver_flags(CLI::App* app, Options& o) {
  add_marginals(app, o);
  app->add_option("--tol", o.tol, "residual tolerance delta")->capture_default_str();
  app->add_option("--max-iter", o.max_iter, "iteration limit")->capture_default_str();
  app->add_option("--seed", o.seed, "random seed")->capture_default_str();
  app->add_option("--restarts", o.restarts, "independent runs with seeds seed, seed+1, ...")->capture_default_str();
  app->add_option("--init", o.init, "random | greedy | interlace | file:<path>")->capture_default_str();
  app->add_option("--out", o.out, "directory for solution.json and report.json");
  app->add_option("--mode", o.mode, "dykstra | plain")
      ->check(CLI::IsMember({"dykstra", "plain"}))
      ->capture_default_str();
}

// ---------------------------------------------------------------------------
// Commands.

int cmd_trace(const Options& o, std::ostream& out) {
  const MatrixFile in = load_matrix(o.input);
  const SystemDims dims = o.dims.empty() ? in.dims : parse_dims(o.dims);
  const Subsystems keep = parse_keep(o.keep);
  const HermitianMatrix reduced = partial_trace(as_hermitian(in, o.input), dims, keep);
  write_matrix_or_print(o.out, MatrixFile{dims.restricted_to(keep), reduced.matrix()}, out);
  return kSuccess;
}

int cmd_consistency(const Options& o, std::ostream& out) {
  const Problem p = load_problem(o.marginals, o.dims);
  const ConsistencyReport r = check_consistency(require_constraints(p), o.tol);
  print_consistency(r, out);
  return r.consistent ? kSuccess : kInputError;
}

int cmd_project(const Options& o, std::ostream& out, std::ostream& err) {
  const Problem p = load_problem(o.marginals, o.dims);
  const ConstraintSet& cs = require_constraints(p);
  if (!consistent_or_report(cs, err)) return kInputError;
  const HermitianMatrix z = as_hermitian(load_matrix(o.input), o.input);
  write_matrix_or_print(o.out, MatrixFile{p.dims, project_marginals(z, cs).matrix()}, out);
  return kSuccess;
}

std::optional<HermitianMatrix> initial_point(const Options& o, const Problem& p) {
  if (o.init == "random") return std::nullopt;
  if (o.init == "greedy" || o.init == "interlace") {
    const auto [rho1, rho2] = bipartite_marginals(p);
    const DecomposedState s = o.init == "greedy" ? greedy_minmatch(rho1, rho2) : interlace_decomposition(rho1, rho2);
    return s.state.hermitian();
  }
  if (o.init.rfind("file:", 0) == 0) {
    const std::string path = o.init.substr(5);
    return as_hermitian(load_matrix(path), path);
  }
  throw InputError("--init expects random, greedy, interlace or file:<path>");
}

enum class SolveKind { Spectrum, Rank, Feasible, MinEntropy };

int cmd_solve(SolveKind kind, const std::string& name, const Options& o, std::ostream& out, std::ostream& err) {
  const Problem p = load_problem(o.marginals, o.dims);
  const ConstraintSet& cs = require_constraints(p);
  if (!consistent_or_report(cs, err)) return kInputError;

  SolveOptions so;
  so.max_iterations = o.max_iter;
  so.tolerance = o.tol;
  so.seed = o.seed;
  so.restarts = o.restarts;
  so.dykstra_mode = o.mode == "plain" ? DykstraMode::PlainAlternation : DykstraMode::WithIncrements;
  so.initial = initial_point(o, p);
  so.validate();

  std::function<SolveReport(const SolveOptions&)> solve;
  switch (kind) {
    case SolveKind::Spectrum: {
      if (o.spectrum.empty()) throw InputError("solve spectrum needs --spectrum <file>");
      const Spectrum c = load_spectrum(o.spectrum, p.dims.total(), err);
      solve = [&cs, c](const SolveOptions& s) { return solve_with_spectrum(cs, c, s); };
      break;
    }
    case SolveKind::Rank:
      if (o.cap == 0) throw InputError("solve rank needs --cap <r> with r >= 1");
      solve = [&cs, r = o.cap](const SolveOptions& s) { return solve_with_rank_cap(cs, r, s); };
      break;
    case SolveKind::Feasible:
      solve = [&cs](const SolveOptions& s) {
        const HermitianMatrix z = s.initial ? *s.initial : random_density(cs.dims(), s.seed).hermitian();
        return dykstra_project(z, cs, s);
      };
      break;
    case SolveKind::MinEntropy: {
      if (o.alpha_given && (o.alpha <= 0.0 || o.alpha == 1.0))
        throw InputError("--alpha must be positive and different from 1");
      const EntropyObjective f = o.alpha_given ? EntropyObjective::renyi(o.alpha) : EntropyObjective::von_neumann();
      solve = [&cs, f](const SolveOptions& s) { return nspg_minimize(cs, f, s); };
      break;
    }
  }

  const std::vector<SolveReport> reports = run_restarts(solve, so);
  const SolveReport& best = select_restart(reports);

  json report;
  report["command"] = "solve " + name;
  report["status"] = to_string(best.status);
  report["converged"] = best.converged;
  report["message"] = best.message;
  report["iterations"] = best.iterations;
  report["residual"] = best.residual;
  report["seed"] = best.seed;
  report["wall_time_seconds"] = best.wall_time.count();
  report["residual_history"] = best.residual_history;
  if (!best.objective_history.empty()) report["objective_history"] = best.objective_history;
  report["solution"] = describe(best.solution, &cs);
  json runs = json::array();
  for (const auto& r : reports)
    runs.push_back({{"seed", r.seed}, {"status", to_string(r.status)}, {"iterations", r.iterations},
                    {"residual", r.residual}, {"wall_time_seconds", r.wall_time.count()}});
  report["restarts"] = runs;

  json summary = report["solution"];
  summary["status"] = report["status"];
  summary["iterations"] = best.iterations;
  print_fields(summary, out);
  if (!best.converged && !best.message.empty()) err << "not converged: " << best.message << "\n";
  emit(o.out, best.solution, p.dims, report);
  return best.converged ? kSuccess : kNotConverged;
}

enum class ConstructKind { Pure, RankK, Sweep, Interlace, Greedy };

int cmd_construct(ConstructKind kind, const std::string& name, const Options& o, std::ostream& out,
                  std::ostream& err) {
  const Problem p = load_problem(o.marginals, o.dims);
  if (!consistent_or_report(require_constraints(p), err)) return kInputError;
  const auto [rho1, rho2] = bipartite_marginals(p);

  std::optional<DecomposedState> decomposed;
  HermitianMatrix state;
  switch (kind) {
    case ConstructKind::Pure:
      state = pure_state_from_isospectral(rho1, rho2).hermitian();
      break;
    case ConstructKind::RankK:
      state = rank_k_roots_of_unity(rho1, rho2, o.k).hermitian();
      break;
    case ConstructKind::Sweep:
      state = rank_sweep(rho1, rho2, o.k).hermitian();
      break;
    case ConstructKind::Interlace:
      decomposed.emplace(interlace_decomposition(rho1, rho2));
      break;
    case ConstructKind::Greedy:
      decomposed.emplace(greedy_minmatch(rho1, rho2));
      break;
  }
  if (decomposed) state = decomposed->state.hermitian();

  json report;
  report["command"] = "construct " + name;
  report["solution"] = describe(state, &*p.constraints);
  if (decomposed) report["pair_weights"] = decomposed->decomposition.weights;
  print_fields(report["solution"], out);
  emit(o.out, state, p.dims, report);

  const double residual = report["solution"]["residual"].get<double>();
  if (residual > o.tol) {
    err << "error: marginal residual " << number(residual) << " exceeds " << number(o.tol) << "\n";
    return kNotConverged;
  }
  return kSuccess;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
  const MatrixFile file = load_matrix(o.input);
  std::optional<Problem> p;
  if (!o.marginals.empty()) p = load_problem(o.marginals, o.dims.empty() ? "" : o.dims);
  const SystemDims dims = p ? p->dims : (o.dims.empty() ? file.dims : parse_dims(o.dims));
  if (static_cast<std::size_t>(file.entries.rows()) != dims.total())
    throw InputError("matrix order does not match the dimensions");

  bool ok = true;
  auto check = [&](const char* what, double value, bool pass) {
    out << what << ": " << std::setprecision(6) << value << (pass ? " ok" : " FAIL") << "\n";
    ok = ok && pass;
  };
  const double asym = (file.entries - file.entries.adjoint()).cwiseAbs().maxCoeff();
  check("hermitian_deviation", asym, asym <= o.tol);
  const HermitianMatrix x(file.entries);
  const RealVector values = hermitian_eig(x).values;
  check("lambda_min", values.minCoeff(), values.minCoeff() >= -o.tol);
  check("trace_deviation", std::abs(x.trace() - 1.0), std::abs(x.trace() - 1.0) <= o.tol);
  if (p) {
    const double residual = marginal_residual(x, *p->constraints);
    check("residual", residual, residual <= o.tol);
  }
  if (!o.spectrum.empty()) {
    const Spectrum c = load_spectrum(o.spectrum, dims.total(), err);
    const double gap = (values - c.values()).norm();
    check("spectrum_distance", gap, gap <= o.tol);
  }
  out << (ok ? "verified" : "verification failed") << "\n";
  return ok ? kSuccess : kInputError;
}

int cmd_random(const std::string& what, const Options& o, std::ostream& out) {
  if (o.dims.empty()) throw InputError("random needs --dims");
  const SystemDims dims = parse_dims(o.dims);
  if (what == "probvec") {
    const Spectrum s = random_probability_vector(dims.total(), o.seed);
    const json j{{"values", std::vector<double>(s.values().data(), s.values().data() + s.size())}};
    if (o.out.empty())
      out << j.dump() << "\n";
    else
      write_text(o.out, j.dump() + "\n");
    return kSuccess;
  }
  const Matrix m = what == "unitary" ? random_unitary(dims.total(), o.seed) : random_density(dims, o.seed).matrix();
  write_matrix_or_print(o.out, MatrixFile{dims, m}, out);
  return kSuccess;
}

}  // namespace

// ---------------------------------------------------------------------------
// Files.

MatrixFile parse_matrix(const std::string& text) {
  const json j = parse_json(text, "matrix file");
  if (!j.is_object() || !j.contains("dims") || !j.contains("entries"))
    throw InputError("matrix file needs \"dims\" and \"entries\"");
  std::vector<std::size_t> dims;
  try {
    for (const auto& d : j.at("dims")) {
      if (!d.is_number_integer() || d.get<long long>() <= 0) throw InputError("dims must be positive integers");
      dims.push_back(d.get<std::size_t>());
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("dims: ") + e.what());
  }
  if (dims.empty()) throw InputError("dims is empty");
  MatrixFile file{SystemDims(dims), Matrix()};
  const auto n = static_cast<Eigen::Index>(file.dims.total());
  const json& entries = j.at("entries");
  if (!entries.is_array() || entries.size() != static_cast<std::size_t>(n * n))
    throw InputError("expected " + std::to_string(n * n) + " entries");
  file.entries.resize(n, n);
  for (Eigen::Index k = 0; k < n * n; ++k) {
    const json& e = entries[static_cast<std::size_t>(k)];
    Complex v;
    if (e.is_number())
      v = e.get<double>();
    else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
      v = Complex(e[0].get<double>(), e[1].get<double>());
    else
      throw InputError("entry " + std::to_string(k) + " is not [re, im]");
    file.entries(k / n, k % n) = v;
  }
  if (!file.entries.allFinite()) throw InputError("matrix has non-finite entries");
  return file;
}

std::string format_matrix(const MatrixFile& file) {
  std::string s = "{\"dims\": " + json(file.dims.dims()).dump() + ", \"entries\": [\n";
  const Eigen::Index n = file.entries.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    s += "  ";
    for (Eigen::Index j = 0; j < n; ++j) {
      const Complex v = file.entries(i, j);
      s += "[" + number(v.real()) + ", " + number(v.imag()) + "]";
      if (i + 1 < n || j + 1 < n) s += ", ";
    }
    s += "\n";
  }
  return s + "]}\n";
}

MatrixFile load_matrix(const std::string& path) {
  try {
    return parse_matrix(read_text(path));
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void save_matrix(const std::string& path, const MatrixFile& file) { write_text(path, format_matrix(file)); }

HermitianMatrix as_hermitian(const MatrixFile& file, const std::string& what) {
  const Matrix& m = file.entries;
  if (m.rows() != m.cols()) throw InputError(what + ": matrix is not square");
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kHermitianInputTolerance)
    throw InputError(what + ": matrix is not Hermitian");
  return HermitianMatrix(m);
}

std::vector<double> load_values(const std::string& path) {
  const json j = parse_json(read_text(path), path);
  if (!j.is_object() || !j.contains("values") || !j["values"].is_array() || j["values"].empty())
    throw InputError(path + ": expected {\"values\": [...]}");
  std::vector<double> values;
  for (const auto& v : j["values"]) {
    if (!v.is_number()) throw InputError(path + ": values must be numbers");
    values.push_back(v.get<double>());
  }
  return values;
}

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum marginal problem solver", "qmarg"};
  app.require_subcommand(1);
  Options o;
  std::function<int()> action;

  auto* trace = app.add_subcommand("trace", "partial trace of a matrix file");
  trace->add_option("input", o.input, "matrix file")->required();
  trace->add_option("--keep", o.keep, "1-based subsystems to keep, e.g. 2,3")->required();
  trace->add_option("--dims", o.dims, "override the file's dims");
  trace->add_option("--out", o.out, "output file (stdout if omitted)");
  trace->callback([&] { action = [&] { return cmd_trace(o, out); }; });

  auto* consistency = app.add_subcommand("consistency", "check that the marginals agree on overlaps");
  add_marginals(consistency, o);
  consistency->add_option("--tol", o.tol, "discrepancy tolerance (default 1e-8)");
  consistency->callback([&] {
    if (consistency->count("--tol") == 0) o.tol = kDefaultConsistencyTolerance;
    action = [&] { return cmd_consistency(o, out); };
  });

  auto* project = app.add_subcommand("project", "nearest matrix with the given marginals");
  project->add_option("input", o.input, "matrix file")->required();
  add_marginals(project, o);
  project->add_option("--out", o.out, "output file (stdout if omitted)");
  project->callback([&] { action = [&] { return cmd_project(o, out, err); }; });

  auto* solve = app.add_subcommand("solve", "iterative solvers");
  solve->require_subcommand(1);
  auto add_solve = [&](const std::string& name, SolveKind kind, const std::string& help) {
    auto* sub = solve->add_subcommand(name, help);
    add_solver_flags(sub, o);
    return std::pair{sub, kind};
  };
  for (const auto& entry : {add_solve("spectrum", SolveKind::Spectrum, "prescribed marginals and spectrum"),
                           add_solve("rank", SolveKind::Rank, "prescribed marginals, rank at most --cap"),
                           add_solve("feasible", SolveKind::Feasible, "any state with the prescribed marginals"),
                           add_solve("min-entropy", SolveKind::MinEntropy,
                                     "local minimum of the von Neumann (or Renyi, --alpha) entropy")}) {
    CLI::App* sub = entry.first;
    const SolveKind kind = entry.second;
    if (kind == SolveKind::Spectrum) sub->add_option("--spectrum", o.spectrum, "spectrum file")->required();
    if (kind == SolveKind::Rank) sub->add_option("--cap", o.cap, "rank cap r")->required();
    if (kind == SolveKind::MinEntropy) sub->add_option("--alpha", o.alpha, "Renyi order (von Neumann if omitted)");
    const std::string name = sub->get_name();
    sub->callback([&, sub, kind, name] {
      o.alpha_given = kind == SolveKind::MinEntropy && sub->count("--alpha") > 0;
      action = [&, kind, name] { return cmd_solve(kind, name, o, out, err); };
    });
  }

  auto* construct = app.add_subcommand("construct", "direct bipartite constructions");
  construct->require_subcommand(1);
  const std::vector<std::tuple<std::string, ConstructKind, std::string>> constructs{
      {"pure", ConstructKind::Pure, "rank-one state from isospectral marginals"},
      {"rank-k", ConstructKind::RankK, "rank --k state from roots of unity"},
      {"sweep", ConstructKind::Sweep, "rank --k state for any k up to r1 r2"},
      {"interlace", ConstructKind::Interlace, "low-rank state from interlacing chains"},
      {"greedy", ConstructKind::Greedy, "greedy min-matching, maximal lambda_max"}};
  for (const auto& [name, kind, help] : constructs) {
    auto* sub = construct->add_subcommand(name, help);
    add_marginals(sub, o);
    if (kind == ConstructKind::RankK || kind == ConstructKind::Sweep)
      sub->add_option("--k", o.k, "target rank")->required();
    sub->add_option("--out", o.out, "directory for solution.json and report.json");
    sub->add_option("--tol", o.tol, "required marginal residual (default 1e-10)");
    sub->callback([&, sub, kind = kind, name = name] {
      if (sub->count("--tol") == 0) o.tol = 1e-10;
      action = [&, kind, name] { return cmd_construct(kind, name, o, out, err); };
    });
  }

  auto* verify = app.add_subcommand("verify", "check a solution file: Hermitian, PSD, trace 1, marginals");
  verify->add_option("input", o.input, "matrix file")->required();
  add_marginals(verify, o);
  verify->add_option("--spectrum", o.spectrum, "also compare the eigenvalues with this spectrum");
  verify->add_option("--tol", o.tol, "tolerance for every check (default 1e-10)");
  verify->callback([&] {
    if (verify->count("--tol") == 0) o.tol = 1e-10;
    action = [&] { return cmd_verify(o, out, err); };
  });

  auto* random = app.add_subcommand("random", "random test data");
  random->require_subcommand(1);
  for (const std::string what : {"unitary", "density", "probvec"}) {
    auto* sub = random->add_subcommand(what, "random " + what);
    sub->add_option("--dims", o.dims, "dimensions; the total size is their product")->required();
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--out", o.out, "output file (stdout if omitted)");
    sub->callback([&, what] { action = [&, what] { return cmd_random(what, o, out); }; });
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInputError;
  }

  try {
    return action ? action() : kInputError;
  } catch (const InconsistentConstraintsError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNotConverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace qmarg::cli
