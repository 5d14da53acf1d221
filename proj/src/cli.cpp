#include "mvom/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mvom/action.hpp"
#include "mvom/simulator.hpp"
#include "mvom/variational.hpp"

namespace mvom::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- config

const std::vector<std::string> kDriftKeys = {"drift",       "dim",        "drift.rate", "drift.local", "drift.kernel",
                                             "drift.a",     "drift.b",    "drift.c",    "drift.term",  "drift.max_degree"};
const std::vector<std::string> kSolverKeys = {"solver.max_iterations", "solver.tolerance", "solver.damping",
                                              "solver.max_halvings", "solver.integration_steps", "variant", "guess"};
const std::vector<std::string> kMinimizeKeys = {"minimize.max_iterations", "minimize.tolerance", "minimize.law",
                                                "minimize.max_outer_iterations"};
const std::vector<std::string> kSimKeys = {"x0", "n", "particles", "trajectories", "seed"};

std::vector<std::string> keys(std::initializer_list<const std::vector<std::string>*> groups,
                              std::initializer_list<std::string> extra = {}) {
  std::vector<std::string> out;
  for (const auto* g : groups) out.insert(out.end(), g->begin(), g->end());
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(part);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

/// "i j : c0 c1 ..." with 1-based indices.
std::pair<std::vector<int>, std::vector<double>> indexed_coefficients(const Config::Entry& e, std::size_t indices,
                                                                      int dim) {
  const auto colon = e.value.find(':');
  if (colon == std::string::npos) throw ConfigError(e.key, e.line, "expected 'indices : coefficients'");
  std::istringstream in(e.value.substr(0, colon));
  std::vector<int> idx;
  int v = 0;
  while (in >> v) idx.push_back(v);
  if (!in.eof() || idx.size() != indices) throw ConfigError(e.key, e.line, "wrong number of indices");
  for (int& i : idx) {
    if (i < 1 || i > dim) throw ConfigError(e.key, e.line, "index out of range 1.." + std::to_string(dim));
    --i;
  }
  return {idx, Config::to_doubles(e, e.value.substr(colon + 1))};
}

int config_dim(const Config& c) {
  const int dim = c.get_int_or("dim", 1);
  if (dim < 1) throw ConfigError("dim", c.all("dim").front()->line, "must be >= 1");
  return dim;
}

}  // namespace

DriftSpec drift_from_config(const Config& c) {
  const std::string kind = c.get("drift");
  const int dim = config_dim(c);
  const int max_degree = c.get_int_or("drift.max_degree", kDefaultMaxDegree);
  auto line_of = [&](const std::string& key) {
    const auto entries = c.all(key);
    return entries.empty() ? 0 : entries.front()->line;
  };
  try {
    if (kind == "zero") return models::zero(dim);
    if (kind == "ornstein-uhlenbeck") return models::ornstein_uhlenbeck(c.get_double_or("drift.rate", 1.0), dim);
    if (kind == "bistable") return models::bistable_mean_field();
    if (kind == "mean-attraction") return models::mean_attraction();
    if (kind == "poly1d") {
      if (dim != 1) throw ConfigError("dim", line_of("dim"), "poly1d drifts are scalar");
      std::vector<DriftSpec::Coefficients> local;
      for (const auto* e : c.all("drift.local")) local.push_back(Config::to_doubles(*e, e->value));
      std::vector<DriftSpec::SeparableKernel> kernels;
      for (const auto* e : c.all("drift.kernel")) {
        const auto parts = split(e->value, '|');
        if (parts.size() != 2) throw ConfigError(e->key, e->line, "expected 'outer coefficients | inner coefficients'");
        kernels.push_back({Config::to_doubles(*e, parts[0]), Config::to_doubles(*e, parts[1])});
      }
      return DriftSpec::poly_separable_1d(local, kernels, max_degree);
    }
    if (kind == "linear") {
      DriftSpec::TimePolyMatrix a(dim, std::vector<DriftSpec::Coefficients>(dim));
      DriftSpec::TimePolyMatrix cm = a;
      std::vector<DriftSpec::Coefficients> b(dim);
      for (const auto* e : c.all("drift.a")) {
        const auto [idx, coef] = indexed_coefficients(*e, 2, dim);
        a[idx[0]][idx[1]] = coef;
      }
      for (const auto* e : c.all("drift.c")) {
        const auto [idx, coef] = indexed_coefficients(*e, 2, dim);
        cm[idx[0]][idx[1]] = coef;
      }
      for (const auto* e : c.all("drift.b")) {
        const auto [idx, coef] = indexed_coefficients(*e, 1, dim);
        b[idx[0]] = coef;
      }
      return DriftSpec::linear_mean_field(dim, a, b, cm, max_degree);
    }
    if (kind == "polynomial") {
      std::vector<std::vector<Monomial>> terms(dim);
      for (const auto* e : c.all("drift.term")) {
        const auto [idx, numbers] = indexed_coefficients(*e, 1, dim);
        if (numbers.size() != static_cast<std::size_t>(dim) + 2)
          throw ConfigError(e->key, e->line, "expected 'k : coefficient t_power x_powers...'");
        Monomial m{numbers[0], static_cast<int>(numbers[1]), {}};
        for (int i = 0; i < dim; ++i) m.x_powers.push_back(static_cast<int>(numbers[2 + i]));
        for (std::size_t q = 1; q < numbers.size(); ++q)
          if (numbers[q] < 0 || numbers[q] != std::floor(numbers[q]))
            throw ConfigError(e->key, e->line, "powers must be non-negative integers");
        terms[idx[0]].push_back(m);
      }
      std::vector<Polynomial> components;
      for (auto& t : terms) components.emplace_back(dim, std::move(t));
      return DriftSpec::distribution_free(dim, components, max_degree);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("drift", line_of("drift"), e.what());
  }
  throw ConfigError("drift", line_of("drift"),
                    "unknown drift '" + kind +
                        "' (zero, ornstein-uhlenbeck, bistable, mean-attraction, poly1d, linear, polynomial)");
}

namespace {

std::vector<double> point(const Config& c, const std::string& key, int dim) {
  const auto entries = c.all(key);
  if (entries.empty()) throw ConfigError(key, 0, "missing required field");
  if (entries.size() > 1) throw ConfigError(key, entries[1]->line, "given more than once");
  auto v = Config::to_doubles(*entries[0], entries[0]->value);
  if (static_cast<int>(v.size()) != dim)
    throw ConfigError(key, entries[0]->line, "expected " + std::to_string(dim) + " coordinates");
  return v;
}

}  // namespace

Path path_from_config(const Config& c, const std::string& key, int dim, int intervals) {
  const auto entries = c.all(key);
  if (entries.empty()) throw ConfigError(key, 0, "missing required field");
  if (entries.size() > 1) throw ConfigError(key, entries[1]->line, "given more than once");
  const Config::Entry& e = *entries[0];
  std::istringstream in(e.value);
  std::string kind;
  in >> kind;
  std::string rest;
  std::getline(in, rest);
  if (kind == "csv") {
    std::istringstream name_in(rest);
    std::string name;
    name_in >> name;
    if (name.empty()) throw ConfigError(key, e.line, "csv needs a file name");
    fs::path file(name);
    if (file.is_relative()) file = fs::path(c.base_dir()) / file;
    if (!fs::exists(file)) throw ConfigError(key, e.line, "file '" + file.string() + "' does not exist");
    Path p;
    try {
      p = read_csv(file.string());
    } catch (const Error& err) {
      throw ConfigError(key, e.line, err.what());
    }
    if (p.dim() != dim || p.intervals() != intervals)
      throw ConfigError(key, e.line, "path file is not on the configured grid (n = " + std::to_string(intervals) + ")");
    return p;
  }
  if (kind == "linear") return Path::linear(point(c, "x0", dim), point(c, "x1", dim), intervals);
  if (kind != "poly" && kind != "exp")
    throw ConfigError(key, e.line, "unknown path form '" + kind + "' (poly, exp, csv, linear)");
  const auto coords = split(rest, ';');
  if (static_cast<int>(coords.size()) != dim)
    throw ConfigError(key, e.line, "expected " + std::to_string(dim) + " ';'-separated coordinates");
  std::vector<std::vector<double>> coef;
  for (const auto& part : coords) {
    coef.push_back(Config::to_doubles(e, part));
    if (coef.back().empty()) throw ConfigError(key, e.line, "empty coefficient list");
    if (kind == "exp" && coef.back().size() != 2) throw ConfigError(key, e.line, "exp takes 'amplitude rate'");
  }
  return Path::from_function(dim, intervals, [&](double t, std::span<double> x) {
    for (int i = 0; i < dim; ++i) {
      const auto& a = coef[i];
      if (kind == "exp") {
        x[i] = a[0] * std::exp(a[1] * t);
      } else {
        double v = 0.0;
        for (std::size_t j = a.size(); j-- > 0;) v = v * t + a[j];
        x[i] = v;
      }
    }
  });
}

namespace {

struct RunContext {
  std::string subcommand;
  Config config;
  std::optional<std::uint64_t> seed;  // effective seed (flag overrides config)
  int threads = 1;
  fs::path out;
  std::vector<std::string> outputs;
};

void write_text(RunContext& ctx, const std::string& name, const std::string& text) {
  std::ofstream f(ctx.out / name, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot write '" + (ctx.out / name).string() + "'");
  f << text;
  ctx.outputs.push_back(name);
}

void write_json(RunContext& ctx, const std::string& name, const Json& j) { write_text(ctx, name, j.dump(2) + "\n"); }

void write_path(RunContext& ctx, const std::string& name, const Path& p) {
  std::ostringstream os;
  write_csv(os, p);
  write_text(ctx, name, os.str());
}

int grid(const Config& c, int fallback) {
  const int n = c.get_int_or("n", fallback);
  if (n < 2) throw ConfigError("n", c.all("n").front()->line, "must be >= 2");
  return n;
}

SolverControls solver_controls(const Config& c) {
  SolverControls s;
  s.max_iterations = c.get_int_or("solver.max_iterations", s.max_iterations);
  s.tolerance = c.get_double_or("solver.tolerance", s.tolerance);
  s.damping = c.get_double_or("solver.damping", s.damping);
  s.max_halvings = c.get_int_or("solver.max_halvings", s.max_halvings);
  s.integration_steps = c.get_int_or("solver.integration_steps", s.integration_steps);
  return s;
}

template <class F>
auto parse_field(const Config& c, const std::string& key, F&& parse) {
  const auto entries = c.all(key);
  try {
    return parse(entries.front()->value);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key, entries.front()->line, e.what());
  }
}

ElVariant variant_of(const Config& c) {
  if (!c.find("variant")) return ElVariant::MeanFieldRate;
  return parse_field(c, "variant", parse_el_variant);
}

std::vector<InitialGuess> guesses_of(const Config& c) {
  std::vector<InitialGuess> out;
  for (const auto* e : c.all("guess")) {
    try {
      out.push_back(parse_initial_guess(e->value));
    } catch (const Error& err) {
      throw ConfigError("guess", e->line, err.what());
    }
  }
  return out;
}

MinimizeOptions minimize_options(const Config& c) {
  MinimizeOptions o;
  o.max_iterations = c.get_int_or("minimize.max_iterations", o.max_iterations);
  o.tolerance = c.get_double_or("minimize.tolerance", o.tolerance);
  o.max_outer_iterations = c.get_int_or("minimize.max_outer_iterations", o.max_outer_iterations);
  const std::string law = c.get_or("minimize.law", "coupled");
  if (law == "coupled") {
    o.law = LawCoupling::Coupled;
  } else if (law == "self-consistent") {
    o.law = LawCoupling::SelfConsistent;
  } else {
    throw ConfigError("minimize.law", c.all("minimize.law").front()->line, "expected coupled or self-consistent");
  }
  return o;
}

NormKind norm_of(const Config& c) {
  if (!c.find("norm")) return NormKind::sup();
  return parse_field(c, "norm", NormKind::parse);
}

std::vector<double> eps_of(const Config& c) {
  auto eps = c.get_doubles("eps");
  if (eps.empty()) throw ConfigError("eps", 0, "missing required field");
  for (double e : eps)
    if (!(e > 0.0)) throw ConfigError("eps", c.all("eps").front()->line, "radii must be positive");
  return eps;
}

SimConfig sim_config(const RunContext& ctx, DriftSpec drift, int default_trajectories) {
  const Config& c = ctx.config;
  SimConfig s{std::move(drift), {}, 1000, 100, default_trajectories, ctx.seed, ctx.threads};
  s.x0 = point(c, "x0", s.drift.dim());
  s.steps = grid(c, 100);
  s.particles = c.get_int_or("particles", s.particles);
  s.trajectories = c.get_int_or("trajectories", s.trajectories);
  if (!s.seed) throw ConfigError("seed", 0, "an explicit seed is required (config 'seed' or --seed)");
  try {
    validate(s);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.code() == ErrorCode::DimensionMismatch ? "x0" : "simulation", 0, e.what());
  }
  return s;
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Json solve_report_json(const SolveReport& r, ElVariant variant, int n) {
  return Json{{"method", r.method},
              {"variant", to_string(variant)},
              {"n", n},
              {"iterations", r.iterations},
              {"residual_norm", r.residual_norm},
              {"boundary_mismatch", r.boundary_mismatch},
              {"action", r.action},
              {"converged", r.converged},
              {"initial_velocity", vec_json(r.initial_velocity)},
              {"message", r.message}};
}

Json minimize_report_json(const MinimizeReport& r, const DriftSpec& drift, const Path& path, LawCoupling law) {
  const OMResult a = om_action(drift, path);
  return Json{{"method", "minimize"},
              {"law", law == LawCoupling::Coupled ? "coupled" : "self-consistent"},
              {"n", path.intervals()},
              {"iterations", r.iterations},
              {"restarts", r.restarts},
              {"outer_iterations", r.outer_iterations},
              {"gradient_norm", r.gradient_norm},
              {"objective", r.objective},
              {"action", a.total},
              {"converged", r.converged}};
}

Json action_json(const OMResult& a) {
  return Json{{"kinetic", a.kinetic}, {"divergence", a.divergence}, {"total", a.total}, {"n", a.n}};
}

// ---------------------------------------------------------------- commands

int cmd_action(RunContext& ctx) {
  const Config& c = ctx.config;
  c.require_known(keys({&kDriftKeys}, {"n", "path"}));
  const DriftSpec drift = drift_from_config(c);
  const Path path = path_from_config(c, "path", drift.dim(), grid(c, 1000));
  write_json(ctx, "action.json", action_json(om_action(drift, path)));
  return kExitOk;
}

int cmd_el_solve(RunContext& ctx) {
  const Config& c = ctx.config;
  c.require_known(keys({&kDriftKeys, &kSolverKeys}, {"n", "x0", "x1"}));
  const DriftSpec drift = drift_from_config(c);
  BVProblem pb{drift, point(c, "x0", drift.dim()), point(c, "x1", drift.dim()), grid(c, 100), solver_controls(c),
               variant_of(c)};
  const auto guesses = guesses_of(c);
  if (guesses.size() > 1) throw ConfigError("guess", c.all("guess")[1]->line, "el-solve takes a single guess");
  if (!guesses.empty()) pb.guess = guesses.front();
  BvpSolution sol;
  try {
    sol = solve_el_bvp(pb);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvalidArgument && e.code() != ErrorCode::DimensionMismatch) throw;
    throw ConfigError("solver", 0, e.what());
  }
  write_path(ctx, "path.csv", sol.path);
  write_json(ctx, "report.json", solve_report_json(sol.report, pb.variant, pb.n));
  if (!sol.report.converged) fail(ErrorCode::NonConvergence, "E-L solver did not converge: " + sol.report.message);
  return kExitOk;
}

int cmd_minimize(RunContext& ctx) {
  const Config& c = ctx.config;
  c.require_known(keys({&kDriftKeys, &kMinimizeKeys}, {"n", "x0", "x1", "init", "guess"}));
  const DriftSpec drift = drift_from_config(c);
  const int n = grid(c, 100);
  const Vec x0 = point(c, "x0", drift.dim()), x1 = point(c, "x1", drift.dim());
  std::optional<Path> init;
  if (c.has("init")) init = path_from_config(c, "init", drift.dim(), n);
  const auto guesses = guesses_of(c);
  if (!guesses.empty()) {
    if (init || guesses.size() > 1) throw ConfigError("guess", c.all("guess").front()->line, "give either one guess or init");
    init = initial_guess_path(guesses.front(), x0, x1, n);
  }
  const MinimizeOptions opt = minimize_options(c);
  const MinimizeResult r = minimize_action(drift, x0, x1, n, init, opt);
  write_path(ctx, "path.csv", r.path);
  Json report = minimize_report_json(r.report, drift, r.path, opt.law);
  report["el_residual"] = max_abs(el_residual(drift, r.path).values());
  report["el_residual_total_derivative"] = max_abs(el_residual(drift, r.path, ElVariant::TotalDerivative).values());
  write_json(ctx, "report.json", report);
  if (!r.report.converged) fail(ErrorCode::NonConvergence, "action minimisation did not reach the gradient tolerance");
  return kExitOk;
}

int cmd_multistart(RunContext& ctx) {
  const Config& c = ctx.config;
  c.require_known(keys({&kDriftKeys, &kSolverKeys, &kMinimizeKeys}, {"n", "x0", "x1"}));
  const DriftSpec drift = drift_from_config(c);
  const int n = grid(c, 100);
  const Vec x0 = point(c, "x0", drift.dim()), x1 = point(c, "x1", drift.dim());
  auto guesses = guesses_of(c);
  if (guesses.empty()) guesses = {InitialGuess::Linear, InitialGuess::StepJump, InitialGuess::Tanh};
  const ElVariant variant = variant_of(c);
  const auto candidates =
      multistart(drift, x0, x1, n, guesses, solver_controls(c), variant, minimize_options(c), ctx.threads);
  std::ostringstream table;
  table << "rank,guess,method,total,kinetic,divergence,residual_norm,file\n";
  Json list = Json::array();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Candidate& cand = candidates[i];
    const std::string file = "candidate_" + std::to_string(i + 1) + ".csv";
    write_path(ctx, file, cand.path);
    table << std::setprecision(17) << i + 1 << ',' << to_string(cand.guess) << ',' << cand.method << ','
          << cand.action.total << ',' << cand.action.kinetic << ',' << cand.action.divergence << ','
          << cand.residual_norm << ',' << file << '\n';
    list.push_back(Json{{"rank", i + 1},
                        {"guess", to_string(cand.guess)},
                        {"method", cand.method},
                        {"action", action_json(cand.action)},
                        {"residual_norm", cand.residual_norm},
                        {"file", file}});
  }
  write_text(ctx, "candidates.csv", table.str());
  write_json(ctx, "report.json", Json{{"variant", to_string(variant)}, {"n", n}, {"candidates", list}});
  if (candidates.empty()) fail(ErrorCode::NonConvergence, "no initial guess produced a converged stationary path");
  return kExitOk;
}

int cmd_simulate(RunContext& ctx) {
  const Config& c = ctx.config;
  c.require_known(keys({&kDriftKeys, &kSimKeys}));
  const SimConfig s = sim_config(ctx, drift_from_config(c), 1);
  const Ensemble e = simulate_ensemble(s);
  std::ostringstream os;
  write_ensemble_csv(os, e);
  write_text(ctx, "ensemble.csv", os.str());
  const int d = e.dim;
  const Vec mean(e.mean.end() - d, e.mean.end()), var(e.variance.end() - d, e.variance.end());
  write_json(ctx, "summary.json",
             Json{{"particles", s.particles}, {"n", s.steps}, {"seed", *s.seed}, {"final_mean", vec_json(mean)},
                  {"final_variance", vec_json(var)}});
  return kExitOk;
}

int cmd_tube(RunContext& ctx) {
  const Config& c = ctx.config;
  c.require_known(keys({&kDriftKeys, &kSimKeys}, {"path", "eps", "norm", "bridge", "importance"}));
  const SimConfig s = sim_config(ctx, drift_from_config(c), 10000);
  const Path ref = path_from_config(c, "path", s.drift.dim(), s.steps);
  const NormKind norm = norm_of(c);
  const TubeOptions options{c.get_bool_or("bridge", true)};
  const bool importance = c.get_bool_or("importance", false);
  std::vector<TubeEstimate> estimates;
  for (double eps : eps_of(c))
    estimates.push_back(importance ? estimate_tube_probability_weighted(s, ref, eps, norm, options)
                                   : estimate_tube_probability(s, ref, eps, norm, options));
  std::ostringstream os;
  write_tube_csv(os, estimates);
  write_text(ctx, "tube.csv", os.str());
  return kExitOk;
}

int cmd_ratio(RunContext& ctx) {
  const Config& c = ctx.config;
  c.require_known(keys({&kDriftKeys, &kSimKeys}, {"phi1", "phi2", "eps", "norm", "bridge"}));
  const SimConfig s = sim_config(ctx, drift_from_config(c), 10000);
  const Path phi1 = path_from_config(c, "phi1", s.drift.dim(), s.steps);
  const Path phi2 = path_from_config(c, "phi2", s.drift.dim(), s.steps);
  const TubeOptions options{c.get_bool_or("bridge", true)};
  std::vector<RatioRow> rows;
  try {
    rows = estimate_om_ratio(s, phi1, phi2, eps_of(c), norm_of(c), options);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvalidArgument) throw;
    throw ConfigError("phi1", 0, e.what());
  }
  std::ostringstream os;
  write_ratio_csv(os, rows);
  write_text(ctx, "ratio.csv", os.str());
  return kExitOk;
}

int cmd_paper_example(RunContext& ctx) {
  Config& c = ctx.config;
  c.require_known(keys({&kSolverKeys, &kMinimizeKeys}, {"n", "x0", "x1", "particles", "trajectories", "seed", "eps",
                                                        "norm", "bridge"}));
  const DriftSpec drift = models::bistable_mean_field();
  const int n = grid(c, 400);
  const Vec x0 = c.has("x0") ? point(c, "x0", 1) : Vec{1.0};
  const Vec x1 = c.has("x1") ? point(c, "x1", 1) : Vec{-1.0};
  const SolverControls controls = solver_controls(c);

  Json report;
  report["drift"] = "f(x, mu) = (x - x^3) int y mu(dy)";
  report["x0"] = x0[0];
  report["x1"] = x1[0];
  report["n"] = n;
  bool all_converged = true;
  std::optional<Path> mean_field_path;
  Json solutions = Json::object();
  for (ElVariant v : {ElVariant::MeanFieldRate, ElVariant::PaperExample, ElVariant::TotalDerivative}) {
    const BvpSolution sol = solve_el_bvp({drift, x0, x1, n, controls, v});
    write_path(ctx, "path_" + to_string(v) + ".csv", sol.path);
    Json j = solve_report_json(sol.report, v, n);
    j["om_action"] = action_json(om_action(drift, sol.path));
    solutions[to_string(v)] = j;
    all_converged = all_converged && sol.report.converged;
    if (v == ElVariant::MeanFieldRate) mean_field_path = sol.path;
  }
  report["el_solutions"] = solutions;

  MinimizeOptions opt = minimize_options(c);
  const MinimizeResult min = minimize_action(drift, x0, x1, n, mean_field_path, opt);
  write_path(ctx, "path_minimizer.csv", min.path);
  Json mj = minimize_report_json(min.report, drift, min.path, opt.law);
  mj["om_action"] = action_json(om_action(drift, min.path));
  mj["el_residual"] = max_abs(el_residual(drift, min.path).values());
  mj["el_residual_total_derivative"] = max_abs(el_residual(drift, min.path, ElVariant::TotalDerivative).values());
  mj["sup_distance_to_mean_field_rate"] = max_abs((min.path - *mean_field_path).values());
  report["minimizer"] = mj;
  all_converged = all_converged && min.report.converged;

  // Tube ratio between the most probable path and the straight line.
  if (!c.has("eps")) c.add("eps", "1.0 0.8 0.6");
  SimConfig s{drift, x0, c.get_int_or("particles", 2000), n, c.get_int_or("trajectories", 20000), ctx.seed,
              ctx.threads};
  if (!s.seed) throw ConfigError("seed", 0, "an explicit seed is required (config 'seed' or --seed)");
  const Path line = Path::linear(x0, x1, n);
  const auto rows = estimate_om_ratio(s, min.path, line, eps_of(c), norm_of(c), {c.get_bool_or("bridge", true)});
  std::ostringstream os;
  write_ratio_csv(os, rows);
  write_text(ctx, "ratio.csv", os.str());
  report["ratio"] = Json{{"phi1", "path_minimizer.csv"}, {"phi2", "straight line"}, {"file", "ratio.csv"}};
  write_json(ctx, "paper_example.json", report);
  if (!all_converged) fail(ErrorCode::NonConvergence, "at least one solver did not converge; see paper_example.json");
  return kExitOk;
}

int dispatch(RunContext& ctx) {
  if (ctx.subcommand == "action") return cmd_action(ctx);
  if (ctx.subcommand == "el-solve") return cmd_el_solve(ctx);
  if (ctx.subcommand == "minimize") return cmd_minimize(ctx);
  if (ctx.subcommand == "multistart") return cmd_multistart(ctx);
  if (ctx.subcommand == "simulate") return cmd_simulate(ctx);
  if (ctx.subcommand == "tube") return cmd_tube(ctx);
  if (ctx.subcommand == "ratio") return cmd_ratio(ctx);
  if (ctx.subcommand == "paper-example") return cmd_paper_example(ctx);
  fail(ErrorCode::InvalidArgument, "unknown subcommand '" + ctx.subcommand + "'");
}

// ---------------------------------------------------------------- plumbing

Json error_json(const std::exception& ex) {
  Json j;
  if (const auto* ce = dynamic_cast<const ConfigError*>(&ex)) {
    j["error"] = to_string(ce->code());
    j["field"] = ce->field();
    if (ce->line() > 0) j["line"] = ce->line();
  } else if (const auto* e = dynamic_cast<const Error*>(&ex)) {
    j["error"] = to_string(e->code());
  } else {
    j["error"] = "internal";
  }
  j["message"] = ex.what();
  return j;
}

int exit_code_for(const std::exception& ex) {
  const auto* e = dynamic_cast<const Error*>(&ex);
  return e && e->code() == ErrorCode::NonConvergence ? kExitNotConverged : kExitError;
}

class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir) : file_(dir / ".lock") {
    std::FILE* f = std::fopen(file_.c_str(), "wx");
    if (!f) fail(ErrorCode::Io, "output directory '" + dir.string() + "' is locked by another run (" + file_.string() + ")");
    std::fclose(f);
  }
  ~OutputLock() {
    std::error_code ec;
    fs::remove(file_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path file_;
};

int execute(RunContext& ctx, std::ostream& out, std::ostream& err) {
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  if (ec || !fs::is_directory(ctx.out)) {
    err << error_json(Error(ErrorCode::Io, "cannot create output directory '" + ctx.out.string() + "'")).dump() << '\n';
    return kExitError;
  }
  std::optional<OutputLock> lock;
  try {
    lock.emplace(ctx.out);
  } catch (const Error& e) {
    err << error_json(e).dump() << '\n';
    return kExitError;
  }
  fs::remove(ctx.out / "error.json", ec);

  const auto start = std::chrono::steady_clock::now();
  int code = kExitOk;
  try {
    if (!ctx.seed) ctx.seed = ctx.config.get_u64("seed");
    code = dispatch(ctx);
  } catch (const std::exception& ex) {
    code = exit_code_for(ex);
    const Json j = error_json(ex);
    try {
      write_json(ctx, "error.json", j);
    } catch (const std::exception&) {
    }
    err << j.dump() << '\n';
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  Json manifest{{"tool", "mvom"},
                {"version", kVersion},
                {"subcommand", ctx.subcommand},
                {"config", ctx.config.serialize()},
                {"config_base_dir", fs::absolute(ctx.config.base_dir()).lexically_normal().string()},
                {"seed", ctx.seed ? Json(*ctx.seed) : Json(nullptr)},
                {"threads", ctx.threads},
                {"exit_code", code},
                {"outputs", ctx.outputs},
                {"wall_time_seconds", seconds}};
  std::ofstream(ctx.out / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
  if (code == kExitOk) out << "wrote " << ctx.outputs.size() << " file(s) to " << ctx.out.string() << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Onsager-Machlup most probable paths for McKean-Vlasov SDEs", "mvom"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path, out_dir, manifest_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"action", "evaluate the OM functional along a path"},
      {"el-solve", "solve the Euler-Lagrange boundary value problem"},
      {"minimize", "minimise the discretised negative action"},
      {"multistart", "rank stationary paths from several initial guesses"},
      {"simulate", "interacting particle simulation statistics"},
      {"tube", "tube probability estimates"},
      {"ratio", "two-path tube probability ratios against the action difference"},
      {"paper-example", "bistable mean-field example end to end"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value experiment file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "random seed, overrides the config");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }
  CLI::App* rerun = app.add_subcommand("rerun", "repeat a run from its manifest.json");
  rerun->add_option("--manifest", manifest_path, "manifest of the earlier run")->required()->check(CLI::ExistingFile);
  rerun->add_option("--out", out_dir, "output directory")->required();
  rerun->add_option("--threads", threads, "worker threads (defaults to the recorded count)")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (dynamic_cast<const CLI::CallForVersion*>(&e) ? std::string(kVersion) + "\n" : app.help());
      return kExitOk;
    }
    err << Json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return kExitError;
  }

  RunContext ctx;
  ctx.out = out_dir;
  ctx.threads = threads;
  try {
    if (rerun->parsed()) {
      std::ifstream in(manifest_path);
      const Json m = Json::parse(in);
      ctx.subcommand = m.at("subcommand").get<std::string>();
      ctx.config = Config::parse(m.at("config").get<std::string>());
      ctx.config.set_base_dir(m.at("config_base_dir").get<std::string>());
      if (!m.at("seed").is_null()) ctx.seed = m.at("seed").get<std::uint64_t>();
      if (rerun->count("--threads") == 0) ctx.threads = m.at("threads").get<int>();
    } else {
      ctx.subcommand = app.get_subcommands().front()->get_name();
      ctx.config = Config::load(config_path);
      ctx.seed = seed;
    }
  } catch (const std::exception& ex) {
    err << error_json(ex).dump() << '\n';
    return kExitError;
  }
  return execute(ctx, out, err);
}

}  // namespace mvom::cli
