// Acceptance suite: one numbered criterion per check, each printing a single
// PASS/FAIL line. Run everything, or one criterion with --criterion N.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mvom/action.hpp"
#include "mvom/cli.hpp"
#include "mvom/measure.hpp"
#include "mvom/simulator.hpp"
#include "mvom/variational.hpp"
#include "oracles.hpp"

using namespace mvom;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;  // supplementary diagnostics, printed below the verdict
};

struct Criterion {
  int id;
  const char* name;
  double runtime_limit;  // seconds; 0 means none
  std::function<Outcome()> run;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

Outcome classical_limit() {
  const Path phi = Path::from_scalar_function(2000, [](double t) { return std::exp(-t); });
  const double total = om_action(models::ornstein_uhlenbeck(1.0), phi).total;
  const double err = std::abs(total - 0.5);
  return {err < 1e-6, format("total=%.12f |total-0.5|=%.2e (tol 1e-6)", total, err)};
}

Outcome gradient_correctness() {
  const std::vector<std::pair<const char*, DriftSpec>> families = {
      {"separable", DriftSpec::poly_separable_1d({{0.3, -1.0, 0.0, -0.5}, {0.0, 0.4}},
                                                 {{{0.0, 1.0, 0.0, -1.0}, {0.0, 1.0}}, {{1.0, 0.5}, {0.0, 0.0, 1.0}}})},
      {"linear", DriftSpec::linear_mean_field(2, {{{-1.0, 0.5}, {0.3}}, {{0.2}, {-2.0, 0.0, 1.0}}}, {{0.1, 1.0}, {-0.4}},
                                              {{{0.7}, {0.1}}, {{0.0, 0.5}, {-0.3}}})},
      {"distribution-free",
       DriftSpec::distribution_free(2, {Polynomial(2, {{-1.0, 0, {1, 0}}, {0.5, 1, {0, 2}}, {-0.2, 0, {3, 0}}}),
                                        Polynomial(2, {{1.0, 0, {1, 1}}, {-1.0, 0, {0, 1}}, {0.3, 2, {0, 0}}})})}};
  std::mt19937_64 rng(20240915);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  constexpr int n = 40;
  constexpr double step = 1e-5;
  double worst = 0.0;
  std::string worst_family;
  for (const auto& [name, spec] : families) {
    for (int trial = 0; trial < 20; ++trial) {
      const int d = spec.dim();
      std::vector<double> a(d), b(d), c(d);
      for (int i = 0; i < d; ++i) {
        a[i] = uniform(rng);
        b[i] = uniform(rng);
        c[i] = 2.0 * uniform(rng);
      }
      Path p = Path::from_function(d, n, [&](double t, std::span<double> x) {
        for (int i = 0; i < d; ++i) x[i] = a[i] + (b[i] - a[i]) * t + c[i] * std::sin(std::numbers::pi * t);
      });
      for (int k = 1; k < n; ++k)
        for (int i = 0; i < d; ++i) p(k, i) += 0.1 * normal(rng);
      const Vec g = discrete_action_gradient(spec, p);
      const double scale = max_abs(g);
      for (int k = 1; k < n; ++k)
        for (int i = 0; i < d; ++i) {
          Path plus = p, minus = p;
          plus(k, i) += step;
          minus(k, i) -= step;
          const double fd = (discrete_objective(spec, plus) - discrete_objective(spec, minus)) / (2 * step);
          const double exact = g[(k - 1) * d + i];
          const double rel = std::abs(fd - exact) / std::max({std::abs(exact), std::abs(fd), 1e-3 * scale});
          if (rel > worst) {
            worst = rel;
            worst_family = name;
          }
        }
    }
  }
  return {worst < 1e-5, format("60 paths, worst component relative error %.2e (%s; tol 1e-5)", worst,
                               worst_family.empty() ? "-" : worst_family.c_str())};
}

double sinh_error(const Path& p) {
  double e = 0.0;
  for (int k = 0; k <= p.intervals(); ++k) e = std::max(e, std::abs(p(k, 0) - std::sinh(p.time(k)) / std::sinh(1.0)));
  return e;
}

Outcome el_analytic() {
  std::vector<double> errors;
  bool converged = true;
  for (int n : {250, 500, 1000}) {
    const BvpSolution s = solve_el_bvp({models::ornstein_uhlenbeck(1.0), {0.0}, {1.0}, n});
    converged = converged && s.report.converged;
    errors.push_back(sinh_error(s.path));
  }
  const double o1 = oracle::observed_order(errors[0], errors[1]);
  const double o2 = oracle::observed_order(errors[1], errors[2]);
  const bool pass = converged && errors[2] < 1e-6 && o1 >= 1.7 && o1 <= 2.3 && o2 >= 1.7 && o2 <= 2.3;
  return {pass, format("max error at n=1000 %.2e (tol 1e-6); observed orders %.3f, %.3f (want [1.7, 2.3])", errors[2],
                       o1, o2)};
}

Outcome cross_method() {
  const DriftSpec spec = models::bistable_mean_field();
  const Vec x0 = {1.0}, x1 = {-1.0};
  const int n = 400;
  const BvpSolution el = solve_el_bvp({spec, x0, x1, n, {}, ElVariant::MeanFieldRate});
  const MinimizeResult min = minimize_action(spec, x0, x1, n, el.path);
  const double sup = max_abs((min.path - el.path).values());
  const double gap = std::abs(om_action(spec, min.path).total - el.report.action);
  const double residual = max_abs(el_residual(spec, min.path).values());
  Outcome out;
  out.pass = el.report.converged && min.report.converged && sup < 1e-3 && gap < 1e-5 && residual < 1e-3;
  out.detail = format("E-L (%s, converged=%d) vs minimizer (converged=%d): sup %.3e (tol 1e-3), |dS| %.3e (tol 1e-5), "
                      "minimizer residual %.3e (tol 1e-3)",
                      el.report.method.c_str(), el.report.converged, min.report.converged, sup, gap, residual);

  // Which stationarity condition each path satisfies.
  const BvpSolution total = solve_el_bvp({spec, x0, x1, n, {}, ElVariant::TotalDerivative});
  out.notes.push_back(format("total-derivative E-L vs minimizer: sup %.3e, |dS| %.3e",
                             max_abs((min.path - total.path).values()),
                             std::abs(om_action(spec, min.path).total - total.report.action)));
  MinimizeOptions frozen;
  frozen.law = LawCoupling::SelfConsistent;
  const MinimizeResult sc = minimize_action(spec, x0, x1, n, std::nullopt, frozen);
  out.notes.push_back(format("mean-field-rate E-L vs self-consistent (law frozen at the path) minimizer: sup %.3e, "
                             "|dS| %.3e",
                             max_abs((sc.path - el.path).values()),
                             std::abs(om_action(spec, sc.path).total - el.report.action)));
  out.notes.push_back(format("actions: mean-field-rate path %.8f, minimizer %.8f", el.report.action,
                             om_action(spec, min.path).total));
  return out;
}

Outcome w2_oracle() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> count(1, 8);
  std::normal_distribution<double> normal(0.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = count(rng);
    std::vector<double> a(m), b(m);
    for (auto& v : a) v = normal(rng);
    for (auto& v : b) v = normal(rng) + 1.0;
    const W2Result fast = w2_distance(Measure::uniform(a), Measure::uniform(b));
    const double brute = oracle::brute_force_w2(a, b, 1);
    worst = std::max(worst, std::abs(fast.value - brute) / std::max(1.0, brute));
    if (!fast.exact) return {false, "sorted coupling reported itself as inexact"};
  }
  return {worst <= 1e-13, format("200 instances, max |sorted - brute force| %.2e (rounding-level tol 1e-13)", worst)};
}

Outcome small_ball() {
  const SimConfig c{models::zero(1), {0.0}, 2, 1000, 200000, 20240601ull, 1};
  const TubeEstimate e = estimate_tube_probability(c, Path::zeros(1, 1000), 1.0, NormKind::sup());
  const double series = oracle::brownian_sup_small_ball(1.0);
  const double z = (e.probability - series) / e.standard_error;
  return {std::abs(z) < 3.0, format("p=%.5f se=%.5f vs series %.7f: z=%.2f (M=%lld, n=1000, bridge-corrected=%d)",
                                    e.probability, e.standard_error, series, z, e.samples, e.bridge_corrected)};
}

Outcome ratio_trend() {
  const int n = 1000;
  const SimConfig c{models::zero(1), {0.0}, 2, n, 1000000, 31415ull, 1};
  const Path line = Path::from_scalar_function(n, [](double t) { return t; });
  const auto rows = estimate_om_ratio(c, Path::zeros(1, n), line, {1.0, 0.8, 0.6}, NormKind::sup());
  Outcome out;
  bool finite = true, monotone = true;
  std::string values;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    finite = finite && !r.flagged && std::isfinite(r.log_ratio);
    if (i > 0) monotone = monotone && std::abs(r.log_ratio - r.predicted_dl) < std::abs(rows[i - 1].log_ratio - r.predicted_dl);
    values += format("%s eps=%.1f: %.4f+-%.4f", i ? ";" : "", r.eps, r.log_ratio, r.se_log_ratio);
  }
  const double rel = std::abs(rows.back().log_ratio - rows.back().predicted_dl) / std::abs(rows.back().predicted_dl);
  out.pass = finite && monotone && rel < 0.15;
  out.detail = format("log-ratios%s; predicted %.3f; monotone=%d, rel. error at 0.6 %.1f%% (tol 15%%)", values.c_str(),
                      rows.back().predicted_dl, monotone, 100 * rel);
  return out;
}

Outcome girsanov() {
  const SimConfig c{models::ornstein_uhlenbeck(1.0), {0.0}, 2, 1000, 100000, 271828ull, 1};
  const WeightSummary w = sample_girsanov_weights(c, Path::from_scalar_function(1000, [](double t) { return t; }));
  const double z = (w.mean - 1.0) / w.standard_error;
  return {std::abs(z) < 3.0, format("mean exp(log R)=%.5f se=%.5f z=%.2f (M=%lld)", w.mean, w.standard_error, z,
                                    w.samples)};
}

Outcome mean_field() {
  const int n = 1000;
  SimConfig c{models::mean_attraction(), {1.0}, 10000, n, 1, 161803ull, 1};
  const Ensemble e = simulate_ensemble(c);
  const double mean = e.mean[n], var = e.variance[n];
  const double se_mean = std::sqrt(var / c.particles);
  const double se_var = var * std::sqrt(2.0 / (c.particles - 1));
  const bool mean_ok = std::abs(mean - std::numbers::e) < 3 * se_mean;
  const bool var_ok = std::abs(var - 1.0) < 3 * se_var;

  // Root-mean-square error of the ensemble mean over independent replicas.
  constexpr int replicas = 8;
  std::vector<double> rms, se_rms;
  for (int big_n : {100, 1000, 10000}) {
    std::vector<double> sq;
    for (int r = 0; r < replicas; ++r) {
      SimConfig rc{models::mean_attraction(), {1.0}, big_n, n, 1, 1000ull + r, 1};
      const Ensemble re = simulate_ensemble(rc);
      sq.push_back((re.mean[n] - std::numbers::e) * (re.mean[n] - std::numbers::e));
    }
    double m = 0.0;
    for (double s : sq) m += s;
    m /= replicas;
    double v = 0.0;
    for (double s : sq) v += (s - m) * (s - m);
    v /= (replicas - 1);
    rms.push_back(std::sqrt(m));
    se_rms.push_back(std::sqrt(v / replicas) / (2 * std::sqrt(m)));  // delta method for sqrt
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < rms.size(); ++i) decreasing = decreasing && rms[i] < rms[i - 1] + 3 * se_rms[i - 1];
  return {mean_ok && var_ok && decreasing,
          format("N=1e4: mean %.5f (e, se %.5f), var %.5f (1, se %.5f); RMS mean error over %d replicas at "
                 "N=1e2/1e3/1e4: %.4f/%.4f/%.4f",
                 mean, se_mean, var, se_var, replicas, rms[0], rms[1], rms[2])};
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "mvom_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"action", "drift = ornstein-uhlenbeck\nn = 2000\npath = exp 1 -1\n"},
      {"el-solve", "drift = bistable\nx0 = 1\nx1 = -1\nn = 200\n"},
      {"minimize", "drift = bistable\nx0 = 1\nx1 = -1\nn = 200\nguess = tanh\n"},
      {"multistart", "drift = bistable\nx0 = 1\nx1 = -1\nn = 100\nvariant = total-derivative\n"},
      {"simulate", "drift = bistable\nx0 = 0.5\nn = 200\nparticles = 2000\nseed = 3\n"},
      {"tube", "drift = bistable\nx0 = 1\nn = 200\nparticles = 500\ntrajectories = 4000\nseed = 5\npath = poly 1\n"
               "eps = 0.9 0.6\nnorm = sup\n"},
      {"ratio", "drift = zero\nx0 = 0\nn = 200\ntrajectories = 4000\nseed = 8\nphi1 = poly 0\nphi2 = poly 0 1\n"
                "eps = 1.0 0.8\n"},
      {"paper-example", "n = 200\nparticles = 500\ntrajectories = 2000\nseed = 13\neps = 1.0 0.8\n"}};
  int compared = 0;
  std::vector<std::string> problems;
  for (const auto& [sub, text] : runs) {
    const fs::path dir = root / sub;
    fs::create_directories(dir);
    const std::string cfg = (dir / "run.cfg").string();
    std::ofstream(cfg) << text;
    std::ostringstream out, err;
    const std::string a = (dir / "threads1").string(), b = (dir / "threads8").string(), r = (dir / "rerun").string();
    const int ca = cli::run({sub, "--config", cfg, "--out", a, "--threads", "1"}, out, err);
    const int cb = cli::run({sub, "--config", cfg, "--out", b, "--threads", "8"}, out, err);
    const int cr = cli::run({"rerun", "--manifest", a + "/manifest.json", "--out", r, "--threads", "8"}, out, err);
    if (ca != 0 || cb != 0 || cr != 0) problems.push_back(sub + ": exit codes " + std::to_string(ca) + "/" +
                                                          std::to_string(cb) + "/" + std::to_string(cr));
    for (const auto& entry : fs::directory_iterator(a)) {
      const std::string name = entry.path().filename().string();
      if (name == "manifest.json") continue;
      ++compared;
      const std::string ref = slurp(entry.path());
      if (ref != slurp(fs::path(b) / name)) problems.push_back(sub + "/" + name + " differs between thread counts");
      if (ref != slurp(fs::path(r) / name)) problems.push_back(sub + "/" + name + " differs after rerun");
    }
  }
  fs::remove_all(root);
  Outcome out{problems.empty(), format("8 subcommands, %d output files compared byte for byte (threads 1, threads 8, "
                                       "manifest rerun)",
                                       compared)};
  out.notes = problems;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "classical-limit regression", 1.0, classical_limit},
      {2, "gradient correctness", 30.0, gradient_correctness},
      {3, "E-L analytic oracle", 10.0, el_analytic},
      {4, "cross-method consistency on the bistable example", 60.0, cross_method},
      {5, "W2 oracle equivalence", 10.0, w2_oracle},
      {6, "Brownian small-ball oracle", 300.0, small_ball},
      {7, "tube log-ratio trend", 1800.0, ratio_trend},
      {8, "Girsanov sanity", 120.0, girsanov},
      {9, "mean-field simulation oracle", 120.0, mean_field},
      {10, "determinism", 0.0, determinism}};

  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.runtime_limit <= 0.0 || seconds < c.runtime_limit;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::string timing = format("%.2fs", seconds);
    if (c.runtime_limit > 0.0) timing += format(" of %.0fs", c.runtime_limit);
    std::printf("[%s] %2d %s: %s (%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), timing.c_str());
    for (const auto& note : o.notes) std::printf("       - %s\n", note.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
