#include "mvom/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "mvom/action.hpp"
#include "mvom/error.hpp"
#include "mvom/parallel.hpp"
#include "mvom/rng.hpp"

namespace mvom {

void validate(const SimConfig& c) {
  require(c.particles >= 2, ErrorCode::InvalidArgument, "particle count N must be >= 2");
  require(c.steps >= 2, ErrorCode::InvalidArgument, "time steps n must be >= 2");
  require(c.trajectories >= 1, ErrorCode::InvalidArgument, "trajectory count M must be >= 1");
  require(c.threads >= 1, ErrorCode::InvalidArgument, "threads must be >= 1");
  require(c.seed.has_value(), ErrorCode::InvalidArgument, "an explicit seed is required");
  require(static_cast<int>(c.x0.size()) == c.drift.dim(), ErrorCode::DimensionMismatch,
          "initial point dimension does not match the drift");
  require(all_finite(c.x0), ErrorCode::NonFinite, "initial point must be finite");
}

namespace {

void require_reference(const SimConfig& c, const Path& reference, const char* what) {
  require(reference.dim() == c.drift.dim() && reference.intervals() == c.steps, ErrorCode::DimensionMismatch,
          std::string(what) + " must be on the simulation grid (same n and d)");
  require(all_finite(reference.values()), ErrorCode::NonFinite, std::string(what) + " must be finite");
}

std::string state_error(const char* where, std::uint64_t index, int step) {
  std::ostringstream os;
  os << "non-finite state in " << where << " " << index << " at step " << step;
  return os.str();
}

}  // namespace

Ensemble simulate_ensemble(const SimConfig& c, bool retain) {
  validate(c);
  const int d = c.drift.dim();
  const int n = c.steps;
  const int big_n = c.particles;
  const double dt = 1.0 / n;
  const double sqrt_dt = std::sqrt(dt);

  Ensemble e;
  e.dim = d;
  e.particles = big_n;
  e.steps = n;
  e.law.resize(n + 1);
  e.mean.assign(static_cast<std::size_t>(n + 1) * d, 0.0);
  e.variance.assign(static_cast<std::size_t>(n + 1) * d, 0.0);

  Vec state(static_cast<std::size_t>(big_n) * d);
  for (int p = 0; p < big_n; ++p) std::copy(c.x0.begin(), c.x0.end(), state.begin() + static_cast<std::size_t>(p) * d);
  std::vector<NormalStream> noise;
  noise.reserve(big_n);
  for (int p = 0; p < big_n; ++p) noise.emplace_back(*c.seed, RngStream::Ensemble, static_cast<std::uint64_t>(p));
  if (retain) {
    e.paths.assign(big_n, Path::zeros(d, n));
    e.increments.assign(big_n, Vec(static_cast<std::size_t>(n) * d));
  }

  auto record = [&](int k) {
    const double t = k * dt;
    if (c.drift.has_mean_field()) e.law[k] = c.drift.moment_values_uniform(t, state);
    for (int i = 0; i < d; ++i) {
      double s = 0.0;
      for (int p = 0; p < big_n; ++p) s += state[static_cast<std::size_t>(p) * d + i];
      const double m = s / big_n;
      double ss = 0.0;
      for (int p = 0; p < big_n; ++p) {
        const double dev = state[static_cast<std::size_t>(p) * d + i] - m;
        ss += dev * dev;
      }
      e.mean[static_cast<std::size_t>(k) * d + i] = m;
      e.variance[static_cast<std::size_t>(k) * d + i] = ss / (big_n - 1);
    }
    if (retain)
      for (int p = 0; p < big_n; ++p)
        for (int i = 0; i < d; ++i) e.paths[p](k, i) = state[static_cast<std::size_t>(p) * d + i];
  };

  for (int k = 0; k < n; ++k) {
    record(k);
    const double t = k * dt;
    const Vec& moments = e.law[k];
    parallel_for(big_n, c.threads, [&](std::size_t begin, std::size_t end) {
      Vec f(d);
      for (std::size_t p = begin; p < end; ++p) {
        const std::span<double> x(state.data() + p * d, d);
        c.drift.eval(t, x, moments, f);
        for (int i = 0; i < d; ++i) {
          const double db = sqrt_dt * noise[p].next();
          x[i] += f[i] * dt + db;
          if (retain) e.increments[p][static_cast<std::size_t>(k) * d + i] = db;
          if (!std::isfinite(x[i])) fail(ErrorCode::NonFinite, state_error("particle", p, k + 1));
        }
      }
    });
  }
  record(n);
  return e;
}

FrozenLaw FrozenLaw::from(const Ensemble& ensemble) { return {ensemble.law}; }

FrozenLaw freeze_law(const SimConfig& config) {
  validate(config);
  if (!config.drift.has_mean_field()) return {std::vector<Vec>(config.steps + 1)};
  return FrozenLaw::from(simulate_ensemble(config));
}

namespace {

void euler_path(const SimConfig& c, const FrozenLaw& law, NormalStream& noise, std::uint64_t index,
                std::span<double> path, std::span<double> increments) {
  const int d = c.drift.dim();
  const int n = c.steps;
  const double dt = 1.0 / n;
  const double sqrt_dt = std::sqrt(dt);
  Vec f(d);
  std::copy(c.x0.begin(), c.x0.end(), path.begin());
  for (int k = 0; k < n; ++k) {
    const std::span<const double> x(path.data() + static_cast<std::size_t>(k) * d, d);
    c.drift.eval(k * dt, x, law.moments[k], f);
    for (int i = 0; i < d; ++i) {
      const double db = sqrt_dt * noise.next();
      const double next = x[i] + f[i] * dt + db;
      if (!std::isfinite(next)) fail(ErrorCode::NonFinite, state_error("trajectory", index, k + 1));
      path[static_cast<std::size_t>(k + 1) * d + i] = next;
      if (!increments.empty()) increments[static_cast<std::size_t>(k) * d + i] = db;
    }
  }
}

void require_law(const SimConfig& c, const FrozenLaw& law) {
  require(static_cast<int>(law.moments.size()) == c.steps + 1, ErrorCode::DimensionMismatch,
          "frozen law does not cover the time grid");
}

}  // namespace

void simulate_trajectory(const SimConfig& c, const FrozenLaw& law, std::uint64_t index, std::span<double> path,
                         std::span<double> increments) {
  validate(c);
  require_law(c, law);
  const std::size_t d = c.drift.dim();
  require(path.size() == (c.steps + 1) * d, ErrorCode::DimensionMismatch, "path buffer has the wrong size");
  require(increments.empty() || increments.size() == c.steps * d, ErrorCode::DimensionMismatch,
          "increment buffer has the wrong size");
  NormalStream noise(*c.seed, RngStream::Trajectory, index);
  euler_path(c, law, noise, index, path, increments);
}

double bridge_stay_probability(double a, double b, double eps, double tau) {
  require(eps > 0.0 && tau > 0.0, ErrorCode::InvalidArgument, "bridge probability needs eps > 0 and tau > 0");
  if (!(std::abs(a) < eps && std::abs(b) < eps)) return 0.0;
  // Positions measured from the lower barrier of a strip of width w.
  const double w = 2.0 * eps;
  const double x = a + eps, y = b + eps;
  if (2.0 * std::min(x * y, (w - x) * (w - y)) / tau > 40.0) return 1.0;
  double sum = 1.0 - std::exp(-2.0 * x * y / tau);
  for (int k = 1; k < 200; ++k) {
    const double kw = k * w;
    const double shift =
        std::exp(-2.0 * kw * (kw + (y - x)) / tau) + std::exp(-2.0 * kw * (kw - (y - x)) / tau);
    const double mirror = std::exp(-2.0 * (x + kw) * (y + kw) / tau) + std::exp(-2.0 * (x - kw) * (y - kw) / tau);
    sum += shift - mirror;
    if (shift + mirror < 1e-17) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

namespace {

struct TubeWeight {
  double weight = 0.0;
  bool inside = false;  // inside at every node
};

TubeWeight tube_weight(std::span<const double> deviation, int d, int n, double eps, const NormKind& norm,
                       bool bridge, bool* approximate) {
  TubeWeight out;
  if (norm.type == NormKind::Type::Sup && d == 1) {
    for (int k = 0; k <= n; ++k)
      if (!(std::abs(deviation[k]) <= eps)) return out;
    out.inside = true;
    out.weight = 1.0;
    if (bridge) {
      const double tau = 1.0 / n;
      for (int k = 0; k < n && out.weight > 0.0; ++k)
        out.weight *= bridge_stay_probability(deviation[k], deviation[k + 1], eps, tau);
    }
    return out;
  }
  bool approx = false;
  out.inside = detail::norm_of(deviation, d, n, norm, &approx) <= eps;
  if (approximate && approx) *approximate = true;
  out.weight = out.inside ? 1.0 : 0.0;
  return out;
}

bool uses_bridge(const SimConfig& c, const NormKind& norm, const TubeOptions& options) {
  return options.bridge_correction && norm.type == NormKind::Type::Sup && c.drift.dim() == 1;
}

double sum_in_order(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

TubeEstimate summarize(const Vec& weights, long long hits, double eps, const NormKind& norm, bool weighted) {
  TubeEstimate est;
  const auto m = static_cast<long long>(weights.size());
  est.samples = m;
  est.hits = hits;
  est.eps = eps;
  est.norm = norm;
  est.importance_sampled = weighted;
  if (hits == 0) {
    est.zero_hits = true;
    est.ci_high = 1.0 - std::pow(0.01, 1.0 / static_cast<double>(m));
    return est;
  }
  const double p = sum_in_order(weights) / static_cast<double>(m);
  double se;
  if (weighted) {
    double ss = 0.0;
    for (double w : weights) ss += (w - p) * (w - p);
    se = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m)) : 0.0;
  } else {
    se = std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(m));
  }
  est.probability = weighted ? p : std::clamp(p, 0.0, 1.0);
  est.standard_error = se;
  est.ci_low = std::clamp(p - kZ99 * se, 0.0, 1.0);
  est.ci_high = std::clamp(p + kZ99 * se, 0.0, 1.0);
  return est;
}

}  // namespace

TubeEstimate estimate_tube_probability(const SimConfig& c, const Path& reference, double eps, const NormKind& norm,
                                       const TubeOptions& options) {
  validate(c);
  require(eps > 0.0 && std::isfinite(eps), ErrorCode::InvalidArgument, "tube radius eps must be positive");
  require_reference(c, reference, "reference path");
  const FrozenLaw law = freeze_law(c);
  const int d = c.drift.dim();
  const int n = c.steps;
  const bool bridge = uses_bridge(c, norm, options);

  const auto m = static_cast<std::size_t>(c.trajectories);
  Vec weights(m, 0.0);
  std::vector<char> inside(m, 0), approximate(m, 0);
  parallel_for(m, c.threads, [&](std::size_t begin, std::size_t end) {
    Vec path(static_cast<std::size_t>(n + 1) * d), deviation(path.size());
    for (std::size_t j = begin; j < end; ++j) {
      NormalStream noise(*c.seed, RngStream::Trajectory, j);
      euler_path(c, law, noise, j, path, {});
      for (std::size_t q = 0; q < path.size(); ++q) deviation[q] = path[q] - reference.values()[q];
      bool approx = false;
      const TubeWeight tw = tube_weight(deviation, d, n, eps, norm, bridge, &approx);
      weights[j] = tw.weight;
      inside[j] = tw.inside;
      approximate[j] = approx;
    }
  });
  const long long hits = std::count(inside.begin(), inside.end(), 1);
  TubeEstimate est = summarize(weights, hits, eps, norm, false);
  est.bridge_corrected = bridge;
  est.approximate_norm = std::find(approximate.begin(), approximate.end(), 1) != approximate.end();
  return est;
}

double girsanov_log_weight(const DriftSpec& spec, const Path& reference, std::span<const double> increments,
                           const FrozenLaw& law) {
  const int d = spec.dim();
  const int n = reference.intervals();
  require(reference.dim() == d, ErrorCode::DimensionMismatch, "reference dimension does not match the drift");
  require(increments.size() == static_cast<std::size_t>(n) * d, ErrorCode::DimensionMismatch,
          "increments do not match the reference grid");
  require(static_cast<int>(law.moments.size()) == n + 1, ErrorCode::DimensionMismatch,
          "frozen law does not cover the time grid");
  const double dt = 1.0 / n;
  Vec y(reference.at(0).begin(), reference.at(0).end()), brownian(d, 0.0), f(d);
  double martingale = 0.0, quadratic = 0.0;
  for (int k = 0; k < n; ++k) {
    spec.eval(k * dt, y, law.moments[k], f);
    for (int i = 0; i < d; ++i) {
      const double u = f[i] - (reference(k + 1, i) - reference(k, i)) / dt;
      const double db = increments[static_cast<std::size_t>(k) * d + i];
      martingale += u * db;
      quadratic += u * u * dt;
      brownian[i] += db;
      y[i] = reference(k + 1, i) + brownian[i];
    }
  }
  const double log_r = martingale - 0.5 * quadratic;
  require(std::isfinite(log_r), ErrorCode::NonFinite, "Girsanov log-weight is not finite");
  return log_r;
}

namespace {

/// Fills `increments` with the Brownian increments of shifted trajectory j
/// and `deviation` with the Brownian path itself (Y - reference).
void shifted_brownian(const SimConfig& c, std::uint64_t j, Vec& increments, Vec& deviation) {
  const int d = c.drift.dim();
  const double sqrt_dt = std::sqrt(1.0 / c.steps);
  NormalStream noise(*c.seed, RngStream::Shifted, j);
  std::fill(deviation.begin(), deviation.begin() + d, 0.0);
  for (int k = 0; k < c.steps; ++k)
    for (int i = 0; i < d; ++i) {
      const std::size_t q = static_cast<std::size_t>(k) * d + i;
      increments[q] = sqrt_dt * noise.next();
      deviation[q + d] = deviation[q] + increments[q];
    }
}

}  // namespace

WeightSummary sample_girsanov_weights(const SimConfig& c, const Path& reference) {
  validate(c);
  require_reference(c, reference, "reference path");
  const FrozenLaw law = freeze_law(c);
  const int d = c.drift.dim();
  const auto m = static_cast<std::size_t>(c.trajectories);
  Vec weights(m);
  parallel_for(m, c.threads, [&](std::size_t begin, std::size_t end) {
    Vec increments(static_cast<std::size_t>(c.steps) * d), deviation(static_cast<std::size_t>(c.steps + 1) * d);
    for (std::size_t j = begin; j < end; ++j) {
      shifted_brownian(c, j, increments, deviation);
      weights[j] = std::exp(girsanov_log_weight(c.drift, reference, increments, law));
    }
  });
  WeightSummary s;
  s.samples = static_cast<long long>(m);
  s.mean = sum_in_order(weights) / static_cast<double>(m);
  double ss = 0.0;
  for (double w : weights) ss += (w - s.mean) * (w - s.mean);
  s.standard_error = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m)) : 0.0;
  return s;
}

TubeEstimate estimate_tube_probability_weighted(const SimConfig& c, const Path& reference, double eps,
                                                const NormKind& norm, const TubeOptions& options) {
  validate(c);
  require(eps > 0.0 && std::isfinite(eps), ErrorCode::InvalidArgument, "tube radius eps must be positive");
  require_reference(c, reference, "reference path");
  const FrozenLaw law = freeze_law(c);
  const int d = c.drift.dim();
  const int n = c.steps;
  const bool bridge = uses_bridge(c, norm, options);
  const auto m = static_cast<std::size_t>(c.trajectories);
  Vec weights(m, 0.0);
  std::vector<char> inside(m, 0), approximate(m, 0);
  parallel_for(m, c.threads, [&](std::size_t begin, std::size_t end) {
    Vec increments(static_cast<std::size_t>(n) * d), deviation(static_cast<std::size_t>(n + 1) * d);
    for (std::size_t j = begin; j < end; ++j) {
      shifted_brownian(c, j, increments, deviation);
      bool approx = false;
      const TubeWeight tw = tube_weight(deviation, d, n, eps, norm, bridge, &approx);
      inside[j] = tw.inside;
      approximate[j] = approx;
      if (tw.weight > 0.0) weights[j] = tw.weight * std::exp(girsanov_log_weight(c.drift, reference, increments, law));
    }
  });
  const long long hits = std::count(inside.begin(), inside.end(), 1);
  TubeEstimate est = summarize(weights, hits, eps, norm, true);
  est.bridge_corrected = bridge;
  est.approximate_norm = std::find(approximate.begin(), approximate.end(), 1) != approximate.end();
  return est;
}

std::vector<RatioRow> estimate_om_ratio(const SimConfig& c, const Path& phi1, const Path& phi2,
                                        const std::vector<double>& eps_list, const NormKind& norm,
                                        const TubeOptions& options) {
  validate(c);
  require(!eps_list.empty(), ErrorCode::InvalidArgument, "eps list is empty");
  for (double eps : eps_list)
    require(eps > 0.0 && std::isfinite(eps), ErrorCode::InvalidArgument, "tube radii must be positive");
  require(norm.type != NormKind::Type::L2, ErrorCode::InvalidArgument,
          "the ratio experiment needs a sup, Hoelder or Lp (p > 4) norm");
  require_reference(c, phi1, "phi1");
  require_reference(c, phi2, "phi2");
  const int d = c.drift.dim();
  for (const Path* phi : {&phi1, &phi2})
    for (int i = 0; i < d; ++i)
      require(std::abs((*phi)(0, i) - c.x0[i]) <= 1e-12, ErrorCode::InvalidArgument,
              "reference paths must start at the initial point");

  const FrozenLaw law = freeze_law(c);
  const int n = c.steps;
  const bool bridge = uses_bridge(c, norm, options);
  const std::size_t m = static_cast<std::size_t>(c.trajectories);
  const std::size_t ne = eps_list.size();
  // weights[(e * 2 + path) * m + j]
  Vec weights(ne * 2 * m, 0.0);
  std::vector<char> inside(ne * 2 * m, 0);
  parallel_for(m, c.threads, [&](std::size_t begin, std::size_t end) {
    Vec path(static_cast<std::size_t>(n + 1) * d), deviation(path.size());
    for (std::size_t j = begin; j < end; ++j) {
      NormalStream noise(*c.seed, RngStream::Trajectory, j);
      euler_path(c, law, noise, j, path, {});
      for (int which = 0; which < 2; ++which) {
        const Path& ref = which == 0 ? phi1 : phi2;
        for (std::size_t q = 0; q < path.size(); ++q) deviation[q] = path[q] - ref.values()[q];
        for (std::size_t e = 0; e < ne; ++e) {
          const TubeWeight tw = tube_weight(deviation, d, n, eps_list[e], norm, bridge, nullptr);
          weights[(e * 2 + which) * m + j] = tw.weight;
          inside[(e * 2 + which) * m + j] = tw.inside;
        }
      }
    }
  });

  const double predicted = om_action(c.drift, phi1).total - om_action(c.drift, phi2).total;
  const double md = static_cast<double>(m);
  std::vector<RatioRow> rows;
  for (std::size_t e = 0; e < ne; ++e) {
    const double* w1 = weights.data() + (e * 2) * m;
    const double* w2 = weights.data() + (e * 2 + 1) * m;
    RatioRow row;
    row.eps = eps_list[e];
    row.predicted_dl = predicted;
    row.hits1 = std::count(inside.begin() + (e * 2) * m, inside.begin() + (e * 2 + 1) * m, 1);
    row.hits2 = std::count(inside.begin() + (e * 2 + 1) * m, inside.begin() + (e * 2 + 2) * m, 1);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      s1 += w1[j];
      s2 += w2[j];
    }
    row.p1 = s1 / md;
    row.p2 = s2 / md;
    row.se1 = std::sqrt(std::max(0.0, row.p1 * (1.0 - row.p1)) / md);
    row.se2 = std::sqrt(std::max(0.0, row.p2 * (1.0 - row.p2)) / md);
    row.flagged = row.hits1 == 0 || row.hits2 == 0 || row.p1 <= 0.0 || row.p2 <= 0.0;
    if (row.flagged) {
      row.log_ratio = std::numeric_limits<double>::quiet_NaN();
      row.se_log_ratio = std::numeric_limits<double>::quiet_NaN();
    } else {
      double c11 = 0.0, c22 = 0.0, c12 = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double a = w1[j] - row.p1, b = w2[j] - row.p2;
        c11 += a * a;
        c22 += b * b;
        c12 += a * b;
      }
      const double denom = m > 1 ? (md - 1.0) * md : 1.0;
      const double var = (c11 / (row.p1 * row.p1) + c22 / (row.p2 * row.p2) - 2.0 * c12 / (row.p1 * row.p2)) / denom;
      row.log_ratio = std::log(row.p1) - std::log(row.p2);
      row.se_log_ratio = std::sqrt(std::max(0.0, var));
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void write_ratio_csv(std::ostream& out, const std::vector<RatioRow>& rows) {
  out << "eps,p1,se1,p2,se2,log_ratio,se_log_ratio,predicted_dL\n";
  for (const auto& r : rows)
    out << fmt(r.eps) << ',' << fmt(r.p1) << ',' << fmt(r.se1) << ',' << fmt(r.p2) << ',' << fmt(r.se2) << ','
        << fmt(r.log_ratio) << ',' << fmt(r.se_log_ratio) << ',' << fmt(r.predicted_dl) << '\n';
}

void write_tube_csv(std::ostream& out, const std::vector<TubeEstimate>& estimates) {
  out << "eps,norm,probability,standard_error,ci_low,ci_high,samples,hits,bridge_corrected,importance_sampled\n";
  for (const auto& e : estimates)
    out << fmt(e.eps) << ',' << e.norm.to_string() << ',' << fmt(e.probability) << ',' << fmt(e.standard_error) << ','
        << fmt(e.ci_low) << ',' << fmt(e.ci_high) << ',' << e.samples << ',' << e.hits << ','
        << (e.bridge_corrected ? 1 : 0) << ',' << (e.importance_sampled ? 1 : 0) << '\n';
}

void write_ensemble_csv(std::ostream& out, const Ensemble& e) {
  out << "t";
  for (int i = 1; i <= e.dim; ++i) out << ",mean" << i;
  for (int i = 1; i <= e.dim; ++i) out << ",var" << i;
  out << '\n';
  for (int k = 0; k <= e.steps; ++k) {
    out << fmt(static_cast<double>(k) / e.steps);
    for (int i = 0; i < e.dim; ++i) out << ',' << fmt(e.mean[static_cast<std::size_t>(k) * e.dim + i]);
    for (int i = 0; i < e.dim; ++i) out << ',' << fmt(e.variance[static_cast<std::size_t>(k) * e.dim + i]);
    out << '\n';
  }
}

}  // namespace mvom
