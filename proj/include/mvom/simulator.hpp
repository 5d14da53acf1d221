#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mvom/drift.hpp"
#include "mvom/path.hpp"

namespace mvom {

struct SimConfig {
  DriftSpec drift;
  Vec x0;
  int particles = 1000;     // N, size of the interacting ensemble
  int steps = 100;          // n, Euler-Maruyama steps on [0, 1]
  int trajectories = 1000;  // M, independent trajectories for estimates
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

/// Throws InvalidArgument unless N >= 2, n >= 2, M >= 1, threads >= 1, the
/// seed is set and x0 is finite with the drift's dimension.
void validate(const SimConfig& config);

struct Ensemble {
  int dim = 1;
  int particles = 0;
  int steps = 0;
  /// Moment values of the empirical law at each node k = 0..n (empty
  /// vectors for drifts without mean-field terms).
  std::vector<Vec> law;
  Vec mean;      // [k * d + i]
  Vec variance;  // [k * d + i], unbiased, per coordinate
  std::vector<Path> paths;       // when retained
  std::vector<Vec> increments;   // [k * d + i] Brownian increments per particle, when retained
};

/// Interacting particle Euler-Maruyama scheme: every particle sees the
/// empirical law of the whole ensemble at the current step.
Ensemble simulate_ensemble(const SimConfig& config, bool retain = false);

/// Deterministic flow of law moments used to drive independent trajectories.
struct FrozenLaw {
  std::vector<Vec> moments;  // per node k = 0..n

  static FrozenLaw from(const Ensemble& ensemble);
};

/// Runs the interacting ensemble when the drift needs a law; otherwise
/// returns empty moments.
FrozenLaw freeze_law(const SimConfig& config);

/// One trajectory against a frozen law; `path` has (n + 1) * d entries and
/// `increments`, when non-empty, n * d.
void simulate_trajectory(const SimConfig& config, const FrozenLaw& law, std::uint64_t index, std::span<double> path,
                         std::span<double> increments = {});

/// Probability that a Brownian bridge from a to b over time tau stays inside
/// (-eps, eps).
double bridge_stay_probability(double a, double b, double eps, double tau);

struct TubeOptions {
  /// For the sup norm in d = 1, weight each trajectory by the probability
  /// that the Brownian bridges between grid nodes stay inside the tube.
  bool bridge_correction = true;
};

struct TubeEstimate {
  double probability = 0.0;
  double standard_error = 0.0;
  double ci_low = 0.0;   // 99 %
  double ci_high = 0.0;
  long long samples = 0;
  long long hits = 0;  // trajectories inside the tube at every node
  NormKind norm;
  double eps = 0.0;
  bool bridge_corrected = false;
  bool importance_sampled = false;
  bool approximate_norm = false;
  bool zero_hits = false;
};

inline constexpr double kZ99 = 2.5758293035489004;

TubeEstimate estimate_tube_probability(const SimConfig& config, const Path& reference, double eps,
                                       const NormKind& norm, const TubeOptions& options = {});

/// log R = sum <f(t_k, Y_k, law_k) - v_k, dB_k> - 1/2 sum |f - v_k|^2 dt with
/// Y = reference + B and v_k the forward difference of the reference.
double girsanov_log_weight(const DriftSpec& spec, const Path& reference, std::span<const double> increments,
                           const FrozenLaw& law);

struct WeightSummary {
  double mean = 0.0;
  double standard_error = 0.0;
  long long samples = 0;
};

/// Sample mean of exp(log R) over M shifted Brownian paths.
WeightSummary sample_girsanov_weights(const SimConfig& config, const Path& reference);

/// Tube probability from paths reference + B reweighted by exp(log R).
TubeEstimate estimate_tube_probability_weighted(const SimConfig& config, const Path& reference, double eps,
                                                const NormKind& norm, const TubeOptions& options = {});

struct RatioRow {
  double eps = 0.0;
  double p1 = 0.0, se1 = 0.0;
  double p2 = 0.0, se2 = 0.0;
  double log_ratio = 0.0;
  double se_log_ratio = 0.0;
  double predicted_dl = 0.0;
  long long hits1 = 0, hits2 = 0;
  bool flagged = false;  // zero hits for one of the paths
};

/// log P(|X - phi1| <= eps) - log P(|X - phi2| <= eps) on one shared sample
/// of trajectories, with delta-method errors, next to the action difference.
std::vector<RatioRow> estimate_om_ratio(const SimConfig& config, const Path& phi1, const Path& phi2,
                                        const std::vector<double>& eps_list, const NormKind& norm,
                                        const TubeOptions& options = {});

void write_ratio_csv(std::ostream& out, const std::vector<RatioRow>& rows);
void write_tube_csv(std::ostream& out, const std::vector<TubeEstimate>& estimates);
void write_ensemble_csv(std::ostream& out, const Ensemble& ensemble);

}  // namespace mvom
