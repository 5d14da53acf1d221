#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvom/action.hpp"
#include "mvom/drift.hpp"
#include "mvom/path.hpp"

namespace mvom {

/// Which second-order equation is used for most probable paths.
enum class ElVariant {
  /// phi'' = d_t f + 1/2 lap_x f + (grad_x f)^T f + int d_mu f(y) phi' mu(dy),
  /// all at (t, phi, delta_phi). The law enters the left-hand side through
  /// its velocity only; solutions are the paths that are stationary for the
  /// action with the law frozen at the path itself.
  MeanFieldRate,
  /// As MeanFieldRate but with the last term int d_mu f(y) mu(dy), without
  /// the velocity factor. Only defined for d = 1.
  PaperExample,
  /// Exact stationarity of x -> OM(x) with the law following x:
  /// phi'' = d_t F + (J - J^T) phi' + J^T F + 1/2 grad D, where
  /// F(t, x) = f(t, x, delta_x), J its Jacobian and D(t, x) = div_x f(t, x, delta_x).
  TotalDerivative,
};

std::string to_string(ElVariant variant);
ElVariant parse_el_variant(const std::string& text);

enum class InitialGuess { Linear, StepJump, Tanh };

std::string to_string(InitialGuess guess);
InitialGuess parse_initial_guess(const std::string& text);

/// Initial path from x0 to x1: straight line, constant-then-jump at t = 1/2,
/// or a tanh transition front centred at t = 1/2.
Path initial_guess_path(InitialGuess guess, std::span<const double> x0, std::span<const double> x1, int n);

/// Right-hand side a(t, phi, phi') of phi'' = a for the chosen variant.
Vec el_acceleration(const DriftSpec& spec, ElVariant variant, double t, std::span<const double> phi,
                    std::span<const double> phidot);

/// phi'' - a(t, phi, phi') on interior nodes using central differences;
/// endpoint rows are zero.
Path el_residual(const DriftSpec& spec, const Path& path, ElVariant variant = ElVariant::MeanFieldRate);

struct SolverControls {
  int max_iterations = 50;
  double tolerance = 1e-6;
  /// Step multiplier applied on each backtracking halving of a Newton step.
  double damping = 0.5;
  int max_halvings = 30;
  /// RK4 steps over [0, 1] used by shooting (rounded up to a multiple of n).
  int integration_steps = 4000;
};

struct BVProblem {
  DriftSpec drift;
  Vec x0;
  Vec x1;
  int n = 100;
  SolverControls controls;
  ElVariant variant = ElVariant::MeanFieldRate;
  InitialGuess guess = InitialGuess::Linear;
};

struct SolveReport {
  std::string method;         // "shooting" or "collocation"
  int iterations = 0;         // Newton iterations, shooting and grid polish combined
  double residual_norm = 0.0;  // max interior |el_residual|
  double boundary_mismatch = 0.0;
  double action = 0.0;        // om_action total along the returned path
  bool converged = false;
  Vec initial_velocity;       // last shooting velocity tried
  std::string message;
};

struct BvpSolution {
  Path path;
  SolveReport report;
};

/// Two-point boundary value problem phi(0) = x0, phi(1) = x1 for the chosen
/// variant. Single shooting with damped Newton on the initial velocity gives
/// the trajectory; a Newton solve of the grid equations el_residual = 0 then
/// removes the O(h^2) gap between the integrated trajectory and the grid
/// residual. When shooting fails the grid solve is seeded from
/// minimize_action instead. Failures are reported, not thrown.
BvpSolution solve_el_bvp(const BVProblem& problem);

/// How the law is treated while minimising.
enum class LawCoupling {
  /// The law is delta at the current path; descent on -om_action.
  Coupled,
  /// Fixed point: minimise with the law frozen at the previous iterate,
  /// update the law, repeat. Converges to MeanFieldRate solutions.
  SelfConsistent,
};

struct MinimizeOptions {
  int max_iterations = 20000;
  /// Stop when the max-norm of the discrete gradient falls below this.
  double tolerance = 1e-8;
  double armijo = 1e-4;
  LawCoupling law = LawCoupling::Coupled;
  int max_outer_iterations = 500;
  double outer_tolerance = 1e-11;
  bool record_history = false;
};

struct MinimizeReport {
  int iterations = 0;
  int restarts = 0;
  int outer_iterations = 0;
  double gradient_norm = 0.0;
  double objective = 0.0;  // -om_action total
  bool converged = false;
  std::vector<double> objective_history;  // accepted iterates, when recorded
};

struct MinimizeResult {
  Path path;
  MinimizeReport report;
};

/// Descent on the discrete objective with pinned endpoints. Directions are
/// gradients in the Cameron-Martin metric (the discrete H^1_0 inner product,
/// i.e. the Euclidean gradient preconditioned by the path Laplacian), with
/// Nesterov momentum, Armijo backtracking and a restart whenever momentum
/// fails to decrease the objective. Accepted iterates never increase it.
MinimizeResult minimize_action(const DriftSpec& spec, std::span<const double> x0, std::span<const double> x1, int n,
                               const std::optional<Path>& init = std::nullopt, const MinimizeOptions& options = {});

struct Candidate {
  InitialGuess guess = InitialGuess::Linear;
  std::string method;  // "el-shooting", "el-collocation" or "minimize"
  Path path;
  OMResult action;
  bool converged = false;
  double residual_norm = 0.0;
};

/// Stationary paths from several initial guesses, solved independently (in
/// parallel) by the E-L solver and by direct minimisation. Converged
/// candidates are ranked by OM total, most probable first; near-duplicates
/// (sup distance below 1e-6) of the same method are dropped.
std::vector<Candidate> multistart(const DriftSpec& spec, std::span<const double> x0, std::span<const double> x1, int n,
                                  const std::vector<InitialGuess>& guesses, const SolverControls& controls,
                                  ElVariant variant, const MinimizeOptions& minimize_options, int threads = 1);

}  // namespace mvom
