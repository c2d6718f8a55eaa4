#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qlc/control.hpp"
#include "qlc/propagation.hpp"

namespace qlc {

// ---------------------------------------------------------------------------
// Quasi-Newton minimization

struct BfgsOptions {
  int max_iter = 500;
  double gradient_tolerance = 1e-6;
  double armijo = 1e-4;
  double shrink = 0.5;
  double relative_fd_step = 1e-6;  // h_j = step * max(1, |x_j|)
  int max_backtracks = 60;
};

enum class BfgsStatus {
  kConverged,         // gradient norm below tolerance
  kIterationCap,      // max_iter reached
  kStalled,           // no Armijo step found along descent or steepest descent
  kNonFinite,         // objective or gradient became non-finite
};

std::string to_string(BfgsStatus status);

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  BfgsStatus status = BfgsStatus::kIterationCap;
  std::vector<double> trace;  // objective after each accepted iterate
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Central-difference gradient with h_j = rel_step * max(1, |x_j|).
Eigen::VectorXd finite_difference_gradient(const Objective& f,
                                           const Eigen::VectorXd& x,
                                           double rel_step);

/// BFGS with inverse-Hessian updates, Armijo backtracking and central
/// difference gradients. Throws std::invalid_argument if the objective is
/// not finite at `start`; later non-finite values stop the search at the
/// last good iterate.
BfgsResult bfgs_minimize(const Objective& f, const Eigen::VectorXd& start,
                         const BfgsOptions& options = {});

// ---------------------------------------------------------------------------
// Infidelity optimization

enum class SeedStrategy { kCold, kContinuation, kAnalytic };

std::string to_string(SeedStrategy s);
SeedStrategy seed_strategy_from_string(const std::string& name);

struct OptimizationResult {
  double horizon = 0.0;
  std::vector<double> a_opt;
  double r_opt = 1.0;
  double r_linear_ramp = 1.0;  // a = 0
  int iterations = 0;
  double gradient_norm_final = 0.0;  // in the rescaled search coordinates
  BfgsStatus status = BfgsStatus::kIterationCap;
  bool constraint_ok = false;
  SeedStrategy seed_strategy = SeedStrategy::kCold;
  std::vector<double> trace;
};

struct OptimizeOptions {
  int harmonics = 2;
  std::vector<SeedStrategy> strategies{SeedStrategy::kCold,
                                       SeedStrategy::kAnalytic};
  // Optimum found at `warm_horizon`; used by kContinuation.
  std::optional<std::vector<double>> warm_start;
  double warm_horizon = 0.0;
  BfgsOptions bfgs;
  EvolutionSpec evolution;
};

/// Seeds for one horizon: a = 0 (cold), (-pi/4, a2 from maximize_gamma)
/// (analytic), or the warm start mapped to this horizon (continuation).
std::vector<double> seed_amplitudes(SeedStrategy s, double horizon,
                                    const OptimizeOptions& options);

/// Minimizes R_T over the harmonic amplitudes and returns the best of the
/// requested strategies, never worse than the linear ramp. The search runs
/// in rescaled coordinates: even harmonics are multiplied by tau = min(T, 1)
/// and R_T is divided by tau^2, which keeps the problem well conditioned
/// when the optimal a_2 grows like 1/T.
OptimizationResult optimize_infidelity(const ControlProblem& problem,
                                       double horizon,
                                       const OptimizeOptions& options = {});

/// Optimizes every horizon. With kContinuation among the strategies the
/// points are visited in descending T, each warm-started from the previous
/// optimum; otherwise they run independently on up to `jobs` threads.
/// Results come back in input order.
std::vector<OptimizationResult> sweep_horizons(const ControlProblem& problem,
                                               const std::vector<double>& horizons,
                                               const OptimizeOptions& options = {},
                                               int jobs = 1);

// ---------------------------------------------------------------------------
// Landscape scans

struct LandscapeGrid {
  double horizon = 0.0;
  std::vector<double> a1_axis;
  std::vector<double> a2_axis;
  Eigen::MatrixXd fidelity;  // rows follow a1, columns follow a2
};

std::vector<double> linspace(double lo, double hi, int points);

/// f_T(a1, a2) from full propagation (K = 2).
LandscapeGrid landscape_scan(const ControlProblem& problem, double horizon,
                             std::pair<double, double> a1_range,
                             std::pair<double, double> a2_range,
                             int a1_points, int a2_points, int jobs = 1,
                             const EvolutionSpec& spec = {});

struct Ridge {
  std::size_t row = 0;
  double a1 = 0.0;
  double mean_fidelity = 0.0;
  double variance_along_a2 = 0.0;
};

/// Strict local maxima (along a1) of the a2-averaged fidelity.
std::vector<Ridge> find_ridges(const LandscapeGrid& grid);

/// Mean over a2 columns of the fidelity variance taken along a1.
double column_variance(const LandscapeGrid& grid);

/// Runs fn(0..count-1) on up to `jobs` threads.
void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& fn);

}  // namespace qlc
