#include "qlc/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace qlc {

std::string to_string(BfgsStatus status) {
  switch (status) {
    case BfgsStatus::kConverged: return "converged";
    case BfgsStatus::kIterationCap: return "iteration_cap";
    case BfgsStatus::kStalled: return "stalled";
    case BfgsStatus::kNonFinite: return "non_finite";
  }
  return "unknown";
}

std::string to_string(SeedStrategy s) {
  switch (s) {
    case SeedStrategy::kCold: return "cold";
    case SeedStrategy::kContinuation: return "continuation";
    case SeedStrategy::kAnalytic: return "analytic";
  }
  return "unknown";
}

SeedStrategy seed_strategy_from_string(const std::string& name) {
  if (name == "cold") return SeedStrategy::kCold;
  if (name == "continuation") return SeedStrategy::kContinuation;
  if (name == "analytic") return SeedStrategy::kAnalytic;
  throw std::invalid_argument("unknown seed strategy '" + name + "'");
}

void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------

Eigen::VectorXd finite_difference_gradient(const Objective& f,
                                           const Eigen::VectorXd& x,
                                           double rel_step) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x[j]));
    probe[j] = x[j] + h;
    const double up = f(probe);
    probe[j] = x[j] - h;
    const double down = f(probe);
    probe[j] = x[j];
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

BfgsResult bfgs_minimize(const Objective& f, const Eigen::VectorXd& start,
                         const BfgsOptions& options) {
  BfgsResult out;
  out.x = start;
  out.value = f(start);
  if (!std::isfinite(out.value)) {
    throw std::invalid_argument("bfgs_minimize: objective not finite at start");
  }
  out.trace.push_back(out.value);

  const auto n = start.size();
  Eigen::VectorXd grad = finite_difference_gradient(f, out.x, options.relative_fd_step);
  if (!grad.allFinite()) {
    out.status = BfgsStatus::kNonFinite;
    out.gradient_norm = INFINITY;
    return out;
  }
  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
  bool identity = true;
  bool scaled = false;
  int flat_steps = 0;
  out.status = BfgsStatus::kIterationCap;

  while (true) {
    out.gradient_norm = grad.norm();
    if (out.gradient_norm < options.gradient_tolerance) {
      out.status = BfgsStatus::kConverged;
      break;
    }
    if (out.iterations >= options.max_iter) {
      out.status = BfgsStatus::kIterationCap;
      break;
    }

    Eigen::VectorXd dir = -inv_hessian * grad;
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {
      inv_hessian.setIdentity();
      identity = true;
      dir = -grad;
      slope = grad.dot(dir);
    }

    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial;
    double trial_value = 0.0;
    for (int k = 0; k <= options.max_backtracks; ++k) {
      trial = out.x + alpha * dir;
      trial_value = f(trial);
      if (std::isfinite(trial_value) &&
          trial_value <= out.value + options.armijo * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= options.shrink;
    }
    if (!accepted) {
      if (!identity) {
        // retry once along steepest descent
        inv_hessian.setIdentity();
        identity = true;
        continue;
      }
      out.status = BfgsStatus::kStalled;
      break;
    }

    const Eigen::VectorXd next_grad =
        finite_difference_gradient(f, trial, options.relative_fd_step);
    const Eigen::VectorXd s = trial - out.x;
    // accepted steps that no longer move the value past roundoff mean the
    // gradient is below its own finite-difference noise
    const bool flat = out.value - trial_value <= 1e-15 * std::abs(out.value);
    flat_steps = flat ? flat_steps + 1 : 0;
    out.x = trial;
    out.value = trial_value;
    ++out.iterations;
    out.trace.push_back(out.value);
    if (!next_grad.allFinite()) {
      out.status = BfgsStatus::kNonFinite;
      out.gradient_norm = INFINITY;
      break;
    }
    const Eigen::VectorXd y = next_grad - grad;
    grad = next_grad;
    if (flat_steps >= 3) {
      out.gradient_norm = grad.norm();
      out.status = out.gradient_norm < options.gradient_tolerance
                       ? BfgsStatus::kConverged
                       : BfgsStatus::kStalled;
      break;
    }

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        inv_hessian = (sy / y.squaredNorm()) * Eigen::MatrixXd::Identity(n, n);
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd left =
          Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
      inv_hessian = left * inv_hessian * left.transpose() + rho * s * s.transpose();
      identity = false;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double search_scale(double horizon) { return std::min(horizon, 1.0); }

// harmonic k = index + 1; even harmonics carry the 1/T growth
bool even_harmonic(std::size_t index) { return (index + 1) % 2 == 0; }

Eigen::VectorXd to_search(const std::vector<double>& a, double tau) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(a.size()));
  for (std::size_t k = 0; k < a.size(); ++k) {
    u[static_cast<Eigen::Index>(k)] = even_harmonic(k) ? a[k] * tau : a[k];
  }
  return u;
}

std::vector<double> from_search(const Eigen::VectorXd& u, double tau) {
  std::vector<double> a(static_cast<std::size_t>(u.size()));
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double v = u[static_cast<Eigen::Index>(k)];
    a[k] = even_harmonic(k) ? v / tau : v;
  }
  return a;
}

}  // namespace

std::vector<double> seed_amplitudes(SeedStrategy s, double horizon,
                                    const OptimizeOptions& options) {
  const auto k = static_cast<std::size_t>(options.harmonics);
  std::vector<double> a(k, 0.0);
  switch (s) {
    case SeedStrategy::kCold:
      break;
    case SeedStrategy::kAnalytic: {
      a[0] = -std::numbers::pi / 4.0;
      if (k >= 2) a[1] = maximize_gamma(horizon, a[0]).a2;
      break;
    }
    case SeedStrategy::kContinuation: {
      if (!options.warm_start) {
        throw std::invalid_argument("continuation seed needs a warm start");
      }
      const auto& w = *options.warm_start;
      const double ratio = search_scale(options.warm_horizon) / search_scale(horizon);
      for (std::size_t i = 0; i < std::min(k, w.size()); ++i) {
        a[i] = even_harmonic(i) ? w[i] * ratio : w[i];
      }
      break;
    }
  }
  return a;
}

OptimizationResult optimize_infidelity(const ControlProblem& problem,
                                       double horizon,
                                       const OptimizeOptions& options) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("optimize_infidelity: horizon must be positive");
  }
  if (options.harmonics < 1) {
    throw std::invalid_argument("optimize_infidelity: harmonics must be >= 1");
  }
  const auto k = static_cast<std::size_t>(options.harmonics);
  const double tau = search_scale(horizon);

  OptimizationResult best;
  best.horizon = horizon;
  best.a_opt.assign(k, 0.0);
  best.r_linear_ramp =
      problem.evaluate(ControlParams{best.a_opt, horizon}, options.evolution)
          .infidelity;
  best.r_opt = best.r_linear_ramp;
  best.status = BfgsStatus::kIterationCap;
  best.seed_strategy = SeedStrategy::kCold;
  bool have_run = false;

  for (SeedStrategy strategy : options.strategies) {
    if (strategy == SeedStrategy::kContinuation && !options.warm_start) continue;
    const std::vector<double> seed = seed_amplitudes(strategy, horizon, options);

    // One step count for the whole run keeps the objective smooth in a;
    // the floor still applies if the search wanders past the bound.
    ControlParams bound{seed, horizon};
    for (std::size_t i = 0; i < k; ++i) {
      bound.amplitudes[i] =
          2.0 * std::abs(seed[i]) + (even_harmonic(i) ? 4.0 / tau : 2.0);
    }
    EvolutionSpec run_spec = options.evolution;
    run_spec.steps = resolve_steps(problem.config(), bound, options.evolution);

    const double scale = 1.0 / (tau * tau);
    Objective objective = [&](const Eigen::VectorXd& u) {
      ControlParams p{from_search(u, tau), horizon};
      for (double a : p.amplitudes) {
        if (!std::isfinite(a)) return static_cast<double>(NAN);
      }
      if (required_steps(problem.config(), p) > kMaxSteps) {
        return static_cast<double>(NAN);
      }
      return problem.evaluate(p, run_spec).infidelity * scale;
    };

    const BfgsResult run = bfgs_minimize(objective, to_search(seed, tau), options.bfgs);
    std::vector<double> a = from_search(run.x, tau);
    const double r = problem.evaluate(ControlParams{a, horizon}, run_spec).infidelity;

    if (!have_run || r < best.r_opt) {
      best.a_opt = std::move(a);
      best.r_opt = r;
      best.iterations = run.iterations;
      best.gradient_norm_final = run.gradient_norm;
      best.status = run.status;
      best.seed_strategy = strategy;
      best.trace.clear();
      for (double v : run.trace) best.trace.push_back(v / scale);
      have_run = true;
    }
  }

  if (best.r_opt > best.r_linear_ramp) {
    best.a_opt.assign(k, 0.0);
    best.r_opt = best.r_linear_ramp;
    best.seed_strategy = SeedStrategy::kCold;
  }
  best.constraint_ok =
      check_derivative_constraints(ControlParams{best.a_opt, horizon}).satisfied;
  return best;
}

std::vector<OptimizationResult> sweep_horizons(const ControlProblem& problem,
                                               const std::vector<double>& horizons,
                                               const OptimizeOptions& options,
                                               int jobs) {
  for (double t : horizons) {
    if (!(t > 0.0)) throw std::invalid_argument("sweep: horizons must be positive");
  }
  std::vector<OptimizationResult> out(horizons.size());
  const bool continuation =
      std::find(options.strategies.begin(), options.strategies.end(),
                SeedStrategy::kContinuation) != options.strategies.end();

  if (!continuation) {
    parallel_for(horizons.size(), jobs, [&](std::size_t i) {
      out[i] = optimize_infidelity(problem, horizons[i], options);
    });
    return out;
  }

  std::vector<std::size_t> order(horizons.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return horizons[a] > horizons[b];
  });

  OptimizeOptions local = options;
  local.warm_start.reset();
  for (std::size_t idx : order) {
    OptimizeOptions point = local;
    if (!point.warm_start) {
      // first point: nothing to continue from
      point.strategies.erase(
          std::remove(point.strategies.begin(), point.strategies.end(),
                      SeedStrategy::kContinuation),
          point.strategies.end());
      if (point.strategies.empty()) {
        point.strategies = {SeedStrategy::kCold, SeedStrategy::kAnalytic};
      }
    }
    out[idx] = optimize_infidelity(problem, horizons[idx], point);
    local.warm_start = out[idx].a_opt;
    local.warm_horizon = horizons[idx];
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> linspace(double lo, double hi, int points) {
  if (points < 2) throw std::invalid_argument("linspace: need >= 2 points");
  std::vector<double> v(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    v[static_cast<std::size_t>(i)] =
        i == points - 1 ? hi : lo + (hi - lo) * i / (points - 1);
  }
  return v;
}

LandscapeGrid landscape_scan(const ControlProblem& problem, double horizon,
                             std::pair<double, double> a1_range,
                             std::pair<double, double> a2_range, int a1_points,
                             int a2_points, int jobs, const EvolutionSpec& spec) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("landscape_scan: horizon must be positive");
  }
  for (double v : {a1_range.first, a1_range.second, a2_range.first, a2_range.second}) {
    if (!std::isfinite(v)) throw std::invalid_argument("landscape_scan: range not finite");
  }
  LandscapeGrid grid;
  grid.horizon = horizon;
  grid.a1_axis = linspace(a1_range.first, a1_range.second, a1_points);
  grid.a2_axis = linspace(a2_range.first, a2_range.second, a2_points);
  if (!std::is_sorted(grid.a1_axis.begin(), grid.a1_axis.end()) ||
      !std::is_sorted(grid.a2_axis.begin(), grid.a2_axis.end())) {
    throw std::invalid_argument("landscape_scan: ranges must be ascending");
  }
  grid.fidelity.resize(a1_points, a2_points);
  const auto cols = static_cast<std::size_t>(a2_points);
  parallel_for(static_cast<std::size_t>(a1_points) * cols, jobs, [&](std::size_t idx) {
    const std::size_t i = idx / cols;
    const std::size_t j = idx % cols;
    const ControlParams p{{grid.a1_axis[i], grid.a2_axis[j]}, horizon};
    grid.fidelity(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        problem.evaluate(p, spec).fidelity;
  });
  return grid;
}

std::vector<Ridge> find_ridges(const LandscapeGrid& grid) {
  const Eigen::VectorXd mean = grid.fidelity.rowwise().mean();
  std::vector<Ridge> out;
  for (Eigen::Index i = 1; i + 1 < mean.size(); ++i) {
    if (mean[i] > mean[i - 1] && mean[i] > mean[i + 1]) {
      const Eigen::VectorXd row = grid.fidelity.row(i).transpose();
      const double var = (row.array() - row.mean()).square().mean();
      out.push_back({static_cast<std::size_t>(i),
                     grid.a1_axis[static_cast<std::size_t>(i)], mean[i], var});
    }
  }
  return out;
}

double column_variance(const LandscapeGrid& grid) {
  const Eigen::Index cols = grid.fidelity.cols();
  if (cols == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index j = 0; j < cols; ++j) {
    const Eigen::VectorXd col = grid.fidelity.col(j);
    total += (col.array() - col.mean()).square().mean();
  }
  return total / static_cast<double>(cols);
}

}  // namespace qlc
