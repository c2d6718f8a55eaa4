#include "qlc/propagation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace qlc {

double hamiltonian_bound(const ChainConfig& config, const ControlParams& p) {
  const double j = std::abs(config.coupling);
  const double g_max = 1.0 + p.amplitude_sum();
  return (config.n_spins - 1) * j + config.n_spins * std::abs(config.field) +
         g_max * j;
}

long required_steps(const ChainConfig& config, const ControlParams& p) {
  const double wanted = std::ceil(20.0 * p.horizon * hamiltonian_bound(config, p));
  if (!(wanted <= static_cast<double>(kMaxSteps))) return kMaxSteps + 1;
  return std::max(1L, static_cast<long>(wanted));
}

long resolve_steps(const ChainConfig& config, const ControlParams& p,
                   const EvolutionSpec& spec) {
  const long cap = std::min(spec.max_steps, kMaxSteps);
  const long floor = required_steps(config, p);
  if (floor > cap) {
    std::ostringstream msg;
    msg << "step floor exceeds " << cap << " (T=" << p.horizon
        << ", H_bound=" << hamiltonian_bound(config, p) << ")";
    throw ConvergenceError(msg.str());
  }
  return std::min(std::max(spec.steps, floor), cap);
}

OperatorMatrix step_operator(const OperatorMatrix& h, double dt) {
  const Spectrum s = diagonalize(h);
  Eigen::VectorXcd phases(s.eigenvalues.size());
  for (Eigen::Index k = 0; k < phases.size(); ++k) {
    phases[k] = std::polar(1.0, -s.eigenvalues[k] * dt);
  }
  return s.eigenvectors * phases.asDiagonal() * s.eigenvectors.adjoint();
}

namespace {

void require_normalized(const StateVector& v) {
  if (std::abs(v.norm() - 1.0) > 1e-10) {
    throw std::invalid_argument("initial state is not normalized");
  }
}

}  // namespace

StateVector propagate_hamiltonian(
    const std::function<OperatorMatrix(double)>& hamiltonian, double horizon,
    long steps, const StateVector& initial) {
  require_normalized(initial);
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  const double dt = horizon / static_cast<double>(steps);
  StateVector psi = initial;
  for (long m = 0; m < steps; ++m) {
    const double t = (static_cast<double>(m) + 0.5) * dt;
    psi = step_operator(hamiltonian(t), dt) * psi;
  }
  return psi;
}

ChainPropagator::ChainPropagator(const ChainConfig& config) : config_(config) {
  config_.validate();
  const Eigen::MatrixXd h0 = static_hamiltonian(config_).real();
  const Eigen::MatrixXd v = control_operator(config_).real();
  const auto dim = static_cast<Eigen::Index>(config_.dim());
  const int n = config_.n_spins;

  auto mirror = [n](Eigen::Index b) {
    Eigen::Index r = 0;
    for (int k = 0; k < n; ++k) {
      if (b & (Eigen::Index{1} << k)) r |= Eigen::Index{1} << (n - 1 - k);
    }
    return r;
  };

  // columns per (parity, mirror sign)
  std::vector<std::vector<Eigen::VectorXd>> columns(4);
  const double h = std::sqrt(0.5);
  for (Eigen::Index b = 0; b < dim; ++b) {
    const Eigen::Index r = mirror(b);
    if (r < b) continue;
    const int parity = std::popcount(static_cast<std::size_t>(b)) % 2;
    Eigen::VectorXd even = Eigen::VectorXd::Zero(dim);
    if (r == b) {
      even[b] = 1.0;
      columns[2 * parity].push_back(even);
      continue;
    }
    Eigen::VectorXd odd = Eigen::VectorXd::Zero(dim);
    even[b] = h;
    even[r] = h;
    odd[b] = h;
    odd[r] = -h;
    columns[2 * parity].push_back(even);
    columns[2 * parity + 1].push_back(odd);
  }

  for (const auto& cols : columns) {
    if (cols.empty()) continue;
    Sector s;
    s.basis.resize(dim, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      s.basis.col(static_cast<Eigen::Index>(j)) = cols[j];
    }
    s.h0 = s.basis.transpose() * h0 * s.basis;
    s.v = s.basis.transpose() * v * s.basis;
    sectors_.push_back(std::move(s));
  }
}

void ChainPropagator::apply_step(double g, double dt,
                                 std::vector<Eigen::MatrixXcd>& blocks) const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  for (std::size_t k = 0; k < sectors_.size(); ++k) {
    if (blocks[k].size() == 0) continue;
    const Sector& s = sectors_[k];
    solver.compute(s.h0 + g * s.v);
    if (solver.info() != Eigen::Success) {
      throw std::runtime_error("ChainPropagator: eigensolver failed");
    }
    // one Newton-Schulz sweep: without it the few-ulp orthogonality error of
    // the eigenvectors accumulates coherently over many steps
    const Eigen::MatrixXd& raw = solver.eigenvectors();
    const Eigen::Index d = raw.cols();
    const Eigen::MatrixXd q =
        raw * (1.5 * Eigen::MatrixXd::Identity(d, d) - 0.5 * raw.transpose() * raw);
    Eigen::VectorXcd phases(solver.eigenvalues().size());
    for (Eigen::Index i = 0; i < phases.size(); ++i) {
      phases[i] = std::polar(1.0, -solver.eigenvalues()[i] * dt);
    }
    Eigen::MatrixXcd rotated = q.transpose().cast<Complex>() * blocks[k];
    rotated = phases.asDiagonal() * rotated;
    blocks[k].noalias() = q.cast<Complex>() * rotated;
  }
}

StateVector ChainPropagator::evolve(
    const std::function<double(double)>& coupling, double horizon, long steps,
    const StateVector& initial) const {
  require_normalized(initial);
  if (initial.size() != static_cast<Eigen::Index>(config_.dim())) {
    throw std::invalid_argument("evolve: state dimension mismatch");
  }
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");

  // weight below this is roundoff from the endpoint diagonalization
  constexpr double kEmptySector = 1e-15;
  std::vector<Eigen::MatrixXcd> blocks(sectors_.size());
  for (std::size_t k = 0; k < sectors_.size(); ++k) {
    Eigen::VectorXcd c = sectors_[k].basis.transpose().cast<Complex>() * initial;
    if (c.norm() > kEmptySector) blocks[k] = c;
  }

  const double dt = horizon / static_cast<double>(steps);
  for (long m = 0; m < steps; ++m) {
    apply_step(coupling((static_cast<double>(m) + 0.5) * dt), dt, blocks);
  }

  StateVector out = StateVector::Zero(initial.size());
  for (std::size_t k = 0; k < sectors_.size(); ++k) {
    if (blocks[k].size() == 0) continue;
    out += sectors_[k].basis.cast<Complex>() * blocks[k];
  }
  return out;
}

OperatorMatrix ChainPropagator::unitary(
    const std::function<double(double)>& coupling, double horizon,
    long steps) const {
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  std::vector<Eigen::MatrixXcd> blocks(sectors_.size());
  for (std::size_t k = 0; k < sectors_.size(); ++k) {
    const auto n = sectors_[k].basis.cols();
    blocks[k] = Eigen::MatrixXcd::Identity(n, n);
  }
  const double dt = horizon / static_cast<double>(steps);
  for (long m = 0; m < steps; ++m) {
    apply_step(coupling((static_cast<double>(m) + 0.5) * dt), dt, blocks);
  }
  const auto dim = static_cast<Eigen::Index>(config_.dim());
  OperatorMatrix u = OperatorMatrix::Zero(dim, dim);
  for (std::size_t k = 0; k < sectors_.size(); ++k) {
    const Eigen::MatrixXcd p = sectors_[k].basis.cast<Complex>();
    u += p * blocks[k] * p.transpose();
  }
  return u;
}

OperatorMatrix ChainPropagator::step_operator(double g, double dt) const {
  return unitary([g](double) { return g; }, dt, 1);
}

ControlProblem::ControlProblem(const ChainConfig& config)
    : propagator_(config), endpoints_(endpoint_states(config)) {}

StateVector ControlProblem::propagate(const ControlParams& p,
                                      const EvolutionSpec& spec,
                                      const StateVector& initial) const {
  p.validate();
  const long steps = resolve_steps(config(), p, spec);
  return propagator_.evolve([&p](double t) { return control_value(p, t); },
                            p.horizon, steps, initial);
}

FidelityReport ControlProblem::evaluate(const ControlParams& p,
                                        const EvolutionSpec& spec) const {
  p.validate();
  FidelityReport r;
  r.steps = resolve_steps(config(), p, spec);
  const StateVector psi =
      propagator_.evolve([&p](double t) { return control_value(p, t); },
                         p.horizon, r.steps, endpoints_.initial);
  const Complex overlap = endpoints_.final.dot(psi);
  r.fidelity = std::min(1.0, std::abs(overlap));
  r.infidelity = 1.0 - r.fidelity;
  r.overlap_phase = std::arg(overlap);
  return r;
}

StateVector propagate(const ChainConfig& config, const ControlParams& p,
                      const EvolutionSpec& spec, const StateVector& initial) {
  p.validate();
  const long steps = resolve_steps(config, p, spec);
  return ChainPropagator(config).evolve(
      [&p](double t) { return control_value(p, t); }, p.horizon, steps,
      initial);
}

FidelityReport infidelity(const ChainConfig& config, const ControlParams& p,
                          const EvolutionSpec& spec) {
  return ControlProblem(config).evaluate(p, spec);
}

ConvergenceReport convergence_check(
    const ControlProblem& problem,
    const std::function<double(double)>& coupling, double horizon, long steps,
    double tolerance) {
  const auto& ends = problem.endpoints();
  auto r_at = [&](long m) {
    const StateVector psi =
        problem.propagator().evolve(coupling, horizon, m, ends.initial);
    return 1.0 - std::min(1.0, std::abs(ends.final.dot(psi)));
  };
  ConvergenceReport r;
  r.base_steps = steps;
  r.r_m = r_at(steps);
  r.r_2m = r_at(2 * steps);
  r.r_4m = r_at(4 * steps);
  r.extrapolated = r.r_4m + (r.r_4m - r.r_2m) / 3.0;

  const double d1 = r.r_m - r.r_2m;
  const double d2 = r.r_2m - r.r_4m;
  // differences at roundoff level count as exact; rounding accumulates
  // roughly linearly with the number of steps
  const double noise = 1e-13 + 2e-15 * static_cast<double>(4 * steps);
  if (std::abs(d1) < noise && std::abs(d2) < noise) {
    r.ratio = 0.0;
    r.converged = true;
    return r;
  }
  r.ratio = std::abs(d2) > 0.0 ? d1 / d2 : INFINITY;
  r.converged = std::abs(d2) < std::abs(d1) / 3.0 + noise &&
                std::abs(r.r_4m - r.extrapolated) < tolerance;
  return r;
}

ConvergenceReport convergence_check(const ControlProblem& problem,
                                    const ControlParams& p,
                                    const EvolutionSpec& spec) {
  p.validate();
  const long steps = resolve_steps(problem.config(), p, spec);
  if (4 * steps > std::min(spec.max_steps, kMaxSteps)) {
    throw ConvergenceError("convergence_check: 4M exceeds the step cap");
  }
  return convergence_check(
      problem, [&p](double t) { return control_value(p, t); }, p.horizon,
      steps, spec.tolerance);
}

ConvergenceReport refine_until_converged(const ControlProblem& problem,
                                         const ControlParams& p,
                                         const EvolutionSpec& spec) {
  p.validate();
  const long cap = std::min(spec.max_steps, kMaxSteps);
  long steps = resolve_steps(problem.config(), p, spec);
  if (4 * steps > cap) {
    throw ConvergenceError("refine_until_converged: 4M exceeds the step cap");
  }
  auto coupling = [&p](double t) { return control_value(p, t); };
  ConvergenceReport r;
  while (4 * steps <= cap) {
    r = convergence_check(problem, coupling, p.horizon, steps, spec.tolerance);
    if (r.converged) return r;
    steps *= 2;
  }
  return r;
}

}  // namespace qlc
