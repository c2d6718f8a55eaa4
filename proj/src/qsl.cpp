#include "qlc/qsl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qlc {

namespace {

// 1 - |overlap| below this is treated as an unmoved state
constexpr double kStationaryTolerance = 1e-13;

QslReport finish(double horizon, double overlap_modulus, double energy) {
  QslReport r;
  r.horizon = horizon;
  const double m = std::min(1.0, overlap_modulus);
  r.bures_angle = 1.0 - m < kStationaryTolerance ? 0.0 : std::acos(m);
  r.energy_integral = energy;
  if (r.bures_angle == 0.0) {
    r.status = QslStatus::kStationary;
    r.t_qsl = 0.0;
    r.ratio = std::numeric_limits<double>::quiet_NaN();
  } else if (energy == 0.0) {
    r.status = QslStatus::kZeroEnergy;
    r.t_qsl = std::numeric_limits<double>::infinity();
    r.ratio = 0.0;
  } else {
    r.t_qsl = horizon * r.bures_angle / energy;
    r.ratio = energy / r.bures_angle;
  }
  return r;
}

}  // namespace

double energy_integral(const ControlProblem& problem, const ControlParams& p,
                       int nodes) {
  p.validate();
  if (nodes < 2) throw std::invalid_argument("energy_integral: nodes must be >= 2");
  const auto& phi = problem.endpoints().initial;
  const ChainConfig& c = problem.config();
  const double e0 = phi.dot(static_hamiltonian(c) * phi).real();
  const double ev = phi.dot(control_operator(c) * phi).real();

  auto energy = [&](double t) { return e0 + ev * control_value(p, t); };
  auto primitive = [&](double t) {
    return e0 * t + ev * control_antiderivative(p, t);
  };

  const double T = p.horizon;
  std::vector<double> cuts{0.0};
  double prev_t = 0.0;
  double prev_e = energy(0.0);
  for (int k = 1; k < nodes; ++k) {
    const double t = k == nodes - 1 ? T : T * k / (nodes - 1);
    const double e = energy(t);
    if ((prev_e < 0.0 && e > 0.0) || (prev_e > 0.0 && e < 0.0)) {
      double lo = prev_t;
      double hi = t;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * T; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double em = energy(mid);
        if ((em < 0.0) == (prev_e < 0.0)) lo = mid;
        else hi = mid;
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    prev_t = t;
    prev_e = e;
  }
  cuts.push_back(T);

  double total = 0.0;
  for (std::size_t k = 1; k < cuts.size(); ++k) {
    total += std::abs(primitive(cuts[k]) - primitive(cuts[k - 1]));
  }
  return total;
}

QslReport qsl_ratio(const ControlProblem& problem, const ControlParams& p,
                    const EvolutionSpec& spec) {
  const auto& phi = problem.endpoints().initial;
  const StateVector psi = problem.propagate(p, spec, phi);
  return finish(p.horizon, std::abs(phi.dot(psi)), energy_integral(problem, p));
}

QslReport qsl_ratio(const ChainConfig& config, const ControlParams& p,
                    const EvolutionSpec& spec) {
  return qsl_ratio(ControlProblem(config), p, spec);
}

double bures_angle_from_unitary(const ControlProblem& problem,
                                const ControlParams& p,
                                const EvolutionSpec& spec) {
  p.validate();
  const long steps = resolve_steps(problem.config(), p, spec);
  const OperatorMatrix u = problem.propagator().unitary(
      [&p](double t) { return control_value(p, t); }, p.horizon, steps);
  const auto& phi = problem.endpoints().initial;
  const double m = std::min(1.0, std::abs(phi.dot(u * phi)));
  return 1.0 - m < kStationaryTolerance ? 0.0 : std::acos(m);
}

QslReport qsl_ratio_general(
    const std::function<OperatorMatrix(double)>& hamiltonian, double horizon,
    long steps, const StateVector& initial) {
  if (steps < 1) throw std::invalid_argument("qsl_ratio_general: steps must be >= 1");
  const double dt = horizon / static_cast<double>(steps);
  double energy = 0.0;
  for (long m = 0; m < steps; ++m) {
    const double t = (static_cast<double>(m) + 0.5) * dt;
    energy += std::abs(initial.dot(hamiltonian(t) * initial).real()) * dt;
  }
  const StateVector psi = propagate_hamiltonian(hamiltonian, horizon, steps, initial);
  return finish(horizon, std::abs(initial.dot(psi)), energy);
}

}  // namespace qlc
