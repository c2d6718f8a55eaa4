#include "qlc/approximation.hpp"

#include <sstream>

namespace qlc {

namespace {

OperatorMatrix end_z(const ChainConfig& c) {
  const PauliFactor z1[] = {{1, PauliAxis::Z}};
  const PauliFactor zn[] = {{c.n_spins, PauliAxis::Z}};
  return pauli_string(c, z1) + pauli_string(c, zn);
}

OperatorMatrix end_xy(const ChainConfig& c) {
  const PauliFactor xy[] = {{1, PauliAxis::X}, {c.n_spins, PauliAxis::Y}};
  const PauliFactor yx[] = {{1, PauliAxis::Y}, {c.n_spins, PauliAxis::X}};
  return pauli_string(c, xy) + pauli_string(c, yx);
}

// beta/gamma for the rotation angle J G(t) actually generated by V = J X_1 X_N.
BetaGamma scaled_beta_gamma(const ChainConfig& c, const ControlParams& p) {
  const double j = c.coupling;
  const int nodes = quadrature_node_floor(
      ControlParams{{std::abs(j) * (1.0 + p.amplitude_sum())}, p.horizon});
  return beta_gamma(
      [&](double t) { return j * control_antiderivative(p, t); }, p.horizon,
      std::max(nodes, quadrature_node_floor(p)));
}

}  // namespace

EndpointOverlaps endpoint_overlaps(const ChainConfig& config,
                                   const EndpointStates& s) {
  EndpointOverlaps out;
  out.f0 = s.overlap;
  out.fz = s.final.dot(end_z(config) * s.initial);
  out.fxy = s.final.dot(end_xy(config) * s.initial);
  return out;
}

EndpointOverlaps endpoint_overlaps(const ChainConfig& config) {
  return endpoint_overlaps(config, endpoint_states(config));
}

QuadraticLaw quadratic_law(const ChainConfig& config) {
  const EndpointStates s = endpoint_states(config);
  const double de = s.initial_energy - s.final_energy;
  QuadraticLaw law;
  law.alpha0 = de * de / 8.0;
  law.f0 = s.overlap;
  law.r0 = 1.0 - std::abs(s.overlap);
  return law;
}

LinearLawCoefficients linear_law_coefficients(const ChainConfig& config) {
  const EndpointOverlaps ov = endpoint_overlaps(config);
  const double norm2 = ov.f0 * ov.f0;
  if (norm2 == 0.0) {
    throw std::domain_error("linear law undefined for orthogonal endpoints");
  }
  LinearLawCoefficients c;
  c.f0 = ov.f0;
  c.fz = ov.fz.real();
  c.fxy_imag = ov.fxy.imag();
  c.f1 = (ov.fz * ov.f0).imag() / norm2;
  c.f2 = (ov.fxy * ov.f0).imag() / norm2;
  c.k_gamma = maximize_gamma(kGammaReferenceHorizon).gamma / kGammaReferenceHorizon;
  c.slope = std::abs(c.f0) * config.field * c.k_gamma * c.f2;
  return c;
}

LinearLaw linear_law(const ChainConfig& config,
                     const std::vector<double>& horizons) {
  for (double t : horizons) {
    if (!(t > 0.0 && t <= 0.3)) {
      std::ostringstream msg;
      msg << "linear_law: T=" << t << " outside the ultrashort range (0, 0.3]";
      throw std::invalid_argument(msg.str());
    }
  }
  LinearLaw law;
  law.coefficients = linear_law_coefficients(config);
  law.r0 = 1.0 - std::abs(law.coefficients.f0);
  for (double t : horizons) {
    law.predictions.push_back({t, law.r0 - law.coefficients.slope * t});
  }
  return law;
}

Complex interaction_picture_amplitude(const ChainConfig& config,
                                      const ControlParams& p,
                                      const StateVector& initial,
                                      const StateVector& final) {
  p.validate();
  const double g_end = control_antiderivative(p, p.horizon);
  if (std::abs(g_end) > 1e-12) {
    std::ostringstream msg;
    msg << "interaction_picture_amplitude: G(T)=" << g_end << " is not zero";
    throw std::invalid_argument(msg.str());
  }
  const BetaGamma bg = scaled_beta_gamma(config, p);
  const double b = config.field;
  const double t = p.horizon;
  const auto dim = static_cast<Eigen::Index>(config.dim());
  const Complex i{0.0, 1.0};

  const OperatorMatrix bracket = OperatorMatrix::Identity(dim, dim) -
                                 i * b * (bg.beta - t) * end_z(config) -
                                 i * b * bg.gamma * end_xy(config);
  const StateVector free = step_operator(static_hamiltonian(config), t) * initial;
  return final.dot(bracket * free);
}

Complex interaction_picture_amplitude(const ChainConfig& config,
                                      const ControlParams& p) {
  const EndpointStates s = endpoint_states(config);
  return interaction_picture_amplitude(config, p, s.initial, s.final);
}

OperatorMatrix rotated_static_integral(const ChainConfig& config,
                                       const ControlParams& p) {
  p.validate();
  const BetaGamma bg = scaled_beta_gamma(config, p);
  const OperatorMatrix z = end_z(config);
  const double b = config.field;
  return (static_hamiltonian(config) - b * z) * p.horizon + b * z * bg.beta +
         b * end_xy(config) * bg.gamma;
}

}  // namespace qlc
