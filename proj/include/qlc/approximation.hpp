#pragma once

#include <vector>

#include "qlc/control.hpp"
#include "qlc/propagation.hpp"
#include "qlc/spin_model.hpp"

namespace qlc {

/// Transition matrix elements between the endpoint ground states.
struct EndpointOverlaps {
  double f0 = 0.0;  // <phi_f|phi_i>, non-negative by the sign convention
  Complex fz;       // <phi_f|Z_1 + Z_N|phi_i>
  Complex fxy;      // <phi_f|X_1 Y_N + Y_1 X_N|phi_i>
};

EndpointOverlaps endpoint_overlaps(const ChainConfig& config);
EndpointOverlaps endpoint_overlaps(const ChainConfig& config,
                                   const EndpointStates& states);

/// Short-time fidelity gain under a weak control:
///   R_0 - R_T ~ |f_0| alpha(0) T^2,  alpha(0) = (eps_i - eps_f)^2 / 8.
struct QuadraticLaw {
  double alpha0 = 0.0;
  double f0 = 0.0;
  double r0 = 0.0;  // 1 - |f_0|

  double coefficient() const { return std::abs(f0) * alpha0; }
  double predict(double horizon) const {
    return r0 - coefficient() * horizon * horizon;
  }
};

QuadraticLaw quadratic_law(const ChainConfig& config);

/// The gamma-optimal gain R_0 - R_T = |f_0| B K_gamma F_2 T. F_1 multiplies
/// beta_T - T and vanishes for real endpoint states.
struct LinearLawCoefficients {
  double f0 = 0.0;
  double fz = 0.0;
  double fxy_imag = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
  double k_gamma = 0.0;
  double slope = 0.0;
};

/// Horizon at which K_gamma = gamma_T(a_opt) / T is measured.
inline constexpr double kGammaReferenceHorizon = 0.005;

LinearLawCoefficients linear_law_coefficients(const ChainConfig& config);

struct LinearLawPoint {
  double horizon = 0.0;
  double predicted_infidelity = 0.0;  // R_0 - slope T
};

struct LinearLaw {
  LinearLawCoefficients coefficients;
  double r0 = 0.0;
  std::vector<LinearLawPoint> predictions;
};

/// Throws std::invalid_argument for T outside (0, 0.3].
LinearLaw linear_law(const ChainConfig& config,
                     const std::vector<double>& horizons);

/// First-order interaction-picture estimate of <phi_f|U(T)|phi_i>:
///
///   <phi_f| [1 - i B (Z_1+Z_N)(beta_T - T) - i B (Y_1 X_N + X_1 Y_N) gamma_T]
///           exp(-i H0 T) |phi_i>
///
/// Valid only on the G(T) = 0 branch; throws std::invalid_argument when
/// |G(T)| > 1e-12.
Complex interaction_picture_amplitude(const ChainConfig& config,
                                      const ControlParams& p);
Complex interaction_picture_amplitude(const ChainConfig& config,
                                      const ControlParams& p,
                                      const StateVector& initial,
                                      const StateVector& final);

/// Closed form of int_0^T exp(iVG) H0 exp(-iVG) dt:
///   (H0 - B(Z_1+Z_N)) T + B(Z_1+Z_N) beta_T + B(Y_1 X_N + X_1 Y_N) gamma_T
/// with beta/gamma taken over 2 J G(t).
OperatorMatrix rotated_static_integral(const ChainConfig& config,
                                       const ControlParams& p);

}  // namespace qlc
