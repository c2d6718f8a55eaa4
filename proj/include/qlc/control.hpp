#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace qlc {

/// Harmonic control profile on [0, T]:
///
///   g(a, t) = t/T + sum_k a_k sin(k pi t / T),   k = 1..K
///
/// so that g(0) = 0 and g(T) = 1 for every amplitude vector.
struct ControlParams {
  std::vector<double> amplitudes{0.0, 0.0};
  double horizon = 1.0;  // T, in units of 1/J

  void validate() const;
  double amplitude_sum() const;  // sum |a_k|
};

/// Two-level pulse: g1 on [0, T/2), g2 on [T/2, T].
struct PulsedControl {
  double first = 0.0;
  double second = 0.0;
  double horizon = 1.0;

  double value(double t) const;
  double antiderivative(double t) const;
};

double control_value(const ControlParams& p, double t);
double control_derivative(const ControlParams& p, double t);

/// G(t) = int_0^t g(a, s) ds in closed form.
double control_antiderivative(const ControlParams& p, double t);

/// Composite Simpson rule on `nodes` equally spaced points (odd, >= 3).
template <class F>
double composite_simpson(F&& f, double a, double b, int nodes) {
  if (nodes < 3 || nodes % 2 == 0) {
    throw std::invalid_argument("composite_simpson: nodes must be odd and >= 3");
  }
  const int intervals = nodes - 1;
  const double h = (b - a) / intervals;
  double odd = 0.0;
  double even = 0.0;
  for (int i = 1; i < intervals; ++i) {
    const double y = f(a + i * h);
    if (i % 2) odd += y;
    else even += y;
  }
  return h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even);
}

struct BetaGamma {
  double beta = 0.0;   // int_0^T cos 2G
  double gamma = 0.0;  // int_0^T sin 2G
  int nodes = 0;
};

/// Simpson estimates of the cos/sin integrals of 2G over [0, T]. Throws
/// std::domain_error on a non-finite integrand.
BetaGamma beta_gamma(const std::function<double(double)>& antiderivative,
                     double horizon, int nodes);

/// Smallest odd node count giving >= 20 nodes per oscillation of sin 2G.
int quadrature_node_floor(const ControlParams& p);

/// beta_gamma for the harmonic profile, with `nodes` raised to the floor.
BetaGamma beta_gamma(const ControlParams& p, int nodes = 2001);

struct GammaMaximum {
  double a2 = 0.0;
  double gamma = 0.0;
};

/// Maximizes gamma_T over a2 in [0, 10/T] with a1 held fixed (K = 2).
GammaMaximum maximize_gamma(double horizon,
                            double a1 = -std::numbers::pi / 4.0);

/// Endpoint slopes of g. The margins are T g'(0) / pi and T g'(T) / pi;
/// for K = 2 they read a1 + (1/pi + 2 a2) and (1/pi + 2 a2) - a1.
struct ConstraintReport {
  bool satisfied = false;
  double lower_margin = 0.0;
  double upper_margin = 0.0;
};

ConstraintReport check_derivative_constraints(const ControlParams& p);

}  // namespace qlc
