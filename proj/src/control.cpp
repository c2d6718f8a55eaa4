#include "qlc/control.hpp"

#include <algorithm>
#include <sstream>

namespace qlc {

namespace {

constexpr double kPi = std::numbers::pi;

void require_in_horizon(double t, double horizon, const char* what) {
  if (!(t >= 0.0 && t <= horizon)) {
    std::ostringstream msg;
    msg << what << ": t=" << t << " outside [0, " << horizon << "]";
    throw std::out_of_range(msg.str());
  }
}

}  // namespace

void ControlParams::validate() const {
  if (amplitudes.empty()) {
    throw std::invalid_argument("ControlParams: need at least one harmonic");
  }
  for (double a : amplitudes) {
    if (!std::isfinite(a)) {
      throw std::invalid_argument("ControlParams: non-finite amplitude");
    }
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("ControlParams: horizon must be positive");
  }
}

double ControlParams::amplitude_sum() const {
  double s = 0.0;
  for (double a : amplitudes) s += std::abs(a);
  return s;
}

double PulsedControl::value(double t) const {
  require_in_horizon(t, horizon, "PulsedControl::value");
  return t < 0.5 * horizon ? first : second;
}

double PulsedControl::antiderivative(double t) const {
  require_in_horizon(t, horizon, "PulsedControl::antiderivative");
  const double half = 0.5 * horizon;
  if (t <= half) return first * t;
  return first * half + second * (t - half);
}

double control_value(const ControlParams& p, double t) {
  require_in_horizon(t, p.horizon, "control_value");
  if (t == p.horizon) return 1.0;
  double g = t / p.horizon;
  const double phase = kPi * t / p.horizon;
  for (std::size_t k = 0; k < p.amplitudes.size(); ++k) {
    g += p.amplitudes[k] * std::sin((k + 1) * phase);
  }
  return g;
}

double control_derivative(const ControlParams& p, double t) {
  require_in_horizon(t, p.horizon, "control_derivative");
  const double phase = kPi * t / p.horizon;
  double dg = 1.0;
  for (std::size_t k = 0; k < p.amplitudes.size(); ++k) {
    const double kk = static_cast<double>(k + 1);
    dg += p.amplitudes[k] * kk * kPi * std::cos(kk * phase);
  }
  return dg / p.horizon;
}

double control_antiderivative(const ControlParams& p, double t) {
  require_in_horizon(t, p.horizon, "control_antiderivative");
  const double T = p.horizon;
  double G = t * t / (2.0 * T);
  const double phase = kPi * t / T;
  for (std::size_t k = 0; k < p.amplitudes.size(); ++k) {
    const double kk = static_cast<double>(k + 1);
    // 1 - cos(x) = 2 sin^2(x/2) avoids cancellation at small t
    const double s = std::sin(0.5 * kk * phase);
    G += p.amplitudes[k] * T / (kk * kPi) * 2.0 * s * s;
  }
  return G;
}

BetaGamma beta_gamma(const std::function<double(double)>& antiderivative,
                     double horizon, int nodes) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("beta_gamma: horizon must be positive");
  }
  if (nodes < 3 || nodes % 2 == 0) {
    throw std::invalid_argument("beta_gamma: nodes must be odd and >= 3");
  }
  auto checked = [](double v) {
    if (!std::isfinite(v)) {
      throw std::domain_error("beta_gamma: non-finite integrand");
    }
    return v;
  };
  BetaGamma out;
  out.nodes = nodes;
  out.beta = composite_simpson(
      [&](double t) {
        return checked(std::cos(2.0 * antiderivative(std::min(t, horizon))));
      },
      0.0, horizon, nodes);
  out.gamma = composite_simpson(
      [&](double t) {
        return checked(std::sin(2.0 * antiderivative(std::min(t, horizon))));
      },
      0.0, horizon, nodes);
  return out;
}

int quadrature_node_floor(const ControlParams& p) {
  const double oscillations = (1.0 + p.amplitude_sum()) * p.horizon / kPi;
  const double wanted = 40.0 * std::ceil(oscillations) + 1.0;
  if (wanted > 1e8) {
    throw std::domain_error("quadrature_node_floor: control too strong");
  }
  int nodes = std::max(2001, static_cast<int>(wanted));
  if (nodes % 2 == 0) ++nodes;
  return nodes;
}

BetaGamma beta_gamma(const ControlParams& p, int nodes) {
  p.validate();
  nodes = std::max(nodes, quadrature_node_floor(p));
  if (nodes % 2 == 0) ++nodes;
  return beta_gamma([&p](double t) { return control_antiderivative(p, t); },
                    p.horizon, nodes);
}

GammaMaximum maximize_gamma(double horizon, double a1) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("maximize_gamma: horizon must be positive");
  }
  ControlParams p{{a1, 0.0}, horizon};
  auto gamma_at = [&](double a2) {
    p.amplitudes[1] = a2;
    return beta_gamma(p).gamma;
  };

  constexpr int kScan = 400;
  const double hi = 10.0 / horizon;
  const double step = hi / kScan;
  int best = 0;
  double best_val = gamma_at(0.0);
  for (int i = 1; i <= kScan; ++i) {
    const double v = gamma_at(i * step);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }

  // golden-section refinement on the bracketing cells
  double lo = std::max(0.0, (best - 1) * step);
  double up = std::min(hi, (best + 1) * step);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = up - inv_phi * (up - lo);
  double x2 = lo + inv_phi * (up - lo);
  double f1 = gamma_at(x1);
  double f2 = gamma_at(x2);
  while (up - lo > 1e-10 * std::max(1.0, up)) {
    if (f1 > f2) {
      up = x2;
      x2 = x1;
      f2 = f1;
      x1 = up - inv_phi * (up - lo);
      f1 = gamma_at(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (up - lo);
      f2 = gamma_at(x2);
    }
  }
  const double a2 = 0.5 * (lo + up);
  const double g = gamma_at(a2);
  if (g < best_val) return {best * step, best_val};
  return {a2, g};
}

ConstraintReport check_derivative_constraints(const ControlParams& p) {
  double start = 1.0;
  double end = 1.0;
  for (std::size_t k = 0; k < p.amplitudes.size(); ++k) {
    const double kk = static_cast<double>(k + 1);
    start += kPi * kk * p.amplitudes[k];
    end += kPi * kk * p.amplitudes[k] * ((k + 1) % 2 ? -1.0 : 1.0);
  }
  ConstraintReport r;
  r.lower_margin = start / kPi;
  r.upper_margin = end / kPi;
  r.satisfied = r.lower_margin > 0.0 && r.upper_margin > 0.0;
  return r;
}

}  // namespace qlc
