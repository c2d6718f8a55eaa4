#include <doctest.h>

#include "approx.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "qlc/control.hpp"

using namespace qlc;
using std::numbers::pi;

namespace {

ControlParams random_params(std::mt19937& rng, int k, double horizon) {
  std::uniform_real_distribution<double> amp(-5.0, 5.0);
  ControlParams p;
  p.amplitudes.resize(static_cast<std::size_t>(k));
  for (double& a : p.amplitudes) a = amp(rng);
  p.horizon = horizon;
  return p;
}

// Gauss-Legendre 5 point on many panels; an integrator unrelated to Simpson
double gauss_integral(const std::function<double(double)>& f, double a, double b, int panels) {
  static const double x[] = {0.0, -0.5384693101056831, 0.5384693101056831,
                             -0.9061798459386640, 0.9061798459386640};
  static const double w[] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                             0.2369268850561891, 0.2369268850561891};
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (int i = 0; i < 5; ++i) total += w[i] * f(mid + 0.5 * h * x[i]) * 0.5 * h;
  }
  return total;
}

}  // namespace

TEST_CASE("control boundary values") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const ControlParams p = random_params(rng, 1 + trial % 4, 0.01 + trial * 0.1);
    CHECK(control_value(p, 0.0) == 0.0);
    CHECK(control_value(p, p.horizon) == 1.0);
  }
  CHECK(control_value(ControlParams{{0.0, 0.0}, 2.0}, 1.0) == rel(0.5));
  CHECK(control_value(ControlParams{{-pi / 4, 5.0}, 3.0}, 1.5) ==
        rel(0.5 - pi / 4).epsilon(1e-14));
}

TEST_CASE("control rejects times outside the horizon") {
  const ControlParams p{{0.1, 0.2}, 1.0};
  CHECK_THROWS_AS(control_value(p, -1e-9), std::out_of_range);
  CHECK_THROWS_AS(control_value(p, 1.0 + 1e-9), std::out_of_range);
  CHECK_THROWS_AS(control_antiderivative(p, 2.0), std::out_of_range);
  CHECK_THROWS_AS((ControlParams{{}, 1.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((ControlParams{{1.0}, 0.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((ControlParams{{INFINITY}, 1.0}).validate(), std::invalid_argument);
}

TEST_CASE("antiderivative closed form") {
  CHECK(control_antiderivative(ControlParams{{0.0, 0.0}, 0.8}, 0.8) == rel(0.4));
  for (double a2 : {0.0, 3.0, 648.3}) {
    const ControlParams p{{-pi / 4, a2}, 0.005};
    CHECK(std::abs(control_antiderivative(p, p.horizon)) < 1e-15);
  }
  const double t = 0.7;
  CHECK(control_antiderivative(ControlParams{{1.0, 2.0}, t}, t) ==
        rel(t * (0.5 + 2.0 / pi)).epsilon(1e-14));
}

TEST_CASE("antiderivative matches quadrature of the control") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const ControlParams p = random_params(rng, 1 + trial % 3, 0.05 + 2.0 * unit(rng));
    const double t = p.horizon * unit(rng);
    const double quad =
        gauss_integral([&](double s) { return control_value(p, s); }, 0.0, t, 200);
    CHECK(std::abs(control_antiderivative(p, t) - quad) < 1e-10);
  }
}

TEST_CASE("derivative is consistent with the control") {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const ControlParams p = random_params(rng, 3, 1.3);
    const double t = 0.2 + 0.05 * trial;
    const double h = 1e-6;
    const double fd = (control_value(p, t + h) - control_value(p, t - h)) / (2 * h);
    CHECK(control_derivative(p, t) == rel(fd).epsilon(1e-7));
  }
}

TEST_CASE("G(T) does not depend on even harmonics") {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    ControlParams p = random_params(rng, 4, 0.3);
    const double before = control_antiderivative(p, p.horizon);
    p.amplitudes[1] += 17.0;
    p.amplitudes[3] -= 3.0;
    CHECK(control_antiderivative(p, p.horizon) == rel(before).epsilon(1e-12));
  }
}

TEST_CASE("beta and gamma for the linear ramp") {
  const double T = 0.01;
  // G = t^2 / 2T, so beta = T int cos(T u^2) du and gamma = T int sin(T u^2) du
  const BetaGamma bg = beta_gamma(ControlParams{{0.0, 0.0}, T});
  CHECK(std::abs(bg.beta - T * (1.0 - T * T / 10.0 + std::pow(T, 4) / 216.0)) < 1e-13);
  CHECK(std::abs(bg.gamma - T * (T / 3.0 - std::pow(T, 3) / 42.0)) < 1e-13);
  CHECK(bg.nodes >= 2001);
  CHECK(bg.nodes % 2 == 1);
}

TEST_CASE("gamma of a pulsed control half") {
  // sin(2G) with G = g1 t on [0, T/2]: closed form (T/2)(g1 T)^-1 (1 - cos(g1 T))
  for (double g1 : {0.3, 2.0, 40.0}) {
    const double T = 0.7;
    const PulsedControl pulse{g1, -1.0, T};
    const BetaGamma half = beta_gamma(
        [&](double t) { return pulse.antiderivative(t); }, T / 2, 4001);
    const double expected = (T / 2) / (g1 * T) * (1.0 - std::cos(g1 * T));
    CHECK(std::abs(half.gamma - expected) < 1e-8);
  }
  const PulsedControl pulse{0.2, 0.9, 2.0};
  CHECK(pulse.value(0.5) == 0.2);
  CHECK(pulse.value(1.0) == 0.9);
  CHECK(pulse.antiderivative(2.0) == rel(0.2 + 0.9));
}

TEST_CASE("beta and gamma bounds and sign symmetry") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const ControlParams p = random_params(rng, 2, 0.1 + 0.1 * trial);
    const BetaGamma bg = beta_gamma(p);
    CHECK(std::abs(bg.beta) <= p.horizon + 1e-12);
    CHECK(std::abs(bg.gamma) <= p.horizon + 1e-12);
    const BetaGamma flipped = beta_gamma(
        [&](double t) { return -control_antiderivative(p, t); }, p.horizon, bg.nodes);
    CHECK(flipped.gamma == rel(-bg.gamma).epsilon(1e-12));
    CHECK(flipped.beta == rel(bg.beta).epsilon(1e-12));
  }
}

TEST_CASE("quadrature node floor") {
  CHECK(quadrature_node_floor(ControlParams{{0.0, 0.0}, 1.0}) == 2001);
  const ControlParams strong{{0.0, 500.0}, 20.0};
  const int n = quadrature_node_floor(strong);
  CHECK(n == 40 * static_cast<int>(std::ceil(501.0 * 20.0 / pi)) + 1);
  CHECK(beta_gamma(strong).nodes == n);
  CHECK_THROWS_AS(beta_gamma([](double) { return NAN; }, 1.0, 11), std::domain_error);
  CHECK_THROWS_AS(beta_gamma([](double t) { return t; }, 1.0, 10), std::invalid_argument);
}

TEST_CASE("gamma at the tabulated optimum") {
  const BetaGamma bg = beta_gamma(ControlParams{{-pi / 4, 648.3}, 0.005});
  CHECK(bg.gamma == rel(0.00322).epsilon(0.005));
}

TEST_CASE("maximize_gamma") {
  const GammaMaximum small = maximize_gamma(0.005);
  CHECK(small.a2 == rel(648.3).epsilon(0.01));
  CHECK(small.gamma / 0.005 == rel(0.644).epsilon(0.005));
  const GammaMaximum large = maximize_gamma(0.1);
  CHECK(large.a2 == rel(32.84).epsilon(0.01));
  CHECK(large.gamma / 0.1 == rel(0.642).epsilon(0.005));

  const double product = small.a2 * 0.005;
  for (double T : {0.005, 0.01, 0.02, 0.05, 0.1}) {
    const GammaMaximum m = maximize_gamma(T);
    CHECK(m.a2 * T == rel(product).epsilon(0.015));
    // scan neighbours: no better a2 nearby
    for (double d : {-0.01, 0.01}) {
      const double a2 = m.a2 * (1.0 + d);
      CHECK(beta_gamma(ControlParams{{-pi / 4, a2}, T}).gamma <= m.gamma * (1.0 + 1e-12));
    }
  }
  CHECK_THROWS_AS(maximize_gamma(0.0), std::invalid_argument);
}

TEST_CASE("derivative constraints") {
  const ConstraintReport zero = check_derivative_constraints(ControlParams{{0.0, 0.0}, 1.0});
  CHECK(zero.satisfied);
  CHECK(zero.lower_margin == rel(1.0 / pi));
  CHECK(zero.upper_margin == rel(1.0 / pi));
  CHECK_FALSE(check_derivative_constraints(ControlParams{{1.0, 0.0}, 1.0}).satisfied);
  CHECK(check_derivative_constraints(ControlParams{{-0.9, 646.8}, 0.005}).satisfied);

  // K=2 reduces to -(1/pi + 2 a2) < a1 < 1/pi + 2 a2
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> amp(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double a1 = amp(rng);
    const double a2 = amp(rng);
    const double bound = 1.0 / pi + 2.0 * a2;
    const bool expected = -bound < a1 && a1 < bound;
    CHECK(check_derivative_constraints(ControlParams{{a1, a2}, 0.4}).satisfied == expected);
  }
}
