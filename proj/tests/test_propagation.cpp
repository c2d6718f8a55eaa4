#include <doctest.h>

#include "approx.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "qlc/propagation.hpp"

using namespace qlc;

namespace {

ChainConfig default_chain(double field = 0.9) { return ChainConfig{6, 1.0, field, 1e-8}; }

StateVector random_state(std::mt19937& rng, Eigen::Index dim) {
  std::normal_distribution<double> normal;
  StateVector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = Complex(normal(rng), normal(rng));
  return v / v.norm();
}

// exp(-i H T) from a dense diagonalization of the full matrix
StateVector exact_constant(const OperatorMatrix& h, double T, const StateVector& v) {
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> es(h);
  Eigen::VectorXcd phase(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < phase.size(); ++k) {
    phase[k] = std::polar(1.0, -es.eigenvalues()[k] * T);
  }
  return es.eigenvectors() * (phase.asDiagonal() * (es.eigenvectors().adjoint() * v));
}

double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y,
                     double* slope) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  *slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double r = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  return r * r;
}

}  // namespace

TEST_CASE("step floor") {
  const ChainConfig c = default_chain();
  const ControlParams p{{-0.9, 646.8}, 0.005};
  const double bound = 5.0 + 6 * 0.9 + (1.0 + 0.9 + 646.8);
  CHECK(hamiltonian_bound(c, p) == rel(bound));
  CHECK(required_steps(c, p) == static_cast<long>(std::ceil(20.0 * 0.005 * bound)));
  CHECK(resolve_steps(c, p, EvolutionSpec{1, 1e-8}) == required_steps(c, p));
  CHECK(resolve_steps(c, p, EvolutionSpec{5000, 1e-8}) == 5000);
  CHECK_THROWS_AS(resolve_steps(c, ControlParams{{0.0, 1e7}, 100.0}, {}), ConvergenceError);
}

TEST_CASE("constant coupling equals the exact exponential") {
  const ChainConfig c = default_chain();
  const ChainPropagator prop(c);
  std::mt19937 rng(1);
  for (double g : {0.0, 0.4, 1.0, -3.0}) {
    const StateVector v = random_state(rng, 64);
    const StateVector got = prop.evolve([g](double) { return g; }, 0.8, 7, v);
    const StateVector want = exact_constant(build_hamiltonian(c, g), 0.8, v);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("sector stepper agrees with the generic stepper") {
  const ChainConfig c = default_chain();
  const ControlParams p{{0.3, -1.7}, 0.9};
  std::mt19937 rng(2);
  const StateVector v = random_state(rng, 64);
  const StateVector fast = ChainPropagator(c).evolve(
      [&](double t) { return control_value(p, t); }, p.horizon, 60, v);
  const StateVector slow = propagate_hamiltonian(
      [&](double t) { return build_hamiltonian(c, control_value(p, t)); }, p.horizon, 60, v);
  CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("unitarity and norm preservation") {
  const ChainConfig c = default_chain();
  const ChainPropagator prop(c);
  const ControlParams p{{-0.9, 30.0}, 0.1};
  const OperatorMatrix u = prop.unitary([&](double t) { return control_value(p, t); }, p.horizon, 400);
  CHECK((u.adjoint() * u - OperatorMatrix::Identity(64, 64)).cwiseAbs().maxCoeff() < 1e-10);
  const OperatorMatrix s = prop.step_operator(0.7, 0.01);
  CHECK((s.adjoint() * s - OperatorMatrix::Identity(64, 64)).cwiseAbs().maxCoeff() < 1e-10);
  const OperatorMatrix generic = step_operator(build_hamiltonian(c, 0.7), 0.01);
  CHECK((s - generic).cwiseAbs().maxCoeff() < 1e-12);

  std::mt19937 rng(3);
  const StateVector v = random_state(rng, 64);
  const StateVector out = prop.evolve([](double t) { return std::sin(t); }, 10.0, 100000, v);
  CHECK(std::abs(out.norm() - 1.0) < 1e-10);
}

TEST_CASE("input validation") {
  const ControlProblem problem(default_chain());
  StateVector v = StateVector::Zero(64);
  v[0] = 2.0;
  CHECK_THROWS_AS(problem.propagate(ControlParams{{0.0, 0.0}, 1.0}, {}, v), std::invalid_argument);
  CHECK_THROWS_AS(problem.propagate(ControlParams{{0.0, 0.0}, 1.0}, {}, StateVector::Zero(8)),
                  std::invalid_argument);
  CHECK_THROWS_AS(problem.evaluate(ControlParams{{0.0, 0.0}, -1.0}, {}), std::invalid_argument);
}

TEST_CASE("time reversal returns the initial state") {
  // H is real, so U^-1 = conj(U_reversed)
  const ChainConfig c = default_chain();
  const ChainPropagator prop(c);
  const ControlParams p{{0.4, 2.5}, 1.3};
  std::mt19937 rng(4);
  const StateVector v = random_state(rng, 64);
  auto g = [&](double t) { return control_value(p, t); };
  auto reversed = [&](double t) { return control_value(p, p.horizon - t); };
  const StateVector forward = prop.evolve(g, p.horizon, 500, v);
  const StateVector back =
      prop.evolve(reversed, p.horizon, 500, StateVector(forward.conjugate())).conjugate();
  CHECK((back - v).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("sudden limit") {
  const ControlProblem problem(default_chain());
  const ControlParams p{{0.0, 0.0}, 1e-6};
  const auto& phi = problem.endpoints().initial;
  const StateVector out = problem.propagate(p, {}, phi);
  CHECK(std::abs(phi.dot(out)) > 1.0 - 1e-8);
  const FidelityReport r = problem.evaluate(p, {});
  CHECK(std::abs(r.infidelity - (1.0 - 0.9525)) < 1e-4);
  CHECK(r.infidelity == rel(problem.sudden_infidelity()).epsilon(1e-6));
  CHECK(r.fidelity + r.infidelity == rel(1.0));
}

TEST_CASE("quadratic short-time law") {
  // Second-order Dyson expansion for the ramp H0 + (t/T) V with V^2 = J^2:
  // |<phi_f|U|phi_i>| = |f0| (1 + (J^2 - D^2) T^2 / 24), D = eps_i - eps_f
  const ControlProblem problem(default_chain());
  const auto& e = problem.endpoints();
  const double d2 = std::pow(e.initial_energy - e.final_energy, 2);
  const double coefficient = e.overlap * (1.0 - d2) / 24.0;
  const double r0 = problem.sudden_infidelity();

  std::vector<double> x, y;
  for (double t = 2e-4; t <= 2e-3 + 1e-12; t += 2e-4) {
    x.push_back(t * t);
    y.push_back(r0 - problem.evaluate(ControlParams{{0.0, 0.0}, t}, {4000, 1e-8}).infidelity);
  }
  double slope = 0.0;
  CHECK(linear_fit_r2(x, y, &slope) > 0.999);
  CHECK(slope == rel(coefficient).epsilon(0.01));
  // the first-order estimate D^2 / 8 is off by several percent
  CHECK(std::abs(slope / (e.overlap * d2 / 8.0) - 1.0) > 0.05);
}

TEST_CASE("adiabatic limit") {
  const FidelityReport r = infidelity(default_chain(), ControlParams{{0.0, 0.0}, 20.0}, {});
  CHECK(r.infidelity < 0.01);
}

TEST_CASE("fidelity is invariant under B -> -B") {
  for (const ControlParams& p :
       {ControlParams{{0.0, 0.0}, 0.5}, ControlParams{{-0.9, 11.9}, 0.2},
        ControlParams{{1.3, -4.0, 0.7}, 1.1}}) {
    const double plus = infidelity(default_chain(0.9), p, {}).infidelity;
    const double minus = infidelity(default_chain(-0.9), p, {}).infidelity;
    CHECK(std::abs(plus - minus) < 1e-9);
  }
}

TEST_CASE("Richardson check") {
  const ControlProblem problem(default_chain());
  const ConvergenceReport ramp = convergence_check(problem, ControlParams{{0.0, 0.0}, 1.0}, {400, 1e-8});
  CHECK(ramp.base_steps == 400);
  CHECK(ramp.ratio >= 3.5);
  CHECK(ramp.ratio <= 4.5);

  const ConvergenceReport frozen =
      convergence_check(problem, [](double) { return 0.6; }, 1.0, 10, 1e-8);
  CHECK(std::abs(frozen.r_m - frozen.r_2m) < 1e-12);
  CHECK(std::abs(frozen.r_2m - frozen.r_4m) < 1e-12);
  CHECK(frozen.converged);

  const ControlParams opt{{-0.9, 646.8}, 0.005};
  const ConvergenceReport at_floor = convergence_check(problem, opt, {});
  CHECK(at_floor.base_steps == required_steps(problem.config(), opt));
  CHECK(at_floor.ratio == rel(4.0).epsilon(0.1));
  const ConvergenceReport refined = refine_until_converged(problem, opt, {});
  CHECK(refined.converged);
  CHECK(std::abs(refined.r_4m - refined.extrapolated) < 1e-8);
}

TEST_CASE("refinement doubles the step count until converged") {
  const ControlProblem problem(default_chain());
  const ControlParams p{{-0.87, 63.45}, 0.05};
  const ConvergenceReport coarse = convergence_check(problem, p, {});
  const ConvergenceReport fine = refine_until_converged(problem, p, {});
  CHECK(fine.converged);
  CHECK(fine.base_steps >= coarse.base_steps);
  CHECK(fine.base_steps % coarse.base_steps == 0);
  CHECK(std::abs(fine.r_4m - fine.extrapolated) < 1e-8);
}
