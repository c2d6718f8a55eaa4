#pragma once

#include <functional>

#include "qlc/control.hpp"
#include "qlc/propagation.hpp"

namespace qlc {

enum class QslStatus {
  kOk,
  kStationary,  // Bures angle is zero: T_QSL = 0, ratio undefined
  kZeroEnergy,  // energy integral is zero: T_QSL unbounded, ratio 0
};

/// Quantum speed limit of the evolution |phi_i> -> U(T)|phi_i>:
///
///   T_QSL / T = arccos|<phi_i|U(T)|phi_i>| / int_0^T |<phi_i|H(t)|phi_i>| dt
///
/// The energy expectation is taken as is, with no reference-energy shift.
struct QslReport {
  double horizon = 0.0;
  double bures_angle = 0.0;
  double energy_integral = 0.0;
  double t_qsl = 0.0;
  double ratio = 0.0;  // T / T_QSL
  QslStatus status = QslStatus::kOk;

  bool ratio_defined() const { return status != QslStatus::kStationary; }
};

/// int_0^T |<phi_i|H(g(a,t))|phi_i>| dt. The expectation is affine in g,
/// e_i + v_i g(t), so the integral is exact given the sign changes, which
/// are bracketed on `nodes` sample points and refined by bisection.
double energy_integral(const ControlProblem& problem, const ControlParams& p,
                       int nodes = 4001);

QslReport qsl_ratio(const ControlProblem& problem, const ControlParams& p,
                    const EvolutionSpec& spec = {});
QslReport qsl_ratio(const ChainConfig& config, const ControlParams& p,
                    const EvolutionSpec& spec = {});

/// Bures angle from the assembled propagator matrix instead of the state.
double bures_angle_from_unitary(const ControlProblem& problem,
                                const ControlParams& p,
                                const EvolutionSpec& spec = {});

/// Same quantity for an arbitrary Hamiltonian family, with the energy
/// integral sampled at the step midpoints.
QslReport qsl_ratio_general(
    const std::function<OperatorMatrix(double)>& hamiltonian, double horizon,
    long steps, const StateVector& initial);

}  // namespace qlc
