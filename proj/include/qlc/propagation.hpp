#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <vector>

#include "qlc/control.hpp"
#include "qlc/spin_model.hpp"

namespace qlc {

/// Raised when a step count cannot be made large enough, or when the
/// Richardson check rejects a run.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Time stepping settings. `steps` is a request; it is raised to the floor
/// of required_steps() before use.
inline constexpr long kMaxSteps = 10'000'000;

struct EvolutionSpec {
  long steps = 1;
  double tolerance = 1e-8;
  long max_steps = kMaxSteps;  // cap on any step count, at most kMaxSteps
};

/// (N-1)|J| + N|B| + g_max |J|, g_max = 1 + sum |a_k|.
double hamiltonian_bound(const ChainConfig& config, const ControlParams& p);

/// ceil(20 T H_bound): at most 0.05 rad of phase per step.
long required_steps(const ChainConfig& config, const ControlParams& p);

/// Effective step count for a run; throws ConvergenceError past the cap.
long resolve_steps(const ChainConfig& config, const ControlParams& p,
                   const EvolutionSpec& spec);

struct FidelityReport {
  double fidelity = 0.0;       // |<phi_f|psi(T)>|
  double infidelity = 1.0;     // 1 - fidelity
  double overlap_phase = 0.0;  // arg <phi_f|psi(T)>
  long steps = 0;
};

/// exp(-i h dt) from a Hermitian eigendecomposition.
OperatorMatrix step_operator(const OperatorMatrix& h, double dt);

/// Midpoint exponential stepping for an arbitrary Hamiltonian family:
/// psi <- exp(-i H(t_m) dt) psi with t_m = (m - 1/2) dt.
StateVector propagate_hamiltonian(
    const std::function<OperatorMatrix(double)>& hamiltonian, double horizon,
    long steps, const StateVector& initial);

/// Midpoint stepper for H0 + g V on the chain. H is real and commutes with
/// the parity prod Z_n and with the mirror n -> N+1-n, so each step
/// diagonalizes up to four real blocks. Blocks the state has no weight in
/// are skipped.
class ChainPropagator {
 public:
  explicit ChainPropagator(const ChainConfig& config);

  const ChainConfig& config() const { return config_; }

  /// Evolves `initial` over [0, horizon] under the coupling profile g(t).
  StateVector evolve(const std::function<double(double)>& coupling,
                     double horizon, long steps,
                     const StateVector& initial) const;

  /// Same stepping, returning the full propagator U(T).
  OperatorMatrix unitary(const std::function<double(double)>& coupling,
                         double horizon, long steps) const;

  /// exp(-i H(g) dt) assembled as a dense matrix.
  OperatorMatrix step_operator(double g, double dt) const;

 private:
  struct Sector {
    Eigen::MatrixXd basis;  // dim x d, orthonormal columns
    Eigen::MatrixXd h0;
    Eigen::MatrixXd v;
  };

  void apply_step(double g, double dt, std::vector<Eigen::MatrixXcd>& blocks) const;

  ChainConfig config_;
  std::vector<Sector> sectors_;
};

/// Endpoint states and stepper for one chain, shared by all evaluations.
class ControlProblem {
 public:
  explicit ControlProblem(const ChainConfig& config);

  const ChainConfig& config() const { return propagator_.config(); }
  const EndpointStates& endpoints() const { return endpoints_; }
  const ChainPropagator& propagator() const { return propagator_; }

  /// Baseline infidelity R_0 = 1 - |f_0|.
  double sudden_infidelity() const { return 1.0 - std::abs(endpoints_.overlap); }

  StateVector propagate(const ControlParams& p, const EvolutionSpec& spec,
                        const StateVector& initial) const;

  FidelityReport evaluate(const ControlParams& p,
                          const EvolutionSpec& spec = {}) const;

 private:
  ChainPropagator propagator_;
  EndpointStates endpoints_;
};

/// Evolves `initial` under H(g(a, t)). Throws std::invalid_argument for a
/// non-normalized input.
StateVector propagate(const ChainConfig& config, const ControlParams& p,
                      const EvolutionSpec& spec, const StateVector& initial);

/// Propagates |phi_i> and compares with |phi_f>.
FidelityReport infidelity(const ChainConfig& config, const ControlParams& p,
                          const EvolutionSpec& spec = {});

struct ConvergenceReport {
  long base_steps = 0;
  double r_m = 0.0;
  double r_2m = 0.0;
  double r_4m = 0.0;
  double extrapolated = 0.0;
  double ratio = 0.0;  // (R_M - R_2M) / (R_2M - R_4M); 0 at roundoff level
  bool converged = false;
};

/// Richardson triple at M, 2M and 4M steps (M from `spec`, raised to the
/// floor). Converged when successive differences shrink at least 3x and
/// |R_4M - extrapolated| < spec.tolerance. Differences below the rounding
/// floor 1e-13 + 2e-15 * 4M count as exact.
ConvergenceReport convergence_check(const ControlProblem& problem,
                                    const ControlParams& p,
                                    const EvolutionSpec& spec);

/// Richardson triple for an arbitrary coupling profile, without a floor on
/// the step count.
ConvergenceReport convergence_check(const ControlProblem& problem,
                                    const std::function<double(double)>& coupling,
                                    double horizon, long steps,
                                    double tolerance);

/// Doubles M from the floor until convergence_check passes. The report of
/// the first passing triple is returned. When 4M would pass spec.max_steps
/// first, the last failing triple is returned.
ConvergenceReport refine_until_converged(const ControlProblem& problem,
                                         const ControlParams& p,
                                         const EvolutionSpec& spec);

}  // namespace qlc
