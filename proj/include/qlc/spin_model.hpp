#pragma once

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qlc {

using Complex = std::complex<double>;

/// Dense complex operator on the 2^N dimensional chain Hilbert space.
using OperatorMatrix = Eigen::MatrixXcd;

/// Complex amplitude vector. Basis index bit (N - site) holds the state of
/// `site`: bit value 0 is spin up (Z = +1), so site 1 is the most
/// significant tensor factor.
using StateVector = Eigen::VectorXcd;

/// Largest chain handled by the dense routines (dim 16384).
inline constexpr int kMaxSpins = 14;

/// Raised when a ground state cannot be singled out.
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Open transverse-field Ising chain with one tunable link between sites 1
/// and N:
///
///   H(g) = J sum_{n<N} X_n X_{n+1} + B sum_n Z_n + g J X_1 X_N
struct ChainConfig {
  int n_spins = 6;
  double coupling = 1.0;  // J
  double field = 0.9;     // B
  // Offset used to break a degenerate endpoint ground state.
  double degeneracy_offset = 1e-8;

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;

  std::size_t dim() const { return std::size_t{1} << n_spins; }
};

enum class PauliAxis { X, Y, Z };

struct PauliFactor {
  int site;  // 1-based
  PauliAxis axis;
};

/// Kronecker product of the listed single-site Paulis with identities on
/// the remaining sites. Throws std::invalid_argument for a duplicate or out
/// of range site.
OperatorMatrix pauli_string(int n_sites, std::span<const PauliFactor> factors);
OperatorMatrix pauli_string(const ChainConfig& config,
                            std::span<const PauliFactor> factors);

/// Static part H0 = J sum X_n X_{n+1} + B sum Z_n.
OperatorMatrix static_hamiltonian(const ChainConfig& config);

/// Control operator V = J X_1 X_N.
OperatorMatrix control_operator(const ChainConfig& config);

/// H0 + g V.
OperatorMatrix build_hamiltonian(const ChainConfig& config, double g);

struct Spectrum {
  Eigen::VectorXd eigenvalues;    // ascending
  Eigen::MatrixXcd eigenvectors;  // columns, phase-fixed
};

/// Max |H - H^dagger| entry.
double hermiticity_defect(const OperatorMatrix& h);

/// Full eigendecomposition of a Hermitian matrix. Throws
/// std::invalid_argument when the input is not Hermitian to 1e-12.
Spectrum diagonalize(const OperatorMatrix& h);

/// Spectral norm of a Hermitian matrix, max |eigenvalue|.
double spectral_norm(const Spectrum& spectrum);

/// Rotates `v` so that its largest-magnitude entry is real and positive
/// (ties go to the lowest index).
void fix_phase(StateVector& v);

/// Ground state of h0 + g v. If the lowest level is degenerate within
/// 1e-9 ||H||, the state is taken from g + offset (g < 1) or g - offset
/// (g >= 1) instead. Throws DegeneracyError if the shifted point is still
/// degenerate.
StateVector resolve_ground_state(const OperatorMatrix& h0,
                                 const OperatorMatrix& v, double g,
                                 double offset);

StateVector ground_state(const ChainConfig& config, double g);

/// Ground states of H(0) and H(1) with energies. The final state's global
/// sign is chosen so that overlap = <phi_f|phi_i> >= 0.
struct EndpointStates {
  StateVector initial;
  StateVector final;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  double overlap = 0.0;
};

EndpointStates endpoint_states(const ChainConfig& config);

struct GapPoint {
  double g;
  double gap;
  bool closed;  // gap < 1e-9 ||H||
};

/// eps_1(g) - eps_0(g) on `grid` uniformly spaced points of [0, 1].
std::vector<GapPoint> gap_sweep(const ChainConfig& config, int grid);

}  // namespace qlc
