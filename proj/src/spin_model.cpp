#include "qlc/spin_model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace qlc {

namespace {

constexpr double kHermitianTolerance = 1e-12;
constexpr double kDegeneracyTolerance = 1e-9;

std::size_t site_bit(int n_sites, int site) {
  return std::size_t{1} << (n_sites - site);
}

}  // namespace

void ChainConfig::validate() const {
  if (n_spins < 3 || n_spins > kMaxSpins) {
    std::ostringstream msg;
    msg << "n_spins must lie in [3, " << kMaxSpins << "], got " << n_spins;
    throw std::invalid_argument(msg.str());
  }
  if (!std::isfinite(coupling) || !std::isfinite(field)) {
    throw std::invalid_argument("coupling and field must be finite");
  }
  if (!(degeneracy_offset > 0.0 && degeneracy_offset <= 1e-4)) {
    throw std::invalid_argument("degeneracy_offset must lie in (0, 1e-4]");
  }
}

OperatorMatrix pauli_string(int n_sites, std::span<const PauliFactor> factors) {
  if (n_sites < 1 || n_sites > kMaxSpins) {
    throw std::invalid_argument("pauli_string: n_sites out of range");
  }
  std::size_t flip_mask = 0;
  std::size_t used = 0;
  for (const auto& f : factors) {
    if (f.site < 1 || f.site > n_sites) {
      throw std::invalid_argument("pauli_string: site " +
                                  std::to_string(f.site) + " out of range");
    }
    const std::size_t bit = site_bit(n_sites, f.site);
    if (used & bit) {
      throw std::invalid_argument("pauli_string: duplicate site " +
                                  std::to_string(f.site));
    }
    used |= bit;
    if (f.axis != PauliAxis::Z) flip_mask |= bit;
  }

  const std::size_t dim = std::size_t{1} << n_sites;
  OperatorMatrix op = OperatorMatrix::Zero(dim, dim);
  for (std::size_t col = 0; col < dim; ++col) {
    Complex amp{1.0, 0.0};
    for (const auto& f : factors) {
      const bool down = (col & site_bit(n_sites, f.site)) != 0;
      switch (f.axis) {
        case PauliAxis::X:
          break;
        case PauliAxis::Y:
          // Y|up> = i|down>, Y|down> = -i|up>
          amp *= down ? Complex{0.0, -1.0} : Complex{0.0, 1.0};
          break;
        case PauliAxis::Z:
          if (down) amp = -amp;
          break;
      }
    }
    op(col ^ flip_mask, col) = amp;
  }
  return op;
}

OperatorMatrix pauli_string(const ChainConfig& config,
                            std::span<const PauliFactor> factors) {
  return pauli_string(config.n_spins, factors);
}

OperatorMatrix static_hamiltonian(const ChainConfig& config) {
  config.validate();
  const int n = config.n_spins;
  OperatorMatrix h = OperatorMatrix::Zero(config.dim(), config.dim());
  for (int site = 1; site < n; ++site) {
    const PauliFactor xx[] = {{site, PauliAxis::X}, {site + 1, PauliAxis::X}};
    h += config.coupling * pauli_string(n, xx);
  }
  for (int site = 1; site <= n; ++site) {
    const PauliFactor z[] = {{site, PauliAxis::Z}};
    h += config.field * pauli_string(n, z);
  }
  return h;
}

OperatorMatrix control_operator(const ChainConfig& config) {
  config.validate();
  const PauliFactor link[] = {{1, PauliAxis::X},
                              {config.n_spins, PauliAxis::X}};
  return config.coupling * pauli_string(config.n_spins, link);
}

OperatorMatrix build_hamiltonian(const ChainConfig& config, double g) {
  return static_hamiltonian(config) + g * control_operator(config);
}

double hermiticity_defect(const OperatorMatrix& h) {
  if (h.rows() != h.cols()) return INFINITY;
  if (h.size() == 0) return 0.0;
  return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

void fix_phase(StateVector& v) {
  Eigen::Index best = 0;
  double best_mag = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]);
    // strict comparison keeps the lowest index on ties, up to roundoff
    if (mag > best_mag * (1.0 + 1e-12)) {
      best_mag = mag;
      best = i;
    }
  }
  if (best_mag <= 0.0) return;
  v *= std::conj(v[best]) / best_mag;
  v[best] = Complex{std::abs(v[best]), 0.0};
}

Spectrum diagonalize(const OperatorMatrix& h) {
  if (h.rows() != h.cols()) {
    throw std::invalid_argument("diagonalize: matrix is not square");
  }
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (hermiticity_defect(h) > kHermitianTolerance * scale) {
    throw std::invalid_argument("diagonalize: matrix is not Hermitian");
  }
  Spectrum out;
  // Real symmetric input takes the cheaper real path; eigenvectors are real.
  if (h.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.real());
    if (solver.info() != Eigen::Success) {
      throw std::runtime_error("diagonalize: eigensolver failed");
    }
    out.eigenvalues = solver.eigenvalues();
    out.eigenvectors = solver.eigenvectors().cast<Complex>();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    if (solver.info() != Eigen::Success) {
      throw std::runtime_error("diagonalize: eigensolver failed");
    }
    out.eigenvalues = solver.eigenvalues();
    out.eigenvectors = solver.eigenvectors();
  }
  for (Eigen::Index k = 0; k < out.eigenvectors.cols(); ++k) {
    StateVector col = out.eigenvectors.col(k);
    fix_phase(col);
    out.eigenvectors.col(k) = col;
  }
  return out;
}

double spectral_norm(const Spectrum& spectrum) {
  if (spectrum.eigenvalues.size() == 0) return 0.0;
  return std::max(std::abs(spectrum.eigenvalues[0]),
                  std::abs(spectrum.eigenvalues[spectrum.eigenvalues.size() - 1]));
}

namespace {

bool ground_degenerate(const Spectrum& s) {
  if (s.eigenvalues.size() < 2) return false;
  const double tol = kDegeneracyTolerance * std::max(spectral_norm(s), 1e-300);
  return s.eigenvalues[1] - s.eigenvalues[0] < tol;
}

}  // namespace

StateVector resolve_ground_state(const OperatorMatrix& h0,
                                 const OperatorMatrix& v, double g,
                                 double offset) {
  Spectrum s = diagonalize(h0 + g * v);
  if (ground_degenerate(s)) {
    const double shifted = g < 1.0 ? g + offset : g - offset;
    s = diagonalize(h0 + shifted * v);
    if (ground_degenerate(s)) {
      std::ostringstream msg;
      msg << "ground state at g=" << g
          << " stays degenerate at the offset point g=" << shifted;
      throw DegeneracyError(msg.str());
    }
  }
  StateVector ground = s.eigenvectors.col(0);
  fix_phase(ground);
  return ground;
}

StateVector ground_state(const ChainConfig& config, double g) {
  config.validate();
  return resolve_ground_state(static_hamiltonian(config),
                              control_operator(config), g,
                              config.degeneracy_offset);
}

EndpointStates endpoint_states(const ChainConfig& config) {
  config.validate();
  const OperatorMatrix h0 = static_hamiltonian(config);
  const OperatorMatrix v = control_operator(config);

  EndpointStates out;
  out.initial = resolve_ground_state(h0, v, 0.0, config.degeneracy_offset);
  out.final = resolve_ground_state(h0, v, 1.0, config.degeneracy_offset);
  out.initial_energy = diagonalize(h0).eigenvalues[0];
  out.final_energy = diagonalize(h0 + v).eigenvalues[0];

  Complex overlap = out.final.dot(out.initial);  // <phi_f|phi_i>
  if (overlap.real() < 0.0) {
    out.final = -out.final;
    overlap = -overlap;
  }
  out.overlap = overlap.real();
  return out;
}

std::vector<GapPoint> gap_sweep(const ChainConfig& config, int grid) {
  config.validate();
  if (grid < 2) throw std::invalid_argument("gap_sweep: grid must be >= 2");
  const OperatorMatrix h0 = static_hamiltonian(config);
  const OperatorMatrix v = control_operator(config);

  std::vector<GapPoint> out;
  out.reserve(grid);
  for (int k = 0; k < grid; ++k) {
    const double g = k == grid - 1 ? 1.0 : static_cast<double>(k) / (grid - 1);
    const Spectrum s = diagonalize(h0 + g * v);
    const double gap = s.eigenvalues[1] - s.eigenvalues[0];
    out.push_back({g, gap, gap < kDegeneracyTolerance * spectral_norm(s)});
  }
  return out;
}

}  // namespace qlc
