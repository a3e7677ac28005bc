#pragma once

// Microscopic pure-decoherence construction: a system with known energy
// levels couples to a finite environment through level-projector
// interactions. The reduced dynamics acts entrywise on the system state via
// the coefficient matrix C_nm(t) = Tr(exp(-i Z_n t) rho_E exp(+i Z_m t)),
// with dressed environment operators Z_n = e_n I + H_E + B_n. This module
// synthesizes phase-damping channels from such models and exposes the Kraus
// route independently of the Hadamard route so their agreement is testable.

#include "hadtomo/channel.hpp"

#include <memory>

namespace hadtomo {

/// System energies, environment Hamiltonian, per-level couplings, and the
/// (stationary) environment state. Everything is expressed in the system
/// eigenbasis; the environment is a finite d_E-dimensional matrix space.
class PureDecoherenceModel {
 public:
  PureDecoherenceModel(std::vector<double> system_energies,
                       ComplexMatrix env_hamiltonian,
                       std::vector<ComplexMatrix> couplings,
                       DensityMatrix env_state)
      : energies_(std::move(system_energies)),
        env_h_(std::move(env_hamiltonian)),
        couplings_(std::move(couplings)),
        env_state_(std::move(env_state)) {
    if (energies_.empty())
      throw DimensionError("PureDecoherenceModel: no system levels");
    for (double e : energies_)
      if (!std::isfinite(e))
        throw StateError("PureDecoherenceModel: non-finite energy");
    require_square(env_h_, "PureDecoherenceModel");
    if (!is_hermitian(env_h_))
      throw StateError("PureDecoherenceModel: environment Hamiltonian must be "
                       "Hermitian");
    if (couplings_.size() != energies_.size())
      throw DimensionError("PureDecoherenceModel: need one coupling operator "
                           "per system level");
    for (const auto& b : couplings_) {
      require_same_shape(b, env_h_, "PureDecoherenceModel");
      if (!is_hermitian(b))
        throw StateError("PureDecoherenceModel: coupling operators must be "
                         "Hermitian");
    }
    if (env_state_.dim() != env_h_.rows())
      throw DimensionError("PureDecoherenceModel: environment state dimension "
                           "mismatch");
  }

  Eigen::Index system_dim() const {
    return static_cast<Eigen::Index>(energies_.size());
  }
  Eigen::Index env_dim() const { return env_h_.rows(); }
  const std::vector<double>& system_energies() const { return energies_; }
  const ComplexMatrix& env_hamiltonian() const { return env_h_; }
  const std::vector<ComplexMatrix>& couplings() const { return couplings_; }
  const DensityMatrix& env_state() const { return env_state_; }

 private:
  std::vector<double> energies_;
  ComplexMatrix env_h_;
  std::vector<ComplexMatrix> couplings_;
  DensityMatrix env_state_;
};

/// Dressed environment operators Z_n = e_n I + H_E + B_n, one per level.
inline std::vector<ComplexMatrix> dressed_operators(
    const PureDecoherenceModel& model) {
  std::vector<ComplexMatrix> out;
  out.reserve(static_cast<std::size_t>(model.system_dim()));
  const ComplexMatrix eye = identity_matrix(model.env_dim());
  for (Eigen::Index n = 0; n < model.system_dim(); ++n)
    out.push_back(model.system_energies()[static_cast<std::size_t>(n)] * eye +
                  model.env_hamiltonian() +
                  model.couplings()[static_cast<std::size_t>(n)]);
  return out;
}

/// Coefficient matrix of the channel at one instant. Unit diagonal, PSD,
/// all-ones at t = 0; validated on construction.
struct CoefficientMatrix {
  double time = 0;
  ComplexMatrix matrix;

  void validate() const {
    if (!all_finite(matrix))
      throw StateError("CoefficientMatrix: non-finite entries");
    const double diag_err =
        (matrix.diagonal().array() - Complex(1.0)).abs().maxCoeff();
    if (diag_err > 1e-12)
      throw StateError("CoefficientMatrix: diagonal deviates from 1 by " +
                       std::to_string(diag_err));
    if (time == 0.0) {
      const double init_err = max_abs(matrix - ones_matrix(matrix.rows()));
      if (init_err > 1e-12)
        throw StateError("CoefficientMatrix: not all-ones at t = 0");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(
        ((matrix + matrix.adjoint()) / 2.0).eval(), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol::psd)
      throw StateError("CoefficientMatrix: not positive semidefinite");
  }
};

namespace detail {

// Spectral data of the dressed operators, so repeated evaluation of the
// channel only pays for the eigendecompositions once.
struct DressedSpectra {
  std::vector<RealVector> eigenvalues;
  std::vector<ComplexMatrix> eigenvectors;
  ComplexMatrix env_state;

  static DressedSpectra build(const PureDecoherenceModel& model) {
    DressedSpectra out;
    for (const ComplexMatrix& z : dressed_operators(model)) {
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(z);
      if (es.info() != Eigen::Success)
        throw StateError("coefficient_matrix: eigendecomposition failed");
      out.eigenvalues.push_back(es.eigenvalues());
      out.eigenvectors.push_back(es.eigenvectors());
    }
    out.env_state = model.env_state().matrix();
    return out;
  }

  // U_n(t) = exp(-i Z_n t) via the spectral decomposition.
  ComplexMatrix propagator(std::size_t n, double t) const {
    const RealVector& ev = eigenvalues[n];
    ComplexVector phases(ev.size());
    for (Eigen::Index a = 0; a < ev.size(); ++a)
      phases(a) = std::exp(Complex(0, -ev(a) * t));
    return eigenvectors[n] * phases.asDiagonal() * eigenvectors[n].adjoint();
  }

  ComplexMatrix coefficients(double t) const {
    const auto count = static_cast<Eigen::Index>(eigenvalues.size());
    std::vector<ComplexMatrix> props;
    props.reserve(static_cast<std::size_t>(count));
    for (std::size_t n = 0; n < eigenvalues.size(); ++n)
      props.push_back(propagator(n, t));
    ComplexMatrix c(count, count);
    for (Eigen::Index n = 0; n < count; ++n) {
      const ComplexMatrix left = props[static_cast<std::size_t>(n)] * env_state;
      for (Eigen::Index m = 0; m < count; ++m)
        // Tr(U_n rho_E U_m^dagger)
        c(n, m) = left.cwiseProduct(props[static_cast<std::size_t>(m)].conjugate())
                      .sum();
    }
    return c;
  }
};

}  // namespace detail

inline CoefficientMatrix coefficient_matrix(const PureDecoherenceModel& model,
                                            double t) {
  if (t < 0.0) throw DomainError("coefficient_matrix: negative time");
  CoefficientMatrix out;
  out.time = t;
  out.matrix = detail::DressedSpectra::build(model).coefficients(t);
  out.validate();
  return out;
}

/// Apply the channel through its Kraus representation,
/// sum_{n,m} C_nm(t) P_n rho P_m with level projectors P_n. Kept as a
/// literal projector sum so it is an independent route against the
/// entrywise (Hadamard) form.
inline DensityMatrix apply_kraus_map(const PureDecoherenceModel& model,
                                     double t, const DensityMatrix& rho0) {
  const Eigen::Index n = model.system_dim();
  if (rho0.dim() != n)
    throw DimensionError("apply_kraus_map: state dimension does not match the "
                         "number of system levels");
  const ComplexMatrix c = coefficient_matrix(model, t).matrix;
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    ComplexMatrix proj_a = ComplexMatrix::Zero(n, n);
    proj_a(a, a) = 1.0;
    for (Eigen::Index b = 0; b < n; ++b) {
      ComplexMatrix proj_b = ComplexMatrix::Zero(n, n);
      proj_b(b, b) = 1.0;
      out += c(a, b) * proj_a * rho0.matrix() * proj_b;
    }
  }
  return DensityMatrix(out);
}

/// Wrap the model as a sampled DampingModel and check the channel conditions
/// on a probe grid. Failure signals a bug rather than bad input: the
/// construction guarantees validity.
inline DampingModel to_channel(const PureDecoherenceModel& model,
                               const std::vector<double>& probe_grid) {
  auto spectra = std::make_shared<detail::DressedSpectra>(
      detail::DressedSpectra::build(model));
  DampingModel channel = DampingModel::sampled(
      model.system_dim(),
      [spectra](double t) { return spectra->coefficients(t); });
  const ValidationReport report = validate_channel(channel, probe_grid);
  if (!report.ok())
    throw StateError(
        "to_channel: synthesized channel failed validation (psd " +
        std::to_string(report.worst_psd_violation) + ", diag " +
        std::to_string(report.worst_diag_violation) + ", init " +
        std::to_string(report.worst_init_violation) + ")");
  return channel;
}

}  // namespace hadtomo
