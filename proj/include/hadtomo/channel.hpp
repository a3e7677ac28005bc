#pragma once

// Phase-damping channels D(t): representation (constant-basis decomposition
// or sampled matrix function), validation of the channel conditions
// (positivity, unit diagonal, all-ones start), greedy basis extraction from
// samples, product closure of seed bases, and application to states.

#include "hadtomo/matrix_core.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <variant>

namespace hadtomo {

struct ExponentialTerm {
  Complex coeff;
  Complex rate;  // t -> coeff * exp(rate * t)
};

/// Scalar signal lambda(t): either a finite sum of complex exponentials or
/// a table of samples with linear interpolation inside the table range.
class ScalarSignal {
 public:
  struct Tabulated {
    std::vector<double> times;
    std::vector<Complex> values;
  };

  static ScalarSignal exponential_sum(std::vector<ExponentialTerm> terms) {
    if (terms.empty())
      throw DomainError("ScalarSignal: exponential sum needs at least one term");
    for (const auto& term : terms)
      if (!std::isfinite(term.coeff.real()) || !std::isfinite(term.coeff.imag()) ||
          !std::isfinite(term.rate.real()) || !std::isfinite(term.rate.imag()))
        throw DomainError("ScalarSignal: non-finite exponential term");
    ScalarSignal s;
    s.repr_ = std::move(terms);
    return s;
  }

  static ScalarSignal constant(Complex value) {
    return exponential_sum({ExponentialTerm{value, Complex(0, 0)}});
  }

  static ScalarSignal tabulated(std::vector<double> times,
                                std::vector<Complex> values) {
    if (times.empty() || times.size() != values.size())
      throw DomainError("ScalarSignal: tabulated signal needs matching, "
                        "nonempty time/value lists");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1]))
        throw DomainError("ScalarSignal: tabulated times must be strictly "
                          "increasing");
    ScalarSignal s;
    s.repr_ = Tabulated{std::move(times), std::move(values)};
    return s;
  }

  bool is_exponential_sum() const {
    return std::holds_alternative<std::vector<ExponentialTerm>>(repr_);
  }

  const std::vector<ExponentialTerm>& terms() const {
    return std::get<std::vector<ExponentialTerm>>(repr_);
  }

  const Tabulated& table() const { return std::get<Tabulated>(repr_); }

  /// True when the signal can be evaluated at t.
  bool covers(double t) const {
    if (is_exponential_sum()) return t >= 0.0;
    const auto& tab = table();
    return t >= tab.times.front() && t <= tab.times.back();
  }

  Complex operator()(double t) const {
    if (t < 0.0) throw DomainError("ScalarSignal: negative time");
    if (is_exponential_sum()) {
      Complex acc(0, 0);
      for (const auto& term : terms()) acc += term.coeff * std::exp(term.rate * t);
      return acc;
    }
    const auto& tab = table();
    if (!covers(t))
      throw DomainError("ScalarSignal: t = " + std::to_string(t) +
                        " outside tabulated range [" +
                        std::to_string(tab.times.front()) + ", " +
                        std::to_string(tab.times.back()) + "]");
    const auto it = std::lower_bound(tab.times.begin(), tab.times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - tab.times.begin());
    if (hi == 0 || tab.times[hi] == t) return tab.values[hi];
    const double t0 = tab.times[hi - 1], t1 = tab.times[hi];
    const double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * tab.values[hi - 1] + w * tab.values[hi];
  }

 private:
  ScalarSignal() = default;
  std::variant<std::vector<ExponentialTerm>, Tabulated> repr_;
};

/// D(t) = sum_k lambda_k(t) A_k with constant, linearly independent A_k.
struct BasisDecomposition {
  std::vector<ComplexMatrix> basis;
  std::vector<ScalarSignal> signals;

  Eigen::Index mu() const { return static_cast<Eigen::Index>(basis.size()); }
  Eigen::Index dim() const { return basis.empty() ? 0 : basis.front().rows(); }

  /// Structural checks: matching counts, uniform square shapes, independent
  /// basis, mu <= n^2. The physical channel conditions (positivity, unit
  /// diagonal, all-ones at t = 0) are validate_channel's job so that
  /// ill-formed channels can still be represented and reported on.
  void validate() const {
    if (basis.empty() || basis.size() != signals.size())
      throw DomainError("BasisDecomposition: need equally many basis matrices "
                        "and signals, at least one of each");
    const Eigen::Index n = basis.front().rows();
    for (const auto& a : basis) {
      require_square(a, "BasisDecomposition");
      require_same_shape(a, basis.front(), "BasisDecomposition");
      if (!all_finite(a))
        throw StateError("BasisDecomposition: non-finite basis entries");
    }
    if (mu() > n * n)
      throw DomainError("BasisDecomposition: more basis matrices than the "
                        "operator-space dimension");
    if (numerical_rank(basis) != static_cast<int>(basis.size()))
      throw DomainError("BasisDecomposition: basis matrices are linearly "
                        "dependent");
  }

  ComplexMatrix evaluate(double t) const {
    ComplexMatrix acc = ComplexMatrix::Zero(dim(), dim());
    for (std::size_t k = 0; k < basis.size(); ++k) acc += signals[k](t) * basis[k];
    return acc;
  }
};

/// Least-squares coordinates of `sample` over `basis` (vectorized), with the
/// Frobenius-norm fit residual reported through `residual` when non-null.
inline ComplexVector basis_coordinates(const std::vector<ComplexMatrix>& basis,
                                       const ComplexMatrix& sample,
                                       double* residual = nullptr) {
  if (basis.empty()) throw DimensionError("basis_coordinates: empty basis");
  ComplexMatrix stacked(sample.size(), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    require_same_shape(basis[k], sample, "basis_coordinates");
    stacked.col(static_cast<Eigen::Index>(k)) = vectorize(basis[k]);
  }
  const ComplexVector rhs = vectorize(sample);
  Eigen::JacobiSVD<ComplexMatrix> svd(stacked,
                                      Eigen::ComputeThinU | Eigen::ComputeThinV);
  const ComplexVector coords = svd.solve(rhs);
  if (residual) *residual = (stacked * coords - rhs).norm();
  return coords;
}

/// Time-dependent damping matrix D(t), stored either as a constant-basis
/// decomposition, a table of matrix samples (entrywise linear
/// interpolation), or an opaque callable.
class DampingModel {
 public:
  struct MatrixSample {
    double t;
    ComplexMatrix matrix;
  };

  static DampingModel decomposed(BasisDecomposition decomp) {
    decomp.validate();
    DampingModel m;
    m.dim_ = decomp.dim();
    m.repr_ = std::move(decomp);
    return m;
  }

  static DampingModel sampled(Eigen::Index dim,
                              std::function<ComplexMatrix(double)> fn) {
    if (dim < 1) throw DimensionError("DampingModel: dimension must be >= 1");
    if (!fn) throw DomainError("DampingModel: null sample function");
    DampingModel m;
    m.dim_ = dim;
    m.repr_ = std::move(fn);
    return m;
  }

  static DampingModel tabulated(std::vector<MatrixSample> samples) {
    if (samples.empty())
      throw DomainError("DampingModel: tabulated model needs samples");
    const Eigen::Index n = samples.front().matrix.rows();
    for (const auto& s : samples) {
      require_square(s.matrix, "DampingModel");
      if (s.matrix.rows() != n)
        throw DimensionError("DampingModel: inconsistent sample dimensions");
    }
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (!(samples[i].t > samples[i - 1].t))
        throw DomainError("DampingModel: sample times must be strictly "
                          "increasing");
    DampingModel m;
    m.dim_ = n;
    m.repr_ = std::move(samples);
    return m;
  }

  Eigen::Index dim() const { return dim_; }

  bool is_decomposed() const {
    return std::holds_alternative<BasisDecomposition>(repr_);
  }

  /// Matrix samples when tabulated, null otherwise.
  const std::vector<MatrixSample>* table() const {
    return std::get_if<std::vector<MatrixSample>>(&repr_);
  }

  const BasisDecomposition& decomposition() const {
    if (!is_decomposed())
      throw DomainError("DampingModel: no constant-basis decomposition "
                        "attached; extract one first");
    return std::get<BasisDecomposition>(repr_);
  }

  ComplexMatrix evaluate(double t) const {
    if (t < 0.0) throw DomainError("DampingModel: negative time");
    if (is_decomposed()) return std::get<BasisDecomposition>(repr_).evaluate(t);
    if (std::holds_alternative<std::function<ComplexMatrix(double)>>(repr_))
      return std::get<std::function<ComplexMatrix(double)>>(repr_)(t);
    const auto& samples = std::get<std::vector<MatrixSample>>(repr_);
    if (t < samples.front().t || t > samples.back().t)
      throw DomainError("DampingModel: t = " + std::to_string(t) +
                        " outside tabulated range");
    auto it = std::lower_bound(
        samples.begin(), samples.end(), t,
        [](const MatrixSample& s, double v) { return s.t < v; });
    if (it->t == t) return it->matrix;
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (t - lo.t) / (hi.t - lo.t);
    return (1.0 - w) * lo.matrix + w * hi.matrix;
  }

 private:
  DampingModel() = default;
  Eigen::Index dim_ = 0;
  std::variant<BasisDecomposition, std::vector<MatrixSample>,
               std::function<ComplexMatrix(double)>>
      repr_;
};

/// Outcome of probing the three channel conditions on a time grid.
struct ValidationReport {
  bool psd_ok = false;   // D(t) >= 0 (includes hermiticity of D(t))
  bool diag_ok = false;  // d_ii(t) = 1
  bool init_ok = false;  // D(0) = all-ones
  double worst_psd_violation = 0;   // max(0, -min eigenvalue) over the grid
  double worst_hermiticity_defect = 0;
  double worst_diag_violation = 0;
  double worst_init_violation = 0;

  bool ok() const { return psd_ok && diag_ok && init_ok; }
};

/// Probe complete positivity, trace preservation, and the initial condition
/// at every grid point. The grid must be nonempty, nonnegative, include 0.
inline ValidationReport validate_channel(const DampingModel& model,
                                         const std::vector<double>& probe_grid) {
  if (probe_grid.empty())
    throw DomainError("validate_channel: empty probe grid");
  bool has_zero = false;
  for (double t : probe_grid) {
    if (t < 0.0) throw DomainError("validate_channel: negative probe time");
    if (t == 0.0) has_zero = true;
  }
  if (!has_zero)
    throw DomainError("validate_channel: probe grid must include t = 0");

  ValidationReport report;
  for (double t : probe_grid) {
    const ComplexMatrix d = model.evaluate(t);
    report.worst_hermiticity_defect =
        std::max(report.worst_hermiticity_defect, hermiticity_defect(d));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(
        ((d + d.adjoint()) / 2.0).eval(), Eigen::EigenvaluesOnly);
    report.worst_psd_violation = std::max(
        report.worst_psd_violation, std::max(0.0, -es.eigenvalues().minCoeff()));
    report.worst_diag_violation =
        std::max(report.worst_diag_violation,
                 (d.diagonal().array() - Complex(1.0)).abs().maxCoeff());
    if (t == 0.0)
      report.worst_init_violation =
          std::max(report.worst_init_violation,
                   max_abs(d - ones_matrix(model.dim())));
  }
  report.psd_ok = report.worst_psd_violation <= tol::psd &&
                  report.worst_hermiticity_defect <= 10 * tol::hermitian;
  report.diag_ok = report.worst_diag_violation <= tol::unit_diagonal;
  report.init_ok = report.worst_init_violation <= tol::unit_diagonal;
  return report;
}

/// Greedy constant-basis extraction from samples of D(t): scan the candidate
/// times in order, append D(t_i) whenever it increases the numerical rank of
/// the collection, then fit per-time coordinates by least squares. Signals
/// come back tabulated on the candidate grid. A fit residual above `eps` at
/// any candidate time aborts with the offending time.
inline BasisDecomposition extract_basis(const DampingModel& model,
                                        const std::vector<double>& candidate_times,
                                        double eps = 1e-9) {
  if (candidate_times.empty())
    throw DomainError("extract_basis: empty candidate grid");
  if (!std::is_sorted(candidate_times.begin(), candidate_times.end()))
    throw DomainError("extract_basis: candidate times must be sorted");
  if (candidate_times.front() < 0.0)
    throw DomainError("extract_basis: negative candidate time");

  std::vector<ComplexMatrix> samples;
  samples.reserve(candidate_times.size());
  for (double t : candidate_times) samples.push_back(model.evaluate(t));

  const Eigen::Index n = model.dim();
  std::vector<ComplexMatrix> basis;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (static_cast<Eigen::Index>(basis.size()) == n * n) break;
    std::vector<ComplexMatrix> trial = basis;
    trial.push_back(samples[i]);
    if (numerical_rank(trial) == static_cast<int>(trial.size()))
      basis = std::move(trial);
  }
  if (basis.empty())
    throw DecompositionError("extract_basis: all samples are zero",
                             candidate_times.front());

  const Eigen::Index mu = static_cast<Eigen::Index>(basis.size());
  ComplexMatrix coords(mu, static_cast<Eigen::Index>(candidate_times.size()));
  for (std::size_t j = 0; j < samples.size(); ++j) {
    double residual = 0;
    coords.col(static_cast<Eigen::Index>(j)) =
        basis_coordinates(basis, samples[j], &residual);
    if (residual > eps)
      throw DecompositionError(
          "extract_basis: candidate grid too coarse, sample at t = " +
              std::to_string(candidate_times[j]) + " misses the collected "
              "basis span by " + std::to_string(residual),
          candidate_times[j]);
  }

  BasisDecomposition decomp;
  decomp.basis = std::move(basis);
  decomp.signals.reserve(static_cast<std::size_t>(mu));
  for (Eigen::Index k = 0; k < mu; ++k) {
    std::vector<Complex> values(coords.row(k).begin(), coords.row(k).end());
    decomp.signals.push_back(
        ScalarSignal::tabulated(candidate_times, std::move(values)));
  }
  decomp.validate();
  return decomp;
}

/// Maximal independent subset of the seed, closed under ordinary matrix
/// products: repeatedly form all pairwise products of current members and
/// append any that increase the rank, to a fixed point (capped by the
/// operator-space dimension).
inline std::vector<ComplexMatrix> basis_closure(
    const std::vector<ComplexMatrix>& seed) {
  if (seed.empty()) throw DimensionError("basis_closure: empty seed");
  const Eigen::Index n = seed.front().rows();
  for (const auto& b : seed) {
    require_square(b, "basis_closure");
    require_same_shape(b, seed.front(), "basis_closure");
  }

  std::vector<ComplexMatrix> closed;
  auto try_append = [&closed](const ComplexMatrix& m) {
    std::vector<ComplexMatrix> trial = closed;
    trial.push_back(m);
    if (numerical_rank(trial) == static_cast<int>(trial.size())) {
      closed = std::move(trial);
      return true;
    }
    return false;
  };

  for (const auto& b : seed) {
    if (static_cast<Eigen::Index>(closed.size()) == n * n) break;
    try_append(b);
  }

  for (Eigen::Index round = 0; round < n * n; ++round) {
    bool grew = false;
    const std::size_t count = closed.size();
    for (std::size_t i = 0; i < count && closed.size() < static_cast<std::size_t>(n * n); ++i)
      for (std::size_t h = 0; h < count && closed.size() < static_cast<std::size_t>(n * n); ++h)
        grew |= try_append(closed[i] * closed[h]);
    if (!grew) break;
  }
  return closed;
}

/// rho(t) = D(t) o rho(0). A valid channel maps density matrices to density
/// matrices (Schur product of PSD factors), so the result is validated
/// directly with no projection step.
inline DensityMatrix apply_channel(const DampingModel& model, double t,
                                   const DensityMatrix& rho0) {
  if (model.dim() != rho0.dim())
    throw DimensionError("apply_channel: channel and state dimensions differ");
  return DensityMatrix(hadamard(model.evaluate(t), rho0.matrix()));
}

}  // namespace hadtomo
