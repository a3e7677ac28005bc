#pragma once

// Reconstruction engine: simulate measurement records m_i(t_j), build and
// gate the time-signal system that turns repeated measurements into
// operator projections, decide frame completeness, and recover the initial
// state by least squares over a Hermitian coordinate basis.

#include "hadtomo/channel.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace hadtomo {

/// Strictly increasing, nonnegative measurement instants t_1 < ... < t_p.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> instants)
      : instants_(std::move(instants)) {
    if (instants_.empty()) throw DomainError("TimeGrid: empty grid");
    if (instants_.front() < 0.0)
      throw DomainError("TimeGrid: negative time instant");
    for (std::size_t j = 1; j < instants_.size(); ++j)
      if (!(instants_[j] > instants_[j - 1]))
        throw DomainError("TimeGrid: instants must be strictly increasing");
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(instants_.size()); }
  double operator[](Eigen::Index j) const {
    return instants_[static_cast<std::size_t>(j)];
  }
  const std::vector<double>& instants() const { return instants_; }

 private:
  std::vector<double> instants_;
};

/// Matrix of expectation values m_i(t_j), observables by rows, instants by
/// columns.
struct MeasurementRecord {
  std::vector<Observable> observables;
  TimeGrid grid;
  RealMatrix values;  // r x p

  void validate() const {
    if (values.rows() != static_cast<Eigen::Index>(observables.size()) ||
        values.cols() != grid.size())
      throw DimensionError("MeasurementRecord: value matrix must be "
                           "(observables x instants)");
    if (!values.array().isFinite().all())
      throw StateError("MeasurementRecord: non-finite values");
  }
};

/// m_i(t_j) = Tr{Q_i (D(t_j) o rho0)}, plus Gaussian noise of standard
/// deviation noise_sigma when positive. Deterministic for a fixed seed.
inline MeasurementRecord simulate_measurements(
    const DampingModel& channel, const DensityMatrix& rho0,
    const std::vector<Observable>& observables, const TimeGrid& grid,
    double noise_sigma = 0.0, std::uint64_t seed = 0) {
  if (noise_sigma < 0.0)
    throw DomainError("simulate_measurements: negative noise level");
  if (channel.dim() != rho0.dim())
    throw DimensionError("simulate_measurements: channel/state dimensions");
  for (const auto& q : observables)
    if (q.dim() != rho0.dim())
      throw DimensionError("simulate_measurements: observable dimension");

  const auto r = static_cast<Eigen::Index>(observables.size());
  RealMatrix values(r, grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    const ComplexMatrix evolved =
        hadamard(channel.evaluate(grid[j]), rho0.matrix());
    for (Eigen::Index i = 0; i < r; ++i)
      values(i, j) =
          trace_pair(observables[static_cast<std::size_t>(i)].matrix(), evolved)
              .real();
  }
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, noise_sigma);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < grid.size(); ++j) values(i, j) += gauss(rng);
  }
  MeasurementRecord record{observables, grid, std::move(values)};
  record.validate();
  return record;
}

/// The p x mu matrix [lambda_k(t_j)] linking data to projections.
inline ComplexMatrix lambda_matrix(const BasisDecomposition& decomp,
                                   const TimeGrid& grid) {
  ComplexMatrix lm(grid.size(), decomp.mu());
  for (Eigen::Index j = 0; j < grid.size(); ++j)
    for (Eigen::Index k = 0; k < decomp.mu(); ++k)
      lm(j, k) = decomp.signals[static_cast<std::size_t>(k)](grid[j]);
  return lm;
}

/// Same matrix, recovered by projecting channel samples onto a fixed basis;
/// exact for any time where the channel is evaluable, which makes it the
/// right route for sampled (non-decomposed) channels.
inline ComplexMatrix lambda_matrix_from_samples(
    const DampingModel& channel, const std::vector<ComplexMatrix>& basis,
    const TimeGrid& grid) {
  ComplexMatrix lm(grid.size(), static_cast<Eigen::Index>(basis.size()));
  for (Eigen::Index j = 0; j < grid.size(); ++j)
    lm.row(j) = basis_coordinates(basis, channel.evaluate(grid[j])).transpose();
  return lm;
}

/// Solvability gate for the time-signal system: the projections are
/// computable exactly when the matrix is square and invertible.
struct SolvabilityReport {
  bool square = false;
  bool invertible = false;
  double condition = std::numeric_limits<double>::infinity();
};

inline SolvabilityReport check_solvability(const ComplexMatrix& lm) {
  SolvabilityReport report;
  report.square = lm.rows() == lm.cols();
  if (lm.size() == 0) return report;
  Eigen::JacobiSVD<ComplexMatrix> svd(lm);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  report.condition = smin > 0.0 ? smax / smin
                               : std::numeric_limits<double>::infinity();
  report.invertible =
      report.square && smax > 0.0 && smin > tol::rank * smax;
  return report;
}

namespace detail {

// Deterministic randomized search over p-point grids in [0, horizon],
// scoring |det| when square and the smallest singular value otherwise.
// Half the candidates are uniform draws, half stratified jitter; the
// earliest best-scoring grid wins.
inline TimeGrid select_time_grid_generic(
    const std::function<ComplexMatrix(const TimeGrid&)>& lm_of,
    double horizon, Eigen::Index p, Eigen::Index mu, int candidates,
    std::uint64_t seed) {
  if (horizon <= 0.0) throw DomainError("select_time_grid: horizon must be > 0");
  if (p < mu)
    throw DomainError("select_time_grid: need at least as many instants as "
                      "basis elements");
  if (candidates < 1) throw DomainError("select_time_grid: no candidates");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::optional<TimeGrid> best;
  double best_score = -1.0;

  for (int c = 0; c < candidates; ++c) {
    std::vector<double> ts(static_cast<std::size_t>(p));
    if (c % 2 == 0) {
      for (auto& t : ts) t = horizon * unit(rng);
      std::sort(ts.begin(), ts.end());
    } else {
      const double step = horizon / static_cast<double>(p);
      for (Eigen::Index i = 0; i < p; ++i)
        ts[static_cast<std::size_t>(i)] = (static_cast<double>(i) + unit(rng)) * step;
    }
    bool distinct = true;
    for (std::size_t i = 1; i < ts.size(); ++i)
      if (!(ts[i] > ts[i - 1])) distinct = false;
    if (!distinct) continue;

    TimeGrid grid(ts);
    const ComplexMatrix lm = lm_of(grid);
    double score = 0.0;
    if (p == mu) {
      score = std::abs(lm.determinant());
    } else {
      Eigen::JacobiSVD<ComplexMatrix> svd(lm);
      score = svd.singularValues()(svd.singularValues().size() - 1);
    }
    if (score > best_score) {
      best_score = score;
      best = std::move(grid);
    }
  }
  if (!best)
    throw SolvabilityError("select_time_grid: no usable candidate grid");

  const ComplexMatrix lm = lm_of(*best);
  Eigen::JacobiSVD<ComplexMatrix> svd(lm);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || !(sv(sv.size() - 1) > tol::rank * sv(0)))
    throw SolvabilityError(
        "select_time_grid: signals are degenerate on every candidate grid; "
        "no invertible time-signal matrix exists");
  return *best;
}

}  // namespace detail

/// Search `candidates` random grids of p points in [0, horizon] and return
/// the one with the best-conditioned time-signal matrix (largest |det| when
/// p equals the decomposition dimension, largest smallest-singular-value
/// otherwise). Deterministic for a fixed seed.
inline TimeGrid select_time_grid(const BasisDecomposition& decomp,
                                 double horizon, Eigen::Index p = 0,
                                 int candidates = 256,
                                 std::uint64_t seed = 0x9e3779b9) {
  if (p == 0) p = decomp.mu();
  return detail::select_time_grid_generic(
      [&decomp](const TimeGrid& grid) { return lambda_matrix(decomp, grid); },
      horizon, p, decomp.mu(), candidates, seed);
}

/// Solve the time-signal system for every observable: returns the r x mu
/// matrix of projections Tr{(Q_i o A_k^T) rho(0)}. Exact solve when the
/// matrix is square and invertible; least squares when overdetermined with
/// full column rank.
inline ComplexMatrix solve_projections(const MeasurementRecord& record,
                                       const ComplexMatrix& lm) {
  record.validate();
  if (record.values.cols() != lm.rows())
    throw DimensionError("solve_projections: record instants do not match the "
                         "time-signal matrix rows");
  const SolvabilityReport gate = check_solvability(lm);
  if (lm.rows() < lm.cols())
    throw SolvabilityError("solve_projections: fewer instants than basis "
                           "elements; the system is underdetermined");
  if (gate.square && !gate.invertible)
    throw SolvabilityError("solve_projections: time-signal matrix is square "
                           "but numerically singular (coincident instants or "
                           "dependent signals)");
  if (!gate.square) {
    Eigen::JacobiSVD<ComplexMatrix> svd(lm);
    const auto& sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(sv.size() - 1) <= tol::rank * sv(0))
      throw SolvabilityError("solve_projections: time-signal matrix is rank "
                             "deficient");
  }

  Eigen::JacobiSVD<ComplexMatrix> svd(lm, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto r = record.values.rows();
  ComplexMatrix projections(r, lm.cols());
  for (Eigen::Index i = 0; i < r; ++i) {
    const ComplexVector rhs = record.values.row(i).transpose().cast<Complex>();
    projections.row(i) = svd.solve(rhs).transpose();
  }
  return projections;
}

/// The operators Q_i o A_k^T onto which the initial state is projected.
struct FrameOperators {
  Eigen::Index dim = 0;
  std::vector<std::vector<ComplexMatrix>> ops;  // [observable][basis element]

  Eigen::Index observable_count() const {
    return static_cast<Eigen::Index>(ops.size());
  }
  Eigen::Index basis_count() const {
    return ops.empty() ? 0 : static_cast<Eigen::Index>(ops.front().size());
  }
};

inline FrameOperators frame_operators(const std::vector<Observable>& observables,
                                      const BasisDecomposition& decomp) {
  if (observables.empty())
    throw DimensionError("frame_operators: no observables");
  FrameOperators frame;
  frame.dim = decomp.dim();
  frame.ops.reserve(observables.size());
  for (const auto& q : observables) {
    if (q.dim() != decomp.dim())
      throw DimensionError("frame_operators: observable dimension mismatch");
    std::vector<ComplexMatrix> row;
    row.reserve(decomp.basis.size());
    for (const auto& a : decomp.basis)
      row.push_back(hadamard(q.matrix(), a.transpose()));
    frame.ops.push_back(std::move(row));
  }
  return frame;
}

/// Completeness of the frame: the state is reconstructible from the
/// projections exactly when the frame operators span the full operator
/// space. `span_dimension` is the complex span; the real span over
/// Hermitian components is reported alongside as a diagnostic.
struct CompletenessReport {
  bool complete = false;
  int span_dimension = 0;
  int deficit = 0;
  int hermitian_span_dimension = 0;
  bool trace_augmented = false;
};

inline CompletenessReport check_completeness(const FrameOperators& frame,
                                             bool include_trace_constraint) {
  const Eigen::Index n = frame.dim;
  std::vector<ComplexMatrix> flat;
  for (const auto& row : frame.ops)
    for (const auto& m : row) flat.push_back(m);
  if (include_trace_constraint) flat.push_back(identity_matrix(n));

  CompletenessReport report;
  report.trace_augmented = include_trace_constraint;
  report.span_dimension = numerical_rank(flat);
  report.deficit = static_cast<int>(n * n) - report.span_dimension;
  report.complete = report.deficit == 0;

  // Hermitian/anti-Hermitian components, ranked over the reals.
  std::vector<ComplexMatrix> herm_parts;
  for (const auto& m : flat) {
    herm_parts.push_back((m + m.adjoint()) / 2.0);
    const ComplexMatrix anti = (m - m.adjoint()) / Complex(0, 2);
    if (max_abs(anti) > 0.0) herm_parts.push_back(anti);
  }
  report.hermitian_span_dimension = numerical_rank_hermitian(herm_parts);
  return report;
}

/// Everything the reconstruction produced, plus the diagnostics needed to
/// judge it: completeness of the frame, conditioning, fit residual, and
/// whether the output was projected back onto the density-matrix set.
struct ReconstructionReport {
  ComplexMatrix state;  // empty when the frame is incomplete
  bool complete = false;
  int span_dimension = 0;
  int deficit = 0;
  int hermitian_span_dimension = 0;
  double lambda_condition = std::numeric_limits<double>::quiet_NaN();
  double residual = 0;
  double frame_condition = 0;
  bool conditioning_warning = false;
  bool projected_to_density = false;
  double min_eigenvalue = 0;  // of the raw Hermitian solution
};

/// Recover rho(0) from the projection data. The state is parametrized by
/// real coordinates over hermitian_basis(n); each frame datum contributes
/// its real and imaginary parts as separate equations (the frame operators
/// need not be Hermitian), the trace constraint optionally appends
/// Tr rho = 1, and the system is solved by least squares. Positivity is
/// never enforced by the solver; projection onto the density set is an
/// explicit opt-in recorded in the report.
inline ReconstructionReport reconstruct_state(const ComplexMatrix& projections,
                                              const FrameOperators& frame,
                                              bool include_trace_constraint = true,
                                              bool project_to_density = false) {
  if (projections.rows() != frame.observable_count() ||
      projections.cols() != frame.basis_count())
    throw DimensionError("reconstruct_state: projection matrix must be "
                         "(observables x basis elements)");

  const CompletenessReport completeness =
      check_completeness(frame, include_trace_constraint);
  ReconstructionReport report;
  report.complete = completeness.complete;
  report.span_dimension = completeness.span_dimension;
  report.deficit = completeness.deficit;
  report.hermitian_span_dimension = completeness.hermitian_span_dimension;
  if (!completeness.complete) return report;

  const Eigen::Index n = frame.dim;
  const HermitianBasis basis = hermitian_basis(n);
  const auto unknowns = static_cast<Eigen::Index>(basis.operators.size());
  const Eigen::Index data_rows = 2 * frame.observable_count() * frame.basis_count();
  const Eigen::Index rows = data_rows + (include_trace_constraint ? 1 : 0);

  RealMatrix a(rows, unknowns);
  RealVector b(rows);
  Eigen::Index at = 0;
  for (Eigen::Index i = 0; i < frame.observable_count(); ++i) {
    for (Eigen::Index k = 0; k < frame.basis_count(); ++k) {
      const ComplexMatrix& m =
          frame.ops[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      for (Eigen::Index c = 0; c < unknowns; ++c) {
        const Complex coeff =
            (m * basis.operators[static_cast<std::size_t>(c)]).trace();
        a(at, c) = coeff.real();
        a(at + 1, c) = coeff.imag();
      }
      b(at) = projections(i, k).real();
      b(at + 1) = projections(i, k).imag();
      at += 2;
    }
  }
  if (include_trace_constraint) {
    for (Eigen::Index c = 0; c < unknowns; ++c)
      a(at, c) = basis.operators[static_cast<std::size_t>(c)].trace().real();
    b(at) = 1.0;
  }

  Eigen::JacobiSVD<RealMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector coords = svd.solve(b);
  const auto& sv = svd.singularValues();
  report.frame_condition =
      sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                              : std::numeric_limits<double>::infinity();
  report.conditioning_warning = report.frame_condition > 1e12;
  report.residual = (a * coords - b).norm();

  ComplexMatrix rho = ComplexMatrix::Zero(n, n);
  for (Eigen::Index c = 0; c < unknowns; ++c)
    rho += coords(c) * basis.operators[static_cast<std::size_t>(c)];
  rho = ((rho + rho.adjoint()) / 2.0).eval();

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho, Eigen::EigenvaluesOnly);
  report.min_eigenvalue = es.eigenvalues().minCoeff();
  if (project_to_density) {
    report.state = nearest_density(rho).matrix();
    report.projected_to_density = true;
  } else {
    report.state = std::move(rho);
  }
  return report;
}

/// Smallest observable subset (greedy forward selection) whose frame,
/// together with the trace constraint, still spans the operator space.
/// Ties break toward the lowest dictionary index.
struct MinimalObservableSet {
  std::vector<std::size_t> indices;
  std::vector<Observable> subset;
  int size = 0;
};

inline MinimalObservableSet minimal_observables(
    const std::vector<Observable>& dictionary,
    const BasisDecomposition& decomp) {
  const FrameOperators full = frame_operators(dictionary, decomp);
  const Eigen::Index n = decomp.dim();
  const CompletenessReport all = check_completeness(full, true);
  if (!all.complete)
    throw CompletenessError(
        "minimal_observables: the dictionary frame is incomplete even with "
        "the trace constraint; deficit " + std::to_string(all.deficit),
        all.deficit);

  std::vector<ComplexMatrix> span = {identity_matrix(n)};
  std::vector<std::size_t> chosen;
  std::vector<bool> used(dictionary.size(), false);
  int span_dim = 1;

  while (span_dim < static_cast<int>(n * n)) {
    int best_gain = 0;
    std::size_t best_index = dictionary.size();
    int best_dim = span_dim;
    for (std::size_t i = 0; i < dictionary.size(); ++i) {
      if (used[i]) continue;
      std::vector<ComplexMatrix> trial = span;
      for (const auto& op : full.ops[i]) trial.push_back(op);
      const int dim_with = numerical_rank(trial);
      if (dim_with - span_dim > best_gain) {
        best_gain = dim_with - span_dim;
        best_index = i;
        best_dim = dim_with;
      }
    }
    if (best_index == dictionary.size()) break;  // cannot grow further
    used[best_index] = true;
    chosen.push_back(best_index);
    for (const auto& op : full.ops[best_index]) span.push_back(op);
    span_dim = best_dim;
  }

  MinimalObservableSet out;
  out.indices = std::move(chosen);
  for (std::size_t i : out.indices) out.subset.push_back(dictionary[i]);
  out.size = static_cast<int>(out.subset.size());
  return out;
}

/// Closed-form qubit recovery for the exponential-dephasing channel from
/// m1(0), m2(0), m2(t): assembles the Bloch components measured through
/// sigma_x at t = 0 and through (sigma_y + sigma_z) at t = 0 and t > 0.
/// Hermitian and unit trace by construction; positivity depends on the
/// data and is flagged rather than enforced.
struct ClosedFormState {
  ComplexMatrix state;
  bool positive = false;
  double min_eigenvalue = 0;
};

inline ClosedFormState dephasing_closed_form(double m1_0, double m2_0,
                                             double m2_t, double gamma,
                                             double t) {
  if (!(gamma > 0.0) || !(t > 0.0))
    throw DomainError("dephasing_closed_form: need gamma > 0 and t > 0; the "
                      "two-instant system degenerates otherwise");
  const double decay = std::exp(-gamma * t);
  const double denom = decay - 1.0;
  const double bloch_y = (m2_t - m2_0) / denom;
  const double bloch_z = (m2_0 * decay - m2_t) / denom;
  ClosedFormState out;
  out.state = 0.5 * (identity_matrix(2) + m1_0 * pauli_x() +
                     bloch_y * pauli_y() + bloch_z * pauli_z());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(out.state,
                                                  Eigen::EigenvaluesOnly);
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  out.positive = out.min_eigenvalue >= -tol::psd;
  return out;
}

}  // namespace hadtomo
