#pragma once

// Scenario orchestration shared by the CLI subcommands: resolve the channel
// (synthesizing and decomposing when needed), pick the measurement grid,
// simulate or ingest the record, solve for projections, and reconstruct.

#include "hadtomo/io.hpp"

#include <cmath>

namespace hadtomo {

/// Channel resolved to something the solver can use: the evaluable model
/// plus a constant-basis decomposition (native or extracted from samples).
struct ChannelBundle {
  DampingModel channel;
  BasisDecomposition decomposition;
  bool extracted = false;
  std::vector<double> extraction_grid;
  double max_extraction_residual = 0.0;
};

namespace detail {

/// Slowest decay among the exponential terms, i.e. the smallest nonzero
/// |Re(rate)|; zero when every term is constant or purely oscillatory.
inline double slowest_decay_rate(const BasisDecomposition& decomp) {
  double slowest = 0.0;
  for (const auto& signal : decomp.signals) {
    if (!signal.is_exponential_sum()) continue;
    for (const auto& term : signal.terms()) {
      const double decay = std::abs(term.rate.real());
      if (decay > 0.0 && (slowest == 0.0 || decay < slowest)) slowest = decay;
    }
  }
  return slowest;
}

inline std::vector<double> uniform_grid(double horizon, Eigen::Index points) {
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (Eigen::Index i = 0; i < points; ++i)
    grid[static_cast<std::size_t>(i)] =
        horizon * static_cast<double>(i) / static_cast<double>(points - 1);
  return grid;
}

}  // namespace detail

/// Horizon for automatic grids: 3 / (slowest decay rate) when the
/// decomposition carries decaying exponential signals, otherwise the
/// caller must supply one.
inline double resolve_horizon(const Scenario& scenario,
                              const BasisDecomposition* decomp) {
  if (!scenario.grid.times.empty())
    return scenario.grid.times.back() > 0.0 ? scenario.grid.times.back() : 1.0;
  if (scenario.grid.horizon) {
    if (*scenario.grid.horizon <= 0.0)
      throw DomainError("grid horizon must be > 0");
    return *scenario.grid.horizon;
  }
  if (decomp) {
    const double rate = detail::slowest_decay_rate(*decomp);
    if (rate > 0.0) return 3.0 / rate;
  }
  throw DomainError("automatic grid needs an explicit horizon: the channel "
                    "carries no decaying exponential signal to derive one "
                    "from");
}

/// Build the evaluable channel and its decomposition. Sampled channels are
/// decomposed greedily over 4 n^2 uniform candidates on [0, horizon].
inline ChannelBundle resolve_channel(const Scenario& scenario,
                                     double extraction_tol = 1e-9) {
  std::optional<DampingModel> channel = scenario.channel;
  if (scenario.micro) {
    const Eigen::Index n = scenario.micro->system_dim();
    const double horizon = resolve_horizon(scenario, nullptr);
    const std::vector<double> probes =
        detail::uniform_grid(horizon, std::max<Eigen::Index>(4 * n * n, 2));
    channel = to_channel(*scenario.micro, probes);
  }

  ChannelBundle bundle{*channel, BasisDecomposition{}, false, {}, 0.0};
  if (channel->is_decomposed()) {
    bundle.decomposition = channel->decomposition();
    return bundle;
  }

  const Eigen::Index n = channel->dim();
  const double horizon =
      resolve_horizon(scenario, nullptr);  // sampled: explicit or user horizon
  std::vector<double> candidates =
      detail::uniform_grid(horizon, std::max<Eigen::Index>(4 * n * n, 2));
  // Keep the scenario's own instants in the candidate pool so tabulated
  // channels are probed exactly where data will be taken.
  for (double t : scenario.grid.times) candidates.push_back(t);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  bundle.decomposition = extract_basis(*channel, candidates, extraction_tol);
  bundle.extracted = true;
  bundle.extraction_grid = std::move(candidates);
  for (double t : bundle.extraction_grid) {
    double residual = 0.0;
    basis_coordinates(bundle.decomposition.basis, channel->evaluate(t),
                      &residual);
    bundle.max_extraction_residual =
        std::max(bundle.max_extraction_residual, residual);
  }
  return bundle;
}

/// Time-signal matrix along the route appropriate for how the channel is
/// represented: native signals when decomposed, exact per-sample projection
/// otherwise.
inline ComplexMatrix pipeline_lambda_matrix(const ChannelBundle& bundle,
                                            const TimeGrid& grid) {
  if (bundle.extracted)
    return lambda_matrix_from_samples(bundle.channel,
                                      bundle.decomposition.basis, grid);
  return lambda_matrix(bundle.decomposition, grid);
}

inline TimeGrid resolve_grid(const Scenario& scenario,
                             const ChannelBundle& bundle) {
  if (!scenario.grid.times.empty()) return TimeGrid(scenario.grid.times);
  const double horizon = resolve_horizon(scenario, &bundle.decomposition);
  return detail::select_time_grid_generic(
      [&bundle](const TimeGrid& grid) {
        return pipeline_lambda_matrix(bundle, grid);
      },
      horizon, bundle.decomposition.mu(), bundle.decomposition.mu(), 256,
      scenario.seed);
}

struct PipelineResult {
  ChannelBundle bundle;
  TimeGrid grid;
  MeasurementRecord record;
  ComplexMatrix lambda;
  SolvabilityReport solvability;
  ComplexMatrix projections;
  ReconstructionReport reconstruction;
  double frobenius_error = std::numeric_limits<double>::quiet_NaN();

  PipelineResult(ChannelBundle b, TimeGrid g, MeasurementRecord r)
      : bundle(std::move(b)), grid(std::move(g)), record(std::move(r)) {}
};

/// The full tomography pipeline. Frame incompleteness is reported, not
/// thrown, so callers can still inspect and emit the diagnostics.
inline PipelineResult run_scenario(const Scenario& scenario) {
  ChannelBundle bundle = resolve_channel(scenario);

  MeasurementRecord record = [&]() -> MeasurementRecord {
    if (scenario.true_state) {
      const TimeGrid grid = resolve_grid(scenario, bundle);
      const DensityMatrix rho0(*scenario.true_state);
      return simulate_measurements(bundle.channel, rho0, scenario.observables,
                                   grid, scenario.noise_sigma, scenario.seed);
    }
    if (!scenario.record_path)
      throw DomainError("scenario carries neither a true state to simulate "
                        "from nor a record file to reconstruct from");
    std::ifstream in(*scenario.record_path);
    if (!in)
      throw ParseError("cannot open record file '" + *scenario.record_path +
                       "'");
    MeasurementRecord loaded = read_record_csv(in, scenario.observables);
    return loaded;
  }();

  // Reconstruction must use the instants the data was actually taken at.
  TimeGrid data_grid = record.grid;
  PipelineResult result(std::move(bundle), std::move(data_grid),
                        std::move(record));
  result.lambda = pipeline_lambda_matrix(result.bundle, result.grid);
  result.solvability = check_solvability(result.lambda);
  result.projections = solve_projections(result.record, result.lambda);

  const FrameOperators frame =
      frame_operators(scenario.observables, result.bundle.decomposition);
  result.reconstruction =
      reconstruct_state(result.projections, frame, scenario.trace_augmentation,
                        scenario.project_to_density);
  result.reconstruction.lambda_condition = result.solvability.condition;

  if (scenario.true_state && result.reconstruction.complete)
    result.frobenius_error =
        (result.reconstruction.state - *scenario.true_state).norm();
  return result;
}

inline Json reconstruction_to_json(const ReconstructionReport& report) {
  Json j{{"complete", report.complete},
         {"span_dimension", report.span_dimension},
         {"deficit", report.deficit},
         {"hermitian_span_dimension", report.hermitian_span_dimension},
         {"residual", report.residual},
         {"frame_condition", report.frame_condition},
         {"conditioning_warning", report.conditioning_warning},
         {"projected_to_density", report.projected_to_density},
         {"min_eigenvalue", report.min_eigenvalue}};
  j["lambda_condition"] = std::isnan(report.lambda_condition)
                              ? Json(nullptr)
                              : Json(report.lambda_condition);
  if (report.complete) j["state"] = matrix_to_json(report.state);
  return j;
}

inline Json pipeline_report(const Scenario& scenario,
                            const PipelineResult& result) {
  Json j;
  j["scenario"] = scenario.name;
  j["channel"] = {{"dim", result.bundle.channel.dim()},
                  {"mu", result.bundle.decomposition.mu()},
                  {"extracted", result.bundle.extracted},
                  {"max_extraction_residual",
                   result.bundle.max_extraction_residual}};
  j["grid"] = result.grid.instants();
  j["lambda"] = {{"square", result.solvability.square},
                 {"invertible", result.solvability.invertible},
                 {"condition", result.solvability.condition}};
  Json proj = Json::array();
  for (Eigen::Index i = 0; i < result.projections.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < result.projections.cols(); ++k)
      row.push_back(complex_to_json(result.projections(i, k)));
    proj.push_back(std::move(row));
  }
  j["projections"] = std::move(proj);
  j["reconstruction"] = reconstruction_to_json(result.reconstruction);
  if (!std::isnan(result.frobenius_error))
    j["true_state_frobenius_error"] = result.frobenius_error;
  return j;
}

/// Dephasing walkthrough: the qubit channel with off-diagonal decay
/// exp(-gamma t), its two-element decomposition, the two stock observables,
/// exact measurement values from a reference state, the two-instant
/// projection solve, and the closed-form recovery.
inline Json demo_dephasing(double gamma, double t) {
  if (!(gamma > 0.0)) throw DomainError("demo: gamma must be > 0");
  if (!(t > 0.0))
    throw DomainError("demo: t must be > 0; the closed-form denominator "
                      "exp(-gamma t) - 1 vanishes at t = 0");

  ComplexMatrix rho0(2, 2);
  rho0 << 0.6, Complex(0.1, -0.2), Complex(0.1, 0.2), 0.4;
  const DensityMatrix state(rho0);

  BasisDecomposition decomp;
  decomp.basis = {identity_matrix(2), pauli_x()};
  decomp.signals = {ScalarSignal::constant(1.0),
                    ScalarSignal::exponential_sum({{1.0, Complex(-gamma, 0)}})};
  const DampingModel channel = DampingModel::decomposed(decomp);

  const std::vector<Observable> observables = {
      Observable(pauli_x(), "sigma_x"),
      Observable(pauli_y() + pauli_z(), "sigma_y_plus_sigma_z")};

  // Closed-form route; throws for t <= 0 before any output is assembled.
  const TimeGrid grid({0.0, t});
  const MeasurementRecord record =
      simulate_measurements(channel, state, observables, grid);
  const double m1_0 = record.values(0, 0);
  const double m2_0 = record.values(1, 0);
  const double m2_t = record.values(1, 1);
  const ClosedFormState recovered =
      dephasing_closed_form(m1_0, m2_0, m2_t, gamma, t);

  const double decay = std::exp(-gamma * t);
  const double bloch_y = (m2_t - m2_0) / (decay - 1.0);
  const double bloch_z = (m2_0 * decay - m2_t) / (decay - 1.0);

  Json j;
  j["gamma"] = gamma;
  j["t"] = t;
  j["damping_matrix"] = matrix_to_json(channel.evaluate(t));
  j["decomposition"] = decomposition_to_json(decomp);
  Json obs = Json::array();
  for (const auto& q : observables)
    obs.push_back(Json{{"label", q.label()}, {"matrix", matrix_to_json(q.matrix())}});
  j["observables"] = std::move(obs);
  j["measurements"] = {{"m1_0", m1_0}, {"m2_0", m2_0}, {"m2_t", m2_t}};
  j["projections"] = {{"sigma_x", m1_0},
                      {"sigma_y", bloch_y},
                      {"sigma_z", bloch_z}};
  j["state"] = matrix_to_json(recovered.state);
  j["positive"] = recovered.positive;
  j["min_eigenvalue"] = recovered.min_eigenvalue;
  // With exp(-gamma t) below the double-precision floor the late-time row
  // of the two-instant system carries no decay information anymore.
  j["conditioning_warning"] = decay < 1e-15;
  return j;
}

}  // namespace hadtomo
