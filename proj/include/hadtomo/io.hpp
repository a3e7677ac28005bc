#pragma once

// Serialization: scenario JSON (complex numbers as [re, im] pairs,
// matrices as nested arrays), measurement-record CSV, and report assembly
// helpers shared by the CLI.

#include "hadtomo/decoherence.hpp"
#include "hadtomo/tomography.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace hadtomo {

using Json = nlohmann::json;

class ParseError : public Error {
 public:
  using Error::Error;
};

/// 17 significant digits: enough to round-trip any double exactly.
inline std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline Json complex_to_json(const Complex& z) {
  return Json::array({z.real(), z.imag()});
}

inline Complex complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError("expected a complex number as [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json matrix_to_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ComplexMatrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty())
    throw ParseError("expected a matrix as a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  if (cols == 0) throw ParseError("matrix rows must be nonempty");
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_array() ||
        static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols)
      throw ParseError("matrix rows have inconsistent lengths");
    for (Eigen::Index k = 0; k < cols; ++k)
      m(i, k) = complex_from_json(j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
  }
  return m;
}

inline Json signal_to_json(const ScalarSignal& s) {
  Json j;
  if (s.is_exponential_sum()) {
    j["type"] = "exponential_sum";
    Json terms = Json::array();
    for (const auto& term : s.terms())
      terms.push_back(Json{{"coeff", complex_to_json(term.coeff)},
                           {"rate", complex_to_json(term.rate)}});
    j["terms"] = std::move(terms);
  } else {
    j["type"] = "tabulated";
    Json points = Json::array();
    const auto& tab = s.table();
    for (std::size_t i = 0; i < tab.times.size(); ++i)
      points.push_back(Json{{"t", tab.times[i]},
                            {"value", complex_to_json(tab.values[i])}});
    j["points"] = std::move(points);
  }
  return j;
}

inline ScalarSignal signal_from_json(const Json& j) {
  const std::string type = j.value("type", "");
  if (type == "exponential_sum") {
    if (!j.contains("terms") || !j["terms"].is_array())
      throw ParseError("exponential_sum signal needs a 'terms' array");
    std::vector<ExponentialTerm> terms;
    for (const auto& tj : j["terms"])
      terms.push_back({complex_from_json(tj.at("coeff")),
                       complex_from_json(tj.at("rate"))});
    return ScalarSignal::exponential_sum(std::move(terms));
  }
  if (type == "tabulated") {
    if (!j.contains("points") || !j["points"].is_array())
      throw ParseError("tabulated signal needs a 'points' array");
    std::vector<double> times;
    std::vector<Complex> values;
    for (const auto& pj : j["points"]) {
      times.push_back(pj.at("t").get<double>());
      values.push_back(complex_from_json(pj.at("value")));
    }
    return ScalarSignal::tabulated(std::move(times), std::move(values));
  }
  throw ParseError("unknown signal type '" + type + "'");
}

inline Json decomposition_to_json(const BasisDecomposition& d) {
  Json j;
  Json basis = Json::array();
  for (const auto& a : d.basis) basis.push_back(matrix_to_json(a));
  Json signals = Json::array();
  for (const auto& s : d.signals) signals.push_back(signal_to_json(s));
  j["basis"] = std::move(basis);
  j["signals"] = std::move(signals);
  return j;
}

inline BasisDecomposition decomposition_from_json(const Json& j) {
  if (!j.contains("basis") || !j.contains("signals"))
    throw ParseError("decomposition needs 'basis' and 'signals'");
  BasisDecomposition d;
  for (const auto& mj : j["basis"]) d.basis.push_back(matrix_from_json(mj));
  for (const auto& sj : j["signals"]) d.signals.push_back(signal_from_json(sj));
  return d;
}

inline Json damping_model_to_json(const DampingModel& m) {
  Json j;
  j["type"] = "damping_model";
  j["dim"] = m.dim();
  if (m.is_decomposed()) {
    j["decomposition"] = decomposition_to_json(m.decomposition());
    return j;
  }
  if (const auto* samples = m.table()) {
    Json sj = Json::array();
    for (const auto& s : *samples)
      sj.push_back(Json{{"t", s.t}, {"matrix", matrix_to_json(s.matrix)}});
    j["samples"] = std::move(sj);
    return j;
  }
  throw DomainError("damping_model_to_json: an opaque sampled channel has no "
                    "serial form; decompose or tabulate it first");
}

inline PureDecoherenceModel decoherence_from_json(const Json& j) {
  std::vector<double> energies;
  for (const auto& e : j.at("system_energies")) energies.push_back(e.get<double>());
  ComplexMatrix env_h = matrix_from_json(j.at("env_hamiltonian"));
  std::vector<ComplexMatrix> couplings;
  for (const auto& cj : j.at("couplings")) couplings.push_back(matrix_from_json(cj));
  DensityMatrix env_state(matrix_from_json(j.at("env_state")));
  return PureDecoherenceModel(std::move(energies), std::move(env_h),
                              std::move(couplings), std::move(env_state));
}

inline Json decoherence_to_json(const PureDecoherenceModel& m) {
  Json j;
  j["type"] = "pure_decoherence";
  j["system_energies"] = m.system_energies();
  j["env_hamiltonian"] = matrix_to_json(m.env_hamiltonian());
  Json couplings = Json::array();
  for (const auto& b : m.couplings()) couplings.push_back(matrix_to_json(b));
  j["couplings"] = std::move(couplings);
  j["env_state"] = matrix_to_json(m.env_state().matrix());
  return j;
}

/// Either explicit measurement instants or an automatic grid search over
/// [0, horizon].
struct GridSpec {
  std::vector<double> times;
  bool auto_select = false;
  std::optional<double> horizon;
};

/// One tomography run: a channel (exactly one of damping model or
/// microscopic decoherence model), observables, a grid, and either a true
/// state to simulate from or a record file to reconstruct from.
struct Scenario {
  std::string name;
  std::optional<DampingModel> channel;
  std::optional<PureDecoherenceModel> micro;
  std::optional<ComplexMatrix> true_state;
  std::optional<std::string> record_path;
  std::vector<Observable> observables;
  GridSpec grid;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  bool trace_augmentation = true;
  bool project_to_density = false;

  Eigen::Index dim() const {
    if (channel) return channel->dim();
    return micro->system_dim();
  }
};

inline Scenario scenario_from_json(const Json& j) {
  Scenario s;
  s.name = j.value("name", "scenario");
  if (!j.contains("channel")) throw ParseError("scenario needs a 'channel'");
  const Json& cj = j["channel"];
  const std::string type = cj.value("type", "");
  if (type == "damping_model") {
    if (cj.contains("decomposition")) {
      s.channel = DampingModel::decomposed(
          decomposition_from_json(cj["decomposition"]));
    } else if (cj.contains("samples")) {
      std::vector<DampingModel::MatrixSample> samples;
      for (const auto& sj : cj["samples"])
        samples.push_back({sj.at("t").get<double>(),
                           matrix_from_json(sj.at("matrix"))});
      s.channel = DampingModel::tabulated(std::move(samples));
    } else {
      throw ParseError("damping_model channel needs 'decomposition' or "
                       "'samples'");
    }
  } else if (type == "pure_decoherence") {
    s.micro = decoherence_from_json(cj);
  } else {
    throw ParseError("channel type must be 'damping_model' or "
                     "'pure_decoherence'");
  }

  if (j.contains("true_state")) s.true_state = matrix_from_json(j["true_state"]);
  if (j.contains("record_path")) s.record_path = j["record_path"].get<std::string>();
  if (s.true_state && s.record_path)
    throw ParseError("scenario cannot carry both 'true_state' and "
                     "'record_path'");

  if (!j.contains("observables") || !j["observables"].is_array() ||
      j["observables"].empty())
    throw ParseError("scenario needs a nonempty 'observables' array");
  std::size_t auto_label = 0;
  for (const auto& oj : j["observables"]) {
    std::string label = oj.value("label", "");
    if (label.empty()) label = "Q" + std::to_string(++auto_label);
    s.observables.emplace_back(matrix_from_json(oj.at("matrix")), label);
  }

  if (!j.contains("grid")) throw ParseError("scenario needs a 'grid'");
  const Json& gj = j["grid"];
  if (gj.contains("times")) {
    for (const auto& t : gj["times"]) s.grid.times.push_back(t.get<double>());
    if (s.grid.times.empty()) throw ParseError("grid 'times' is empty");
  } else if (gj.value("auto", false)) {
    s.grid.auto_select = true;
    if (gj.contains("horizon")) s.grid.horizon = gj["horizon"].get<double>();
  } else {
    throw ParseError("grid needs 'times' or 'auto': true");
  }

  s.noise_sigma = j.value("noise_sigma", 0.0);
  if (s.noise_sigma < 0.0) throw ParseError("noise_sigma must be >= 0");
  s.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("options")) {
    const Json& oj = j["options"];
    s.trace_augmentation = oj.value("trace_augmentation", true);
    s.project_to_density = oj.value("project_to_density", false);
  }
  return s;
}

inline Json scenario_to_json(const Scenario& s) {
  Json j;
  j["name"] = s.name;
  if (s.channel)
    j["channel"] = damping_model_to_json(*s.channel);
  else if (s.micro)
    j["channel"] = decoherence_to_json(*s.micro);
  if (s.true_state) j["true_state"] = matrix_to_json(*s.true_state);
  if (s.record_path) j["record_path"] = *s.record_path;
  Json obs = Json::array();
  for (const auto& q : s.observables)
    obs.push_back(Json{{"label", q.label()}, {"matrix", matrix_to_json(q.matrix())}});
  j["observables"] = std::move(obs);
  if (!s.grid.times.empty()) {
    j["grid"] = Json{{"times", s.grid.times}};
  } else {
    j["grid"] = Json{{"auto", true}};
    if (s.grid.horizon) j["grid"]["horizon"] = *s.grid.horizon;
  }
  j["noise_sigma"] = s.noise_sigma;
  j["seed"] = s.seed;
  j["options"] = Json{{"trace_augmentation", s.trace_augmentation},
                      {"project_to_density", s.project_to_density}};
  return j;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ParseError("invalid JSON in '" + path + "': " + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const Json::exception& e) {
    throw ParseError("invalid scenario in '" + path + "': " + e.what());
  }
}

/// CSV layout: header `t,<label_1>,...,<label_r>`, one row per instant.
inline void write_record_csv(const MeasurementRecord& record,
                             std::ostream& out) {
  record.validate();
  out << "t";
  for (const auto& q : record.observables) out << "," << q.label();
  out << "\n";
  for (Eigen::Index j = 0; j < record.grid.size(); ++j) {
    out << format_real(record.grid[j]);
    for (Eigen::Index i = 0; i < record.values.rows(); ++i)
      out << "," << format_real(record.values(i, j));
    out << "\n";
  }
}

inline MeasurementRecord read_record_csv(std::istream& in,
                                         const std::vector<Observable>& observables) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("record CSV: empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.empty() || header.front() != "t")
    throw ParseError("record CSV: header must start with 't'");
  if (header.size() != observables.size() + 1)
    throw ParseError("record CSV: header has " +
                     std::to_string(header.size() - 1) + " observables, "
                     "scenario has " + std::to_string(observables.size()));
  for (std::size_t i = 0; i < observables.size(); ++i)
    if (header[i + 1] != observables[i].label())
      throw ParseError("record CSV: column '" + header[i + 1] +
                       "' does not match observable '" +
                       observables[i].label() + "'");

  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError("record CSV: bad number '" + cell + "'");
      }
    }
    if (row.size() != header.size())
      throw ParseError("record CSV: row width mismatch");
    times.push_back(row.front());
    rows.push_back(std::vector<double>(row.begin() + 1, row.end()));
  }
  if (times.empty()) throw ParseError("record CSV: no data rows");

  RealMatrix values(static_cast<Eigen::Index>(observables.size()),
                    static_cast<Eigen::Index>(times.size()));
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (std::size_t i = 0; i < observables.size(); ++i)
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[j][i];
  MeasurementRecord record{observables, TimeGrid(times), std::move(values)};
  record.validate();
  return record;
}

inline Json validation_to_json(const ValidationReport& report) {
  return Json{{"psd_ok", report.psd_ok},
              {"diag_ok", report.diag_ok},
              {"init_ok", report.init_ok},
              {"ok", report.ok()},
              {"worst_violations",
               Json{{"psd", report.worst_psd_violation},
                    {"hermiticity", report.worst_hermiticity_defect},
                    {"diag", report.worst_diag_violation},
                    {"init", report.worst_init_violation}}}};
}

}  // namespace hadtomo
