#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sensched/bounds.hpp"
#include "sensched/errors.hpp"
#include "sensched/linalg.hpp"
#include "sensched/model.hpp"
#include "sensched/relaxation.hpp"
#include "sensched/riccati.hpp"
#include "sensched/scheduler.hpp"

namespace sensched {

using Json = nlohmann::json;

inline constexpr int kScenarioFormatVersion = 1;
inline constexpr int kRelaxedFormatVersion = 1;

/// printf-style %.*g formatting; used for every number written to text files.
inline std::string format_double(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

namespace detail {

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline const Json& field(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + (path.empty() ? "" : ".") + key + ": missing field");
  return *it;
}

inline int int_field(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = field(obj, key, path);
  if (!v.is_number_integer()) throw SchemaError(key + ": expected an integer");
  return v.get<int>();
}

inline Matrix matrix_from_json(const Json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) throw SchemaError(name + ": expected a nonempty array of rows");
  const auto rows = static_cast<int>(j.size());
  if (!j[0].is_array()) throw SchemaError(name + ": expected an array of rows");
  const auto cols = static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      throw SchemaError(name + ": ragged row " + std::to_string(i));
    for (int c = 0; c < cols; ++c) {
      const Json& x = row[static_cast<std::size_t>(c)];
      if (!x.is_number()) throw SchemaError(name + ": non-numeric entry");
      m(i, c) = x.get<double>();
    }
  }
  return m;
}

inline bool is_matrix_list(const Json& j) {
  return j.is_array() && !j.empty() && j[0].is_array() && !j[0].empty() && j[0][0].is_array();
}

inline std::vector<Matrix> matrix_list_from_json(const Json& j, const std::string& name) {
  std::vector<Matrix> out;
  if (is_matrix_list(j)) {
    for (std::size_t k = 0; k < j.size(); ++k)
      out.push_back(matrix_from_json(j[k], name + "[" + std::to_string(k) + "]"));
  } else {
    out.push_back(matrix_from_json(j, name));
  }
  return out;
}

inline Json matrix_list_to_json(const std::vector<Matrix>& ms) {
  Json arr = Json::array();
  for (const auto& m : ms) arr.push_back(matrix_to_json(m));
  return arr;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write " + path);
  out << content;
  if (!out) throw ParameterError("write failed: " + path);
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(what + ": " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario document
// ---------------------------------------------------------------------------

inline Json scenario_to_json(const Scenario& sc) {
  Json j;
  j["format"] = "sensched-scenario";
  j["version"] = kScenarioFormatVersion;
  j["n"] = sc.state_dim();
  j["T"] = sc.horizon();
  j["N"] = sc.num_sensors();
  j["A"] = detail::matrix_list_to_json(sc.system.dynamics.items());
  j["W"] = detail::matrix_to_json(sc.system.process_noise);
  j["Sigma0"] = detail::matrix_to_json(sc.system.prior_cov);
  Json mu = Json::array();
  for (int i = 0; i < sc.system.prior_mean.size(); ++i) mu.push_back(sc.system.prior_mean(i));
  j["mu0"] = mu;
  Json sensors = Json::array();
  for (const auto& s : sc.sensors.sensors()) {
    Json js;
    js["C"] = s.observation.time_invariant() ? detail::matrix_to_json(s.observation.items().front())
                                             : detail::matrix_list_to_json(s.observation.items());
    js["V"] = detail::matrix_to_json(s.noise_cov);
    sensors.push_back(std::move(js));
  }
  j["sensors"] = sensors;
  j["seed"] = sc.seed ? Json(*sc.seed) : Json(nullptr);
  return j;
}

inline Scenario scenario_from_json(const Json& j) {
  const int version = detail::int_field(j, "version", "");
  if (version != kScenarioFormatVersion)
    throw SchemaError("version: unsupported scenario format version " + std::to_string(version));
  const int n = detail::int_field(j, "n", "");
  const int horizon = detail::int_field(j, "T", "");
  const int big_n = detail::int_field(j, "N", "");

  Scenario sc;
  sc.system.horizon = horizon;
  const Json& a = detail::field(j, "A", "");
  if (!a.is_array() || a.empty()) throw SchemaError("A: expected a list of matrices");
  sc.system.dynamics = MatrixSequence(detail::matrix_list_from_json(a, "A"));
  sc.system.process_noise = detail::matrix_from_json(detail::field(j, "W", ""), "W");
  sc.system.prior_cov = detail::matrix_from_json(detail::field(j, "Sigma0", ""), "Sigma0");
  const Json& mu = detail::field(j, "mu0", "");
  if (!mu.is_array()) throw SchemaError("mu0: expected an array");
  sc.system.prior_mean.resize(static_cast<int>(mu.size()));
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!mu[i].is_number()) throw SchemaError("mu0: non-numeric entry");
    sc.system.prior_mean(static_cast<int>(i)) = mu[i].get<double>();
  }
  const Json& js = detail::field(j, "sensors", "");
  if (!js.is_array()) throw SchemaError("sensors: expected an array");
  std::vector<Sensor> sensors;
  for (std::size_t i = 0; i < js.size(); ++i) {
    const std::string path = "sensors[" + std::to_string(i) + "]";
    Sensor s;
    s.observation = MatrixSequence(detail::matrix_list_from_json(detail::field(js[i], "C", path), path + ".C"));
    s.noise_cov = detail::matrix_from_json(detail::field(js[i], "V", path), path + ".V");
    sensors.push_back(std::move(s));
  }
  sc.sensors = SensorSet(std::move(sensors));
  auto seed = j.find("seed");
  if (seed != j.end() && !seed->is_null()) {
    if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<std::int64_t>() >= 0))
      throw SchemaError("seed: expected an unsigned integer or null");
    sc.seed = seed->get<std::uint64_t>();
  }

  if (sc.state_dim() != n) throw ValidationError("n: does not match W (" + std::to_string(sc.state_dim()) + ")");
  if (sc.num_sensors() != big_n) throw ValidationError("N: does not match sensor count");
  sc.validate();
  return sc;
}

inline void save_scenario(const Scenario& sc, const std::string& path) {
  detail::write_file(path, scenario_to_json(sc).dump(2) + "\n");
}

inline Scenario load_scenario(const std::string& path) {
  return scenario_from_json(detail::parse_json(detail::read_file(path), path));
}

// ---------------------------------------------------------------------------
// Relaxed solution document (sibling of the scenario file)
// ---------------------------------------------------------------------------

inline Json relaxed_to_json(const RelaxedSolution& sol) {
  Json j;
  j["format"] = "sensched-relaxed";
  j["version"] = kRelaxedFormatVersion;
  j["start"] = sol.start;
  j["objective"] = sol.objective;
  j["status"] = to_string(sol.stats.status);
  j["iterations"] = sol.stats.iterations;
  j["primal_residual"] = sol.stats.primal_residual;
  j["dual_residual"] = sol.stats.dual_residual;
  j["gap"] = sol.stats.gap;
  j["theta"] = detail::matrix_to_json(sol.theta);
  j["P"] = detail::matrix_list_to_json(sol.cov);
  j["Q"] = detail::matrix_list_to_json(sol.info);
  j["Qpred"] = detail::matrix_list_to_json(sol.pred_info);
  return j;
}

inline RelaxedSolution relaxed_from_json(const Json& j) {
  const int version = detail::int_field(j, "version", "");
  if (version != kRelaxedFormatVersion) throw SchemaError("version: unsupported relaxed format");
  RelaxedSolution sol;
  sol.start = detail::int_field(j, "start", "");
  sol.objective = detail::field(j, "objective", "").get<double>();
  const std::string status = detail::field(j, "status", "").get<std::string>();
  for (auto s : {SolveStatus::Optimal, SolveStatus::NearOptimal, SolveStatus::Infeasible, SolveStatus::Failure})
    if (status == to_string(s)) sol.stats.status = s;
  sol.stats.iterations = detail::int_field(j, "iterations", "");
  sol.stats.primal_residual = detail::field(j, "primal_residual", "").get<double>();
  sol.stats.dual_residual = detail::field(j, "dual_residual", "").get<double>();
  sol.stats.gap = detail::field(j, "gap", "").get<double>();
  sol.theta = detail::matrix_from_json(detail::field(j, "theta", ""), "theta");
  sol.cov = detail::matrix_list_from_json(detail::field(j, "P", ""), "P");
  sol.info = detail::matrix_list_from_json(detail::field(j, "Q", ""), "Q");
  sol.pred_info = detail::matrix_list_from_json(detail::field(j, "Qpred", ""), "Qpred");
  if (sol.cov.size() != sol.info.size() || sol.cov.size() != sol.pred_info.size() ||
      static_cast<int>(sol.cov.size()) != sol.theta.rows())
    throw ValidationError("relaxed solution: inconsistent step counts");
  for (const auto& q : sol.pred_info) sol.pred_cov.push_back(floored_inverse(q, 1e-9));
  return sol;
}

inline void save_relaxed(const RelaxedSolution& sol, const std::string& path) {
  detail::write_file(path, relaxed_to_json(sol).dump(2) + "\n");
}

inline RelaxedSolution load_relaxed(const std::string& path) {
  return relaxed_from_json(detail::parse_json(detail::read_file(path), path));
}

// ---------------------------------------------------------------------------
// Schedules, trajectories, bound reports, cost streams
// ---------------------------------------------------------------------------

/// Schedules are one-based on disk.
inline Json schedule_to_json(const Schedule& s) {
  Json arr = Json::array();
  for (int c : s.choices) arr.push_back(c + 1);
  return arr;
}

inline Schedule schedule_from_json(const Json& j) {
  const Json& arr = j.is_object() ? detail::field(j, "schedule", "") : j;
  if (!arr.is_array()) throw SchemaError("schedule: expected an array");
  Schedule s;
  for (const auto& x : arr) {
    if (!x.is_number_integer()) throw SchemaError("schedule: non-integer entry");
    s.choices.push_back(x.get<int>() - 1);
  }
  return s;
}

inline Json schedule_result_to_json(const ScheduleResult& r) {
  Json j;
  j["method"] = r.method;
  j["cost"] = r.cost;
  j["schedule"] = schedule_to_json(r.schedule);
  if (!r.tracking_residuals.empty()) j["tracking_residuals"] = r.tracking_residuals;
  return j;
}

inline Schedule load_schedule(const std::string& path) {
  return schedule_from_json(detail::parse_json(detail::read_file(path), path));
}

/// CSV with columns t, tr_filtered, tr_predicted.
inline std::string trajectory_csv(const CovTrajectory& traj) {
  std::string out = "t,tr_filtered,tr_predicted\n";
  for (int t = 0; t < traj.length(); ++t) {
    const auto tu = static_cast<std::size_t>(t);
    out += std::to_string(t) + "," + format_double(traj.filtered[tu].trace()) + "," +
           format_double(traj.predicted[tu].trace()) + "\n";
  }
  return out;
}

inline std::string join_csv(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

/// Flat key=value document.
inline std::string bound_report_text(const BoundReport& r) {
  std::string out;
  out += "lambda=" + format_double(r.lambda) + "\n";
  out += "epsilon=" + format_double(r.epsilon) + "\n";
  out += "stable=" + std::string(r.stable ? "true" : "false") + "\n";
  out += "alg_cost=" + format_double(r.alg_cost) + "\n";
  out += "ref_cost=" + format_double(r.ref_cost) + "\n";
  out += "gap=" + format_double(r.gap()) + "\n";
  out += "bound_holds=" + std::string(r.bound_holds() ? "true" : "false") + "\n";
  out += "beta_csv=" + join_csv(r.beta) + "\n";
  out += "eta_csv=" + join_csv(r.eta) + "\n";
  out += "lambda_t_csv=" + join_csv(r.lambda_t) + "\n";
  return out;
}

/// Little-endian IEEE-754 binary64 stream.
inline std::string encode_costs_le(const std::vector<double>& costs) {
  std::string out(costs.size() * 8, '\0');
  for (std::size_t i = 0; i < costs.size(); ++i) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &costs[i], 8);
    for (int b = 0; b < 8; ++b) out[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  return out;
}

inline std::vector<double> decode_costs_le(const std::string& bytes) {
  if (bytes.size() % 8 != 0) throw SchemaError("cost stream: length not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)])) << (8 * b);
    std::memcpy(&out[i], &bits, 8);
  }
  return out;
}

inline Json cost_stream_sidecar(std::uint64_t count, const Scenario& sc) {
  Json j;
  j["count"] = count;
  j["scenario_seed"] = sc.seed ? Json(*sc.seed) : Json(nullptr);
  j["num_sensors"] = sc.num_sensors();
  j["length"] = sc.horizon() + 1;
  j["enumeration_order"] = "mixed-radix little-endian over t: index = sum_t (sigma(t)-1) * N^t";
  j["dtype"] = "float64-le";
  return j;
}

}  // namespace sensched
