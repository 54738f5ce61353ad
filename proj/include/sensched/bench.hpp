#pragma once

#include <openssl/sha.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sensched/io.hpp"
#include "sensched/model.hpp"
#include "sensched/parallel.hpp"
#include "sensched/relaxation.hpp"
#include "sensched/scheduler.hpp"

namespace sensched {

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"sdp+track", "round-theta", "greedy", "random", "exhaustive"};
  return m;
}

struct BenchConfig {
  std::vector<int> dims{2, 3, 4};
  int scenarios_per_dim = 10;
  int num_sensors = 4;
  int horizon = 30;
  std::vector<std::string> methods{"sdp+track", "greedy", "random"};
  std::uint64_t seed = 1;
  std::string output_dir = "bench_out";
  int random_k = 2000;
  double bin_width = 0.5;
  double eig_low = 1.0;
  double eig_high = 1.5;
  double noise_floor = 0.01;
  double tol = 1e-7;
  std::uint64_t exhaustive_budget = std::uint64_t{1} << 22;
  int workers = default_workers();

  void validate() const {
    if (methods.empty()) throw ParameterError("bench: at least one method required");
    for (const auto& m : methods)
      if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end())
        throw ParameterError("bench: unknown method '" + m + "'");
    if (!(bin_width > 0.0)) throw ParameterError("bench: bin width must be positive");
    if (dims.empty() || scenarios_per_dim < 1) throw ParameterError("bench: empty scenario grid");
    for (int d : dims)
      if (d < 1) throw ParameterError("bench: dimensions must be >= 1");
    if (random_k < 1) throw ParameterError("bench: random_k must be >= 1");
  }
};

/// Seed for scenario `index` of dimension n, derived from the run seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a simple combination
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct BenchRow {
  std::string scenario_id;
  int n = 0;
  std::uint64_t scenario_seed = 0;
  std::string method;
  double cost = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
  std::string status = "ok";  // "ok" or "error:<kind>"
  std::string schedule_path;
  Schedule schedule;
};

struct RankTable {
  // scenario_id -> method -> rank (1 = best, ties share the better rank)
  std::map<std::string, std::map<std::string, int>> ranks;
  double track_win_fraction = 0.0;  // fraction where sdp+track is no worse than every other method
  int scenarios = 0;
};

struct BenchResults {
  std::vector<BenchRow> rows;
  RankTable ranks;
  std::vector<std::string> files;  // relative to output_dir
};

namespace detail {

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), md);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned char c : md) {
    out += hex[c >> 4];
    out += hex[c & 15];
  }
  return out;
}

inline std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const SolverError*>(&e)) return "error:solver";
  if (dynamic_cast<const BudgetError*>(&e)) return "error:budget";
  if (dynamic_cast<const DomainError*>(&e)) return "error:domain";
  if (dynamic_cast<const ValidationError*>(&e)) return "error:validation";
  return "error:other";
}

/// Collects emitted files and writes manifest.json with content hashes.
class ManifestWriter {
 public:
  explicit ManifestWriter(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
  }

  void write(const std::string& rel, const std::string& content, bool volatile_content = false) {
    std::lock_guard<std::mutex> lock(mu_);
    const auto full = root_ / rel;
    if (full.has_parent_path()) std::filesystem::create_directories(full.parent_path());
    write_file(full.string(), content);
    entries_[rel] = {sha256_hex(content), content.size(), volatile_content};
  }

  std::vector<std::string> files() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
  }

  void finish() {
    Json j;
    j["format"] = "sensched-manifest";
    j["version"] = 1;
    Json arr = Json::array();
    for (const auto& [name, e] : entries_) {
      Json f;
      f["path"] = name;
      f["sha256"] = e.hash;
      f["bytes"] = e.bytes;
      f["deterministic"] = !e.is_volatile;
      arr.push_back(f);
    }
    j["files"] = arr;
    write_file((root_ / "manifest.json").string(), j.dump(2) + "\n");
  }

 private:
  struct Entry {
    std::string hash;
    std::size_t bytes = 0;
    bool is_volatile = false;
  };
  std::filesystem::path root_;
  std::map<std::string, Entry> entries_;
  std::mutex mu_;
};

}  // namespace detail

/// Competition ranking per scenario over methods with a finite cost.
inline RankTable report_rank(const std::vector<BenchRow>& rows) {
  RankTable table;
  std::map<std::string, std::vector<const BenchRow*>> by_scenario;
  for (const auto& r : rows) by_scenario[r.scenario_id].push_back(&r);
  int wins = 0, eligible = 0;
  for (const auto& [sid, list] : by_scenario) {
    auto& ranks = table.ranks[sid];
    for (const auto* r : list) {
      if (!std::isfinite(r->cost)) continue;
      int better = 0;
      for (const auto* o : list)
        if (std::isfinite(o->cost) && o->cost < r->cost) ++better;
      ranks[r->method] = better + 1;
    }
    auto it = ranks.find("sdp+track");
    if (it != ranks.end()) {
      ++eligible;
      if (it->second == 1) ++wins;
    }
  }
  table.scenarios = static_cast<int>(by_scenario.size());
  table.track_win_fraction = eligible > 0 ? static_cast<double>(wins) / eligible : 0.0;
  return table;
}

inline std::string scenario_id(int n, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "n%d_s%02d", n, index);
  return buf;
}

inline std::string method_file_tag(const std::string& m) {
  std::string out = m;
  std::replace(out.begin(), out.end(), '+', '_');
  return out;
}

/// Scenario x method grid. Every artifact lands under config.output_dir and is
/// listed in manifest.json; timing.csv is the only nondeterministic file.
inline BenchResults run_benchmark(const BenchConfig& cfg) {
  cfg.validate();
  struct Cell {
    int n;
    int index;
  };
  std::vector<Cell> cells;
  for (int n : cfg.dims)
    for (int k = 0; k < cfg.scenarios_per_dim; ++k) cells.push_back({n, k});

  std::vector<std::vector<BenchRow>> per_cell(cells.size());
  parallel_for(static_cast<std::int64_t>(cells.size()), cfg.workers, [&](std::int64_t ci) {
    const Cell cell = cells[static_cast<std::size_t>(ci)];
    ScenarioParams sp;
    sp.state_dim = cell.n;
    sp.num_sensors = cfg.num_sensors;
    sp.horizon = cfg.horizon;
    sp.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(cell.n), static_cast<std::uint64_t>(cell.index));
    sp.eig_low = cfg.eig_low;
    sp.eig_high = cfg.eig_high;
    sp.noise_floor = cfg.noise_floor;
    const Scenario sc = generate_scenario(sp);
    const std::string sid = scenario_id(cell.n, cell.index);

    std::optional<RelaxedSolution> relaxed;
    double relax_seconds = 0.0;
    std::string relax_error;
    auto need_relaxation = [&]() -> const RelaxedSolution& {
      if (!relaxed && relax_error.empty()) {
        detail::Stopwatch clock;
        try {
          RelaxedSolution sol = solve_relaxation(sc, cfg.tol);
          sol.require_usable();
          relaxed = std::move(sol);
        } catch (const std::exception& e) {
          relax_error = detail::error_kind(e);
        }
        relax_seconds = clock.seconds();
      }
      if (!relaxed) throw SolverError("relaxation unavailable");
      return *relaxed;
    };

    auto& out = per_cell[static_cast<std::size_t>(ci)];
    for (const auto& method : cfg.methods) {
      BenchRow row;
      row.scenario_id = sid;
      row.n = cell.n;
      row.scenario_seed = sp.seed;
      row.method = method == "random" ? "random-" + std::to_string(cfg.random_k) : method;
      detail::Stopwatch clock;
      try {
        ScheduleResult r;
        if (method == "sdp+track") {
          const auto& sol = need_relaxation();
          r = track_covariance(sc, sol.cov);
          row.seconds = relax_seconds + r.wall_time;
        } else if (method == "round-theta") {
          const auto& sol = need_relaxation();
          detail::Stopwatch c2;
          r = detail::finish(sc, round_theta(sol.theta), "round-theta", c2);
          row.seconds = relax_seconds + r.wall_time;
        } else if (method == "greedy") {
          r = greedy_schedule(sc);
          row.seconds = r.wall_time;
        } else if (method == "random") {
          r = random_search(sc, cfg.random_k, derive_seed(sp.seed, 17, 0), 1);
          row.seconds = r.wall_time;
        } else {
          ExhaustiveOptions eo;
          eo.budget = cfg.exhaustive_budget;
          eo.workers = 1;
          r = exhaustive_search(sc, eo).best;
          row.seconds = r.wall_time;
        }
        row.cost = r.cost;
        row.schedule = r.schedule;
        row.schedule_path = "schedules/" + sid + "_" + method_file_tag(row.method) + ".json";
      } catch (const std::exception& e) {
        row.status = relax_error.empty() ? detail::error_kind(e) : relax_error;
        row.seconds = clock.seconds();
      }
      out.push_back(std::move(row));
    }
  });

  BenchResults res;
  for (auto& v : per_cell)
    for (auto& r : v) res.rows.push_back(std::move(r));
  res.ranks = report_rank(res.rows);

  detail::ManifestWriter mw(cfg.output_dir);
  std::string results = "scenario_id,n,scenario_seed,method,cost,status,schedule_path\n";
  std::string timing = "scenario_id,n,method,seconds\n";
  for (const auto& r : res.rows) {
    results += r.scenario_id + "," + std::to_string(r.n) + "," + std::to_string(r.scenario_seed) +
               "," + r.method + "," + (std::isfinite(r.cost) ? format_double(r.cost) : "nan") +
               "," + r.status + "," + r.schedule_path + "\n";
    timing += r.scenario_id + "," + std::to_string(r.n) + "," + r.method + "," +
              format_double(r.seconds, 6) + "\n";
    if (!r.schedule_path.empty()) {
      Json j;
      j["scenario_id"] = r.scenario_id;
      j["method"] = r.method;
      j["cost"] = r.cost;
      j["schedule"] = schedule_to_json(r.schedule);
      mw.write(r.schedule_path, j.dump() + "\n");
    }
  }
  mw.write("results.csv", results);
  mw.write("timing.csv", timing, true);

  // Mean cost per (n, method) over successful rows.
  std::map<std::pair<int, std::string>, std::pair<double, int>> agg;
  for (const auto& r : res.rows)
    if (std::isfinite(r.cost)) {
      auto& a = agg[{r.n, r.method}];
      a.first += r.cost;
      a.second += 1;
    }
  std::string summary = "n,method,mean_cost,scenarios\n";
  for (const auto& [key, v] : agg)
    summary += std::to_string(key.first) + "," + key.second + "," +
               format_double(v.first / v.second) + "," + std::to_string(v.second) + "\n";
  mw.write("summary.csv", summary);

  std::string ranks = "scenario_id,method,rank\n";
  for (const auto& [sid, m] : res.ranks.ranks)
    for (const auto& [method, rank] : m) ranks += sid + "," + method + "," + std::to_string(rank) + "\n";
  ranks += "# sdp+track win fraction," + format_double(res.ranks.track_win_fraction, 6) + "\n";
  mw.write("ranks.csv", ranks);
  res.files = mw.files();
  mw.finish();
  return res;
}

// ---------------------------------------------------------------------------
// Exhaustive cost histogram
// ---------------------------------------------------------------------------

struct HistogramResult {
  double bin_width = 0.5;
  std::vector<std::pair<double, std::uint64_t>> bins;  // (bin_low, count), occupied bins ascending
  std::uint64_t total = 0;
  double min_cost = 0.0;
  double max_cost = 0.0;
  std::optional<double> tracking_cost;
  Schedule optimal;
  double optimal_cost = 0.0;
  std::vector<double> costs;

  /// Fraction of schedules strictly cheaper than the tracked schedule.
  double tracking_percentile() const {
    if (!tracking_cost || costs.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::uint64_t below = 0;
    for (double c : costs)
      if (c < *tracking_cost) ++below;
    return static_cast<double>(below) / static_cast<double>(costs.size());
  }

  /// Tracking cost within the first tenth of the occupied cost range.
  bool tracking_in_lowest_decile() const {
    if (!tracking_cost) return false;
    return *tracking_cost <= min_cost + 0.1 * (max_cost - min_cost);
  }
};

/// Copy of the scenario with the horizon cut to t_small.
inline Scenario truncate_horizon(const Scenario& sc, int t_small) {
  if (t_small < 0 || t_small > sc.horizon())
    throw ParameterError("truncate_horizon: T_small must be in [0, T]");
  Scenario out = sc;
  out.system.horizon = t_small;
  if (!sc.system.dynamics.time_invariant()) {
    std::vector<Matrix> a(sc.system.dynamics.items().begin(),
                          sc.system.dynamics.items().begin() + std::max(t_small, 1));
    out.system.dynamics = MatrixSequence(std::move(a));
  }
  std::vector<Sensor> sensors;
  for (const auto& s : sc.sensors.sensors()) {
    Sensor c = s;
    if (!s.observation.time_invariant()) {
      std::vector<Matrix> obs(s.observation.items().begin(),
                              s.observation.items().begin() + t_small + 1);
      c.observation = MatrixSequence(std::move(obs));
    }
    sensors.push_back(std::move(c));
  }
  out.sensors = SensorSet(std::move(sensors));
  return out;
}

inline std::vector<std::pair<double, std::uint64_t>> bin_costs(const std::vector<double>& costs,
                                                               double bin_width) {
  if (!(bin_width > 0.0)) throw ParameterError("histogram: bin width must be positive");
  std::map<long long, std::uint64_t> counts;
  for (double c : costs) ++counts[static_cast<long long>(std::floor(c / bin_width))];
  std::vector<std::pair<double, std::uint64_t>> out;
  for (const auto& [k, v] : counts) out.emplace_back(static_cast<double>(k) * bin_width, v);
  return out;
}

/// Enumerates all schedules of the scenario cut to horizon t_small and bins
/// their costs. With `with_tracking` the relaxation is solved and the tracked
/// schedule's cost recorded for the chart marker.
inline HistogramResult run_histogram(const Scenario& full, int t_small, double bin_width,
                                     bool with_tracking = true,
                                     const ExhaustiveOptions& base = {}, double tol = 1e-7) {
  const Scenario sc = truncate_horizon(full, t_small);
  ExhaustiveOptions eo = base;
  eo.keep_costs = true;
  ExhaustiveSearch ex = exhaustive_search(sc, eo);
  HistogramResult h;
  h.bin_width = bin_width;
  h.total = ex.count;
  h.bins = bin_costs(ex.costs, bin_width);
  h.min_cost = *std::min_element(ex.costs.begin(), ex.costs.end());
  h.max_cost = *std::max_element(ex.costs.begin(), ex.costs.end());
  h.optimal = ex.best.schedule;
  h.optimal_cost = ex.best.cost;
  if (with_tracking) {
    RelaxedSolution sol = solve_relaxation(sc, tol);
    sol.require_usable();
    h.tracking_cost = track_covariance(sc, sol.cov).cost;
  }
  h.costs = std::move(ex.costs);
  return h;
}

inline std::string histogram_csv(const HistogramResult& h) {
  std::string out = "bin_low,count\n";
  for (const auto& [low, count] : h.bins) out += format_double(low, 10) + "," + std::to_string(count) + "\n";
  return out;
}

/// 800x500 bar chart with a vertical marker at the tracking cost.
inline std::string histogram_svg(const HistogramResult& h) {
  const double width = 800, height = 500, left = 70, right = 20, top = 30, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;
  double xmin = h.bins.empty() ? 0.0 : h.bins.front().first;
  double xmax = h.bins.empty() ? 1.0 : h.bins.back().first + h.bin_width;
  if (h.tracking_cost) {
    xmin = std::min(xmin, *h.tracking_cost);
    xmax = std::max(xmax, *h.tracking_cost);
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  std::uint64_t ymax = 1;
  for (const auto& b : h.bins) ymax = std::max(ymax, b.second);
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + ph - y / static_cast<double>(ymax) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" width=\"800\" height=\"500\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
  for (const auto& [low, count] : h.bins) {
    const double x0 = sx(low), x1 = sx(low + h.bin_width);
    const double y = sy(static_cast<double>(count));
    s += "<rect x=\"" + format_double(x0, 6) + "\" y=\"" + format_double(y, 6) + "\" width=\"" +
         format_double(std::max(x1 - x0, 0.5), 6) + "\" height=\"" +
         format_double(top + ph - y, 6) + "\" fill=\"steelblue\"/>\n";
  }
  // Axes.
  s += "<line x1=\"" + format_double(left, 6) + "\" y1=\"" + format_double(top + ph, 6) + "\" x2=\"" +
       format_double(left + pw, 6) + "\" y2=\"" + format_double(top + ph, 6) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + format_double(left, 6) + "\" y1=\"" + format_double(top, 6) + "\" x2=\"" +
       format_double(left, 6) + "\" y2=\"" + format_double(top + ph, 6) + "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 5.0;
    const double yv = static_cast<double>(ymax) * k / 5.0;
    s += "<text x=\"" + format_double(sx(xv), 6) + "\" y=\"" + format_double(top + ph + 18, 6) +
         "\" font-size=\"11\" text-anchor=\"middle\">" + format_double(xv, 4) + "</text>\n";
    s += "<text x=\"" + format_double(left - 6, 6) + "\" y=\"" + format_double(sy(yv) + 4, 6) +
         "\" font-size=\"11\" text-anchor=\"end\">" + format_double(std::round(yv), 6) + "</text>\n";
  }
  s += "<text x=\"" + format_double(left + pw / 2, 6) + "\" y=\"" + format_double(height - 15, 6) +
       "\" font-size=\"13\" text-anchor=\"middle\">total cost sum_t tr(P_t)</text>\n";
  s += "<text x=\"18\" y=\"" + format_double(top + ph / 2, 6) +
       "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       format_double(top + ph / 2, 6) + ")\">number of schedules</text>\n";
  if (h.tracking_cost) {
    const double x = sx(*h.tracking_cost);
    s += "<line id=\"tracking-cost\" data-cost=\"" + format_double(*h.tracking_cost, 6) + "\" x1=\"" +
         format_double(x, 6) + "\" y1=\"" + format_double(top, 6) + "\" x2=\"" + format_double(x, 6) +
         "\" y2=\"" + format_double(top + ph, 6) + "\" stroke=\"gray\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + format_double(x + 4, 6) + "\" y=\"" + format_double(top + 12, 6) +
         "\" font-size=\"11\" fill=\"gray\">tracking " + format_double(*h.tracking_cost, 6) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace sensched
