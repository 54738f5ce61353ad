// Command-line front end for the sensched library.
//
// Exit codes: 0 success, 2 validation/parameter error, 3 solver failure,
// 4 exhaustive budget refusal.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "sensched/sensched.hpp"

namespace {

using namespace sensched;

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitBudget = 4;

void write_text(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write " + path);
  out << content;
}

void emit_schedule(const ScheduleResult& r, const std::string& out, const std::string& csv) {
  const std::string doc = schedule_result_to_json(r).dump(2) + "\n";
  if (out.empty()) {
    std::cout << doc;
  } else {
    write_text(out, doc);
  }
  if (!csv.empty()) write_text(csv, trajectory_csv(r.trajectory));
  std::cerr << r.method << ": cost " << format_double(r.cost, 10) << " (" << format_double(r.wall_time, 4)
            << " s)\n";
}

RelaxedSolution relaxed_for(const Scenario& sc, const std::string& relaxed_path, double tol) {
  RelaxedSolution sol = relaxed_path.empty() ? solve_relaxation(sc, tol) : load_relaxed(relaxed_path);
  sol.require_usable();
  if (static_cast<int>(sol.cov.size()) != sc.horizon() + 1 || sol.start != 0)
    throw ValidationError("relaxed solution does not match the scenario horizon");
  return sol;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoi(item));
  }
  return out;
}

std::vector<std::string> parse_str_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-sensor scheduling for linear-Gaussian estimation"};
  app.require_subcommand(1);

  std::string scenario_path, out, csv, relaxed_path, dump_path, costs_path, reference_path;
  std::uint64_t seed = 1;
  double tol = 1e-7;
  int workers = default_workers();

  // gen
  ScenarioParams gp;
  auto* gen = app.add_subcommand("gen", "Generate a random scenario");
  gen->add_option("--n", gp.state_dim, "State dimension")->default_val(4);
  gen->add_option("--sensors", gp.num_sensors, "Number of sensors")->default_val(4);
  gen->add_option("--T", gp.horizon, "Horizon (steps 0..T)")->default_val(100);
  gen->add_option("--seed", seed, "Random seed")->default_val(1);
  gen->add_option("--eig-low", gp.eig_low)->default_val(1.0);
  gen->add_option("--eig-high", gp.eig_high)->default_val(1.5);
  gen->add_option("--noise-floor", gp.noise_floor)->default_val(0.01);
  gen->add_option("--out", out, "Scenario file")->required();

  auto add_common = [&](CLI::App* c, bool need_scenario = true) {
    auto* o = c->add_option("--scenario", scenario_path, "Scenario file");
    if (need_scenario) o->required();
    c->add_option("--out", out, "Output file");
    c->add_option("--tol", tol, "Solver tolerance")->default_val(1e-7);
    c->add_option("--seed", seed, "Random seed")->default_val(1);
  };

  auto* sdp = app.add_subcommand("solve-sdp", "Solve the convex-hull relaxation");
  add_common(sdp);
  sdp->add_option("--dump-program", dump_path, "Write the assembled conic program");
  sdp->add_option("--csv", csv, "Write theta table as CSV");

  auto* track = app.add_subcommand("track", "Covariance tracking against the relaxed trajectory");
  add_common(track);
  track->add_option("--relaxed", relaxed_path, "Relaxed solution file (solved when absent)");
  track->add_option("--csv", csv, "Trajectory CSV");

  auto* round = app.add_subcommand("round", "Argmax rounding of relaxed weights");
  add_common(round);
  round->add_option("--relaxed", relaxed_path, "Relaxed solution file (solved when absent)");
  round->add_option("--csv", csv, "Trajectory CSV");

  auto* greedy = app.add_subcommand("greedy", "One-step greedy schedule");
  add_common(greedy);
  greedy->add_option("--csv", csv, "Trajectory CSV");

  int random_k = 2000;
  auto* random = app.add_subcommand("random", "Best of k uniformly random schedules");
  add_common(random);
  random->add_option("--k", random_k, "Number of schedules")->default_val(2000);
  random->add_option("--csv", csv, "Trajectory CSV");
  random->add_option("--workers", workers);

  std::uint64_t budget = std::uint64_t{1} << 22;
  auto* exh = app.add_subcommand("exhaustive", "Enumerate every schedule");
  add_common(exh);
  exh->add_option("--budget", budget, "Maximum number of schedules")->default_val(std::uint64_t{1} << 22);
  exh->add_option("--costs", costs_path, "Binary little-endian float64 cost stream (+ .json sidecar)");
  exh->add_option("--csv", csv, "Trajectory CSV");
  exh->add_option("--workers", workers);

  auto* bound = app.add_subcommand("bound", "Suboptimality certificate of the tracked schedule");
  add_common(bound);
  bound->add_option("--relaxed", relaxed_path, "Relaxed solution file (solved when absent)");
  bound->add_option("--reference", reference_path, "Reference schedule (exhaustive optimum when absent)");
  bound->add_option("--budget", budget)->default_val(std::uint64_t{1} << 22);
  bound->add_option("--csv", csv, "Per-step CSV: t,beta,eta,lambda_t");

  BenchConfig bc;
  std::string dims_s = "2,3,4", methods_s = "sdp+track,greedy,random";
  bool full_protocol = false;
  std::string bench_dir = "bench_out";
  auto* bench = app.add_subcommand("bench", "Scenario sweep comparing scheduling methods");
  bench->add_option("--dims", dims_s, "Comma-separated state dimensions")->default_val("2,3,4");
  bench->add_option("--per-dim", bc.scenarios_per_dim)->default_val(10);
  bench->add_option("--sensors", bc.num_sensors)->default_val(4);
  bench->add_option("--T", bc.horizon)->default_val(30);
  bench->add_option("--methods", methods_s)->default_val("sdp+track,greedy,random");
  bench->add_option("--random-k", bc.random_k)->default_val(2000);
  bench->add_option("--seed", seed)->default_val(1);
  bench->add_option("--out", bench_dir, "Output directory");
  bench->add_option("--tol", tol)->default_val(1e-7);
  bench->add_option("--workers", workers);
  bench->add_flag("--full-protocol", full_protocol,
                  "n = 4,6,8,10, thirty scenarios each, T = 100, random-2000");

  int t_small = 9;
  ScenarioParams hp;
  double bin_width = 0.5;
  auto* hist = app.add_subcommand("histogram", "Histogram of all schedule costs at a short horizon");
  add_common(hist, false);
  hist->add_option("--n", hp.state_dim, "State dimension when generating")->default_val(10);
  hist->add_option("--sensors", hp.num_sensors)->default_val(4);
  hist->add_option("--T-small", t_small)->default_val(9);
  hist->add_option("--bin-width", bin_width)->default_val(0.5);
  hist->add_option("--budget", budget)->default_val(std::uint64_t{1} << 22);
  hist->add_option("--workers", workers);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      gp.seed = seed;
      save_scenario(generate_scenario(gp), out);
      return 0;
    }
    if (bench->parsed()) {
      bc.dims = parse_int_list(dims_s);
      bc.methods = parse_str_list(methods_s);
      if (full_protocol) {
        bc.dims = {4, 6, 8, 10};
        bc.scenarios_per_dim = 30;
        bc.horizon = 100;
        bc.random_k = 2000;
        bc.num_sensors = 4;
      }
      bc.seed = seed;
      bc.output_dir = bench_dir;
      bc.tol = tol;
      bc.workers = workers;
      const BenchResults res = run_benchmark(bc);
      std::cout << "rows: " << res.rows.size() << "\n"
                << "sdp+track win fraction: " << format_double(res.ranks.track_win_fraction, 6) << "\n"
                << "artifacts: " << bench_dir << "/manifest.json\n";
      return 0;
    }
    if (hist->parsed()) {
      Scenario sc;
      if (scenario_path.empty()) {
        hp.seed = seed;
        sc = generate_scenario(hp);
      } else {
        sc = load_scenario(scenario_path);
      }
      ExhaustiveOptions eo;
      eo.budget = budget;
      eo.workers = workers;
      const HistogramResult h = run_histogram(sc, t_small, bin_width, true, eo, tol);
      const std::string dir = out.empty() ? "histogram_out" : out;
      std::filesystem::create_directories(dir);
      write_text(dir + "/histogram.csv", histogram_csv(h));
      write_text(dir + "/histogram.svg", histogram_svg(h));
      Json j;
      j["total"] = h.total;
      j["bin_width"] = h.bin_width;
      j["min_cost"] = h.min_cost;
      j["max_cost"] = h.max_cost;
      j["optimal_cost"] = h.optimal_cost;
      j["optimal_schedule"] = schedule_to_json(h.optimal);
      j["tracking_cost"] = h.tracking_cost ? Json(*h.tracking_cost) : Json(nullptr);
      j["tracking_percentile"] = h.tracking_percentile();
      j["tracking_in_lowest_decile"] = h.tracking_in_lowest_decile();
      write_text(dir + "/histogram.json", j.dump(2) + "\n");
      std::cout << "schedules: " << h.total << ", bins: " << h.bins.size() << ", optimal "
                << format_double(h.optimal_cost, 10) << ", tracking "
                << (h.tracking_cost ? format_double(*h.tracking_cost, 10) : "n/a") << "\n";
      return 0;
    }

    const Scenario sc = load_scenario(scenario_path);
    if (sdp->parsed()) {
      const Relaxation rel = build_relaxation(sc);
      if (!dump_path.empty()) {
        std::ostringstream os;
        dump_program(rel.program, os);
        write_text(dump_path, os.str());
      }
      const RelaxedSolution sol = solve_relaxation(rel, tol);
      if (!out.empty()) save_relaxed(sol, out);
      if (!csv.empty()) {
        std::string t = "t";
        for (int i = 0; i < sc.num_sensors(); ++i) t += ",theta" + std::to_string(i + 1);
        t += "\n";
        for (int k = 0; k < sol.theta.rows(); ++k) {
          t += std::to_string(k);
          for (int i = 0; i < sol.theta.cols(); ++i) t += "," + format_double(sol.theta(k, i), 12);
          t += "\n";
        }
        write_text(csv, t);
      }
      std::cout << "status: " << to_string(sol.stats.status) << "\nobjective: " << format_double(sol.objective, 12)
                << "\niterations: " << sol.stats.iterations << "\n";
      sol.require_usable();
      return 0;
    }
    if (track->parsed()) {
      emit_schedule(track_covariance(sc, relaxed_for(sc, relaxed_path, tol).cov), out, csv);
      return 0;
    }
    if (round->parsed()) {
      const RelaxedSolution sol = relaxed_for(sc, relaxed_path, tol);
      const Schedule s = round_theta(sol.theta);
      ScheduleResult r;
      r.schedule = s;
      r.trajectory = evaluate_schedule(sc, s);
      r.cost = r.trajectory.cost;
      r.method = "round-theta";
      emit_schedule(r, out, csv);
      return 0;
    }
    if (greedy->parsed()) {
      emit_schedule(greedy_schedule(sc), out, csv);
      return 0;
    }
    if (random->parsed()) {
      emit_schedule(random_search(sc, random_k, seed, workers), out, csv);
      return 0;
    }
    if (exh->parsed()) {
      ExhaustiveOptions eo;
      eo.budget = budget;
      eo.workers = workers;
      eo.keep_costs = !costs_path.empty();
      ExhaustiveSearch ex = exhaustive_search(sc, eo);
      if (!costs_path.empty()) {
        write_text(costs_path, encode_costs_le(ex.costs));
        write_text(costs_path + ".json", cost_stream_sidecar(ex.count, sc).dump(2) + "\n");
      }
      std::cerr << "enumerated " << ex.count << " schedules\n";
      emit_schedule(ex.best, out, csv);
      return 0;
    }
    if (bound->parsed()) {
      const RelaxedSolution sol = relaxed_for(sc, relaxed_path, tol);
      Schedule ref;
      if (reference_path.empty()) {
        ExhaustiveOptions eo;
        eo.budget = budget;
        eo.workers = workers;
        ref = exhaustive_search(sc, eo).best.schedule;
      } else {
        ref = load_schedule(reference_path);
      }
      const ScheduleResult tracked = track_covariance(sc, sol.cov);
      const BoundReport rep = compute_bound(sc, ref, sol.theta, tracked.schedule);
      std::string text = bound_report_text(rep);
      text += "reference=" + std::string(reference_path.empty() ? "exhaustive" : "file:" + reference_path) + "\n";
      if (out.empty()) {
        std::cout << text;
      } else {
        write_text(out, text);
      }
      if (!csv.empty()) {
        std::string c = "t,beta,eta,lambda_t\n";
        for (std::size_t t = 0; t < rep.beta.size(); ++t)
          c += std::to_string(t) + "," + format_double(rep.beta[t]) + "," + format_double(rep.eta[t]) + "," +
               format_double(rep.lambda_t[t]) + "\n";
        write_text(csv, c);
      }
      return 0;
    }
  } catch (const BudgetError& e) {
    std::cerr << "budget refusal: " << e.what() << "\n";
    return kExitBudget;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
