#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sensched/errors.hpp"
#include "sensched/linalg.hpp"
#include "sensched/model.hpp"
#include "sensched/parallel.hpp"
#include "sensched/riccati.hpp"

namespace sensched {

struct ScheduleResult {
  Schedule schedule;
  CovTrajectory trajectory;
  double cost = 0.0;
  std::string method;
  double wall_time = 0.0;                 // seconds
  std::vector<double> tracking_residuals;  // ||P°_t - P_t||_F, tracking only
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

inline ScheduleResult finish(const Scenario& sc, Schedule schedule, std::string method,
                             const Stopwatch& clock) {
  ScheduleResult r;
  r.trajectory = evaluate_schedule(sc, schedule);
  r.cost = r.trajectory.cost;
  r.schedule = std::move(schedule);
  r.method = std::move(method);
  r.wall_time = clock.seconds();
  return r;
}

// Strict ordering used by every reduction: cost first, then lexicographic.
inline bool better(double cost, const std::vector<int>& choices, double best_cost,
                   const std::vector<int>& best_choices) {
  if (cost < best_cost) return true;
  if (cost > best_cost) return false;
  return choices < best_choices;
}

}  // namespace detail

/// Covariance tracking: at each step pick the sensor whose filtered covariance
/// is nearest in Frobenius norm to the reference P°_t (lowest index on ties).
inline ScheduleResult track_covariance(const Scenario& sc, const std::vector<Matrix>& reference) {
  detail::Stopwatch clock;
  const int horizon = sc.horizon();
  const int n = sc.state_dim();
  if (static_cast<int>(reference.size()) != horizon + 1)
    throw ParameterError("track_covariance: reference must have T+1 matrices");
  for (const auto& r : reference) detail::check_square(r, n, "track_covariance reference");

  Schedule sched;
  std::vector<double> residuals;
  Matrix pred = sc.system.prior_cov;
  for (int t = 0; t <= horizon; ++t) {
    const Matrix& ref = reference[static_cast<std::size_t>(t)];
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    Matrix best_m;
    for (int i = 0; i < sc.num_sensors(); ++i) {
      const Sensor& s = sc.sensors[i];
      Matrix m = detail::measurement_update(s.obs(t), s.noise_cov, pred);
      const double dist = (ref - m).norm();
      if (dist < best_dist) {
        best_dist = dist;
        best = i;
        best_m = std::move(m);
      }
    }
    sched.choices.push_back(best);
    residuals.push_back(best_dist);
    if (t < horizon)
      pred = detail::time_update(sc.system.transition(t), sc.system.process_noise, best_m);
  }
  ScheduleResult r = detail::finish(sc, std::move(sched), "sdp+track", clock);
  r.tracking_residuals = std::move(residuals);
  return r;
}

/// sigma(t) = argmax_i theta^i_t, lowest index on ties.
inline Schedule round_theta(const Matrix& theta) {
  Schedule s;
  for (int k = 0; k < theta.rows(); ++k) {
    int best = 0;
    for (int i = 1; i < theta.cols(); ++i)
      if (theta(k, i) > theta(k, best)) best = i;
    s.choices.push_back(best);
  }
  return s;
}

/// One-step lookahead: minimize tr(g_t(i, P_{t|t-1})) at each step.
inline ScheduleResult greedy_schedule(const Scenario& sc) {
  detail::Stopwatch clock;
  sc.validate();
  Schedule sched;
  Matrix pred = sc.system.prior_cov;
  for (int t = 0; t <= sc.horizon(); ++t) {
    int best = 0;
    double best_tr = std::numeric_limits<double>::infinity();
    Matrix best_m;
    for (int i = 0; i < sc.num_sensors(); ++i) {
      const Sensor& s = sc.sensors[i];
      Matrix m = detail::measurement_update(s.obs(t), s.noise_cov, pred);
      const double tr = m.trace();
      if (tr < best_tr) {
        best_tr = tr;
        best = i;
        best_m = std::move(m);
      }
    }
    sched.choices.push_back(best);
    if (t < sc.horizon())
      pred = detail::time_update(sc.system.transition(t), sc.system.process_noise, best_m);
  }
  return detail::finish(sc, std::move(sched), "greedy", clock);
}

/// Draws k schedules i.i.d. uniform from one seeded stream, so the first k
/// draws of a longer run coincide with a shorter run. Returns the best.
inline ScheduleResult random_search(const Scenario& sc, int k, std::uint64_t seed,
                                    int workers = default_workers()) {
  detail::Stopwatch clock;
  if (k < 1) throw ParameterError("random_search: k must be >= 1");
  sc.validate();
  const int len = sc.horizon() + 1;
  const int big_n = sc.num_sensors();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, big_n - 1);
  std::vector<std::vector<int>> draws(static_cast<std::size_t>(k));
  for (auto& d : draws) {
    d.resize(static_cast<std::size_t>(len));
    for (auto& c : d) c = pick(rng);
  }
  std::vector<double> costs(static_cast<std::size_t>(k));
  parallel_for(k, workers, [&](std::int64_t j) {
    const auto ju = static_cast<std::size_t>(j);
    costs[ju] = evaluate_from(sc, 0, sc.system.prior_cov, draws[ju]).cost;
  });
  std::size_t best = 0;
  for (std::size_t j = 1; j < draws.size(); ++j)
    if (detail::better(costs[j], draws[j], costs[best], draws[best])) best = j;
  return detail::finish(sc, Schedule{draws[best]}, "random-" + std::to_string(k), clock);
}

struct ExhaustiveOptions {
  std::uint64_t budget = std::uint64_t{1} << 22;
  bool keep_costs = false;
  int workers = default_workers();
};

struct ExhaustiveResult {
  std::vector<int> best_choices;  // steps start..T
  double best_cost = 0.0;
  std::uint64_t count = 0;
  std::vector<double> costs;  // index = sum_k choice[k] * N^k when kept
  double wall_time = 0.0;
};

/// N^steps, or nullopt on overflow past the budget.
inline std::optional<std::uint64_t> schedule_count(int num_sensors, int steps,
                                                   std::uint64_t cap = ~std::uint64_t{0}) {
  std::uint64_t total = 1;
  for (int k = 0; k < steps; ++k) {
    if (total > cap / static_cast<std::uint64_t>(num_sensors)) return std::nullopt;
    total *= static_cast<std::uint64_t>(num_sensors);
  }
  return total;
}

/// Enumerates every choice sequence over steps start..T from predicted
/// covariance `predicted0`. Schedule index is mixed-radix little-endian in t.
/// Prefix covariances are shared along a depth-first walk; top-level prefixes
/// are distributed across workers and reduced by (cost, lexicographic order).
inline ExhaustiveResult exhaustive_from(const Scenario& sc, int start, const Matrix& predicted0,
                                        const ExhaustiveOptions& opt = {}) {
  detail::Stopwatch clock;
  const int horizon = sc.horizon();
  const int big_n = sc.num_sensors();
  const int steps = horizon - start + 1;
  if (steps < 1) throw ParameterError("exhaustive: start beyond horizon");
  const auto total = schedule_count(big_n, steps, opt.budget);
  if (!total || *total > opt.budget) {
    const auto req = schedule_count(big_n, steps);
    throw BudgetError("exhaustive search needs " + std::to_string(big_n) + "^" +
                          std::to_string(steps) + (req ? " = " + std::to_string(*req) : "") +
                          " schedules, budget is " + std::to_string(opt.budget),
                      req ? *req : ~std::uint64_t{0});
  }

  ExhaustiveResult res;
  res.count = *total;
  if (opt.keep_costs) res.costs.assign(static_cast<std::size_t>(*total), 0.0);

  // Split depth depends only on the instance, so results do not depend on workers.
  int split = 0;
  std::uint64_t tasks = 1;
  while (split < steps && tasks < 256) {
    tasks *= static_cast<std::uint64_t>(big_n);
    ++split;
  }
  std::vector<std::uint64_t> radix(static_cast<std::size_t>(steps));
  radix[0] = 1;
  for (int k = 1; k < steps; ++k) radix[static_cast<std::size_t>(k)] = radix[static_cast<std::size_t>(k - 1)] * static_cast<std::uint64_t>(big_n);

  struct TaskBest {
    double cost = std::numeric_limits<double>::infinity();
    std::vector<int> choices;
  };
  std::vector<TaskBest> best(static_cast<std::size_t>(tasks));

  const Matrix& w = sc.system.process_noise;
  parallel_for(static_cast<std::int64_t>(tasks), opt.workers, [&](std::int64_t task) {
    std::vector<int> choices(static_cast<std::size_t>(steps), 0);
    std::vector<Matrix> pred(static_cast<std::size_t>(steps) + 1);
    std::vector<double> acc(static_cast<std::size_t>(steps) + 1, 0.0);
    pred[0] = predicted0;
    // Decode the prefix: lexicographic in (choice[0], choice[1], ...).
    std::uint64_t rem = static_cast<std::uint64_t>(task);
    for (int k = split - 1; k >= 0; --k) {
      choices[static_cast<std::size_t>(k)] = static_cast<int>(rem % static_cast<std::uint64_t>(big_n));
      rem /= static_cast<std::uint64_t>(big_n);
    }
    auto advance = [&](int k) {
      const int t = start + k;
      const auto ku = static_cast<std::size_t>(k);
      const Sensor& s = sc.sensors[choices[ku]];
      Matrix filt = detail::measurement_update(s.obs(t), s.noise_cov, pred[ku]);
      acc[ku + 1] = acc[ku] + filt.trace();
      if (t < horizon) pred[ku + 1] = detail::time_update(sc.system.transition(t), w, filt);
    };
    for (int k = 0; k < split; ++k) advance(k);
    TaskBest& tb = best[static_cast<std::size_t>(task)];

    auto leaf = [&]() {
      const double cost = acc[static_cast<std::size_t>(steps)];
      if (opt.keep_costs) {
        std::uint64_t idx = 0;
        for (int k = 0; k < steps; ++k)
          idx += static_cast<std::uint64_t>(choices[static_cast<std::size_t>(k)]) * radix[static_cast<std::size_t>(k)];
        res.costs[static_cast<std::size_t>(idx)] = cost;
      }
      // Depth-first order is lexicographic, so strict improvement suffices here.
      if (cost < tb.cost) {
        tb.cost = cost;
        tb.choices = choices;
      }
    };
    auto dfs = [&](auto&& self, int k) -> void {
      if (k == steps) {
        leaf();
        return;
      }
      for (int i = 0; i < big_n; ++i) {
        choices[static_cast<std::size_t>(k)] = i;
        advance(k);
        self(self, k + 1);
      }
    };
    dfs(dfs, split);
  });

  std::size_t arg = 0;
  for (std::size_t j = 1; j < best.size(); ++j)
    if (detail::better(best[j].cost, best[j].choices, best[arg].cost, best[arg].choices)) arg = j;
  res.best_cost = best[arg].cost;
  res.best_choices = best[arg].choices;
  res.wall_time = clock.seconds();
  return res;
}

struct ExhaustiveSearch {
  ScheduleResult best;
  std::uint64_t count = 0;
  std::vector<double> costs;
};

/// Global minimizer over all N^(T+1) schedules from Sigma0.
inline ExhaustiveSearch exhaustive_search(const Scenario& sc, const ExhaustiveOptions& opt = {}) {
  detail::Stopwatch clock;
  sc.validate();
  ExhaustiveResult raw = exhaustive_from(sc, 0, sc.system.prior_cov, opt);
  ExhaustiveSearch out;
  out.best = detail::finish(sc, Schedule{raw.best_choices}, "exhaustive", clock);
  out.count = raw.count;
  out.costs = std::move(raw.costs);
  return out;
}

/// Decodes a little-endian mixed-radix schedule index.
inline Schedule schedule_from_index(std::uint64_t index, int num_sensors, int length) {
  Schedule s;
  for (int k = 0; k < length; ++k) {
    s.choices.push_back(static_cast<int>(index % static_cast<std::uint64_t>(num_sensors)));
    index /= static_cast<std::uint64_t>(num_sensors);
  }
  return s;
}

/// Smallest p >= 1 with sigma(t) == sigma(t + p) for every t in [skip, T - p],
/// restricted to p <= (length - skip) / 2 so that at least two full periods
/// are observed. Empty when no such p exists.
inline std::optional<int> detect_period(const Schedule& s, int skip) {
  const int len = s.length();
  if (skip < 0 || skip >= len) throw ParameterError("detect_period: skip must be in [0, length)");
  const int window = len - skip;
  for (int p = 1; p <= window / 2; ++p) {
    bool ok = true;
    for (int t = skip; t + p < len && ok; ++t) ok = s[t] == s[t + p];
    if (ok) return p;
  }
  return std::nullopt;
}

/// Period after a transient of T/2 steps.
inline std::optional<int> detect_period(const Schedule& s) {
  return detect_period(s, (s.length() - 1) / 2);
}

}  // namespace sensched
