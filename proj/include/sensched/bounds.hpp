#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <random>
#include <vector>

#include "sensched/errors.hpp"
#include "sensched/linalg.hpp"
#include "sensched/model.hpp"
#include "sensched/relaxation.hpp"
#include "sensched/riccati.hpp"
#include "sensched/scheduler.hpp"

namespace sensched {

/// Suboptimality certificate for a tracked schedule against a reference
/// schedule sigma* (normally the exhaustive optimum) and relaxed weights theta*.
struct BoundReport {
  double lambda = 0.0;              // max_t ||A_{t-1} H(sigma*(t), P_{t|t-1}(theta*))||_2^2
  std::vector<double> lambda_t;     // per step, lambda_t[0] = 0 (no predecessor)
  std::vector<double> beta;         // ||g(sigma*(t), P_{t|t-1}(theta*)) - P_t(theta*)||_F
  std::vector<double> eta;          // ||P_t(sigma_alg) - P_t(theta*)||_F
  std::vector<double> mismatch;     // ||P_t(theta*) - P_t(sigma*)||_F
  double epsilon = 0.0;
  bool stable = false;              // lambda < 1
  double alg_cost = 0.0;
  double ref_cost = 0.0;
  double theta_cost = 0.0;

  double gap() const { return alg_cost - ref_cost; }
  bool bound_holds() const { return gap() <= epsilon; }

  /// Largest violation of eta_t <= lambda eta_{t-1} + beta_t (eta_0 <= beta_0);
  /// nonpositive when the recursion holds.
  double eta_recursion_violation() const {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < eta.size(); ++t) {
      const double rhs = (t == 0 ? 0.0 : lambda * eta[t - 1]) + beta[t];
      worst = std::max(worst, eta[t] - rhs);
    }
    return worst;
  }

  /// Largest violation of eta_t <= sum_{k<=t} lambda^{t-k} beta_k.
  double eta_sum_violation() const {
    double worst = -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (std::size_t t = 0; t < eta.size(); ++t) {
      acc = lambda * acc + beta[t];
      worst = std::max(worst, eta[t] - acc);
    }
    return worst;
  }
};

/// sum_{j < m} lambda^j, evaluated on the branch matching the sign of 1 - lambda.
inline double geometric_factor(double lambda, int m) {
  if (m <= 0) return 0.0;
  if (lambda == 0.0) return 1.0;
  if (std::abs(lambda - 1.0) < 1e-12) return static_cast<double>(m);
  const double lm = std::expm1(static_cast<double>(m) * std::log(lambda));  // lambda^m - 1
  if (lambda < 1.0) return -lm / (1.0 - lambda);
  return lm / (lambda - 1.0);
}

inline BoundReport compute_bound(const Scenario& sc, const Schedule& sigma_star,
                                 const Matrix& theta_star, const Schedule& sigma_alg) {
  sc.validate();
  const int horizon = sc.horizon();
  const int n = sc.state_dim();
  sigma_star.validate(horizon, sc.num_sensors());
  sigma_alg.validate(horizon, sc.num_sensors());
  if (theta_star.rows() != horizon + 1 || theta_star.cols() != sc.num_sensors())
    throw ParameterError("compute_bound: theta has wrong shape");

  const CovTrajectory relaxed = evaluate_theta(sc, theta_star);
  const CovTrajectory ref = evaluate_schedule(sc, sigma_star);
  const CovTrajectory alg = evaluate_schedule(sc, sigma_alg);

  BoundReport rep;
  rep.alg_cost = alg.cost;
  rep.ref_cost = ref.cost;
  rep.theta_cost = relaxed.cost;
  for (int t = 0; t <= horizon; ++t) {
    const auto tu = static_cast<std::size_t>(t);
    const Sensor& s = sc.sensors[sigma_star[t]];
    const Matrix& pred = relaxed.predicted[tu];
    const Matrix g = detail::measurement_update(s.obs(t), s.noise_cov, pred);
    rep.beta.push_back((g - relaxed.filtered[tu]).norm());
    rep.eta.push_back((alg.filtered[tu] - relaxed.filtered[tu]).norm());
    rep.mismatch.push_back((relaxed.filtered[tu] - ref.filtered[tu]).norm());
    if (t == 0) {
      rep.lambda_t.push_back(0.0);
    } else {
      const Matrix hm = detail::gain_complement(s.obs(t), s.noise_cov, pred);
      const double nrm = spectral_norm(sc.system.transition(t - 1) * hm);
      rep.lambda_t.push_back(nrm * nrm);
    }
  }
  for (double l : rep.lambda_t) rep.lambda = std::max(rep.lambda, l);
  rep.stable = rep.lambda < 1.0;
  const double rn = std::sqrt(static_cast<double>(n));
  double eps = 0.0;
  for (int t = 0; t <= horizon; ++t) {
    const auto tu = static_cast<std::size_t>(t);
    eps += rn * geometric_factor(rep.lambda, horizon + 1 - t) * rep.beta[tu];
    eps += rn * rep.mismatch[tu];
  }
  rep.epsilon = eps;
  return rep;
}

struct DominanceSample {
  int time = 0;
  Matrix predicted;     // P_{t|t-1}
  double optimal = 0.0;  // U_t(P), exhaustive over the tail
  double relaxed = 0.0;  // U°_t(P), tail relaxation objective
  bool holds = false;
};

struct DominanceReport {
  std::vector<DominanceSample> samples;
  bool all_hold() const {
    for (const auto& s : samples)
      if (!s.holds) return false;
    return !samples.empty();
  }
};

/// Compares the tail relaxation value with the exhaustive tail value at
/// sampled (t, P). The first sample is always (0, Sigma0).
inline DominanceReport verify_value_dominance(const Scenario& sc, int samples, std::uint64_t seed,
                                              const ExhaustiveOptions& opt = {},
                                              double rel_tol = 1e-4) {
  sc.validate();
  if (samples < 1) throw ParameterError("verify_value_dominance: samples must be >= 1");
  const int n = sc.state_dim();
  const auto full = schedule_count(sc.num_sensors(), sc.horizon() + 1, opt.budget);
  if (!full || *full > opt.budget)
    throw BudgetError("value dominance: full-horizon tail exceeds budget",
                      schedule_count(sc.num_sensors(), sc.horizon() + 1).value_or(~0ULL));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> pick_t(0, sc.horizon());

  DominanceReport rep;
  for (int k = 0; k < samples; ++k) {
    DominanceSample ds;
    if (k == 0) {
      ds.time = 0;
      ds.predicted = sc.system.prior_cov;
    } else {
      ds.time = pick_t(rng);
      Matrix b(n, n);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) b(i, j) = normal(rng);
      ds.predicted = symmetrize(b * b.transpose() / n + 0.1 * Matrix::Identity(n, n));
    }
    ds.optimal = exhaustive_from(sc, ds.time, ds.predicted, opt).best_cost;
    const Relaxation rel =
        build_relaxation_from(sc, ds.time, spd_inverse(ds.predicted, "dominance sample"));
    const RelaxedSolution sol = solve_relaxation(rel);
    sol.require_usable();
    ds.relaxed = sol.objective;
    ds.holds = ds.relaxed <= ds.optimal + rel_tol * std::abs(ds.optimal);
    rep.samples.push_back(std::move(ds));
  }
  return rep;
}

}  // namespace sensched
