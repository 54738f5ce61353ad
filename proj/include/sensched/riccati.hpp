#pragma once

#include <string>
#include <vector>

#include "sensched/errors.hpp"
#include "sensched/linalg.hpp"
#include "sensched/model.hpp"

namespace sensched {

/// Filtered and predicted covariances over 0..T with the trace-sum cost.
struct CovTrajectory {
  std::vector<Matrix> filtered;   // P_t
  std::vector<Matrix> predicted;  // P_{t|t-1}, predicted[0] = Sigma0
  double cost = 0.0;

  int length() const { return static_cast<int>(filtered.size()); }

  double recompute_cost() const {
    double c = 0.0;
    for (const auto& p : filtered) c += p.trace();
    return c;
  }
};

/// Information-form counterpart of CovTrajectory.
struct InfoTrajectory {
  std::vector<Matrix> filtered;   // Q_t
  std::vector<Matrix> predicted;  // Q_{t|t-1}
};

namespace detail {

// Unchecked kernels; callers guarantee symmetric PSD input of the right size.

inline Matrix measurement_update(const Matrix& c, const Matrix& v, const Matrix& m,
                                 bool sym = true) {
  const Matrix mct = m * c.transpose();
  Matrix s = c * mct + v;
  Eigen::LLT<Matrix> llt(symmetrize(s));
  if (llt.info() != Eigen::Success) throw DomainError("innovation covariance not positive definite");
  Matrix out = m - mct * llt.solve(mct.transpose());
  return sym ? symmetrize(out) : out;
}

inline Matrix time_update(const Matrix& a, const Matrix& w, const Matrix& m, bool sym = true) {
  Matrix out = a * m * a.transpose() + w;
  return sym ? symmetrize(out) : out;
}

inline Matrix gain_complement(const Matrix& c, const Matrix& v, const Matrix& m) {
  const Matrix mct = m * c.transpose();
  Matrix s = c * mct + v;
  Eigen::LLT<Matrix> llt(symmetrize(s));
  if (llt.info() != Eigen::Success) throw DomainError("innovation covariance not positive definite");
  return Matrix::Identity(m.rows(), m.cols()) - mct * llt.solve(c);
}

inline void check_square(const Matrix& m, int n, const char* what) {
  if (m.rows() != n || m.cols() != n)
    throw ParameterError(std::string(what) + ": expected " + std::to_string(n) + "x" +
                         std::to_string(n) + " matrix");
}

}  // namespace detail

/// Measurement update g_t(i, M) = M - M C' (C M C' + V)^{-1} C M.
inline Matrix g_update(const Sensor& sensor, int t, const Matrix& m) {
  const Matrix& c = sensor.obs(t);
  detail::check_square(m, static_cast<int>(c.cols()), "g_update");
  return detail::measurement_update(c, sensor.noise_cov, project_psd_checked(m, "g_update"));
}

/// Same map through the information form (M^{-1} + C' V^{-1} C)^{-1}.
/// With require_pd a singular M is rejected; otherwise its eigenvalues are
/// floored before inversion.
inline Matrix g_update_info(const Sensor& sensor, int t, const Matrix& m, bool require_pd = true) {
  const Matrix& c = sensor.obs(t);
  detail::check_square(m, static_cast<int>(c.cols()), "g_update_info");
  const Matrix ms = project_psd_checked(m, "g_update_info");
  Matrix q;
  if (require_pd) {
    q = spd_inverse(ms, "g_update_info");
  } else {
    q = floored_inverse(ms, 1e-12 * std::max(1.0, ms.norm()));
  }
  Eigen::LLT<Matrix> vllt(symmetrize(sensor.noise_cov));
  q += symmetrize(c.transpose() * vllt.solve(c));
  return spd_inverse(q, "g_update_info");
}

/// Time update h_t(M) = A_{t-1} M A_{t-1}' + W, for 1 <= t <= T.
inline Matrix h_update(const SystemModel& system, int t, const Matrix& m) {
  if (t < 1 || t > system.horizon)
    throw ParameterError("h_update: t=" + std::to_string(t) + " outside [1, T]");
  detail::check_square(m, system.state_dim(), "h_update");
  return detail::time_update(system.transition(t - 1), system.process_noise, m);
}

/// H_t(i, M) = I - M C' (C M C' + V)^{-1} C, so that
/// d/de g(M + e L)|_0 = H L H'.
inline Matrix jacobian_H(const Sensor& sensor, int t, const Matrix& m) {
  const Matrix& c = sensor.obs(t);
  detail::check_square(m, static_cast<int>(c.cols()), "jacobian_H");
  return detail::gain_complement(c, sensor.noise_cov, project_psd_checked(m, "jacobian_H"));
}

struct EvalOptions {
  bool symmetrize = true;
};

/// Runs the filter covariance recursion from step `start` with predicted
/// covariance `predicted0`, choosing sensor choices[k] at step start + k.
inline CovTrajectory evaluate_from(const Scenario& sc, int start, const Matrix& predicted0,
                                   const std::vector<int>& choices, EvalOptions opt = {}) {
  const int horizon = sc.horizon();
  const int steps = static_cast<int>(choices.size());
  if (start < 0 || start + steps - 1 != horizon)
    throw ParameterError("evaluate: choices must cover steps " + std::to_string(start) + ".." +
                         std::to_string(horizon));
  CovTrajectory traj;
  traj.filtered.reserve(static_cast<std::size_t>(steps));
  traj.predicted.reserve(static_cast<std::size_t>(steps));
  Matrix pred = predicted0;
  for (int k = 0; k < steps; ++k) {
    const int t = start + k;
    const int i = choices[static_cast<std::size_t>(k)];
    if (i < 0 || i >= sc.num_sensors())
      throw ParameterError("evaluate: sensor index out of range at t=" + std::to_string(t));
    try {
      const Sensor& s = sc.sensors[i];
      Matrix filt = detail::measurement_update(s.obs(t), s.noise_cov, pred, opt.symmetrize);
      traj.cost += filt.trace();
      traj.predicted.push_back(pred);
      if (t < horizon)
        pred = detail::time_update(sc.system.transition(t), sc.system.process_noise, filt,
                                   opt.symmetrize);
      traj.filtered.push_back(std::move(filt));
    } catch (const DomainError& e) {
      throw DomainError(std::string(e.what()) + " (t=" + std::to_string(t) + ")");
    }
  }
  return traj;
}

/// Filter covariances under an integer schedule, starting from Sigma0.
inline CovTrajectory evaluate_schedule(const Scenario& sc, const Schedule& schedule,
                                       EvalOptions opt = {}) {
  schedule.validate(sc.horizon(), sc.num_sensors());
  return evaluate_from(sc, 0, sc.system.prior_cov, schedule.choices, opt);
}

inline InfoTrajectory to_information(const CovTrajectory& traj) {
  InfoTrajectory info;
  for (const auto& p : traj.filtered) info.filtered.push_back(spd_inverse(p, "to_information"));
  for (const auto& p : traj.predicted) info.predicted.push_back(spd_inverse(p, "to_information"));
  return info;
}

}  // namespace sensched
