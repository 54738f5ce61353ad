#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "sensched/conic.hpp"
#include "sensched/errors.hpp"
#include "sensched/ipm.hpp"
#include "sensched/linalg.hpp"
#include "sensched/model.hpp"
#include "sensched/riccati.hpp"

namespace sensched {

/// Convex-hull relaxation of the scheduling problem over steps start..T:
///
///   minimize    sum_t tr(P_t)
///   subject to  Q_t = Q_{t|t-1} + sum_i theta^i_t R^i_t
///               [P_t  I  ]
///               [I    Q_t] >= 0
///               [W^-1 - Q_{t|t-1}    W^-1 A_{t-1}                   ]
///               [A_{t-1}' W^-1       Q_{t-1} + A_{t-1}' W^-1 A_{t-1}] >= 0   (t > start)
///               theta_t >= 0, sum_i theta^i_t = 1
///
/// Q_{start|start-1} is a constant (Sigma0^{-1} for the full horizon).
struct Relaxation {
  ConicProgram program;
  int start = 0;
  int horizon = 0;
  int state_dim = 0;
  int num_sensors = 0;
  Matrix initial_info;  // Q_{start|start-1}

  int steps() const { return horizon - start + 1; }
};

struct SolverStats {
  SolveStatus status = SolveStatus::Failure;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  std::string message;
};

/// Optimizer of the relaxation. Vectors are indexed by k = t - start.
struct RelaxedSolution {
  int start = 0;
  Matrix theta;                   // steps x N
  std::vector<Matrix> cov;        // P°_t
  std::vector<Matrix> info;       // Q°_t
  std::vector<Matrix> pred_info;  // Q°_{t|t-1}; entry 0 is the constant initial information
  std::vector<Matrix> pred_cov;   // P°_{t|t-1}, floored inverse of pred_info
  double objective = 0.0;
  SolverStats stats;

  bool usable() const {
    return stats.status == SolveStatus::Optimal || stats.status == SolveStatus::NearOptimal;
  }
  void require_usable() const {
    if (!usable())
      throw SolverError(std::string("relaxation solve ended with status ") +
                        to_string(stats.status) + " (" + stats.message + ")");
  }
};

namespace detail {

struct RelaxLayout {
  int p = 0, q = 0, qp = -1, theta = 0;
};

}  // namespace detail

/// Assembles the relaxation for steps start..T with Q_{start|start-1} = initial_info.
inline Relaxation build_relaxation_from(const Scenario& sc, int start, const Matrix& initial_info) {
  sc.validate();
  const int n = sc.state_dim();
  const int big_n = sc.num_sensors();
  const int horizon = sc.horizon();
  if (start < 0 || start > horizon) throw ParameterError("relaxation: start outside [0, T]");
  detail::check_square(initial_info, n, "relaxation initial information");
  const Matrix& w = sc.system.process_noise;
  if (!is_positive_definite(w)) throw ValidationError("W: not positive definite");
  const Matrix winv = spd_inverse(w, "W");

  const int d = svec_dim(n);
  const int steps = horizon - start + 1;
  const int order2 = 2 * n;
  const int d2 = svec_dim(order2);

  Relaxation rel;
  rel.start = start;
  rel.horizon = horizon;
  rel.state_dim = n;
  rel.num_sensors = big_n;
  rel.initial_info = symmetrize(initial_info);
  ConicProgram& prog = rel.program;

  std::vector<detail::RelaxLayout> lay(static_cast<std::size_t>(steps));
  int nv = 0;
  for (int k = 0; k < steps; ++k) {
    const int t = start + k;
    auto& l = lay[static_cast<std::size_t>(k)];
    l.p = nv;
    prog.variables.push_back({"P", t, nv, d, n});
    nv += d;
    l.q = nv;
    prog.variables.push_back({"Q", t, nv, d, n});
    nv += d;
    if (k > 0) {
      l.qp = nv;
      prog.variables.push_back({"Qpred", t, nv, d, n});
      nv += d;
    }
    l.theta = nv;
    prog.variables.push_back({"theta", t, nv, big_n, 0});
    nv += big_n;
  }
  prog.num_vars = nv;
  prog.c = Vector::Zero(nv);
  for (const auto& l : lay)
    for (int i = 0; i < n; ++i) prog.c(l.p + svec_index(n, i, i)) = 1.0;

  // Equalities.
  std::vector<Triplet> at;
  std::vector<double> bvals;
  int row = 0;
  const Vector init_svec = svec(rel.initial_info);
  for (int k = 0; k < steps; ++k) {
    const int t = start + k;
    const auto& l = lay[static_cast<std::size_t>(k)];
    std::vector<Vector> rsv;
    for (int i = 0; i < big_n; ++i) rsv.push_back(svec(sc.sensors.info_increment(i, t)));
    for (int e = 0; e < d; ++e) {
      at.emplace_back(row, l.q + e, 1.0);
      if (l.qp >= 0) at.emplace_back(row, l.qp + e, -1.0);
      for (int i = 0; i < big_n; ++i) {
        const double v = rsv[static_cast<std::size_t>(i)](e);
        if (v != 0.0) at.emplace_back(row, l.theta + i, -v);
      }
      bvals.push_back(k == 0 ? init_svec(e) : 0.0);
      ++row;
    }
    prog.equality_labels.push_back("info_update[" + std::to_string(t) + "]");
    for (int i = 0; i < big_n; ++i) at.emplace_back(row, l.theta + i, 1.0);
    bvals.push_back(1.0);
    ++row;
    prog.equality_labels.push_back("simplex[" + std::to_string(t) + "]");
  }
  prog.A.resize(row, nv);
  prog.A.setFromTriplets(at.begin(), at.end());
  prog.b = Eigen::Map<Vector>(bvals.data(), static_cast<Eigen::Index>(bvals.size()));

  // Cones: G x + s = h with s = F0 + sum_j x_j F_j, so G = -F and h = svec(F0).
  std::vector<Triplet> gt;
  std::vector<double> hvals;
  int crow = 0;
  auto add_cone = [&](ConicProgram::ConeKind kind, int dim, int order, std::string label) {
    prog.cones.push_back({kind, crow, dim, order, std::move(label)});
    hvals.resize(static_cast<std::size_t>(crow + dim), 0.0);
    crow += dim;
  };
  // Places coefficient `coef` times the n x n variable block at (r0, c0) in the
  // order-2n cone starting at `base`. Only diagonal blocks (r0 == c0) are used.
  auto place_var = [&](int base, int var_offset, int r0, double coef) {
    for (int j = 0; j < n; ++j)
      for (int i = j; i < n; ++i)
        gt.emplace_back(base + svec_index(order2, r0 + i, r0 + j), var_offset + svec_index(n, i, j),
                        -coef);
  };
  auto place_const = [&](int base, const Matrix& m, int r0, int c0) {
    for (int j = 0; j < m.cols(); ++j)
      for (int i = 0; i < m.rows(); ++i) {
        const int rr = r0 + i, cc = c0 + j;
        if (rr < cc) continue;
        const double scale = rr == cc ? 1.0 : M_SQRT2;
        hvals[static_cast<std::size_t>(base + svec_index(order2, rr, cc))] += scale * m(i, j);
      }
  };

  for (int k = 0; k < steps; ++k) {
    const int t = start + k;
    const auto& l = lay[static_cast<std::size_t>(k)];
    const int base = crow;
    add_cone(ConicProgram::ConeKind::PSD, d2, order2, "cov_lmi[" + std::to_string(t) + "]");
    place_var(base, l.p, 0, 1.0);
    place_var(base, l.q, n, 1.0);
    place_const(base, Matrix::Identity(n, n), n, 0);
  }
  for (int k = 1; k < steps; ++k) {
    const int t = start + k;
    const auto& l = lay[static_cast<std::size_t>(k)];
    const auto& lprev = lay[static_cast<std::size_t>(k - 1)];
    const Matrix& a = sc.system.transition(t - 1);
    const Matrix atw = a.transpose() * winv;
    const int base = crow;
    add_cone(ConicProgram::ConeKind::PSD, d2, order2, "pred_lmi[" + std::to_string(t) + "]");
    place_var(base, l.qp, 0, -1.0);
    place_const(base, winv, 0, 0);
    place_const(base, atw, n, 0);
    place_var(base, lprev.q, n, 1.0);
    place_const(base, symmetrize(atw * a), n, n);
  }
  {
    const int base = crow;
    add_cone(ConicProgram::ConeKind::NonNegative, steps * big_n, steps * big_n, "theta_nonneg");
    for (int k = 0; k < steps; ++k)
      for (int i = 0; i < big_n; ++i)
        gt.emplace_back(base + k * big_n + i, lay[static_cast<std::size_t>(k)].theta + i, -1.0);
  }
  prog.G.resize(crow, nv);
  prog.G.setFromTriplets(gt.begin(), gt.end());
  prog.h = Eigen::Map<Vector>(hvals.data(), static_cast<Eigen::Index>(hvals.size()));
  prog.validate();
  return rel;
}

/// Full-horizon relaxation, Q_{0|-1} = Sigma0^{-1}.
inline Relaxation build_relaxation(const Scenario& sc) {
  sc.validate();
  const Matrix sigma0_inv = spd_inverse(sc.system.prior_cov, "Sigma0");
  return build_relaxation_from(sc, 0, sigma0_inv);
}

/// Number of decision variables in the assembled relaxation for steps 0..T.
inline int relaxation_variable_count(int n, int num_sensors, int horizon) {
  const int d = svec_dim(n);
  return (horizon + 1) * (2 * d + num_sensors) + horizon * d;
}

inline RelaxedSolution extract_solution(const Relaxation& rel, const ConicSolution& cs) {
  const int n = rel.state_dim;
  const int steps = rel.steps();
  RelaxedSolution sol;
  sol.start = rel.start;
  sol.stats = {cs.status, cs.iterations, cs.primal_residual, cs.dual_residual, cs.gap, cs.message};
  if (cs.x.size() != rel.program.num_vars) return sol;
  sol.theta = Matrix::Zero(steps, rel.num_sensors);
  for (int k = 0; k < steps; ++k) {
    const int t = rel.start + k;
    const auto* vp = rel.program.find_variable("P", t);
    const auto* vq = rel.program.find_variable("Q", t);
    const auto* vth = rel.program.find_variable("theta", t);
    sol.cov.push_back(smat(cs.x.segment(vp->offset, vp->size), n));
    sol.info.push_back(smat(cs.x.segment(vq->offset, vq->size), n));
    if (k == 0) {
      sol.pred_info.push_back(rel.initial_info);
    } else {
      const auto* vqp = rel.program.find_variable("Qpred", t);
      sol.pred_info.push_back(smat(cs.x.segment(vqp->offset, vqp->size), n));
    }
    sol.pred_cov.push_back(floored_inverse(sol.pred_info.back(), 1e-9));
    sol.theta.row(k) = cs.x.segment(vth->offset, vth->size).transpose();
    sol.objective += sol.cov.back().trace();
  }
  return sol;
}

inline RelaxedSolution solve_relaxation(const Relaxation& rel, double tol = 1e-7) {
  SolverSettings st;
  st.feas_tol = tol;
  st.gap_tol = tol;
  return extract_solution(rel, solve_conic(rel.program, st));
}

/// Build and solve for the full horizon.
inline RelaxedSolution solve_relaxation(const Scenario& sc, double tol = 1e-7) {
  return solve_relaxation(build_relaxation(sc), tol);
}

/// Constraint violations of a relaxed tuple.
struct RelaxationResiduals {
  double simplex = 0.0;         // max |sum_i theta - 1|
  double theta_negativity = 0.0;  // max(0, -min theta)
  double info_update = 0.0;     // max_t ||Q_t - Q_{t|t-1} - sum theta R||_F
  double cov_lmi = 0.0;         // max(0, -min eig) over [P I; I Q]
  double pred_lmi = 0.0;        // max(0, -min eig) over the prediction block
};

inline RelaxationResiduals relaxation_residuals(const Scenario& sc, const RelaxedSolution& sol) {
  RelaxationResiduals r;
  const int n = sc.state_dim();
  const Matrix winv = spd_inverse(sc.system.process_noise, "W");
  const int steps = static_cast<int>(sol.cov.size());
  for (int k = 0; k < steps; ++k) {
    const int t = sol.start + k;
    r.simplex = std::max(r.simplex, std::abs(sol.theta.row(k).sum() - 1.0));
    r.theta_negativity = std::max(r.theta_negativity, -sol.theta.row(k).minCoeff());
    Matrix blend = Matrix::Zero(n, n);
    for (int i = 0; i < sc.num_sensors(); ++i)
      blend += sol.theta(k, i) * sc.sensors.info_increment(i, t);
    const auto ku = static_cast<std::size_t>(k);
    r.info_update = std::max(r.info_update, (sol.info[ku] - sol.pred_info[ku] - blend).norm());
    Matrix l1(2 * n, 2 * n);
    l1 << sol.cov[ku], Matrix::Identity(n, n), Matrix::Identity(n, n), sol.info[ku];
    r.cov_lmi = std::max(r.cov_lmi, -min_eigenvalue(l1));
    if (k > 0) {
      const Matrix& a = sc.system.transition(t - 1);
      Matrix l2(2 * n, 2 * n);
      l2 << winv - sol.pred_info[ku], winv * a, a.transpose() * winv,
          sol.info[ku - 1] + a.transpose() * winv * a;
      r.pred_lmi = std::max(r.pred_lmi, -min_eigenvalue(l2));
    }
  }
  return r;
}

/// A (P, Q, Q_pred) tuple; pred_info[0] is the fixed initial information.
struct CovInfoTuple {
  int start = 0;
  std::vector<Matrix> cov;
  std::vector<Matrix> info;
  std::vector<Matrix> pred_info;
};

inline CovInfoTuple as_tuple(const RelaxedSolution& sol) {
  return CovInfoTuple{sol.start, sol.cov, sol.info, sol.pred_info};
}

/// Slack-removal construction: keeps the per-step information increments
/// R_t = Q_t - Q_{t|t-1} of a feasible tuple and replaces everything else by
/// the exact filter recursion driven by those increments.
inline CovInfoTuple tighten(const Scenario& sc, const CovInfoTuple& loose) {
  const int steps = static_cast<int>(loose.cov.size());
  if (steps == 0 || loose.info.size() != loose.cov.size() ||
      loose.pred_info.size() != loose.cov.size())
    throw ParameterError("tighten: inconsistent tuple lengths");
  if (loose.start + steps - 1 != sc.horizon())
    throw ParameterError("tighten: tuple does not reach T");
  CovInfoTuple out;
  out.start = loose.start;
  Matrix pred = loose.pred_info.front();
  for (int k = 0; k < steps; ++k) {
    const int t = loose.start + k;
    const auto ku = static_cast<std::size_t>(k);
    const Matrix increment = loose.info[ku] - loose.pred_info[ku];
    Matrix q = symmetrize(pred + increment);
    Matrix p;
    try {
      p = spd_inverse(q, "tighten");
    } catch (const DomainError&) {
      throw DomainError("tighten: information matrix singular at t=" + std::to_string(t));
    }
    out.pred_info.push_back(pred);
    out.info.push_back(q);
    out.cov.push_back(p);
    if (t < sc.horizon()) {
      const Matrix hp = detail::time_update(sc.system.transition(t), sc.system.process_noise, p);
      pred = spd_inverse(hp, "tighten");
    }
  }
  return out;
}

/// Projects each row onto the simplex by clipping negatives and renormalizing.
inline Matrix project_theta(const Matrix& theta) {
  Matrix out = theta.cwiseMax(0.0);
  for (int k = 0; k < out.rows(); ++k) {
    const double s = out.row(k).sum();
    if (s <= 0.0) throw ParameterError("theta: row " + std::to_string(k) + " has no mass");
    out.row(k) /= s;
  }
  return out;
}

/// Exact information-form recursion with blended increments
/// R_t(theta) = sum_i theta^i_t R^i_t, from step `start` with predicted
/// covariance `predicted0`.
inline CovTrajectory evaluate_theta_from(const Scenario& sc, int start, const Matrix& predicted0,
                                         const Matrix& theta) {
  const int steps = sc.horizon() - start + 1;
  if (theta.rows() != steps || theta.cols() != sc.num_sensors())
    throw ParameterError("theta: expected " + std::to_string(steps) + "x" +
                         std::to_string(sc.num_sensors()) + " weights");
  for (int k = 0; k < steps; ++k) {
    if (std::abs(theta.row(k).sum() - 1.0) > 1e-6 || theta.row(k).minCoeff() < -1e-6) {
      // Larger violations than solver leakage are caller errors.
      if (std::abs(theta.row(k).sum() - 1.0) > 1e-3 || theta.row(k).minCoeff() < -1e-3)
        throw ParameterError("theta: row " + std::to_string(k) + " is not on the simplex");
    }
  }
  const Matrix th = project_theta(theta);
  const int n = sc.state_dim();
  CovTrajectory traj;
  Matrix pred = symmetrize(predicted0);
  for (int k = 0; k < steps; ++k) {
    const int t = start + k;
    Matrix blend = Matrix::Zero(n, n);
    for (int i = 0; i < sc.num_sensors(); ++i) blend += th(k, i) * sc.sensors.info_increment(i, t);
    Matrix p;
    try {
      p = spd_inverse(spd_inverse(pred, "evaluate_theta") + blend, "evaluate_theta");
    } catch (const DomainError& e) {
      throw DomainError(std::string(e.what()) + " (t=" + std::to_string(t) + ")");
    }
    traj.predicted.push_back(pred);
    traj.cost += p.trace();
    if (t < sc.horizon())
      pred = detail::time_update(sc.system.transition(t), sc.system.process_noise, p);
    traj.filtered.push_back(std::move(p));
  }
  return traj;
}

inline CovTrajectory evaluate_theta(const Scenario& sc, const Matrix& theta) {
  return evaluate_theta_from(sc, 0, sc.system.prior_cov, theta);
}

}  // namespace sensched
