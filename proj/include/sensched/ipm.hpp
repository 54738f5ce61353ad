#pragma once

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sensched/conic.hpp"
#include "sensched/linalg.hpp"

namespace sensched {

struct SolverSettings {
  double feas_tol = 1e-7;  // relative primal and dual residual
  double gap_tol = 1e-7;   // relative duality gap (absolute when the objective is tiny)
  int max_iterations = 120;
  double step_fraction = 0.99;
  int refinement_steps = 3;
  double regularization = 1e-10;  // static KKT diagonal shift, removed by refinement
};

enum class SolveStatus { Optimal, NearOptimal, Infeasible, Failure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::NearOptimal: return "near-optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Failure: return "failure";
  }
  return "failure";
}

struct ConicSolution {
  SolveStatus status = SolveStatus::Failure;
  Vector x, y, s, z;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  std::string message;
};

/// Infeasible-start primal-dual path-following method with Nesterov-Todd
/// scaling and Mehrotra predictor-corrector steps. The normal equations are
/// kept in sparse saddle-point form [H A'; A 0] with H = G' W^{-1} G and
/// solved by sparse LU.
class InteriorPointSolver {
 public:
  explicit InteriorPointSolver(const ConicProgram& program, SolverSettings settings = {})
      : p_(program), st_(settings) {
    p_.validate();
    nx_ = p_.num_vars;
    ny_ = p_.num_equalities();
    prepare_blocks();
  }

  ConicSolution solve() {
    ConicSolution out;
    Vector x, y, s, z;
    if (!initial_point(x, y, s, z)) {
      out.message = "initialization failed";
      return out;
    }
    const double deg = static_cast<double>(std::max(p_.degree(), 1));
    const double bnorm = std::max(1.0, std::max(p_.b.norm(), p_.h.norm()));
    const double cnorm = std::max(1.0, p_.c.norm());

    double pres = 0.0, dres = 0.0, gap = 0.0, pobj = 0.0, dobj = 0.0;
    struct Best {
      double merit = std::numeric_limits<double>::infinity();
      Vector x, y, s, z;
      double pres = 0.0, dres = 0.0, gap = 0.0, pobj = 0.0, dobj = 0.0;
      int it = 0;
    } best;
    int it = 0;
    bool converged = false;
    std::string message;
    for (; it <= st_.max_iterations; ++it) {
      const Vector rx = p_.c + at_times(y) + p_.G.transpose() * z;
      const Vector ry = p_.A * x - p_.b;
      const Vector rz = p_.G * x + s - p_.h;
      pres = std::max(ry.norm(), rz.norm()) / bnorm;
      dres = rx.norm() / cnorm;
      gap = s.dot(z);
      pobj = p_.c.dot(x);
      dobj = -p_.h.dot(z) - p_.b.dot(y);
      const double relgap = gap / std::max(1.0, std::abs(pobj));
      if (pres <= st_.feas_tol && dres <= st_.feas_tol && relgap <= st_.gap_tol) {
        converged = true;
        break;
      }
      const double merit = std::max({pres / st_.feas_tol, dres / st_.feas_tol, relgap / st_.gap_tol});
      if (merit < best.merit) {
        best = Best{merit, x, y, s, z, pres, dres, gap, pobj, dobj, it};
      } else if (merit > 1e4 * best.merit) {
        message = "diverged after iteration " + std::to_string(best.it);
        break;
      }
      if (it == st_.max_iterations) {
        message = "iteration limit";
        break;
      }
      if (!compute_scaling(s, z)) {
        message = "lost cone interiority";
        break;
      }
      if (!factor_kkt()) {
        message = "KKT factorization failed";
        break;
      }
      const double mu = gap / deg;

      // Predictor.
      Vector zero_corr = Vector::Zero(s.size());
      Vector rt = complementarity_rhs(0.0, zero_corr);
      Vector dx, dy, dz, ds;
      newton(-rx, -ry, -rz, rt, dx, dy, dz, ds);
      Vector ds_sc = scale_s(ds), dz_sc = scale_z(dz);
      const double a_aff = std::min(1.0, std::min(max_step(ds_sc), max_step(dz_sc)));
      const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / deg;
      const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

      // Corrector.
      Vector corr = jordan_product(ds_sc, dz_sc);
      rt = complementarity_rhs(sigma * mu, corr);
      newton(-rx, -ry, -rz, rt, dx, dy, dz, ds);
      ds_sc = scale_s(ds);
      dz_sc = scale_z(dz);
      double alpha = std::min(max_step(ds_sc), max_step(dz_sc));
      alpha = std::min(1.0, st_.step_fraction * alpha);
      if (!(alpha > 1e-14)) {
        message = "step length collapsed";
        break;
      }
      x += alpha * dx;
      y += alpha * dy;
      s += alpha * ds;
      z += alpha * dz;
    }

    if (!converged && best.merit < std::numeric_limits<double>::infinity()) {
      x = std::move(best.x);
      y = std::move(best.y);
      s = std::move(best.s);
      z = std::move(best.z);
      pres = best.pres;
      dres = best.dres;
      gap = best.gap;
      pobj = best.pobj;
      dobj = best.dobj;
    }
    out.x = std::move(x);
    out.y = std::move(y);
    out.s = std::move(s);
    out.z = std::move(z);
    out.iterations = it;
    out.primal_residual = pres;
    out.dual_residual = dres;
    out.gap = gap;
    out.primal_objective = pobj;
    out.dual_objective = dobj;
    const double relgap = gap / std::max(1.0, std::abs(pobj));
    if (converged) {
      out.status = SolveStatus::Optimal;
    } else if (pres <= 1e3 * st_.feas_tol && dres <= 1e3 * st_.feas_tol && relgap <= 1e-5) {
      out.status = SolveStatus::NearOptimal;
    } else if (pres > 1e-3 && dres <= 1e3 * st_.feas_tol) {
      out.status = SolveStatus::Infeasible;
    } else {
      out.status = SolveStatus::Failure;
    }
    out.message = converged ? "converged" : message;
    return out;
  }

 private:
  struct PsdBlock {
    int cone = 0;
    int offset = 0;
    int order = 0;
    std::vector<int> columns;  // variables touching this cone
    Matrix g;                  // dense rows of G restricted to `columns`
    Matrix r, rinv;            // NT scaling W = r r'
    Vector lambda;
  };
  struct NonNegBlock {
    int offset = 0;
    int dim = 0;
    Vector w, lambda;
  };

  void prepare_blocks() {
    Eigen::SparseMatrix<double, Eigen::RowMajor> grow(p_.G);
    for (std::size_t k = 0; k < p_.cones.size(); ++k) {
      const auto& cone = p_.cones[k];
      if (cone.kind == ConicProgram::ConeKind::NonNegative) {
        nonneg_.push_back(NonNegBlock{cone.offset, cone.dim, {}, {}});
        continue;
      }
      PsdBlock blk;
      blk.cone = static_cast<int>(k);
      blk.offset = cone.offset;
      blk.order = cone.order;
      std::vector<int> cols;
      for (int r = cone.offset; r < cone.offset + cone.dim; ++r)
        for (decltype(grow)::InnerIterator it(grow, r); it; ++it) cols.push_back(static_cast<int>(it.col()));
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      blk.columns = cols;
      blk.g = Matrix::Zero(cone.dim, static_cast<int>(cols.size()));
      for (int r = cone.offset; r < cone.offset + cone.dim; ++r)
        for (decltype(grow)::InnerIterator it(grow, r); it; ++it) {
          const int j = static_cast<int>(std::lower_bound(cols.begin(), cols.end(), it.col()) - cols.begin());
          blk.g(r - cone.offset, j) += it.value();
        }
      psd_.push_back(std::move(blk));
    }
    g_rows_ = std::move(grow);
    at_ = p_.A.transpose();
  }

  Vector at_times(const Vector& y) const {
    if (ny_ == 0) return Vector::Zero(nx_);
    return at_ * y;
  }

  static Matrix block_mat(const Vector& v, int offset, int order) {
    return smat(v.segment(offset, svec_dim(order)), order);
  }

  // Nesterov-Todd scaling point for the current (s, z).
  bool compute_scaling(const Vector& s, const Vector& z) {
    for (auto& nb : nonneg_) {
      const auto ss = s.segment(nb.offset, nb.dim).array();
      const auto zz = z.segment(nb.offset, nb.dim).array();
      if ((ss <= 0.0).any() || (zz <= 0.0).any()) return false;
      nb.w = (ss / zz).sqrt().matrix();
      nb.lambda = (ss * zz).sqrt().matrix();
    }
    for (auto& pb : psd_) {
      Eigen::LLT<Matrix> ls(block_mat(s, pb.offset, pb.order));
      Eigen::LLT<Matrix> lz(block_mat(z, pb.offset, pb.order));
      if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
      const Matrix lsm = ls.matrixL();
      const Matrix lzm = lz.matrixL();
      Eigen::JacobiSVD<Matrix> svd(lzm.transpose() * lsm, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Vector lam = svd.singularValues();
      if ((lam.array() <= 0.0).any()) return false;
      const Vector isq = lam.cwiseSqrt().cwiseInverse();
      pb.r = lsm * svd.matrixV() * isq.asDiagonal();
      pb.rinv = isq.asDiagonal() * svd.matrixU().transpose() * lzm.transpose();
      pb.lambda = lam;
    }
    return true;
  }

  // H = G' W^{-1} G assembled into the saddle-point matrix and factored.
  bool factor_kkt() {
    std::vector<Triplet> trip;
    for (const auto& pb : psd_) {
      const int nc = static_cast<int>(pb.columns.size());
      Matrix scaled(pb.g.rows(), nc);
      for (int j = 0; j < nc; ++j) {
        const Matrix u = smat(pb.g.col(j), pb.order);
        scaled.col(j) = svec(pb.rinv * u * pb.rinv.transpose());
      }
      const Matrix hk = scaled.transpose() * scaled;
      for (int a = 0; a < nc; ++a)
        for (int bcol = 0; bcol < nc; ++bcol)
          trip.emplace_back(pb.columns[static_cast<std::size_t>(a)],
                            pb.columns[static_cast<std::size_t>(bcol)], hk(a, bcol));
    }
    for (const auto& nb : nonneg_) {
      for (int r = 0; r < nb.dim; ++r) {
        const double inv_w2 = 1.0 / (nb.w(r) * nb.w(r));
        const int row = nb.offset + r;
        for (decltype(g_rows_)::InnerIterator ia(g_rows_, row); ia; ++ia)
          for (decltype(g_rows_)::InnerIterator ib(g_rows_, row); ib; ++ib)
            trip.emplace_back(static_cast<int>(ia.col()), static_cast<int>(ib.col()),
                              ia.value() * ib.value() * inv_w2);
      }
    }
    for (int i = 0; i < nx_; ++i) trip.emplace_back(i, i, st_.regularization);
    for (int i = 0; i < ny_; ++i) trip.emplace_back(nx_ + i, nx_ + i, -st_.regularization);
    for (int k = 0; k < p_.A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(p_.A, k); it; ++it) {
        trip.emplace_back(nx_ + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        trip.emplace_back(static_cast<int>(it.col()), nx_ + static_cast<int>(it.row()), it.value());
      }
    kkt_.resize(nx_ + ny_, nx_ + ny_);
    kkt_.setFromTriplets(trip.begin(), trip.end());
    kkt_.makeCompressed();

    if (!pattern_ready_) {
      lu_.analyzePattern(kkt_);
      pattern_ready_ = true;
    }
    lu_.factorize(kkt_);
    return lu_.info() == Eigen::Success;
  }

  Vector kkt_solve(const Vector& rhs) const {
    Vector sol = lu_.solve(rhs);
    for (int k = 0; k < st_.refinement_steps; ++k) sol += lu_.solve(Vector(rhs - kkt_ * sol));
    return sol;
  }

  // W^{1/2}-type map taking a scaled vector back to s-space: R U R'.
  Vector unscale(const Vector& u) const {
    Vector out(u.size());
    for (const auto& nb : nonneg_)
      out.segment(nb.offset, nb.dim) = nb.w.cwiseProduct(u.segment(nb.offset, nb.dim));
    for (const auto& pb : psd_)
      out.segment(pb.offset, svec_dim(pb.order)) =
          svec(pb.r * block_mat(u, pb.offset, pb.order) * pb.r.transpose());
    return out;
  }

  Vector apply_winv(const Vector& u) const {
    Vector out(u.size());
    for (const auto& nb : nonneg_)
      out.segment(nb.offset, nb.dim) =
          u.segment(nb.offset, nb.dim).cwiseQuotient(nb.w.cwiseProduct(nb.w));
    for (const auto& pb : psd_) {
      const Matrix winv = pb.rinv.transpose() * pb.rinv;
      out.segment(pb.offset, svec_dim(pb.order)) =
          svec(winv * block_mat(u, pb.offset, pb.order) * winv);
    }
    return out;
  }

  Vector scale_s(const Vector& ds) const {
    Vector out(ds.size());
    for (const auto& nb : nonneg_)
      out.segment(nb.offset, nb.dim) = ds.segment(nb.offset, nb.dim).cwiseQuotient(nb.w);
    for (const auto& pb : psd_)
      out.segment(pb.offset, svec_dim(pb.order)) =
          svec(pb.rinv * block_mat(ds, pb.offset, pb.order) * pb.rinv.transpose());
    return out;
  }

  Vector scale_z(const Vector& dz) const {
    Vector out(dz.size());
    for (const auto& nb : nonneg_)
      out.segment(nb.offset, nb.dim) = dz.segment(nb.offset, nb.dim).cwiseProduct(nb.w);
    for (const auto& pb : psd_)
      out.segment(pb.offset, svec_dim(pb.order)) =
          svec(pb.r.transpose() * block_mat(dz, pb.offset, pb.order) * pb.r);
    return out;
  }

  Vector jordan_product(const Vector& a, const Vector& b) const {
    Vector out(a.size());
    for (const auto& nb : nonneg_)
      out.segment(nb.offset, nb.dim) =
          a.segment(nb.offset, nb.dim).cwiseProduct(b.segment(nb.offset, nb.dim));
    for (const auto& pb : psd_) {
      const Matrix am = block_mat(a, pb.offset, pb.order);
      const Matrix bm = block_mat(b, pb.offset, pb.order);
      out.segment(pb.offset, svec_dim(pb.order)) = svec(0.5 * (am * bm + bm * am));
    }
    return out;
  }

  // Solves lambda o (ds~ + dz~) = target*e - lambda o lambda - corr for ds~ + dz~.
  Vector complementarity_rhs(double target, const Vector& corr) const {
    Vector out(corr.size());
    for (const auto& nb : nonneg_) {
      const Vector& l = nb.lambda;
      out.segment(nb.offset, nb.dim) =
          ((Vector::Constant(nb.dim, target) - l.cwiseProduct(l) - corr.segment(nb.offset, nb.dim))
               .array() /
           l.array())
              .matrix();
    }
    for (const auto& pb : psd_) {
      const int k = pb.order;
      Matrix v = -block_mat(corr, pb.offset, k);
      for (int i = 0; i < k; ++i) v(i, i) += target - pb.lambda(i) * pb.lambda(i);
      Matrix u(k, k);
      for (int j = 0; j < k; ++j)
        for (int i = 0; i < k; ++i) u(i, j) = 2.0 * v(i, j) / (pb.lambda(i) + pb.lambda(j));
      out.segment(pb.offset, svec_dim(k)) = svec(u);
    }
    return out;
  }

  // Largest step a with lambda + a * d in the cone (scaled coordinates).
  double max_step(const Vector& d) const {
    double amax = 1e30;
    for (const auto& nb : nonneg_)
      for (int i = 0; i < nb.dim; ++i) {
        const double di = d(nb.offset + i);
        if (di < 0.0) amax = std::min(amax, -nb.lambda(i) / di);
      }
    for (const auto& pb : psd_) {
      const Vector isq = pb.lambda.cwiseSqrt().cwiseInverse();
      const Matrix m = isq.asDiagonal() * block_mat(d, pb.offset, pb.order) * isq.asDiagonal();
      const double ev = min_eigenvalue(m);
      if (ev < 0.0) amax = std::min(amax, -1.0 / ev);
    }
    return amax;
  }

  // Newton system:
  //   A' dy + G' dz = bx,  A dx = by,  G dx + ds = bz,  ds~ + dz~ = rt.
  // Reduced solve, then refinement against the unreduced equations.
  void newton(const Vector& bx, const Vector& by, const Vector& bz, const Vector& rt, Vector& dx,
              Vector& dy, Vector& dz, Vector& ds) const {
    newton_reduced(bx, by, bz, rt, dx, dy, dz, ds);
    for (int k = 0; k < st_.refinement_steps; ++k) {
      const Vector r1 = bx - at_times(dy) - p_.G.transpose() * dz;
      const Vector r2 = ny_ > 0 ? Vector(by - p_.A * dx) : Vector(Vector::Zero(0));
      const Vector r3 = bz - p_.G * dx - ds;
      const Vector r4 = rt - scale_s(ds) - scale_z(dz);
      Vector ex, ey, ez, es;
      newton_reduced(r1, r2, r3, r4, ex, ey, ez, es);
      dx += ex;
      dy += ey;
      dz += ez;
      ds += es;
    }
  }

  void newton_reduced(const Vector& bx, const Vector& by, const Vector& bz, const Vector& rt, Vector& dx,
                      Vector& dy, Vector& dz, Vector& ds) const {
    const Vector q = unscale(rt) - bz;
    const Vector winv_q = apply_winv(q);
    Vector rhs(nx_ + ny_);
    rhs.head(nx_) = bx - p_.G.transpose() * winv_q;
    if (ny_ > 0) rhs.tail(ny_) = by;
    const Vector sol = kkt_solve(rhs);
    dx = sol.head(nx_);
    dy = sol.tail(ny_);
    const Vector gdx = p_.G * dx;
    dz = apply_winv(gdx + q);
    ds = bz - gdx;
  }

  double cone_min_eigen(const Vector& v) const {
    double m = 1e300;
    for (const auto& nb : nonneg_)
      if (nb.dim > 0) m = std::min(m, v.segment(nb.offset, nb.dim).minCoeff());
    for (const auto& pb : psd_) m = std::min(m, min_eigenvalue(block_mat(v, pb.offset, pb.order)));
    return m;
  }

  Vector identity_element() const {
    Vector e = Vector::Zero(p_.num_cone_rows());
    for (const auto& nb : nonneg_) e.segment(nb.offset, nb.dim).setOnes();
    for (const auto& pb : psd_)
      for (int i = 0; i < pb.order; ++i) e(pb.offset + svec_index(pb.order, i, i)) = 1.0;
    return e;
  }

  // Least-norm starting point, shifted into the cone interior.
  bool initial_point(Vector& x, Vector& y, Vector& s, Vector& z) {
    for (auto& nb : nonneg_) {
      nb.w = Vector::Ones(nb.dim);
      nb.lambda = Vector::Ones(nb.dim);
    }
    for (auto& pb : psd_) {
      pb.r = Matrix::Identity(pb.order, pb.order);
      pb.rinv = pb.r;
      pb.lambda = Vector::Ones(pb.order);
    }
    if (!factor_kkt()) return false;
    Vector rhs(nx_ + ny_);
    rhs.head(nx_) = p_.G.transpose() * p_.h;
    if (ny_ > 0) rhs.tail(ny_) = p_.b;
    Vector sol = kkt_solve(rhs);
    x = sol.head(nx_);
    s = p_.h - p_.G * x;

    rhs.head(nx_) = -p_.c;
    if (ny_ > 0) rhs.tail(ny_).setZero();
    sol = kkt_solve(rhs);
    y = sol.tail(ny_);
    z = p_.G * sol.head(nx_);

    const Vector e = identity_element();
    const double ap = -cone_min_eigen(s);
    if (ap >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + ap) * e;
    const double ad = -cone_min_eigen(z);
    if (ad >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + ad) * e;
    return x.allFinite() && s.allFinite() && z.allFinite();
  }

  ConicProgram p_;
  SolverSettings st_;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<PsdBlock> psd_;
  std::vector<NonNegBlock> nonneg_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> g_rows_;
  SparseMatrix at_;
  SparseMatrix kkt_;
  Eigen::SparseLU<SparseMatrix> lu_;
  bool pattern_ready_ = false;
};

inline ConicSolution solve_conic(const ConicProgram& program, SolverSettings settings = {}) {
  InteriorPointSolver solver(program, settings);
  return solver.solve();
}

}  // namespace sensched
