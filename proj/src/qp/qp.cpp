#include "ctstl/qp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ctstl/error.hpp"

namespace ctstl::qp {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

double clip_norm(double v) {
  if (v < 1e-4) return 1.0;
  return std::min(v, 1e4);
}

// Constraint rows in the form l <= A z <= u.
struct Stacked {
  MatrixXd A;
  VectorXd l;
  VectorXd u;
  Index n_eq = 0;
};

Stacked stack(const QuadraticProgram& qp) {
  Stacked s;
  const Index n = qp.dim();
  s.n_eq = qp.A_eq.rows();
  const Index rows = qp.A_eq.rows() + qp.A_in.rows();
  s.A.resize(rows, n);
  s.l.resize(rows);
  s.u.resize(rows);
  if (s.n_eq > 0) {
    s.A.topRows(s.n_eq) = qp.A_eq;
    s.l.head(s.n_eq) = qp.b_eq;
    s.u.head(s.n_eq) = qp.b_eq;
  }
  if (qp.A_in.rows() > 0) {
    s.A.bottomRows(qp.A_in.rows()) = qp.A_in;
    s.l.tail(qp.A_in.rows()).setConstant(-kInf);
    s.u.tail(qp.A_in.rows()) = qp.b_in;
  }
  return s;
}

struct Scaling {
  VectorXd D;  // variables
  VectorXd E;  // constraints
  double c = 1.0;
};

Scaling ruiz(MatrixXd& P, VectorXd& q, MatrixXd& A, int iterations) {
  const Index n = P.rows();
  const Index m = A.rows();
  Scaling s{VectorXd::Ones(n), VectorXd::Ones(m), 1.0};
  VectorXd d(n), e(m);
  for (int it = 0; it < iterations; ++it) {
    for (Index j = 0; j < n; ++j) {
      double norm = P.col(j).cwiseAbs().maxCoeff();
      if (m > 0) norm = std::max(norm, A.col(j).cwiseAbs().maxCoeff());
      d(j) = 1.0 / std::sqrt(clip_norm(norm));
    }
    for (Index i = 0; i < m; ++i) e(i) = 1.0 / std::sqrt(clip_norm(A.row(i).cwiseAbs().maxCoeff()));
    P = d.asDiagonal() * P * d.asDiagonal();
    q = d.cwiseProduct(q);
    if (m > 0) A = e.asDiagonal() * A * d.asDiagonal();
    s.D = s.D.cwiseProduct(d);
    s.E = s.E.cwiseProduct(e);
  }
  double mean_col = 0.0;
  for (Index j = 0; j < n; ++j) mean_col += P.col(j).cwiseAbs().maxCoeff();
  mean_col = n > 0 ? mean_col / static_cast<double>(n) : 0.0;
  const double cost_norm = std::max(mean_col, inf_norm(q));
  s.c = 1.0 / clip_norm(cost_norm);
  P *= s.c;
  q *= s.c;
  return s;
}

// Active-set solve on the original data: rows whose multiplier or slack says
// they bind are treated as equalities; regularized KKT plus refinement.
bool polish(const QuadraticProgram& qp, const Stacked& st, const VectorXd& z_admm,
            const VectorXd& y_admm, QpSolution& out, double tolerance) {
  const Index n = qp.dim();
  const Index rows = st.A.rows();
  std::vector<Index> active;
  const VectorXd Az = st.A * z_admm;
  for (Index i = 0; i < rows; ++i) {
    if (i < st.n_eq || st.u(i) - Az(i) < y_admm(i)) active.push_back(i);
  }
  const Index na = static_cast<Index>(active.size());
  MatrixXd Aa(na, n);
  VectorXd ba(na);
  for (Index r = 0; r < na; ++r) {
    Aa.row(r) = st.A.row(active[static_cast<std::size_t>(r)]);
    ba(r) = st.u(active[static_cast<std::size_t>(r)]);
  }
  const double delta = 1e-9;
  MatrixXd K0 = MatrixXd::Zero(n + na, n + na);
  K0.topLeftCorner(n, n) = qp.P;
  K0.topRightCorner(n, na) = Aa.transpose();
  K0.bottomLeftCorner(na, n) = Aa;
  MatrixXd Kr = K0;
  Kr.topLeftCorner(n, n).diagonal().array() += delta;
  Kr.bottomRightCorner(na, na).diagonal().array() -= delta;
  Eigen::PartialPivLU<MatrixXd> lu(Kr);
  VectorXd rhs(n + na);
  rhs.head(n) = -qp.q;
  rhs.tail(na) = ba;
  VectorXd sol = lu.solve(rhs);
  for (int it = 0; it < 8; ++it) {
    const VectorXd r = rhs - K0 * sol;
    if (!r.allFinite() || inf_norm(r) < 1e-15 * (1.0 + inf_norm(rhs))) break;
    sol += lu.solve(r);
  }
  if (!sol.allFinite()) return false;

  VectorXd z = sol.head(n);
  VectorXd y = VectorXd::Zero(rows);
  for (Index r = 0; r < na; ++r) y(active[static_cast<std::size_t>(r)]) = sol(n + r);
  VectorXd y_eq = y.head(st.n_eq);
  VectorXd y_in = y.tail(rows - st.n_eq);
  const KktResiduals res = kkt_residuals(qp, z, y_eq, y_in);
  if (!(res.max() <= tolerance)) return false;
  out.z = std::move(z);
  out.y_eq = std::move(y_eq);
  out.y_in = std::move(y_in);
  out.residuals = res;
  out.polished = true;
  return true;
}

}  // namespace

void QuadraticProgram::validate() const {
  const Index n = q.size();
  if (P.rows() != n || P.cols() != n) throw DimensionError("P must be n x n");
  if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != n)) {
    throw DimensionError("equality block has inconsistent dimensions");
  }
  if (A_in.rows() != b_in.size() || (A_in.rows() > 0 && A_in.cols() != n)) {
    throw DimensionError("inequality block has inconsistent dimensions");
  }
  if (!P.allFinite() || !q.allFinite() || !A_eq.allFinite() || !b_eq.allFinite() ||
      !A_in.allFinite() || !b_in.allFinite()) {
    throw DimensionError("problem data must be finite");
  }
  const double asym = n > 0 ? (P - P.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (asym > 1e-12 * std::max(1.0, n > 0 ? P.cwiseAbs().maxCoeff() : 0.0)) {
    throw DimensionError("P must be symmetric");
  }
}

double QuadraticProgram::objective(const VectorXd& z) const { return 0.5 * z.dot(P * z) + q.dot(z); }

std::string_view to_string(QpStatus status) noexcept {
  switch (status) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::MaxIterations: return "max_iterations";
    case QpStatus::PrimalInfeasible: return "primal_infeasible";
    case QpStatus::DualInfeasible: return "dual_infeasible";
  }
  return "unknown";
}

double KktResiduals::max() const noexcept {
  return std::max({stationarity, primal, complementarity, dual_sign});
}

KktResiduals kkt_residuals(const QuadraticProgram& qp, const VectorXd& z, const VectorXd& y_eq,
                           const VectorXd& y_in) {
  KktResiduals r;
  VectorXd grad = qp.P * z + qp.q;
  if (qp.A_eq.rows() > 0) {
    grad += qp.A_eq.transpose() * y_eq;
    r.primal = inf_norm(qp.A_eq * z - qp.b_eq);
  }
  if (qp.A_in.rows() > 0) {
    grad += qp.A_in.transpose() * y_in;
    const VectorXd slack = qp.A_in * z - qp.b_in;
    for (Index i = 0; i < slack.size(); ++i) {
      r.primal = std::max(r.primal, slack(i));
      r.complementarity = std::max(r.complementarity, std::abs(y_in(i) * slack(i)));
      r.dual_sign = std::max(r.dual_sign, -y_in(i));
    }
  }
  r.stationarity = inf_norm(grad);
  return r;
}

double duality_gap(const QuadraticProgram& qp, const QpSolution& s) {
  double dual = -0.5 * s.z.dot(qp.P * s.z);
  if (qp.A_eq.rows() > 0) dual -= qp.b_eq.dot(s.y_eq);
  if (qp.A_in.rows() > 0) dual -= qp.b_in.dot(s.y_in);
  return qp.objective(s.z) - dual;
}

QpSolution solve_qp(const QuadraticProgram& qp, const QpSettings& settings,
                    const WarmStart* warm_start) {
  qp.validate();
  const Index n = qp.dim();
  const Stacked st = stack(qp);
  const Index rows = st.A.rows();

  MatrixXd P = qp.P;
  VectorXd q = qp.q;
  MatrixXd A = st.A;
  const Scaling sc = ruiz(P, q, A, settings.scaling_iterations);
  VectorXd l = st.l.cwiseProduct(sc.E);
  VectorXd u = st.u.cwiseProduct(sc.E);

  VectorXd x = VectorXd::Zero(n);
  VectorXd z = VectorXd::Zero(rows);
  VectorXd y = VectorXd::Zero(rows);
  if (warm_start != nullptr) {
    if (warm_start->z.size() == n) x = warm_start->z.cwiseQuotient(sc.D);
    const bool duals = warm_start->y_eq.size() == qp.A_eq.rows() &&
                       warm_start->y_in.size() == qp.A_in.rows();
    if (duals && rows > 0) {
      VectorXd yw(rows);
      yw << warm_start->y_eq, warm_start->y_in;
      y = sc.c * yw.cwiseQuotient(sc.E);
    }
    z = (A * x).cwiseMax(l).cwiseMin(u);
  }

  VectorXd rho(rows);
  double rho_base = settings.rho;
  auto set_rho = [&] {
    for (Index i = 0; i < rows; ++i) rho(i) = (l(i) == u(i)) ? 1e3 * rho_base : rho_base;
  };
  set_rho();
  Eigen::LLT<MatrixXd> llt;
  auto factor = [&] {
    MatrixXd K = P;
    K.diagonal().array() += settings.sigma;
    if (rows > 0) K.noalias() += A.transpose() * rho.asDiagonal() * A;
    llt.compute(K);
  };
  factor();

  QpSolution out;
  out.z = VectorXd::Zero(n);
  out.y_eq = VectorXd::Zero(qp.A_eq.rows());
  out.y_in = VectorXd::Zero(qp.A_in.rows());

  auto unscaled = [&](const VectorXd& xs, const VectorXd& ys) {
    out.z = sc.D.cwiseProduct(xs);
    const VectorXd yu = rows > 0 ? VectorXd(sc.E.cwiseProduct(ys) / sc.c) : VectorXd();
    out.y_eq = yu.head(st.n_eq);
    out.y_in = yu.tail(rows - st.n_eq);
  };

  const double tol_inf = settings.infeasibility_tolerance;
  VectorXd x_prev, y_prev;
  for (int iter = 1; iter <= settings.max_iterations; ++iter) {
    x_prev = x;
    y_prev = y;
    VectorXd rhs = settings.sigma * x - q;
    if (rows > 0) rhs.noalias() += A.transpose() * (rho.cwiseProduct(z) - y);
    const VectorXd x_tilde = llt.solve(rhs);
    const VectorXd z_tilde = A * x_tilde;
    x = settings.alpha * x_tilde + (1.0 - settings.alpha) * x_prev;
    const VectorXd z_hat = settings.alpha * z_tilde + (1.0 - settings.alpha) * z;
    const VectorXd z_new = (z_hat + y.cwiseQuotient(rho)).cwiseMax(l).cwiseMin(u);
    y += rho.cwiseProduct(z_hat - z_new);
    z = z_new;
    out.iterations = iter;

    const bool check = iter == 1 || iter % settings.check_interval == 0 ||
                       iter == settings.max_iterations;
    if (!check) continue;

    unscaled(x, y);
    const VectorXd z_unscaled = rows > 0 ? VectorXd(z.cwiseQuotient(sc.E)) : VectorXd();
    const VectorXd Ax = st.A * out.z;
    const VectorXd Px = qp.P * out.z;
    VectorXd Aty = VectorXd::Zero(n);
    if (rows > 0) Aty = st.A.transpose() * (VectorXd(out.y_eq.size() + out.y_in.size()) << out.y_eq, out.y_in).finished();
    const double prim = rows > 0 ? inf_norm(Ax - z_unscaled) : 0.0;
    const double dual = inf_norm(Px + qp.q + Aty);
    const double eps_prim =
        settings.eps_abs + settings.eps_rel * std::max(inf_norm(Ax), inf_norm(z_unscaled));
    const double eps_dual = settings.eps_abs + settings.eps_rel * std::max({inf_norm(Px), inf_norm(Aty),
                                                                            inf_norm(qp.q)});
    const double scale = 1.0 + std::max({inf_norm(Ax), inf_norm(Px), inf_norm(qp.q)});

    if (settings.polish && prim <= 1e-3 * scale && dual <= 1e-3 * scale) {
      VectorXd yu(rows);
      if (rows > 0) yu << out.y_eq, out.y_in;
      if (polish(qp, st, out.z, yu, out, settings.kkt_tolerance)) {
        out.status = QpStatus::Optimal;
        out.objective = qp.objective(out.z);
        return out;
      }
    }
    if (prim <= eps_prim && dual <= eps_dual) {
      out.residuals = kkt_residuals(qp, out.z, out.y_eq, out.y_in);
      if (out.residuals.max() <= settings.kkt_tolerance) {
        out.status = QpStatus::Optimal;
        out.objective = qp.objective(out.z);
        return out;
      }
    }

    // Infeasibility certificates from successive differences.
    if (rows > 0) {
      VectorXd dy = sc.E.cwiseProduct(y - y_prev);
      const double ny = inf_norm(dy);
      if (ny > 1e-12) {
        dy /= ny;
        bool cert = inf_norm(st.A.transpose() * dy) <= tol_inf;
        double support = 0.0;
        for (Index i = 0; cert && i < rows; ++i) {
          if (dy(i) > tol_inf) {
            if (std::isinf(st.u(i))) cert = false;
            else support += st.u(i) * dy(i);
          } else if (dy(i) < -tol_inf) {
            if (std::isinf(st.l(i))) cert = false;
            else support += st.l(i) * dy(i);
          }
        }
        if (cert && support < -tol_inf) {
          out.status = QpStatus::PrimalInfeasible;
          out.residuals = kkt_residuals(qp, out.z, out.y_eq, out.y_in);
          out.objective = qp.objective(out.z);
          return out;
        }
      }
    }
    {
      VectorXd dx = sc.D.cwiseProduct(x - x_prev);
      const double nx = inf_norm(dx);
      if (nx > 1e-12) {
        dx /= nx;
        bool cert = inf_norm(qp.P * dx) <= tol_inf && qp.q.dot(dx) < -tol_inf;
        if (cert && rows > 0) {
          const VectorXd Adx = st.A * dx;
          for (Index i = 0; cert && i < rows; ++i) {
            if (i < st.n_eq) cert = std::abs(Adx(i)) <= tol_inf;
            else cert = Adx(i) <= tol_inf;
          }
        }
        if (cert) {
          out.status = QpStatus::DualInfeasible;
          out.residuals = kkt_residuals(qp, out.z, out.y_eq, out.y_in);
          out.objective = qp.objective(out.z);
          return out;
        }
      }
    }

    if (rows > 0 && iter % settings.adapt_interval == 0) {
      const VectorXd Axs = A * x;
      const VectorXd Pxs = P * x;
      const VectorXd Atys = A.transpose() * y;
      const double rp = inf_norm(Axs - z) / std::max({inf_norm(Axs), inf_norm(z), 1e-30});
      const double rd = inf_norm(Pxs + q + Atys) /
                        std::max({inf_norm(Pxs), inf_norm(Atys), inf_norm(q), 1e-30});
      const double ratio = std::sqrt(rp / std::max(rd, 1e-30));
      if (ratio > 5.0 || ratio < 0.2) {
        rho_base = std::clamp(rho_base * ratio, 1e-6, 1e6);
        set_rho();
        factor();
      }
    }
  }

  unscaled(x, y);
  out.residuals = kkt_residuals(qp, out.z, out.y_eq, out.y_in);
  out.objective = qp.objective(out.z);
  out.status = QpStatus::MaxIterations;
  return out;
}

}  // namespace ctstl::qp
