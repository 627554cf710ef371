#include "csvm/qp_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/LU>

namespace csvm::qp {

namespace {

constexpr double kMinScaling = 1e-4;
constexpr double kMaxScaling = 1e4;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kRhoEqFactor = 1e3;

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double clamp_scale(double norm) {
  if (norm < kMinScaling) return 1.0;
  return std::min(norm, kMaxScaling);
}

Eigen::VectorXd clamp_vec(const Eigen::VectorXd& v, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::max_iter: return "max_iter";
  }
  return "?";
}

void DenseQp::validate() const {
  const auto n = q.size();
  const auto m = A.rows();
  if (P.rows() != n || P.cols() != n) throw std::invalid_argument("DenseQp: P has wrong shape");
  if (A.cols() != n && m > 0) throw std::invalid_argument("DenseQp: A has wrong column count");
  if (l.size() != m || u.size() != m) throw std::invalid_argument("DenseQp: row bounds have wrong size");
  if (lb.size() != n || ub.size() != n) throw std::invalid_argument("DenseQp: variable bounds have wrong size");
  for (Eigen::Index i = 0; i < m; ++i)
    if (l(i) > u(i)) throw std::invalid_argument("DenseQp: l > u");
  for (Eigen::Index j = 0; j < n; ++j)
    if (lb(j) > ub(j)) throw std::invalid_argument("DenseQp: lb > ub");
}

double KktResiduals::max() const { return std::max({stationarity, primal, complementarity}); }

KktResiduals kkt_residuals(const DenseQp& qp, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w) {
  KktResiduals r;
  Eigen::VectorXd grad = qp.P * x + qp.q + w;
  if (qp.num_rows() > 0) grad.noalias() += qp.A.transpose() * y;
  r.stationarity = inf_norm(grad);

  auto side = [&](double value, double lo, double hi, double mult) {
    const double viol = std::max({0.0, lo - value, value - hi});
    r.primal = std::max(r.primal, viol);
    const double up_slack = is_inf(hi) ? std::numeric_limits<double>::infinity() : std::max(0.0, hi - value);
    const double lo_slack = is_inf(lo) ? std::numeric_limits<double>::infinity() : std::max(0.0, value - lo);
    const double c = std::max(std::min(std::max(mult, 0.0), up_slack), std::min(std::max(-mult, 0.0), lo_slack));
    r.complementarity = std::max(r.complementarity, c);
  };
  if (qp.num_rows() > 0) {
    const Eigen::VectorXd ax = qp.A * x;
    for (Eigen::Index i = 0; i < qp.num_rows(); ++i) side(ax(i), qp.l(i), qp.u(i), y(i));
  }
  for (Eigen::Index j = 0; j < qp.num_vars(); ++j) side(x(j), qp.lb(j), qp.ub(j), w(j));
  return r;
}

// ---------------------------------------------------------------------------

AdmmSolver::AdmmSolver(DenseQp problem, QpSettings settings)
    : qp_(std::move(problem)), settings_(settings), rho_(settings.rho) {
  qp_.validate();
  compute_scaling();
  set_row_bounds(qp_.l, qp_.u);
  set_bounds(qp_.lb, qp_.ub);
}

void AdmmSolver::compute_scaling() {
  const auto n = qp_.num_vars();
  const auto m = qp_.num_rows();
  d_ = Eigen::VectorXd::Ones(n);
  e_ = Eigen::VectorXd::Ones(m);
  c_ = 1.0;
  Ps_ = qp_.P;
  As_ = qp_.A;
  qs_ = qp_.q;
  for (int it = 0; it < settings_.scaling_iters; ++it) {
    Eigen::VectorXd dt(n), et(m);
    for (Eigen::Index j = 0; j < n; ++j) {
      double norm = Ps_.col(j).cwiseAbs().maxCoeff();
      if (m > 0) norm = std::max(norm, As_.col(j).cwiseAbs().maxCoeff());
      dt(j) = 1.0 / std::sqrt(clamp_scale(norm));
    }
    for (Eigen::Index i = 0; i < m; ++i) et(i) = 1.0 / std::sqrt(clamp_scale(As_.row(i).cwiseAbs().maxCoeff()));
    Ps_ = dt.asDiagonal() * Ps_ * dt.asDiagonal();
    if (m > 0) As_ = et.asDiagonal() * As_ * dt.asDiagonal();
    qs_ = dt.cwiseProduct(qs_);
    d_ = d_.cwiseProduct(dt);
    e_ = e_.cwiseProduct(et);

    double mean_col = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) mean_col += Ps_.col(j).cwiseAbs().maxCoeff();
    mean_col = n ? mean_col / static_cast<double>(n) : 0.0;
    const double cost = 1.0 / clamp_scale(std::max(mean_col, inf_norm(qs_)));
    Ps_ *= cost;
    qs_ *= cost;
    c_ *= cost;
  }
}

void AdmmSolver::set_row_bounds(const Eigen::VectorXd& l, const Eigen::VectorXd& u) {
  const auto m = qp_.num_rows();
  if (l.size() != m || u.size() != m) throw std::invalid_argument("set_row_bounds: wrong size");
  qp_.l = l;
  qp_.u = u;
  ls_.resize(m);
  us_.resize(m);
  Eigen::VectorXd pattern(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    ls_(i) = is_inf(l(i)) ? -kInf : e_(i) * l(i);
    us_(i) = is_inf(u(i)) ? kInf : e_(i) * u(i);
    if (l(i) == u(i))
      pattern(i) = kRhoEqFactor;
    else if (is_inf(l(i)) && is_inf(u(i)))
      pattern(i) = kRhoMin / settings_.rho;
    else
      pattern(i) = 1.0;
  }
  if (row_pattern_.size() != m || row_pattern_ != pattern) {
    row_pattern_ = pattern;
    build_gram();
  }
  bounds_changed_ = true;
}

void AdmmSolver::set_bounds(const Eigen::VectorXd& lb, const Eigen::VectorXd& ub) {
  const auto n = qp_.num_vars();
  if (lb.size() != n || ub.size() != n) throw std::invalid_argument("set_bounds: wrong size");
  for (Eigen::Index j = 0; j < n; ++j)
    if (lb(j) > ub(j)) throw std::invalid_argument("set_bounds: lb > ub");
  qp_.lb = lb;
  qp_.ub = ub;
  lbs_.resize(n);
  ubs_.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    lbs_(j) = is_inf(lb(j)) ? -kInf : lb(j) / d_(j);
    ubs_(j) = is_inf(ub(j)) ? kInf : ub(j) / d_(j);
  }
  bounds_changed_ = true;
}

void AdmmSolver::build_gram() {
  const auto n = qp_.num_vars();
  if (qp_.num_rows() == 0) {
    as_weighted_gram_ = Eigen::MatrixXd::Zero(n, n);
    return;
  }
  const Eigen::MatrixXd weighted = row_pattern_.asDiagonal() * As_;
  as_weighted_gram_.noalias() = As_.transpose() * weighted;
}

void AdmmSolver::rho_vectors(double rho, Eigen::VectorXd& rho_g, Eigen::VectorXd& rho_b) const {
  rho_g = rho * row_pattern_;
  const auto n = qp_.num_vars();
  rho_b.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (qp_.lb(j) == qp_.ub(j))
      rho_b(j) = kRhoEqFactor * rho;
    else if (is_inf(qp_.lb(j)) && is_inf(qp_.ub(j)))
      rho_b(j) = kRhoMin;
    else
      rho_b(j) = rho;
  }
}

bool AdmmSolver::factor(double rho) {
  rho_vectors(rho, rho_g_, rho_b_);
  Eigen::MatrixXd kkt = Ps_ + rho * as_weighted_gram_;
  kkt.diagonal().array() += settings_.sigma;
  kkt.diagonal() += rho_b_;
  // Jitter only on factorization failure; stored data is never modified.
  double jitter = 0.0;
  for (;;) {
    Eigen::MatrixXd m = kkt;
    if (jitter > 0.0) m.diagonal().array() += jitter;
    llt_.compute(m);
    if (llt_.info() == Eigen::Success) break;
    jitter = jitter == 0.0 ? 1e-10 : 2.0 * jitter;
    if (jitter > 1e-6) return false;
  }
  factored_rho_ = rho;
  bounds_changed_ = false;
  return true;
}

void AdmmSolver::finish(QpResult& r) const {
  r.objective = 0.5 * r.x.dot(qp_.P * r.x) + qp_.q.dot(r.x);
  r.residuals = kkt_residuals(qp_, r.x, r.y, r.w);
}

bool AdmmSolver::polish(const Eigen::VectorXd& xs, const Eigen::VectorXd& zg, const Eigen::VectorXd& zb,
                        const Eigen::VectorXd& yg, const Eigen::VectorXd& yb, QpResult& out) const {
  const auto n = qp_.num_vars();
  const auto m = qp_.num_rows();

  std::vector<Eigen::Index> free_vars, fixed_vars, rows;
  Eigen::VectorXd fixed_value = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const bool lo_finite = lbs_(j) > -kInf / 2, hi_finite = ubs_(j) < kInf / 2;
    if (lo_finite && hi_finite && lbs_(j) == ubs_(j)) {
      fixed_vars.push_back(j);
      fixed_value(j) = lbs_(j);
    } else if (hi_finite && ubs_(j) - zb(j) < yb(j)) {
      fixed_vars.push_back(j);
      fixed_value(j) = ubs_(j);
    } else if (lo_finite && zb(j) - lbs_(j) < -yb(j)) {
      fixed_vars.push_back(j);
      fixed_value(j) = lbs_(j);
    } else {
      free_vars.push_back(j);
    }
  }
  Eigen::VectorXd row_value(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const bool lo_finite = ls_(i) > -kInf / 2, hi_finite = us_(i) < kInf / 2;
    if (lo_finite && hi_finite && ls_(i) == us_(i)) {
      rows.push_back(i);
      row_value(i) = ls_(i);
    } else if (hi_finite && us_(i) - zg(i) < yg(i)) {
      rows.push_back(i);
      row_value(i) = us_(i);
    } else if (lo_finite && zg(i) - ls_(i) < -yg(i)) {
      rows.push_back(i);
      row_value(i) = ls_(i);
    }
  }

  const auto nf = static_cast<Eigen::Index>(free_vars.size());
  const auto ng = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index dim = nf + ng;

  Eigen::VectorXd x_pol = fixed_value;
  Eigen::VectorXd yg_pol = Eigen::VectorXd::Zero(m);
  if (dim > 0) {
    Eigen::MatrixXd k0 = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index a = 0; a < nf; ++a)
      for (Eigen::Index b = 0; b < nf; ++b) k0(a, b) = Ps_(free_vars[a], free_vars[b]);
    for (Eigen::Index r = 0; r < ng; ++r)
      for (Eigen::Index a = 0; a < nf; ++a) {
        const double v = As_(rows[r], free_vars[a]);
        k0(nf + r, a) = v;
        k0(a, nf + r) = v;
      }
    Eigen::VectorXd rhs(dim);
    const Eigen::VectorXd p_fixed = Ps_ * fixed_value;
    const Eigen::VectorXd a_fixed = m > 0 ? Eigen::VectorXd(As_ * fixed_value) : Eigen::VectorXd();
    for (Eigen::Index a = 0; a < nf; ++a) rhs(a) = -qs_(free_vars[a]) - p_fixed(free_vars[a]);
    for (Eigen::Index r = 0; r < ng; ++r) rhs(nf + r) = row_value(rows[r]) - a_fixed(rows[r]);

    const double delta = settings_.polish_delta;
    Eigen::MatrixXd kd = k0;
    for (Eigen::Index a = 0; a < nf; ++a) kd(a, a) += delta;
    for (Eigen::Index r = 0; r < ng; ++r) kd(nf + r, nf + r) -= delta;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(kd);

    // Proximal start keeps the ADMM point along directions the active set
    // leaves undetermined; refinement then drives the true KKT residual down.
    Eigen::VectorXd prox(dim);
    for (Eigen::Index a = 0; a < nf; ++a) prox(a) = delta * xs(free_vars[a]);
    for (Eigen::Index r = 0; r < ng; ++r) prox(nf + r) = -delta * yg(rows[r]);
    Eigen::VectorXd sol = lu.solve(rhs + prox);
    for (int it = 0; it < settings_.polish_refine_iters; ++it) {
      const Eigen::VectorXd res = rhs - k0 * sol;
      if (!res.allFinite()) return false;
      if (inf_norm(res) < 1e-15 * std::max(1.0, inf_norm(rhs))) break;
      sol += lu.solve(res);
    }
    if (!sol.allFinite()) return false;
    for (Eigen::Index a = 0; a < nf; ++a) x_pol(free_vars[a]) = sol(a);
    for (Eigen::Index r = 0; r < ng; ++r) yg_pol(rows[r]) = sol(nf + r);
  }
  Eigen::VectorXd grad = Ps_ * x_pol + qs_;
  if (m > 0) grad.noalias() += As_.transpose() * yg_pol;
  Eigen::VectorXd yb_pol = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j : fixed_vars) yb_pol(j) = -grad(j);

  QpResult cand;
  cand.x = d_.cwiseProduct(x_pol);
  cand.y = m > 0 ? Eigen::VectorXd(e_.cwiseProduct(yg_pol) / c_) : Eigen::VectorXd();
  cand.w = yb_pol.cwiseQuotient(d_) / c_;
  finish(cand);
  if (!(cand.residuals.max() <= settings_.kkt_tol)) return false;
  cand.status = QpStatus::optimal;
  cand.polished = true;
  cand.iterations = out.iterations;
  out = std::move(cand);
  return true;
}

QpResult AdmmSolver::solve(const QpResult* warm) {
  const auto n = qp_.num_vars();
  const auto m = qp_.num_rows();
  const auto& st = settings_;

  if (n <= st.ipm_max_vars) {
    QpResult r = solve_interior_point(qp_, st);
    if (r.status == QpStatus::optimal) return r;
  }

  Eigen::VectorXd xs = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd yg = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd yb = Eigen::VectorXd::Zero(n);
  if (warm && warm->x.size() == n) {
    xs = warm->x.cwiseQuotient(d_);
    if (warm->y.size() == m && m > 0) yg = c_ * warm->y.cwiseQuotient(e_);
    if (warm->w.size() == n) yb = c_ * warm->w.cwiseProduct(d_);
  }
  Eigen::VectorXd zg = m > 0 ? clamp_vec(As_ * xs, ls_, us_) : Eigen::VectorXd();
  Eigen::VectorXd zb = clamp_vec(xs, lbs_, ubs_);

  if (bounds_changed_ || factored_rho_ != rho_) {
    if (!factor(rho_)) throw std::runtime_error("QP factorization failed beyond jitter repair");
  }

  QpResult result;
  auto make_result = [&](QpStatus status, int iters) {
    result.x = d_.cwiseProduct(xs);
    result.y = m > 0 ? Eigen::VectorXd(e_.cwiseProduct(yg) / c_) : Eigen::VectorXd();
    result.w = yb.cwiseQuotient(d_) / c_;
    result.status = status;
    result.iterations = iters;
    result.polished = false;
    finish(result);
  };

  double eps_abs = st.eps_abs, eps_rel = st.eps_rel;
  const double alpha = st.alpha;
  Eigen::VectorXd xt, zgt, rhs, ax, px, aty;
  int k = 0;
  bool converged = false;
  bool infeasible = false;
  int polish_attempts = 0;
  int next_polish = st.polish_interval;

  while (k < st.max_iter) {
    ++k;
    rhs = st.sigma * xs - qs_ + (rho_b_.cwiseProduct(zb) - yb);
    if (m > 0) rhs.noalias() += As_.transpose() * (rho_g_.cwiseProduct(zg) - yg);
    xt = llt_.solve(rhs);
    xs = alpha * xt + (1.0 - alpha) * xs;

    Eigen::VectorXd dyg, dyb;
    if (m > 0) {
      zgt.noalias() = As_ * xt;
      const Eigen::VectorXd relax = alpha * zgt + (1.0 - alpha) * zg;
      zg = clamp_vec(relax + yg.cwiseQuotient(rho_g_), ls_, us_);
      dyg = rho_g_.cwiseProduct(relax - zg);
      yg += dyg;
    }
    {
      const Eigen::VectorXd relax = alpha * xt + (1.0 - alpha) * zb;
      zb = clamp_vec(relax + yb.cwiseQuotient(rho_b_), lbs_, ubs_);
      dyb = rho_b_.cwiseProduct(relax - zb);
      yb += dyb;
    }

    const bool check = (k % st.check_interval == 0) || k == st.max_iter;
    if (check) {
      // Residuals in unscaled units.
      px.noalias() = Ps_ * xs;
      double prim = inf_norm(d_.cwiseProduct(xs - zb));
      double prim_norm = std::max(inf_norm(d_.cwiseProduct(xs)), inf_norm(d_.cwiseProduct(zb)));
      Eigen::VectorXd dual_vec = px + qs_ + yb;
      double aty_norm = 0.0;
      if (m > 0) {
        ax.noalias() = As_ * xs;
        prim = std::max(prim, inf_norm((ax - zg).cwiseQuotient(e_)));
        prim_norm = std::max({prim_norm, inf_norm(ax.cwiseQuotient(e_)), inf_norm(zg.cwiseQuotient(e_))});
        aty.noalias() = As_.transpose() * yg;
        dual_vec += aty;
        aty_norm = inf_norm((aty + yb).cwiseQuotient(d_)) / c_;
      } else {
        aty_norm = inf_norm(yb.cwiseQuotient(d_)) / c_;
      }
      const double dual = inf_norm(dual_vec.cwiseQuotient(d_)) / c_;
      const double dual_norm =
          std::max({inf_norm(px.cwiseQuotient(d_)) / c_, aty_norm, inf_norm(qs_.cwiseQuotient(d_)) / c_});

      if (prim <= eps_abs + eps_rel * prim_norm && dual <= eps_abs + eps_rel * dual_norm) {
        converged = true;
      } else {
        // Primal infeasibility certificate from the dual increment.
        Eigen::VectorXd dY_g = m > 0 ? Eigen::VectorXd(e_.cwiseProduct(dyg)) : Eigen::VectorXd();
        Eigen::VectorXd dY_b = dyb.cwiseQuotient(d_);
        const double norm = std::max(inf_norm(dY_g), inf_norm(dY_b));
        if (norm > 1e-14) {
          const double tol = st.eps_infeasible * norm;
          Eigen::VectorXd at = dY_b;
          if (m > 0) at.noalias() += qp_.A.transpose() * dY_g;
          if (inf_norm(at) <= tol) {
            double support = 0.0;
            bool valid = true;
            auto add = [&](double dy, double lo, double hi) {
              if (dy > tol) {
                if (is_inf(hi)) valid = false;
                else support += hi * dy;
              } else if (dy < -tol) {
                if (is_inf(lo)) valid = false;
                else support += lo * dy;
              }
            };
            for (Eigen::Index i = 0; i < m; ++i) add(dY_g(i), qp_.l(i), qp_.u(i));
            for (Eigen::Index j = 0; j < n; ++j) add(dY_b(j), qp_.lb(j), qp_.ub(j));
            if (valid && support < -tol) infeasible = true;
          }
        }
      }

      if (infeasible) {
        make_result(QpStatus::infeasible, k);
        return result;
      }
      if (converged) {
        make_result(QpStatus::optimal, k);
        if (st.polish && polish(xs, zg, zb, yg, yb, result)) return result;
        if (result.residuals.max() <= st.kkt_tol) return result;
        // Converged to the requested eps but not to KKT tolerance: tighten.
        converged = false;
        ++polish_attempts;
        eps_abs *= 0.01;
        eps_rel *= 0.01;
        if (polish_attempts > 3 || eps_abs < 1e-14) break;
      }
      if (st.polish && st.polish_interval > 0 && k >= next_polish) {
        next_polish = k + std::max(st.polish_interval, k / 2);
        make_result(QpStatus::optimal, k);
        if (polish(xs, zg, zb, yg, yb, result)) return result;
      }
      if (st.deadline && std::chrono::steady_clock::now() > *st.deadline) break;
    }

    if (st.adaptive_rho && k % st.adaptive_rho_interval == 0) {
      Eigen::VectorXd pxx = Ps_ * xs;
      Eigen::VectorXd atyy = yb;
      double prim_num = inf_norm(xs - zb);
      double prim_den = std::max(inf_norm(xs), inf_norm(zb));
      if (m > 0) {
        const Eigen::VectorXd axx = As_ * xs;
        prim_num = std::max(prim_num, inf_norm(axx - zg));
        prim_den = std::max({prim_den, inf_norm(axx), inf_norm(zg)});
        atyy.noalias() += As_.transpose() * yg;
      }
      const double dual_num = inf_norm(pxx + qs_ + atyy);
      const double dual_den = std::max({inf_norm(pxx), inf_norm(atyy), inf_norm(qs_)});
      const double pr = prim_num / (prim_den + 1e-30);
      const double du = dual_num / (dual_den + 1e-30);
      double rho_new = rho_ * std::sqrt(pr / (du + 1e-30));
      rho_new = std::clamp(rho_new, kRhoMin, kRhoMax);
      if (rho_new > 5.0 * rho_ || rho_new < rho_ / 5.0) {
        rho_ = rho_new;
        if (!factor(rho_)) throw std::runtime_error("QP factorization failed beyond jitter repair");
      }
    }
  }

  make_result(QpStatus::max_iter, k);
  if (st.polish && polish(xs, zg, zb, yg, yb, result)) return result;
  if (result.residuals.max() <= st.kkt_tol) result.status = QpStatus::optimal;
  return result;
}

QpResult solve_dense_qp(const DenseQp& qp, const QpSettings& settings, const QpResult* warm) {
  AdmmSolver solver(qp, settings);
  return solver.solve(warm);
}

}  // namespace csvm::qp
