#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "csvm/qp_engine.hpp"

namespace csvm::qp {

namespace {

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
  return a;
}

// One finite side of a row, g'x >= h after normalizing g to unit length.
struct RowSide {
  Eigen::Index row;
  double sign;   // +1 lower side, -1 upper side
  double scale;  // 1 / |A_row|
};

// One finite side of a variable bound, sign * x_var >= h.
struct BoundSide {
  Eigen::Index var;  // index into the free variables
  double sign;
};

double row_scale(const Eigen::MatrixXd& A, Eigen::Index i) {
  const double norm = A.row(i).norm();
  return norm > 0.0 ? 1.0 / norm : 1.0;
}

}  // namespace

QpResult solve_interior_point(const DenseQp& qp, const QpSettings& settings) {
  qp.validate();
  const auto n_all = qp.num_vars();
  const auto m = qp.num_rows();

  // Variables with lb == ub are substituted out.
  std::vector<Eigen::Index> free_vars;
  Eigen::VectorXd x_fixed = Eigen::VectorXd::Zero(n_all);
  for (Eigen::Index j = 0; j < n_all; ++j) {
    if (!is_inf(qp.lb(j)) && qp.lb(j) == qp.ub(j)) x_fixed(j) = qp.lb(j);
    else free_vars.push_back(j);
  }
  const auto n = static_cast<Eigen::Index>(free_vars.size());
  Eigen::MatrixXd P(n, n), A(m, n);
  Eigen::VectorXd q(n);
  const Eigen::VectorXd px_fixed = qp.P * x_fixed;
  const Eigen::VectorXd ax_fixed = m > 0 ? Eigen::VectorXd(qp.A * x_fixed) : Eigen::VectorXd();
  for (Eigen::Index a = 0; a < n; ++a) {
    const Eigen::Index ja = free_vars[static_cast<std::size_t>(a)];
    q(a) = qp.q(ja) + px_fixed(ja);
    for (Eigen::Index b = 0; b < n; ++b) P(a, b) = qp.P(ja, free_vars[static_cast<std::size_t>(b)]);
    if (m > 0) A.col(a) = qp.A.col(ja);
  }

  // Equality rows E x = b and row sides G x >= h enter the augmented
  // system; bound sides stay diagonal.
  std::vector<Eigen::Index> eq_rows;
  std::vector<RowSide> row_sides;
  for (Eigen::Index i = 0; i < m; ++i) {
    const bool lo = !is_inf(qp.l(i)), hi = !is_inf(qp.u(i));
    if (lo && hi && qp.l(i) == qp.u(i)) {
      eq_rows.push_back(i);
      continue;
    }
    if (lo) row_sides.push_back({i, 1.0, row_scale(A, i)});
    if (hi) row_sides.push_back({i, -1.0, row_scale(A, i)});
  }
  std::vector<BoundSide> bound_sides;
  std::vector<double> hb;
  for (Eigen::Index a = 0; a < n; ++a) {
    const Eigen::Index j = free_vars[static_cast<std::size_t>(a)];
    if (!is_inf(qp.lb(j))) {
      bound_sides.push_back({a, 1.0});
      hb.push_back(qp.lb(j));
    }
    if (!is_inf(qp.ub(j))) {
      bound_sides.push_back({a, -1.0});
      hb.push_back(-qp.ub(j));
    }
  }
  const auto ne = static_cast<Eigen::Index>(eq_rows.size());
  const auto nr = static_cast<Eigen::Index>(row_sides.size());
  const auto nb = static_cast<Eigen::Index>(bound_sides.size());
  Eigen::MatrixXd E(ne, n), G(nr, n);
  Eigen::VectorXd be(ne), hr(nr), hbv(nb), bsign(nb);
  for (Eigen::Index k = 0; k < ne; ++k) {
    const Eigen::Index i = eq_rows[static_cast<std::size_t>(k)];
    E.row(k) = row_scale(A, i) * A.row(i);
    be(k) = row_scale(A, i) * (qp.l(i) - ax_fixed(i));
  }
  for (Eigen::Index k = 0; k < nr; ++k) {
    const auto& r = row_sides[static_cast<std::size_t>(k)];
    G.row(k) = r.sign * r.scale * A.row(r.row);
    hr(k) = r.sign * r.scale * ((r.sign > 0 ? qp.l(r.row) : qp.u(r.row)) - ax_fixed(r.row));
  }
  for (Eigen::Index k = 0; k < nb; ++k) {
    hbv(k) = hb[static_cast<std::size_t>(k)];
    bsign(k) = bound_sides[static_cast<std::size_t>(k)].sign;
  }
  auto bound_apply = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd v(nb);
    for (Eigen::Index k = 0; k < nb; ++k) v(k) = bsign(k) * x(bound_sides[static_cast<std::size_t>(k)].var);
    return v;
  };
  auto bound_adjoint = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = 0; k < nb; ++k) out(bound_sides[static_cast<std::size_t>(k)].var) += bsign(k) * v(k);
    return out;
  };

  const double target = settings.kkt_tol * 1e-2;
  QpResult result;
  // Maps multipliers back to the engine convention P x + q + A'y + w = 0.
  auto export_result = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& ye, const Eigen::VectorXd& wr,
                           const Eigen::VectorXd& wb) {
    Eigen::VectorXd full = x_fixed;
    for (Eigen::Index a = 0; a < n; ++a) full(free_vars[static_cast<std::size_t>(a)]) = x(a);
    result.x = full;
    result.y = Eigen::VectorXd::Zero(m);
    result.w = Eigen::VectorXd::Zero(n_all);
    for (Eigen::Index k = 0; k < ne; ++k) {
      const Eigen::Index i = eq_rows[static_cast<std::size_t>(k)];
      result.y(i) -= row_scale(A, i) * ye(k);
    }
    for (Eigen::Index k = 0; k < nr; ++k) {
      const auto& r = row_sides[static_cast<std::size_t>(k)];
      result.y(r.row) -= r.sign * r.scale * wr(k);
    }
    for (Eigen::Index k = 0; k < nb; ++k)
      result.w(free_vars[static_cast<std::size_t>(bound_sides[static_cast<std::size_t>(k)].var)]) -= bsign(k) * wb(k);
    // Fixed variables absorb whatever stationarity leaves over.
    if (n < n_all) {
      Eigen::VectorXd g = qp.P * full + qp.q;
      if (m > 0) g.noalias() += qp.A.transpose() * result.y;
      for (Eigen::Index j = 0; j < n_all; ++j)
        if (!is_inf(qp.lb(j)) && qp.lb(j) == qp.ub(j)) result.w(j) = -g(j);
    }
    result.objective = 0.5 * full.dot(qp.P * full) + qp.q.dot(full);
    result.residuals = kkt_residuals(qp, full, result.y, result.w);
  };

  // Equality-constrained solve on the sides that look active (slack below
  // multiplier), regularized around the current iterate and refined against
  // the unregularized system. A wrong guess is corrected for a few rounds by
  // adding violated sides and dropping sides with negative multipliers.
  auto polish = [&](const Eigen::VectorXd& x0, const Eigen::VectorXd& ye0, const Eigen::VectorXd& wr0,
                    const Eigen::VectorXd& sr0, const Eigen::VectorXd& wb0, const Eigen::VectorXd& sb0) {
    std::vector<char> on_r(static_cast<std::size_t>(nr)), on_b(static_cast<std::size_t>(nb));
    for (Eigen::Index k = 0; k < nr; ++k) on_r[static_cast<std::size_t>(k)] = sr0(k) < wr0(k);
    for (Eigen::Index k = 0; k < nb; ++k) on_b[static_cast<std::size_t>(k)] = sb0(k) < wb0(k);
    const QpResult keep = result;
    for (int round = 0; round < settings.polish_rounds; ++round) {
      std::vector<Eigen::Index> act_r, act_b;
      for (Eigen::Index k = 0; k < nr; ++k)
        if (on_r[static_cast<std::size_t>(k)]) act_r.push_back(k);
      for (Eigen::Index k = 0; k < nb; ++k)
        if (on_b[static_cast<std::size_t>(k)]) act_b.push_back(k);
      const auto nar = static_cast<Eigen::Index>(act_r.size());
      const auto nab = static_cast<Eigen::Index>(act_b.size());
      const Eigen::Index nc = ne + nar + nab;
      Eigen::MatrixXd C = Eigen::MatrixXd::Zero(nc, n);
      Eigen::VectorXd c(nc), lam0(nc);
      C.topRows(ne) = E;
      c.head(ne) = be;
      lam0.head(ne) = ye0;
      for (Eigen::Index k = 0; k < nar; ++k) {
        const Eigen::Index s = act_r[static_cast<std::size_t>(k)];
        C.row(ne + k) = G.row(s);
        c(ne + k) = hr(s);
        lam0(ne + k) = wr0(s);
      }
      for (Eigen::Index k = 0; k < nab; ++k) {
        const Eigen::Index s = act_b[static_cast<std::size_t>(k)];
        C(ne + nar + k, bound_sides[static_cast<std::size_t>(s)].var) = bsign(s);
        c(ne + nar + k) = hbv(s);
        lam0(ne + nar + k) = wb0(s);
      }
      // [P C'; C 0] [x; -lam] = [-q; c]
      Eigen::MatrixXd Kx = Eigen::MatrixXd::Zero(n + nc, n + nc);
      Kx.topLeftCorner(n, n) = P;
      Kx.topRightCorner(n, nc) = C.transpose();
      Kx.bottomLeftCorner(nc, n) = C;
      Eigen::MatrixXd Kr = Kx;
      const double delta = 1e-9;
      Kr.topLeftCorner(n, n).diagonal().array() += delta;
      Kr.bottomRightCorner(nc, nc).diagonal().array() -= delta;
      Eigen::PartialPivLU<Eigen::MatrixXd> plu(Kr);
      Eigen::VectorXd r0(n + nc);
      r0.head(n) = -q;
      r0.tail(nc) = c;
      Eigen::VectorXd rr = r0;
      rr.head(n) += delta * x0;
      rr.tail(nc) += delta * lam0;
      Eigen::VectorXd z = plu.solve(rr);
      for (int k = 0; k < settings.polish_refine_iters; ++k) z += plu.solve(r0 - Kx * z);
      if (!z.allFinite()) break;
      const Eigen::VectorXd xp = z.head(n);
      const Eigen::VectorXd ye = -z.segment(n, ne);
      Eigen::VectorXd wr = Eigen::VectorXd::Zero(nr), wb = Eigen::VectorXd::Zero(nb);
      for (Eigen::Index k = 0; k < nar; ++k) wr(act_r[static_cast<std::size_t>(k)]) = -z(n + ne + k);
      for (Eigen::Index k = 0; k < nab; ++k) wb(act_b[static_cast<std::size_t>(k)]) = -z(n + ne + nar + k);
      export_result(xp, ye, wr, wb);
      if (result.residuals.max() <= target) {
        result.polished = true;
        return true;
      }
      bool changed = false;
      const Eigen::VectorXd gr = G * xp - hr, gb = bound_apply(xp) - hbv;
      for (Eigen::Index k = 0; k < nr; ++k) {
        auto& on = on_r[static_cast<std::size_t>(k)];
        const bool flip = on ? wr(k) < -target : gr(k) < -target;
        if (flip) on = !on;
        changed |= flip;
      }
      for (Eigen::Index k = 0; k < nb; ++k) {
        auto& on = on_b[static_cast<std::size_t>(k)];
        const bool flip = on ? wb(k) < -target : gb(k) < -target;
        if (flip) on = !on;
        changed |= flip;
      }
      if (!changed) break;
    }
    result = keep;
    return false;
  };

  // Start inside the bounds with slacks of at least 1.
  Eigen::VectorXd x(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const Eigen::Index j = free_vars[static_cast<std::size_t>(a)];
    const double lo = qp.lb(j), hi = qp.ub(j);
    if (!is_inf(lo) && !is_inf(hi)) x(a) = 0.5 * (lo + hi);
    else if (!is_inf(lo)) x(a) = std::max(0.0, lo + 1.0);
    else if (!is_inf(hi)) x(a) = std::min(0.0, hi - 1.0);
    else x(a) = 0.0;
  }
  Eigen::VectorXd ye = Eigen::VectorXd::Zero(ne);
  Eigen::VectorXd sr = (G * x - hr).cwiseMax(1.0), wr = Eigen::VectorXd::Ones(nr);
  Eigen::VectorXd sb = (bound_apply(x) - hbv).cwiseMax(1.0), wb = Eigen::VectorXd::Ones(nb);
  const double n_comp = static_cast<double>(std::max<Eigen::Index>(1, nr + nb));

  double best = std::numeric_limits<double>::infinity();
  QpResult best_result;
  struct Iterate {
    Eigen::VectorXd x, ye, wr, sr, wb, sb;
  } best_iterate;
  bool polished = false;
  // Each polish attempt costs a factorization, so large problems wait for
  // a more accurate iterate.
  double polish_from = n > 200 ? 1e-5 : 1e-2;
  const Eigen::Index dim = n + ne + nr;
  const bool normal = dim > settings.ipm_augmented_max;
  // Rows with few nonzeros are accumulated entry by entry in the normal
  // equations instead of through the dense rank update.
  std::vector<Eigen::Index> dense_rows;
  std::vector<std::pair<Eigen::Index, std::vector<Eigen::Index>>> sparse_rows;
  if (normal) {
    for (Eigen::Index k = 0; k < nr; ++k) {
      std::vector<Eigen::Index> nz;
      for (Eigen::Index a = 0; a < n; ++a)
        if (G(k, a) != 0.0) nz.push_back(a);
      if (static_cast<Eigen::Index>(nz.size()) * 8 > n) dense_rows.push_back(k);
      else sparse_rows.emplace_back(k, std::move(nz));
    }
  }
  Eigen::MatrixXd K(normal ? 0 : dim, normal ? 0 : dim);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::PartialPivLU<Eigen::MatrixXd> schur;
  Eigen::MatrixXd kinv_et;
  Eigen::VectorXd h_diag;
  Eigen::VectorXd rhs(dim), sol;

  for (int it = 0; it <= settings.ipm_max_iter; ++it) {
    const Eigen::VectorXd rd = P * x + q - E.transpose() * ye - G.transpose() * wr - bound_adjoint(wb);
    const Eigen::VectorXd re = E * x - be;
    const Eigen::VectorXd rr = G * x - sr - hr;
    const Eigen::VectorXd rb = bound_apply(x) - sb - hbv;
    const double mu = (sr.dot(wr) + sb.dot(wb)) / n_comp;

    export_result(x, ye, wr, wb);
    result.iterations = it;
    const double res = result.residuals.max();
    if (res < best) {
      best = res;
      best_result = result;
      best_iterate = {x, ye, wr, sr, wb, sb};
    }
    if (res <= target || it == settings.ipm_max_iter) break;
    if (res <= polish_from && it > 0) {
      if (polish(x, ye, wr, sr, wb, sb)) {
        best_result = result;
        polished = true;
        break;
      }
      polish_from *= 0.1;
    }
    if (settings.deadline && std::chrono::steady_clock::now() > *settings.deadline) break;

    // Newton system in the unknowns [dx; u = -dye; t = -dwr]:
    //   H dx + E'u + G't = ax,   E dx = ae,   G dx - (Sr/Wr) t = ar
    // with H = P + B'Db B. Small problems factor it whole; large ones
    // eliminate t and factor H + G'(Wr/Sr)G, refining against the full
    // system.
    const Eigen::VectorXd db = wb.cwiseQuotient(sb);
    const Eigen::VectorXd sig = sr.cwiseQuotient(wr);
    if (!normal) {
      K.setZero();
      K.topLeftCorner(n, n) = P;
      for (Eigen::Index k = 0; k < nb; ++k) {
        const Eigen::Index a = bound_sides[static_cast<std::size_t>(k)].var;
        K(a, a) += db(k);
      }
      K.block(0, n, n, ne) = E.transpose();
      K.block(n, 0, ne, n) = E;
      K.block(0, n + ne, n, nr) = G.transpose();
      K.block(n + ne, 0, nr, n) = G;
      for (Eigen::Index k = 0; k < nr; ++k) K(n + ne + k, n + ne + k) = -sig(k);
      K.topLeftCorner(n, n).diagonal().array() += 1e-13;
      K.block(n, n, ne, ne).diagonal().array() -= 1e-13;
      lu.compute(K);
    } else {
      Eigen::VectorXd hdiag = Eigen::VectorXd::Zero(n);
      for (Eigen::Index k = 0; k < nb; ++k) hdiag(bound_sides[static_cast<std::size_t>(k)].var) += db(k);
      Eigen::MatrixXd H = P;
      H.diagonal() += hdiag;
      Eigen::MatrixXd gs(static_cast<Eigen::Index>(dense_rows.size()), n);
      for (std::size_t k = 0; k < dense_rows.size(); ++k)
        gs.row(static_cast<Eigen::Index>(k)) = G.row(dense_rows[k]) / std::sqrt(sig(dense_rows[k]));
      H.selfadjointView<Eigen::Lower>().rankUpdate(gs.transpose());
      for (const auto& [r, nz] : sparse_rows) {
        const double wgt = 1.0 / sig(r);
        for (auto a : nz)
          for (auto b : nz)
            if (a >= b) H(a, b) += wgt * G(r, a) * G(r, b);
      }
      const double reg = 1e-12 * std::max(1.0, P.diagonal().cwiseAbs().maxCoeff());
      H.diagonal().array() += reg;
      llt.compute(H);
      // Schur complement of the equality rows.
      kinv_et = llt.solve(E.transpose());
      schur.compute(E * kinv_et);
      h_diag = hdiag;
    }

    // Full-system product, used for refinement in the normal mode.
    auto apply_full = [&](const Eigen::VectorXd& dx, const Eigen::VectorXd& u, const Eigen::VectorXd& t,
                          Eigen::VectorXd& ox, Eigen::VectorXd& oe, Eigen::VectorXd& orr) {
      ox = P * dx + h_diag.cwiseProduct(dx) + E.transpose() * u + G.transpose() * t;
      oe = E * dx;
      orr = G * dx - sig.cwiseProduct(t);
    };
    auto normal_solve = [&](const Eigen::VectorXd& ax, const Eigen::VectorXd& ae, const Eigen::VectorXd& ar,
                            Eigen::VectorXd& dx, Eigen::VectorXd& u, Eigen::VectorXd& t) {
      const Eigen::VectorXd rx = ax + G.transpose() * ar.cwiseQuotient(sig);
      const Eigen::VectorXd k_rx = llt.solve(rx);
      u = ne > 0 ? Eigen::VectorXd(schur.solve(E * k_rx - ae)) : Eigen::VectorXd();
      dx = ne > 0 ? Eigen::VectorXd(k_rx - kinv_et * u) : k_rx;
      t = (G * dx - ar).cwiseQuotient(sig);
    };
    auto newton = [&](const Eigen::VectorXd& ax, const Eigen::VectorXd& ae, const Eigen::VectorXd& ar,
                      Eigen::VectorXd& dx, Eigen::VectorXd& u, Eigen::VectorXd& t) {
      if (!normal) {
        rhs.head(n) = ax;
        rhs.segment(n, ne) = ae;
        rhs.tail(nr) = ar;
        sol = lu.solve(rhs);
        sol += lu.solve(rhs - K * sol);
        dx = sol.head(n);
        u = sol.segment(n, ne);
        t = sol.tail(nr);
        return;
      }
      normal_solve(ax, ae, ar, dx, u, t);
      Eigen::VectorXd ox, oe, orr, cx, cu, ct;
      for (int k = 0; k < 3; ++k) {
        apply_full(dx, u, t, ox, oe, orr);
        normal_solve(ax - ox, ae - oe, ar - orr, cx, cu, ct);
        dx += cx;
        u += cu;
        t += ct;
      }
    };

    auto direction = [&](const Eigen::VectorXd& rc_r, const Eigen::VectorXd& rc_b, Eigen::VectorXd& dx,
                         Eigen::VectorXd& dye, Eigen::VectorXd& dsr, Eigen::VectorXd& dwr, Eigen::VectorXd& dsb,
                         Eigen::VectorXd& dwb) {
      Eigen::VectorXd u, t;
      newton(-rd + bound_adjoint((rc_b - wb.cwiseProduct(rb)).cwiseQuotient(sb)), -re, -rr + rc_r.cwiseQuotient(wr),
             dx, u, t);
      dye = -u;
      dwr = -t;
      dsr = (rc_r - sr.cwiseProduct(dwr)).cwiseQuotient(wr);
      dsb = bound_apply(dx) + rb;
      dwb = (rc_b - wb.cwiseProduct(dsb)).cwiseQuotient(sb);
    };

    Eigen::VectorXd dx, dye, dsr, dwr, dsb, dwb;
    direction(-sr.cwiseProduct(wr), -sb.cwiseProduct(wb), dx, dye, dsr, dwr, dsb, dwb);
    const double a_aff = std::min({max_step(sr, dsr), max_step(wr, dwr), max_step(sb, dsb), max_step(wb, dwb)});
    const double mu_aff =
        ((sr + a_aff * dsr).dot(wr + a_aff * dwr) + (sb + a_aff * dsb).dot(wb + a_aff * dwb)) / n_comp;
    const double sigma = mu > 0.0 ? std::pow(std::min(1.0, mu_aff / mu), 3) : 0.0;
    Eigen::VectorXd rc_r = -sr.cwiseProduct(wr) - dsr.cwiseProduct(dwr);
    Eigen::VectorXd rc_b = -sb.cwiseProduct(wb) - dsb.cwiseProduct(dwb);
    rc_r.array() += sigma * mu;
    rc_b.array() += sigma * mu;
    direction(rc_r, rc_b, dx, dye, dsr, dwr, dsb, dwb);

    const double a_max = std::min({max_step(sr, dsr), max_step(wr, dwr), max_step(sb, dsb), max_step(wb, dwb)});
    const double a = std::min(1.0, 0.99 * a_max);
    if (!(a > 1e-12) || !dx.allFinite()) break;
    x += a * dx;
    ye += a * dye;
    sr = (sr + a * dsr).cwiseMax(1e-300);
    wr = (wr + a * dwr).cwiseMax(1e-300);
    sb = (sb + a * dsb).cwiseMax(1e-300);
    wb = (wb + a * dwb).cwiseMax(1e-300);
  }

  result = best_result;
  if (!polished && best > target && best < 1e-3) {
    const auto& b = best_iterate;
    if (!polish(b.x, b.ye, b.wr, b.sr, b.wb, b.sb)) result = best_result;
  }
  result.status = result.residuals.max() <= settings.kkt_tol ? QpStatus::optimal : QpStatus::max_iter;
  return result;
}

}  // namespace csvm::qp
