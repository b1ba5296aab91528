#include "goodwin/deterministic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "goodwin/quadrature.hpp"
#include "goodwin/rootfind.hpp"

namespace goodwin {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct LogState {
  double u, w;  // log x, log y
};

// Right-hand side in log coordinates: du = phi(y) - alpha, dw = kappa(x) - gamma.
struct LogRhs {
  const Model& m;
  LogState operator()(const LogState& s) const {
    return {m.phi_minus_alpha(std::exp(s.w)), m.kappa_minus_gamma(std::exp(s.u))};
  }
};

LogState rk4_step(const LogRhs& f, const LogState& s, double h) {
  const LogState k1 = f(s);
  const LogState k2 = f({s.u + 0.5 * h * k1.u, s.w + 0.5 * h * k1.w});
  const LogState k3 = f({s.u + 0.5 * h * k2.u, s.w + 0.5 * h * k2.w});
  const LogState k4 = f({s.u + h * k3.u, s.w + h * k3.w});
  return {s.u + h / 6 * (k1.u + 2 * k2.u + 2 * k3.u + k4.u),
          s.w + h / 6 * (k1.w + 2 * k2.w + 2 * k3.w + k4.w)};
}

double level_at(const Model& m, const LogState& s) {
  return m.v1(std::exp(s.u)) + m.v2(std::exp(s.w));
}

// One macro step with reject-and-halve: the whole step is re-done as 2^depth
// equal substeps until the end-to-end V drift fits the budget rate * h and
// every substep stays inside the domain.  The budget is checked across the
// macro step (not per substep) so it stays above the rounding noise of V
// itself even at deep halvings.  depth_hint carries the last successful depth
// to the next step, minus one so the size can recover after a steep stretch.
LogState guarded_step(const Model& m, const LogRhs& f, const LogState& s, double h,
                      double rate, int max_halvings, int& depth_hint) {
  const double v_start = level_at(m, s);
  for (int depth = depth_hint; depth <= max_halvings; ++depth) {
    const long nsub = 1L << depth;
    const double sub = std::ldexp(h, -depth);
    LogState cur = s;
    bool inside = true;
    for (long i = 0; i < nsub && inside; ++i) {
      cur = rk4_step(f, cur, sub);
      inside = std::isfinite(cur.u) && std::isfinite(cur.w) && cur.w < 0;
    }
    if (inside && std::abs(level_at(m, cur) - v_start) <= rate * h) {
      depth_hint = depth > 0 ? depth - 1 : 0;
      return cur;
    }
  }
  throw NumericalError("ode step: conservation budget exhausted after halvings");
}

}  // namespace

Trajectory integrate_ode(const Model& model, double x0, double y0, double t_end,
                         const OdeOptions& opts) {
  require_in_domain(x0, y0);
  if (!(t_end >= 0) || !std::isfinite(t_end))
    throw ConfigError("integrate_ode: t_end must be finite and nonnegative");
  if (!(opts.dt > 0)) throw ConfigError("integrate_ode: dt must be positive");

  const LogRhs f{model};
  const double v_ref = std::max(lyapunov(model, x0, y0), 1e-12);
  const double rate = opts.conserve_rel_budget * v_ref / linearized_period(model);
  const long n = std::max(1L, std::lround(std::ceil(t_end / opts.dt - 1e-9)));
  const double h = t_end / static_cast<double>(n);

  Trajectory out;
  const long stride = std::max(1, opts.record_stride);
  out.t.reserve(static_cast<std::size_t>(n / stride) + 2);
  LogState s{std::log(x0), std::log(y0)};
  auto emit = [&](double t, const LogState& st) {
    out.t.push_back(t);
    out.x.push_back(std::exp(st.u));
    out.y.push_back(std::exp(st.w));
    if (opts.record_v) out.v.push_back(level_at(model, st));
  };
  emit(0.0, s);
  int depth_hint = 0;
  for (long i = 1; i <= n; ++i) {
    s = guarded_step(model, f, s, h, rate, opts.max_halvings, depth_hint);
    if (i % stride == 0 || i == n) emit(h * static_cast<double>(i), s);
  }
  return out;
}

namespace {

Extent solve_extent(const Model& model, double v0, const RootOptions& ropt) {
  if (!(v0 > 0) || !std::isfinite(v0))
    throw ConfigError("level_extent: level value must be positive and finite");
  const double x_hat = model.eq.x_hat, y_hat = model.eq.y_hat;

  auto fx = [&](double x) { return model.v1(x) - v0; };
  auto dfx = [&](double x) { return -model.kappa_minus_gamma(x) / x; };
  double lo = x_hat, hi = x_hat;
  while (fx(lo) < 0) lo *= 0.5;
  while (fx(hi) < 0) hi *= 2.0;

  auto fy = [&](double y) { return model.v2(y) - v0; };
  auto dfy = [&](double y) { return model.phi_minus_alpha(y) / y; };
  double ylo = y_hat, yhi = y_hat;
  while (fy(ylo) < 0) ylo *= 0.5;
  for (double gap = 1.0 - y_hat; fy(yhi) < 0;) {
    gap *= 0.5;
    yhi = 1.0 - gap;
    if (gap < 1e-300) throw NumericalError("level_extent: y_bar bracket collapsed");
  }

  Extent e;
  e.x_under = bisect_newton(fx, dfx, lo, x_hat, ropt);
  e.x_bar = bisect_newton(fx, dfx, x_hat, hi, ropt);
  e.y_under = bisect_newton(fy, dfy, ylo, y_hat, ropt);
  e.y_bar = bisect_newton(fy, dfy, y_hat, yhi, ropt);
  return e;
}

}  // namespace

Extent level_extent(const Model& model, double v0) {
  return solve_extent(model, v0,
                      {.width = 1e-13, .max_bisect = 200, .newton_iters = 8,
                       .residual_target = 1e-11});
}

double linearized_period(const Model& model) {
  const auto& eq = model.eq;
  const double omega2 = -model.curves.kappa_prime(eq.x_hat) * eq.x_hat *
                        model.curves.phi_prime(eq.y_hat) * eq.y_hat;
  if (!(omega2 > 0))
    throw NumericalError("linearized_period: nonpositive squared frequency");
  return 2 * kPi / std::sqrt(omega2);
}

PeriodResult orbit_period(const Model& model, double v0) {
  // The endpoint roots double as quadrature anchors here, so polish them to
  // the evaluation-noise floor: a residual r shifts the far-field level gap
  // v0 - V1 against the endpoint-anchored form by r, and that mismatch is a
  // jump the double-exponential rule would stall on.
  const Extent e = solve_extent(model, v0,
                                {.width = 1e-13, .max_bisect = 200,
                                 .newton_iters = 30, .residual_target = 0.0});
  const double y_hat = model.eq.y_hat;
  const double dphi_hat = model.curves.phi_prime(y_hat);
  const double z_lo = std::log(e.x_under), z_hi = std::log(e.x_bar);

  // Level remaining for the y-branches at position z = log x.  Away from the
  // endpoints the direct difference is fine; near them it cancels, so switch
  // to the exact integral of dG/dz = kappa(e^z) - gamma over the short gap
  // to the endpoint (zc = distance to the nearest endpoint, supplied by the
  // quadrature rule without cancellation).
  // The rule supplies zc = b - z near the right endpoint (positive) and
  // zc = a - z near the left one (negative), so z + zc lands exactly on the
  // nearest endpoint and the short integration interval carries no rounding.
  auto kmg_exp = [&](double u) { return model.kappa_minus_gamma(std::exp(u)); };
  const double z_span = z_hi - z_lo;
  const double slope_lo = kmg_exp(z_lo);    // dG/dz > 0 entering from the left
  const double slope_hi = -kmg_exp(z_hi);   // -dG/dz > 0 entering from the right
  auto level_gap = [&](double z, double zc) {
    const double azc = std::abs(zc);
    if (azc < 1e-3 * z_span) {
      // below rounding width the interval [z, z+zc] collapses, so use the
      // exact endpoint slope instead of quadrature
      if (azc < 1e-12 * z_span) return (zc > 0 ? slope_hi : slope_lo) * azc;
      return zc > 0 ? -gauss15(kmg_exp, z, z + zc)  // dG/dz < 0 on the right
                    : gauss15(kmg_exp, z + zc, z);  // dG/dz > 0 on the left
    }
    return v0 - model.v1(std::exp(z));
  };

  // Inverse-branch solve: y on the requested side of y_hat with V2(y) = v.
  const RootOptions ropt{.width = 1e-14, .max_bisect = 200, .newton_iters = 8,
                         .residual_target = 0};
  auto y_solve = [&](double v, bool upper) {
    auto f = [&](double y) { return model.v2(y) - v; };
    auto df = [&](double y) { return model.phi_minus_alpha(y) / y; };
    if (upper) {
      // the extent root carries a ~1e-11 residual, so v may sit a hair above
      // V2(y_bar); nudge the bracket toward 1 until it encloses the root
      double hi = e.y_bar;
      while (f(hi) < 0) hi += 0.5 * (1.0 - hi);
      return bisect_newton(f, df, y_hat, hi, ropt);
    }
    double lo = e.y_under;
    while (f(lo) < 0) lo *= 0.5;
    return bisect_newton(f, df, lo, y_hat, ropt);
  };
  auto branch_diff = [&](double v) {
    return 1.0 / model.phi_minus_alpha(y_solve(v, true)) -
           1.0 / model.phi_minus_alpha(y_solve(v, false));
  };

  // Near the level floor both branches collapse onto y_hat and the branch
  // difference behaves like c0/sqrt(v) + c1 from the local quadratic of V2.
  // Matching c1 at the switch keeps the integrand smooth there, which the
  // double-exponential rule needs for its error estimate to settle.
  const double v_switch = 1e-14;
  const double c0 = 2.0 / std::sqrt(2 * dphi_hat * y_hat);
  const double c1 =
      v0 > 100 * v_switch ? branch_diff(v_switch) - c0 / std::sqrt(v_switch) : 0.0;

  auto integrand = [&](double z, double zc) {
    const double g = level_gap(z, zc);
    if (g < v_switch) return c0 / std::sqrt(g) + c1;
    return branch_diff(g);
  };

  PeriodResult r;
  r.v0 = v0;
  r.x_under = e.x_under;
  r.x_bar = e.x_bar;
  r.y_under = e.y_under;
  r.y_bar = e.y_bar;
  r.t_formula = integrate_tanh_sinh(integrand, z_lo, z_hi, 1e-9);
  return r;
}

double period_by_return(const Model& model, double v0, double dt, double t_cap) {
  if (!(dt > 0)) throw ConfigError("period_by_return: dt must be positive");
  const Extent e = level_extent(model, v0);
  if (t_cap <= 0) t_cap = 10 * linearized_period(model);

  const LogRhs f{model};
  const double y_hat = model.eq.y_hat;
  const double log_x_hat = std::log(model.eq.x_hat);
  const double rate = 1e-8 * std::max(v0, 1e-12) / linearized_period(model);

  // Start on the outgoing ray {y = y_hat, x > x_hat} at the orbit's rightmost
  // point; one full revolution later the path crosses the ray downward again.
  LogState s{std::log(e.x_bar), std::log(y_hat)};
  double g_prev = 0;  // y - y_hat, exactly zero at the start
  int depth_hint = 0;
  const long n = static_cast<long>(std::ceil(t_cap / dt));
  for (long i = 1; i <= n; ++i) {
    s = guarded_step(model, f, s, dt, rate, 40, depth_hint);
    const double g = std::exp(s.w) - y_hat;
    if (g_prev > 0 && g <= 0 && s.u > log_x_hat) {
      const double frac = g_prev / (g_prev - g);
      return (static_cast<double>(i - 1) + frac) * dt;
    }
    g_prev = g;
  }
  char msg[128];
  std::snprintf(msg, sizeof msg,
                "period_by_return: no return to the start ray within t=%g", t_cap);
  throw NumericalError(msg);
}

}  // namespace goodwin
