#include "goodwin/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <utility>

#include "goodwin/deterministic.hpp"
#include "goodwin/errors.hpp"

namespace goodwin {
namespace {

std::string strf(const char* fmt, ...) {
  char buf[256];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

int resolve_threads(int requested, int n_tasks) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  const int t = requested > 0 ? requested : hw;
  return std::clamp(t, 1, std::max(1, n_tasks));
}

// Runs fn(0..n-1) across workers; indices are claimed atomically but results
// must be written to per-index slots so the outcome is schedule-independent.
// The first exception wins and is rethrown after all workers drain.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::pair<double, double> resolve_start(const StartRule& rule,
                                        const Model& model, double slope) {
  const auto check = [](double x, double y) {
    if (!(x > 0) || !(y > 0) || !(y < 1) || !std::isfinite(x) ||
        !std::isfinite(y))
      throw ConfigError(strf(
          "ensemble: start (%.17g, %.17g) is outside the admissible domain", x,
          y));
  };
  if (rule.kind == StartRule::Kind::on_line) {
    const double x = rule.y0 / slope;
    check(x, rule.y0);
    return {x, rule.y0};
  }
  check(rule.x, rule.y);
  return {rule.x, rule.y};
}

// mean and standard error of the mean over a selected subsequence
struct MeanSe {
  double mean = 0, se = 0;
};
template <class Get>
MeanSe mean_se(const std::vector<PathOutcome>& outcomes, Get&& get) {
  double sum = 0, lo = 0, hi = 0;
  int n = 0;
  for (const auto& o : outcomes)
    if (o.completed) {
      const double v = get(o);
      sum += v;
      lo = n == 0 ? v : std::min(lo, v);
      hi = n == 0 ? v : std::max(hi, v);
      ++n;
    }
  MeanSe r;
  if (n == 0) return r;
  if (lo == hi) {
    // a degenerate sample (e.g. the zero-noise ensemble) has exactly zero
    // spread; the summed mean would smear that with rounding
    r.mean = lo;
    return r;
  }
  r.mean = sum / n;
  if (n > 1) {
    double ss = 0;
    for (const auto& o : outcomes)
      if (o.completed) {
        const double d = get(o) - r.mean;
        ss += d * d;
      }
    r.se = std::sqrt(ss / (static_cast<double>(n) * (n - 1)));
  }
  return r;
}

// Wilson score interval at z ~ 95% for k successes out of n.
struct Wilson {
  double lo = 0, hi = 0;
};
Wilson wilson_interval(double k, double n, double z = 1.959963984540054) {
  const double phat = k / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  return {center - half, center + half};
}

}  // namespace

EnsembleResult run_ensemble(const EnsembleSpec& spec,
                            const ModelParams& params) {
  if (spec.n_paths < 1) throw ConfigError("ensemble: n_paths must be >= 1");
  if (!(spec.dt > 0)) throw ConfigError("ensemble: dt must be positive");

  const Model model = make_model(params);
  const double slope =
      spec.line_slope > 0 ? spec.line_slope : model.eq.theta_tilde;
  if (!std::isfinite(slope))
    throw ConfigError("ensemble: line_slope must be finite");
  const auto [x0, y0] = resolve_start(spec.start, model, slope);
  const double t_max =
      spec.t_max > 0 ? spec.t_max : 25.0 * linearized_period(model);
  const bool use_line = spec.detector == EnsembleSpec::Detector::line;

  EnsembleResult result;
  result.outcomes.resize(spec.n_paths);
  parallel_for(
      spec.n_paths, resolve_threads(spec.threads, spec.n_paths), [&](int i) {
        SdeConfig cfg;
        cfg.dt = spec.dt;
        cfg.seed = spec.base_seed;
        cfg.path_index = static_cast<std::uint64_t>(i);
        cfg.t_max = t_max;
        LoopDetectors det(slope);
        simulate_stream(model, x0, y0, cfg,
                        [&](double t, double x, double y, double rho, double) {
                          det.feed(t, x, y, rho);
                          return !(use_line ? det.line_done()
                                            : det.winding_done());
                        });
        PathOutcome& o = result.outcomes[i];
        o.completed = use_line ? det.line_done() : det.winding_done();
        if (o.completed) {
          o.s = use_line ? det.line_time() : det.winding_time();
          o.y_s = use_line ? det.line_y() : det.winding_y();
        } else {
          o.s = t_max;
          o.y_s = std::numeric_limits<double>::quiet_NaN();
        }
      });

  EnsembleStats& st = result.stats;
  st.sigma0 = params.sigma0;
  st.n_paths = spec.n_paths;
  for (const auto& o : result.outcomes)
    if (o.completed) ++st.n_effective;
  st.completion_fraction =
      static_cast<double>(st.n_effective) / spec.n_paths;
  if (st.n_effective == 0)
    throw NumericalError(
        "ensemble: no path completed a loop within the horizon");
  const MeanSe s = mean_se(result.outcomes, [](const PathOutcome& o) { return o.s; });
  const MeanSe ys =
      mean_se(result.outcomes, [](const PathOutcome& o) { return o.y_s; });
  st.mean_s = s.mean;
  st.se_s = s.se;
  st.mean_ys = ys.mean;
  st.se_ys = ys.se;
  return result;
}

std::vector<EnsembleStats> ensemble_sweep(const EnsembleSpec& spec,
                                          const ModelParams& params) {
  std::vector<double> grid = spec.sigma0_grid;
  if (grid.empty()) grid.push_back(params.sigma0);
  std::vector<EnsembleStats> out;
  out.reserve(grid.size());
  for (const double s0 : grid) {
    ModelParams p = params;
    p.sigma0 = s0;
    out.push_back(run_ensemble(spec, p).stats);
  }
  return out;
}

std::vector<LoopMapRow> loop_map(const std::vector<double>& y_grid,
                                 const EnsembleSpec& spec,
                                 const ModelParams& params) {
  if (y_grid.empty()) throw ConfigError("loop map: empty y grid");
  std::vector<LoopMapRow> rows;
  rows.reserve(y_grid.size());
  for (const double y0 : y_grid) {
    LoopMapRow row;
    row.y0 = y0;
    EnsembleSpec point_spec = spec;
    point_spec.start = StartRule::on_line(y0);
    try {
      row.stats = run_ensemble(point_spec, params).stats;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

FixedPointEstimate fixed_point(const std::vector<LoopMapRow>& table) {
  std::vector<const LoopMapRow*> rows;
  for (const auto& r : table)
    if (r.ok && r.stats.n_effective > 0) rows.push_back(&r);
  if (rows.size() < 2)
    throw ConfigError("fixed point: need at least two valid loop-map rows");
  std::sort(rows.begin(), rows.end(),
            [](const LoopMapRow* a, const LoopMapRow* b) { return a->y0 < b->y0; });

  bool identity = true;
  for (const auto* r : rows)
    if (std::abs(r->stats.mean_ys - r->y0) > 1e-12 || r->stats.se_ys != 0)
      identity = false;
  if (identity) {
    FixedPointEstimate e;
    e.identity_map = true;
    e.y_star = std::numeric_limits<double>::quiet_NaN();
    e.ci_lo = rows.front()->y0;
    e.ci_hi = rows.back()->y0;
    e.bracket_lo = rows.front()->y0;
    e.bracket_hi = rows.back()->y0;
    return e;
  }

  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double d0 = rows[i]->stats.mean_ys - rows[i]->y0;
    const double d1 = rows[i + 1]->stats.mean_ys - rows[i + 1]->y0;
    if (d0 == 0) {
      FixedPointEstimate e;
      e.y_star = rows[i]->y0;
      e.ci_lo = e.ci_hi = e.y_star;
      e.bracket_lo = rows[i]->y0;
      e.bracket_hi = rows[i + 1]->y0;
      return e;
    }
    if (!(d0 * d1 < 0)) continue;

    const double a = rows[i]->y0, b = rows[i + 1]->y0;
    auto cross = [&](double da, double db) {
      return da == db ? std::numeric_limits<double>::quiet_NaN()
                      : a + da * (b - a) / (da - db);
    };
    FixedPointEstimate e;
    e.y_star = cross(d0, d1);
    e.bracket_lo = a;
    e.bracket_hi = b;
    e.ci_lo = e.ci_hi = e.y_star;
    const double s0 = rows[i]->stats.se_ys, s1 = rows[i + 1]->stats.se_ys;
    for (const double ca : {d0 - s0, d0 + s0})
      for (const double cb : {d1 - s1, d1 + s1}) {
        const double yc = cross(ca, cb);
        if (!std::isfinite(yc)) continue;
        e.ci_lo = std::min(e.ci_lo, yc);
        e.ci_hi = std::max(e.ci_hi, yc);
      }
    return e;
  }
  throw NumericalError(
      "fixed point: the loop map is one-sided on this grid (no diagonal "
      "crossing)");
}

double band_exit_fraction(const Model& model, double x0, double y0, double v0,
                          double rho, double theta, int n_paths, double dt,
                          std::uint64_t base_seed, int threads) {
  if (n_paths < 1) throw ConfigError("band exit: n_paths must be >= 1");
  if (!(theta > 0) || !std::isfinite(theta))
    throw ConfigError("band exit: horizon must be positive and finite");
  std::vector<char> survived(n_paths, 0);
  parallel_for(n_paths, resolve_threads(threads, n_paths), [&](int i) {
    SdeConfig cfg;
    cfg.dt = dt;
    cfg.seed = base_seed;
    cfg.path_index = static_cast<std::uint64_t>(i);
    cfg.t_max = theta;
    bool inside = true;
    simulate_stream(model, x0, y0, cfg,
                    [&](double, double x, double y, double, double) {
                      if (std::abs(lyapunov(model, x, y) - v0) > rho) {
                        inside = false;
                        return false;
                      }
                      return true;
                    });
    survived[i] = inside ? 1 : 0;
  });
  double k = 0;
  for (const char s : survived) k += s;
  return k / n_paths;
}

BoundValidation bound_validation(const Model& model, double v0, double rho,
                                 double mu, int n_paths, double dt,
                                 std::uint64_t base_seed, int threads) {
  if (n_paths < 1) throw ConfigError("bound validation: n_paths must be >= 1");
  BoundValidation r;
  r.bound = exit_bound(model, v0, rho, mu);
  r.n_paths = n_paths;
  if (r.bound.p_lower_raw <= 0) {
    // the estimate asserts nothing here; there is nothing to falsify
    r.vacuous = true;
    r.pass = true;
    return r;
  }
  if (r.bound.degenerate) {
    // conserved level: no path can leave the band
    r.fraction = 1.0;
    const Wilson w = wilson_interval(n_paths, n_paths);
    r.wilson_lo = w.lo;
    r.wilson_hi = w.hi;
    r.pass = true;
    return r;
  }
  const Extent ext = level_extent(model, v0);
  r.fraction =
      band_exit_fraction(model, ext.x_under, model.eq.y_hat, v0, rho,
                         r.bound.theta, n_paths, dt, base_seed, threads);
  const Wilson w = wilson_interval(r.fraction * n_paths, n_paths);
  r.wilson_lo = w.lo;
  r.wilson_hi = w.hi;
  const double half_width = 0.5 * (w.hi - w.lo);
  r.pass = w.lo >= r.bound.p_lower - 3.0 * half_width;
  return r;
}

}  // namespace goodwin
