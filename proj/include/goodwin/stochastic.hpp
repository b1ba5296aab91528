#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "goodwin/model.hpp"

namespace goodwin {

// Step-size, horizon, and reproducibility controls for the noise-driven
// simulator.
struct SdeConfig {
  double dt = 1e-3;              // base macro step
  std::uint64_t seed = 0;        // stream key, combined with path_index
  std::uint64_t path_index = 0;  // which ensemble member this path is
  int max_halvings = 40;         // per-step reject-and-halve retry budget
  double t_max = 0;              // simulation horizon, must be positive
  int record_stride = 1;         // keep every n-th macro step
  double log_step_cap = 0.25;    // reject proposals moving log x or log y more
  int force_halvings = 0;        // pre-split every macro step 2^k times (tests)
};

// One realized path sampled at recorded macro steps.  rho is the unwrapped
// winding angle about the stochastic rest point (rho[0] = 0); dw[i] is the
// realized Brownian increment over (t[i-1], t[i]] (dw[0] = 0), kept so
// dependent series can be rebuilt from the exact same noise.
struct StochasticPath {
  std::vector<double> t, x, y, rho, dw;
  std::vector<RegionSet> region;
  long long rejected_steps = 0;  // proposals split by the domain guard
  int max_depth_used = 0;        // deepest halving level any step needed
};

// Per-path counters from a streaming run.
struct StepCounters {
  long long rejected_steps = 0;
  int max_depth_used = 0;
};

// Advances one path and calls sink(t, x, y, rho, dw) after the initial sample
// (with rho = dw = 0) and after every macro step, without storing anything;
// the run stops early when sink returns false.  Throws NumericalError when a
// proposed step cannot be kept inside the domain within the halving budget
// (the base step is too coarse for the noise).
StepCounters simulate_stream(
    const Model& model, double x0, double y0, const SdeConfig& config,
    const std::function<bool(double t, double x, double y, double rho,
                             double dw)>& sink);

// Recorded-path variant of simulate_stream; fills region labels per sample.
StochasticPath simulate_sde(const Model& model, double x0, double y0,
                            const SdeConfig& config);

// Accumulates the signed angle increment (in (-pi, pi]) subtended at the
// center by the move prev -> next.  Throws NumericalError if either point
// sits exactly on the center, where the angle is undefined.
double update_winding(double prev_x, double prev_y, double next_x,
                      double next_y, double center_x, double center_y,
                      double rho_prev);

// Incremental full-loop detectors, fed one sample at a time.  The winding
// detector fires when |rho| first reaches 2*pi; the line detector fires at
// the second strict sign change of y - slope*x, which for a start on that
// line is the completion of one revolution.  Both interpolate linearly
// between the bracketing samples.
class LoopDetectors {
 public:
  explicit LoopDetectors(double line_slope) : slope_(line_slope) {}

  void feed(double t, double x, double y, double rho);

  bool winding_done() const { return winding_done_; }
  bool line_done() const { return line_done_; }
  bool both_done() const { return winding_done_ && line_done_; }
  double winding_time() const { return winding_time_; }
  double winding_y() const { return winding_y_; }
  double line_time() const { return line_time_; }
  double line_y() const { return line_y_; }
  double line_rho() const { return line_rho_; }

 private:
  double slope_;
  bool have_prev_ = false;
  double t_prev_ = 0, x_prev_ = 0, y_prev_ = 0, rho_prev_ = 0;
  int line_sign_ = 0;  // last sign of y - slope*x established beyond noise
  int line_crossings_ = 0;
  bool winding_done_ = false, line_done_ = false;
  double winding_time_ = 0, winding_y_ = 0;
  double line_time_ = 0, line_y_ = 0, line_rho_ = 0;
};

// Loop-completion summary for one path.  A detector that never fired reports
// the horizon with its completed flag false — truncation stays visible.
struct LoopStats {
  double s_winding = 0, y_at_winding = 0;
  bool winding_completed = false;
  double s_line = 0, y_at_line = 0, rho_at_line = 0;
  bool line_completed = false;
  double horizon = 0;
};

// Runs both detectors over a recorded path.  line_slope defaults to the
// stochastic rest-point ray theta_tilde; pass e.g. y_hat/x_hat to measure
// against the deterministic-equilibrium ray instead.
LoopStats stochastic_period(const StochasticPath& path, const Model& model);
LoopStats stochastic_period(const StochasticPath& path, const Model& model,
                            double line_slope);

// Productivity, labor force, and output along a recorded path, rebuilt from
// the path's own Brownian increments (Euler-Maruyama on log productivity at
// the recording resolution; the noise enters with the opposite sign to the
// state pair).
struct EconomicSeries {
  std::vector<double> a, n, p;
};
EconomicSeries economic_series(const StochasticPath& path, const Model& model);

// A maximum of a continuous objective over the closed level band
// {|V - v0| <= rho}, with the point attaining it.
struct BandMax {
  double value = 0;
  double x = 0, y = 0;
};

// The two band maxima controlling the level-exit estimate: r_const bounds the
// level drift, i_const the squared level noise.
struct ExitConstants {
  double v0 = 0, rho = 0;
  BandMax r_const, i_const;
};
ExitConstants estimate_constants(const Model& model, double v0, double rho);

// Exit-time estimate for the band {|V - v0| <= rho}: the level stays inside
// for at least time theta with probability at least p_lower.
struct ExitBound {
  double v0 = 0, rho = 0;
  double r_const = 0, i_const = 0;
  double mu = 0;
  double theta = 0;        // holding time the bound certifies
  double p_lower = 0;      // clamped to [0, 1]
  double p_lower_raw = 0;  // 1 - i_const/mu^2 before clamping
  bool degenerate = false;  // zero noise: the level is conserved, no exit
};
ExitBound exit_bound(const Model& model, double v0, double rho, double mu);

// Path-wise consistency audit: the employment/wage-share ratio must drift
// one way on each side of the curve y = f(x), and region transitions must
// follow the clockwise cycle R1 -> R2 -> ... -> R8 -> R1 (dwell and shared
// boundaries allowed; single backward steps allowed only where noise can push
// across, never backward over the two rest-point-ray gates).  Skipping one
// sector is accepted only close to the rest point, where the thin wedges
// between y = f(x) and y = y_tilde are narrower than one recording window's
// reach; see the geometric test in the implementation.
struct AuditViolation {
  double t = 0;
  std::string kind;    // "theta-monotone" | "region-adjacency"
  std::string detail;
};
struct AuditReport {
  std::vector<AuditViolation> violations;
  long long ratio_windows = 0;  // consecutive-sample windows checked
  long long transitions = 0;    // region transitions checked
  bool clean() const { return violations.empty(); }
};
AuditReport region_path_audit(const StochasticPath& path, const Model& model);

}  // namespace goodwin
