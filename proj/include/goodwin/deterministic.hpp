#pragma once
// Deterministic orbit machinery: Runge-Kutta integration of the noiseless
// system in logarithmic coordinates, level-set extents of the conserved
// function V, and the orbit period both by quadrature of the level-slice
// integral and by direct return-time measurement.

#include <limits>
#include <vector>

#include "goodwin/model.hpp"

namespace goodwin {

struct Trajectory {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> v;  // filled only when OdeOptions::record_v is set
};

struct OdeOptions {
  double dt = 1e-3;        // macro step; samples are emitted on this grid
  // Permitted drift of V per unit time, as a fraction of V(start)/T_lin.
  // A macro step whose V drift exceeds its share is re-done in halves.
  double conserve_rel_budget = 1e-8;
  int max_halvings = 40;   // per macro step; exhausting it is a hard error
  int record_stride = 1;   // emit every n-th macro point (first/last always)
  bool record_v = false;
};

// Integrates from (x0, y0) for t_end time units.  The state stays inside the
// domain by construction (log coordinates); a step that would leave it or
// overdraw the conservation budget is halved up to max_halvings times.
Trajectory integrate_ode(const Model& model, double x0, double y0, double t_end,
                         const OdeOptions& opts = {});

// Axis-aligned extents of the closed orbit {V = v0}: the two roots of
// V1(x) = v0 bracketing x_hat and the two roots of V2(y) = v0 bracketing
// y_hat, each located to residual <= 1e-11.
struct Extent {
  double x_under, x_bar, y_under, y_bar;
};
Extent level_extent(const Model& model, double v0);

struct PeriodResult {
  double v0 = 0;
  double t_formula = 0;
  double t_return = std::numeric_limits<double>::quiet_NaN();
  double x_under = 0, x_bar = 0, y_under = 0, y_bar = 0;
};

// Orbit period by quadrature: T = integral over z = log x of
// [1/(phi(y+) - alpha) - 1/(phi(y-) - alpha)] where y+-(z) are the two
// y-branches of the orbit at that x.  The integrand has inverse-square-root
// endpoint singularities, handled by a double-exponential rule to 1e-9
// absolute.  t_return is left NaN here.
PeriodResult orbit_period(const Model& model, double v0);

// Orbit period by simulation: start at (x_bar, y_hat), integrate with the
// given step and report the interpolated first return onto the outgoing ray.
// Throws NumericalError if no return happens within t_cap (default, when
// t_cap = 0, is 10 linear periods).
double period_by_return(const Model& model, double v0, double dt = 1e-3,
                        double t_cap = 0);

// Small-oscillation period 2*pi / sqrt(-kappa'(x_hat) x_hat phi'(y_hat) y_hat).
double linearized_period(const Model& model);

}  // namespace goodwin
