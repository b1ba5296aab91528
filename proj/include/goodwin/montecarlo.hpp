#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "goodwin/model.hpp"
#include "goodwin/stochastic.hpp"

namespace goodwin {

// Where ensemble paths begin: an explicit point, or a point on the reference
// ray y = theta_tilde * x selected by its employment coordinate.
struct StartRule {
  enum class Kind { point, on_line };
  Kind kind = Kind::point;
  double x = 0, y = 0;  // kind == point
  double y0 = 0;        // kind == on_line: start at (y0 / theta_tilde, y0)

  static StartRule at_point(double x, double y) {
    return {Kind::point, x, y, 0};
  }
  static StartRule on_line(double y0) { return {Kind::on_line, 0, 0, y0}; }
};

struct EnsembleSpec {
  int n_paths = 1;
  StartRule start;
  std::vector<double> sigma0_grid;  // empty: use params.sigma0 as-is
  double t_max = 0;                 // <= 0: 25 * linearized_period
  std::uint64_t base_seed = 0;
  double dt = 1e-3;
  enum class Detector { line, winding } detector = Detector::line;
  // Slope of the crossing line (and of the on_line start ray); <= 0 picks the
  // rest-point ray y_tilde/x_tilde.  The deterministic-equilibrium ray
  // y_hat/x_hat is the other published choice.
  double line_slope = 0;
  int threads = 0;  // <= 0: hardware concurrency
};

// One path's loop outcome under the chosen detector.
struct PathOutcome {
  double s = 0;    // loop time, or the horizon when not completed
  double y_s = 0;  // employment at detection
  bool completed = false;
};

// Ensemble aggregates; means and standard errors cover completed loops only,
// with the censoring visible through completion_fraction and n_effective.
struct EnsembleStats {
  double sigma0 = 0;
  double mean_s = 0, se_s = 0;
  double mean_ys = 0, se_ys = 0;
  double completion_fraction = 0;
  int n_effective = 0;
  int n_paths = 0;
};

struct EnsembleResult {
  EnsembleStats stats;
  std::vector<PathOutcome> outcomes;  // indexed by path, fold-order stable
};

// Runs spec.n_paths independent paths with per-index streams derived from
// base_seed; results are identical for any worker count, and a larger
// ensemble with the same base_seed extends a smaller one without reshuffling
// it.  Throws NumericalError when no path completes a loop.
EnsembleResult run_ensemble(const EnsembleSpec& spec,
                            const ModelParams& params);

// run_ensemble once per sigma0 in spec.sigma0_grid (params.sigma0 when empty).
std::vector<EnsembleStats> ensemble_sweep(const EnsembleSpec& spec,
                                          const ModelParams& params);

// One row of the loop map y0 -> E[y at loop completion]; a row whose ensemble
// fails is flagged and carried, never fatal.
struct LoopMapRow {
  double y0 = 0;
  EnsembleStats stats;
  bool ok = false;
  std::string error;
};
std::vector<LoopMapRow> loop_map(const std::vector<double>& y_grid,
                                 const EnsembleSpec& spec,
                                 const ModelParams& params);

// Empirical fixed point of the loop map: the first diagonal crossing of
// mean_ys - y0 scanning from the low end, located by inverse linear
// interpolation, with a confidence interval propagated from the bracketing
// rows' standard errors (one-sigma corners).  identity_map marks the
// zero-noise degeneration where every grid point is fixed.
struct FixedPointEstimate {
  double y_star = 0;
  double ci_lo = 0, ci_hi = 0;
  bool identity_map = false;
  double bracket_lo = 0, bracket_hi = 0;  // grid points around the crossing
};
FixedPointEstimate fixed_point(const std::vector<LoopMapRow>& table);

// Fraction of n_paths whose level stays inside {|V - v0| <= rho} for the
// whole horizon theta (checked at macro-step resolution, shared seeds by
// path index).
double band_exit_fraction(const Model& model, double x0, double y0, double v0,
                          double rho, double theta, int n_paths, double dt,
                          std::uint64_t base_seed, int threads);

// Empirical check of the exit-time estimate: paths start at the leftmost
// point of the level curve V = v0 and the survival fraction at horizon theta
// is compared against p_lower through a Wilson interval.
struct BoundValidation {
  ExitBound bound;
  int n_paths = 0;
  double fraction = 0;
  double wilson_lo = 0, wilson_hi = 0;
  bool pass = false;
  bool vacuous = false;  // p_lower <= 0: the bound asserts nothing
};
BoundValidation bound_validation(const Model& model, double v0, double rho,
                                 double mu, int n_paths, double dt,
                                 std::uint64_t base_seed, int threads);

}  // namespace goodwin
