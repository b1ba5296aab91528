#pragma once
// Core vocabulary of the Goodwin growth-cycle model: parameters, the curve
// family (Phillips curve phi, investment response kappa, volatility sigma),
// equilibria, the conserved function V = V1(x) + V2(y), its diffusion
// generator, and the eight-sector region classifier around the rest point.
//
// State space: D = (0, inf) x (0, 1), x the wage share, y the employment rate.
// Deterministic flow:
//   dx = x (phi(y) - alpha) dt,     dy = y (kappa(x) - gamma) dt
// Stochastic flow (one common scalar Brownian motion W):
//   dx = x ((phi(y) - alpha + sigma^2(y)) dt + sigma(y) dW)
//   dy = y ((kappa(x) - gamma + sigma^2(y)) dt + sigma(y) dW)

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "goodwin/errors.hpp"

namespace goodwin {

// Scalar model constants.  Defaults are the preset used by every shipped
// experiment: kappa(x) = (1-x)/nu, phi(y) = phi1/(1-y)^2 + phi0,
// sigma(y) = sigma0 (1-y).
struct ModelParams {
  double alpha = 0.025;      // productivity growth rate
  double gamma = 0.055;      // employment drift offset (alpha + beta + depreciation)
  double nu = 3.0;           // capital-to-output ratio
  double phi0 = -0.040064;   // Phillips intercept (negative so phi(0) < alpha)
  double phi1 = 0.000064;    // Phillips curvature, > 0
  double sigma0 = 0.1;       // volatility scale, >= 0
  // Production-side constants: not part of the (x, y) dynamics; used only to
  // rebuild the productivity / labor-force / output series (a_t, N_t, P_t).
  double beta = 0.03;        // labor-force growth rate
  double a0 = 1.0;           // initial labor productivity
  double n0 = 1.0;           // initial labor force
};

// The curve family with derivatives and inverses.  make_preset_curves builds
// the closed-form preset; tests may supply any other monotone family.
struct CurveSet {
  std::function<double(double)> phi;         // y in [0,1) -> R, increasing, -> +inf at 1
  std::function<double(double)> phi_prime;   // dphi/dy
  std::function<double(double)> phi_inv;     // (phi(0), inf) -> [0, 1)
  std::function<double(double)> kappa;       // x >= 0 -> R, decreasing
  std::function<double(double)> kappa_prime; // dkappa/dx
  std::function<double(double)> kappa_inv;
  std::function<double(double)> sigma;       // y in [0,1] -> R+, sigma(y) <= sigma0
  double phi_at_zero = 0.0;                  // phi(0), lower edge of phi's range
  // f(x) = phi_inv(alpha - gamma + kappa(x)) where the argument exceeds
  // phi(0), extended by its limit value 0 elsewhere.  Filled by make_model.
  std::function<double(double)> f;
};

// Deterministic equilibrium (hat) and stochastic rest point (tilde); the two
// coincide when sigma0 = 0.  theta_tilde is the slope of the reference ray
// through the origin and the rest point.
struct Equilibria {
  double x_hat = 0, y_hat = 0;
  double x_tilde = 0, y_tilde = 0;
  double theta_tilde = 0;  // y_tilde / x_tilde
};

// --- region classifier -------------------------------------------------------

// Eight closed sectors around the rest point, indexed clockwise in flow order
// (the deterministic orbit moves up the left side, so R1 -> R2 -> ... -> R8).
enum class RegionId : std::uint8_t { R1, R2, R3, R4, R5, R6, R7, R8 };

// Bit i set <=> the point belongs to the closure of R(i+1).  Boundary points
// belong to every adjacent region, so trajectories never fall between sectors.
using RegionSet = std::uint8_t;

inline bool region_contains(RegionSet s, RegionId r) {
  return (s >> static_cast<unsigned>(r)) & 1u;
}
std::string region_set_to_string(RegionSet s);  // e.g. "R1|R8"

// --- assumption report -------------------------------------------------------

struct AssumptionEntry {
  std::string name;     // stable kebab-case identifier
  bool passed = false;
  double margin = 0;    // signed slack of the binding inequality (>= 0 iff passed)
  std::string detail;   // the numbers behind the verdict
};

struct AssumptionReport {
  std::vector<AssumptionEntry> entries;
  bool all_passed() const;
  const AssumptionEntry* find(std::string_view name) const;
  std::string summary() const;  // one line per entry
};

// --- assembled model ---------------------------------------------------------

// Immutable bundle built once by make_model: parameters, curves, equilibria,
// and numerically stable building blocks (the naive expressions for
// phi(y) - alpha and the V-halves lose every significant digit near the
// equilibrium, where most of the interesting dynamics happens).
struct Model {
  ModelParams params;
  CurveSet curves;
  Equilibria eq;
  std::function<double(double)> v1;                // wage-share half of V, v1(x_hat) = 0
  std::function<double(double)> v2;                // employment half of V, v2(y_hat) = 0
  std::function<double(double)> phi_minus_alpha;   // cancellation-free at y_hat
  std::function<double(double)> kappa_minus_gamma; // cancellation-free at x_hat
};

CurveSet make_preset_curves(const ModelParams& params);

// Builds the model: validates basic parameter invariants, solves both
// equilibria, and bakes the stable evaluators.  Throws AssumptionError for
// infeasible parameters or a non-unique rest point, NumericalError if an
// inverse misbehaves.
Model make_model(const ModelParams& params);
Model make_model(const ModelParams& params, CurveSet curves);

// --- operations --------------------------------------------------------------

// Checks every standing assumption and reports per-entry pass/fail with the
// numeric margin; never throws on a failing assumption (failures are entries).
AssumptionReport validate_assumptions(const ModelParams& params);
AssumptionReport validate_assumptions(const ModelParams& params, const CurveSet& curves);

// (x_hat, y_hat) = (kappa^{-1}(gamma), phi^{-1}(alpha)).
std::pair<double, double> deterministic_equilibrium(const ModelParams& params);

// (x_tilde, y_tilde): y_tilde is the unique root of
// phi(y) - alpha + sigma^2(y) = 0 in (0, 1) (bracketed scan + bisection;
// multiple roots raise AssumptionError listing them all), and
// x_tilde = kappa^{-1}(gamma - sigma^2(y_tilde)).
std::pair<double, double> stochastic_rest_point(const ModelParams& params);

// V(x, y) = V1(x) + V2(y) where V1(x) = int_{x_hat}^{x} (kappa(x_hat)-kappa(s))/s ds
// and V2(y) = int_{y_hat}^{y} (phi(s)-phi(y_hat))/s ds.  Nonnegative, zero only
// at the equilibrium, conserved by the deterministic flow.
double lyapunov(const Model& model, double x, double y);
double lyapunov(double x, double y, const ModelParams& params);

// Diffusion generator applied to V:
//   LV = sigma^2(y)/2 * ( [kappa(x_hat)-kappa(x)-x kappa'(x)]
//                       + [phi(y)-phi(y_hat)+y phi'(y)] ).
double lyapunov_generator(const Model& model, double x, double y);
double lyapunov_generator(double x, double y, const ModelParams& params);

// Region membership from the predicates y ? y_tilde, y ? f(x), x ? x_tilde,
// theta = y/x ? theta_tilde, with closed (inclusive) boundaries.
RegionSet classify_region(double x, double y, const Equilibria& eq, const CurveSet& curves);

// Internal helper shared with validate_assumptions: all roots of the
// rest-point equation found in (0, 1) by dense sign scan + bisection.
std::vector<double> rest_point_candidates(const ModelParams& params, const CurveSet& curves);

// Throws NumericalError unless x > 0 and 0 < y < 1.
void require_in_domain(double x, double y);

}  // namespace goodwin
