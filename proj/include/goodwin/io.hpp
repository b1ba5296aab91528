#pragma once
// JSON-config front door: parse and serialize run configurations, execute the
// selected experiment against the math modules, and write CSV/JSON/SVG
// artifacts plus a content-hash manifest, so identical configs reproduce
// identical bytes.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "goodwin/model.hpp"
#include "goodwin/stochastic.hpp"

namespace goodwin {

// Which computation to run and its knobs.  `kind` selects one of the eight
// experiments; the parser accepts only the fields belonging to the chosen
// kind and rejects everything else.
struct ExperimentConfig {
  std::string kind;  // equilibria | period-table | simulate-ode |
                     // simulate-sde | ensemble | loop-map | exit-bound |
                     // regions-audit

  // period-table: explicit levels, or a geometric ladder of `count` levels.
  std::vector<double> levels;
  double v_min = 0, v_max = 0;
  int count = 0;
  bool with_return = false;  // also measure the period by orbit return

  // Starts for simulate-ode / simulate-sde / regions-audit / ensemble: an
  // explicit point, or the point on the reference ray with employment line_y0.
  double x0 = 0, y0 = 0;
  double line_y0 = 0;
  double t_end = 0;  // simulate-ode horizon

  // ensemble / loop-map
  int n_paths = 0;
  std::vector<double> sigma0_grid;
  std::string detector = "line";  // "line" | "winding"
  std::string line = "tilde";     // crossing-ray slope: "tilde" (rest point)
                                  // or "hat" (deterministic equilibrium)
  std::vector<double> y_grid;     // loop-map grid, or a linear ramp:
  double y_min = 0, y_max = 0;
  int y_count = 0;

  // exit-bound: mu given directly, or calibrated from a target probability.
  double v0 = 0, rho = 0;
  double mu = 0;
  double p_target = 0;
  bool has_mu = false, has_p_target = false;
};

struct RunConfig {
  ModelParams model;
  SdeConfig sde;
  ExperimentConfig experiment;
  std::string output_dir;  // empty: caller decides (CLI: env var, then
                           // "goodwin-out")
  int threads = 0;         // worker threads; 0 = hardware (CLI flag only)
  bool plots = true;       // render SVG companions (CLI flag only)
};

// Strict parser: unknown keys anywhere, missing required fields, type
// mismatches, and contradictory combinations (e.g. both `mu` and `p_lower`
// on an exit-bound run) are all ConfigErrors.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// Canonical form: fixed key order, every field of the chosen experiment kind
// explicit.  serialize -> parse -> serialize is a fixed point.
std::string serialize_config(const RunConfig& config);

struct Artifact {
  std::string name;  // path relative to the output directory
  std::uint64_t bytes = 0;
  std::string fnv1a64;  // 16 hex digits of the content hash
};

struct RunResult {
  std::vector<Artifact> artifacts;  // sorted by name; manifest not listed
  std::string manifest_path;
};

// Runs the configured experiment, writes its artifacts into output_dir
// (created if needed), renders plots when config.plots is set, and finishes
// with manifest.json listing every artifact with size and content hash.
RunResult run_experiment(const RunConfig& config);

// Renders the SVG companions for the experiment's artifacts by reading them
// back from output_dir — the plots are a pure function of the artifact
// bytes.  ConfigError when an input artifact is missing or carries no data
// rows.  Returns the files written; kinds without plots return nothing.
std::vector<Artifact> render_plots(const RunConfig& config,
                                   const std::string& output_dir);

// 64-bit Fowler-Noll-Vo 1a hash of a byte string, as used in the manifest.
std::uint64_t fnv1a64(std::string_view bytes);

// Shortest decimal that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace goodwin
