#include "goodwin/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "goodwin/deterministic.hpp"
#include "goodwin/errors.hpp"
#include "goodwin/montecarlo.hpp"
#include "goodwin/plots.hpp"

namespace goodwin {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

[[noreturn]] void bad(const std::string& msg) {
  throw ConfigError("config: " + msg);
}

void expect_object(const json& j, const char* where) {
  if (!j.is_object()) bad(std::string(where) + " must be a JSON object");
}

void check_keys(const json& obj, const char* where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) bad("unknown key \"" + item.key() + "\" in " + where);
  }
}

double num_field(const json& obj, const char* where, const char* key,
                 bool required, double fallback = 0) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) bad(std::string(where) + " is missing \"" + key + "\"");
    return fallback;
  }
  if (!it->is_number())
    bad("\"" + std::string(key) + "\" in " + where + " must be a number");
  return it->get<double>();
}

int int_field(const json& obj, const char* where, const char* key,
              bool required, int fallback = 0) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) bad(std::string(where) + " is missing \"" + key + "\"");
    return fallback;
  }
  if (!it->is_number_integer())
    bad("\"" + std::string(key) + "\" in " + where + " must be an integer");
  return it->get<int>();
}

std::uint64_t u64_field(const json& obj, const char* where, const char* key,
                        std::uint64_t fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number_unsigned())
    bad("\"" + std::string(key) + "\" in " + where +
        " must be a non-negative integer");
  return it->get<std::uint64_t>();
}

bool bool_field(const json& obj, const char* where, const char* key,
                bool fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean())
    bad("\"" + std::string(key) + "\" in " + where + " must be a boolean");
  return it->get<bool>();
}

std::string str_field(const json& obj, const char* where, const char* key,
                      const std::string& fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_string())
    bad("\"" + std::string(key) + "\" in " + where + " must be a string");
  return it->get<std::string>();
}

std::vector<double> num_array_field(const json& obj, const char* where,
                                    const char* key) {
  const auto it = obj.find(key);
  std::vector<double> out;
  if (it == obj.end()) return out;
  if (!it->is_array())
    bad("\"" + std::string(key) + "\" in " + where +
        " must be an array of numbers");
  for (const auto& v : *it) {
    if (!v.is_number())
      bad("\"" + std::string(key) + "\" in " + where +
          " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

// Start point fields shared by the path/ensemble experiments: either the
// explicit pair (x0, y0), or line_y0 picking a point on the reference ray.
void parse_start(const json& je, const char* where, ExperimentConfig& e) {
  const bool has_point = je.contains("x0") || je.contains("y0");
  const bool has_line = je.contains("line_y0");
  if (has_point && has_line)
    bad("give either \"line_y0\" or the \"x0\"/\"y0\" pair, not both");
  if (has_line) {
    e.line_y0 = num_field(je, where, "line_y0", true);
    if (!(e.line_y0 > 0)) bad("\"line_y0\" must be positive");
  } else {
    e.x0 = num_field(je, where, "x0", true);
    e.y0 = num_field(je, where, "y0", true);
  }
}

void parse_detector_line(const json& je, const char* where,
                         ExperimentConfig& e) {
  e.detector = str_field(je, where, "detector", "line");
  if (e.detector != "line" && e.detector != "winding")
    bad("\"detector\" must be \"line\" or \"winding\"");
  e.line = str_field(je, where, "line", "tilde");
  if (e.line != "tilde" && e.line != "hat")
    bad("\"line\" must be \"tilde\" or \"hat\"");
}

ExperimentConfig parse_experiment(const json& je) {
  expect_object(je, "\"experiment\"");
  const auto kit = je.find("kind");
  if (kit == je.end()) bad("\"experiment\" is missing \"kind\"");
  if (!kit->is_string()) bad("\"kind\" must be a string");
  ExperimentConfig e;
  e.kind = kit->get<std::string>();
  const char* w = "\"experiment\"";

  if (e.kind == "equilibria") {
    check_keys(je, w, {"kind"});
  } else if (e.kind == "period-table") {
    check_keys(je, w, {"kind", "levels", "v_min", "v_max", "count",
                       "with_return"});
    if (je.contains("levels")) {
      if (je.contains("v_min") || je.contains("v_max") || je.contains("count"))
        bad("period-table takes either \"levels\" or the "
            "v_min/v_max/count ladder, not both");
      e.levels = num_array_field(je, w, "levels");
      if (e.levels.empty()) bad("\"levels\" must not be empty");
    } else {
      e.v_min = num_field(je, w, "v_min", true);
      e.v_max = num_field(je, w, "v_max", true);
      e.count = int_field(je, w, "count", true);
      if (!(e.v_min > 0) || !(e.v_max >= e.v_min))
        bad("need 0 < v_min <= v_max");
      if (e.count < 1) bad("\"count\" must be at least 1");
    }
    e.with_return = bool_field(je, w, "with_return", false);
  } else if (e.kind == "simulate-ode") {
    check_keys(je, w, {"kind", "x0", "y0", "line_y0", "t_end"});
    parse_start(je, w, e);
    e.t_end = num_field(je, w, "t_end", true);
    if (!(e.t_end > 0)) bad("\"t_end\" must be positive");
  } else if (e.kind == "simulate-sde" || e.kind == "regions-audit") {
    check_keys(je, w, {"kind", "x0", "y0", "line_y0"});
    parse_start(je, w, e);
  } else if (e.kind == "ensemble") {
    check_keys(je, w, {"kind", "x0", "y0", "line_y0", "n_paths", "sigma0_grid",
                       "detector", "line"});
    parse_start(je, w, e);
    e.n_paths = int_field(je, w, "n_paths", true);
    e.sigma0_grid = num_array_field(je, w, "sigma0_grid");
    parse_detector_line(je, w, e);
  } else if (e.kind == "loop-map") {
    check_keys(je, w, {"kind", "y_grid", "y_min", "y_max", "y_count",
                       "n_paths", "detector", "line"});
    if (je.contains("y_grid")) {
      if (je.contains("y_min") || je.contains("y_max") ||
          je.contains("y_count"))
        bad("loop-map takes either \"y_grid\" or the y_min/y_max/y_count "
            "ramp, not both");
      e.y_grid = num_array_field(je, w, "y_grid");
      if (e.y_grid.empty()) bad("\"y_grid\" must not be empty");
    } else {
      e.y_min = num_field(je, w, "y_min", true);
      e.y_max = num_field(je, w, "y_max", true);
      e.y_count = int_field(je, w, "y_count", true);
      if (!(e.y_min > 0) || !(e.y_max >= e.y_min))
        bad("need 0 < y_min <= y_max");
      if (e.y_count < 1) bad("\"y_count\" must be at least 1");
    }
    e.n_paths = int_field(je, w, "n_paths", true);
    parse_detector_line(je, w, e);
  } else if (e.kind == "exit-bound") {
    check_keys(je, w, {"kind", "v0", "rho", "mu", "p_lower", "n_paths"});
    e.v0 = num_field(je, w, "v0", true);
    e.rho = num_field(je, w, "rho", true);
    e.has_mu = je.contains("mu");
    e.has_p_target = je.contains("p_lower");
    if (e.has_mu == e.has_p_target)
      bad("exit-bound needs exactly one of \"mu\" and \"p_lower\"");
    if (e.has_mu) {
      e.mu = num_field(je, w, "mu", true);
    } else {
      e.p_target = num_field(je, w, "p_lower", true);
      if (!(e.p_target > 0) || !(e.p_target < 1))
        bad("\"p_lower\" must lie strictly between 0 and 1");
    }
    e.n_paths = int_field(je, w, "n_paths", false, 0);
  } else {
    bad("unknown experiment kind \"" + e.kind + "\"");
  }
  return e;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    bad(std::string("not valid JSON: ") + e.what());
  }
  expect_object(j, "the top level");
  check_keys(j, "the top level", {"model", "sde", "experiment", "output_dir"});

  RunConfig cfg;
  const auto mit = j.find("model");
  if (mit == j.end()) bad("missing \"model\"");
  expect_object(*mit, "\"model\"");
  check_keys(*mit, "\"model\"",
             {"alpha", "gamma", "nu", "phi0", "phi1", "sigma0", "beta", "a0",
              "n0"});
  const ModelParams defaults;
  cfg.model.alpha = num_field(*mit, "\"model\"", "alpha", true);
  cfg.model.gamma = num_field(*mit, "\"model\"", "gamma", true);
  cfg.model.nu = num_field(*mit, "\"model\"", "nu", true);
  cfg.model.phi0 = num_field(*mit, "\"model\"", "phi0", true);
  cfg.model.phi1 = num_field(*mit, "\"model\"", "phi1", true);
  cfg.model.sigma0 = num_field(*mit, "\"model\"", "sigma0", true);
  cfg.model.beta = num_field(*mit, "\"model\"", "beta", false, defaults.beta);
  cfg.model.a0 = num_field(*mit, "\"model\"", "a0", false, defaults.a0);
  cfg.model.n0 = num_field(*mit, "\"model\"", "n0", false, defaults.n0);

  if (const auto sit = j.find("sde"); sit != j.end()) {
    expect_object(*sit, "\"sde\"");
    check_keys(*sit, "\"sde\"",
               {"dt", "seed", "t_max", "max_halvings", "record_stride",
                "log_step_cap", "force_halvings"});
    const SdeConfig ds;
    cfg.sde.dt = num_field(*sit, "\"sde\"", "dt", false, ds.dt);
    cfg.sde.seed = u64_field(*sit, "\"sde\"", "seed", ds.seed);
    cfg.sde.t_max = num_field(*sit, "\"sde\"", "t_max", false, ds.t_max);
    cfg.sde.max_halvings =
        int_field(*sit, "\"sde\"", "max_halvings", false, ds.max_halvings);
    cfg.sde.record_stride =
        int_field(*sit, "\"sde\"", "record_stride", false, ds.record_stride);
    cfg.sde.log_step_cap =
        num_field(*sit, "\"sde\"", "log_step_cap", false, ds.log_step_cap);
    cfg.sde.force_halvings =
        int_field(*sit, "\"sde\"", "force_halvings", false, ds.force_halvings);
  }

  const auto eit = j.find("experiment");
  if (eit == j.end()) bad("missing \"experiment\"");
  cfg.experiment = parse_experiment(*eit);

  if (const auto oit = j.find("output_dir"); oit != j.end()) {
    if (!oit->is_string()) bad("\"output_dir\" must be a string");
    cfg.output_dir = oit->get<std::string>();
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text);
}

namespace {

void serialize_start(ordered_json& e, const ExperimentConfig& x) {
  if (x.line_y0 > 0)
    e["line_y0"] = x.line_y0;
  else {
    e["x0"] = x.x0;
    e["y0"] = x.y0;
  }
}

}  // namespace

std::string serialize_config(const RunConfig& c) {
  ordered_json j;
  ordered_json m;
  m["alpha"] = c.model.alpha;
  m["gamma"] = c.model.gamma;
  m["nu"] = c.model.nu;
  m["phi0"] = c.model.phi0;
  m["phi1"] = c.model.phi1;
  m["sigma0"] = c.model.sigma0;
  m["beta"] = c.model.beta;
  m["a0"] = c.model.a0;
  m["n0"] = c.model.n0;
  j["model"] = m;

  ordered_json s;
  s["dt"] = c.sde.dt;
  s["seed"] = c.sde.seed;
  s["t_max"] = c.sde.t_max;
  s["max_halvings"] = c.sde.max_halvings;
  s["record_stride"] = c.sde.record_stride;
  s["log_step_cap"] = c.sde.log_step_cap;
  s["force_halvings"] = c.sde.force_halvings;
  j["sde"] = s;

  ordered_json e;
  const ExperimentConfig& x = c.experiment;
  e["kind"] = x.kind;
  if (x.kind == "period-table") {
    if (!x.levels.empty())
      e["levels"] = x.levels;
    else {
      e["v_min"] = x.v_min;
      e["v_max"] = x.v_max;
      e["count"] = x.count;
    }
    e["with_return"] = x.with_return;
  } else if (x.kind == "simulate-ode") {
    serialize_start(e, x);
    e["t_end"] = x.t_end;
  } else if (x.kind == "simulate-sde" || x.kind == "regions-audit") {
    serialize_start(e, x);
  } else if (x.kind == "ensemble") {
    serialize_start(e, x);
    e["n_paths"] = x.n_paths;
    if (!x.sigma0_grid.empty()) e["sigma0_grid"] = x.sigma0_grid;
    e["detector"] = x.detector;
    e["line"] = x.line;
  } else if (x.kind == "loop-map") {
    if (!x.y_grid.empty())
      e["y_grid"] = x.y_grid;
    else {
      e["y_min"] = x.y_min;
      e["y_max"] = x.y_max;
      e["y_count"] = x.y_count;
    }
    e["n_paths"] = x.n_paths;
    e["detector"] = x.detector;
    e["line"] = x.line;
  } else if (x.kind == "exit-bound") {
    e["v0"] = x.v0;
    e["rho"] = x.rho;
    if (x.has_mu)
      e["mu"] = x.mu;
    else
      e["p_lower"] = x.p_target;
    if (x.n_paths > 0) e["n_paths"] = x.n_paths;
  }
  j["experiment"] = e;

  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  return j.dump(2) + "\n";
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string format_double(double value) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

namespace {

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

// Writes artifacts under one directory and remembers name/size/hash; the
// hash is taken from the in-memory bytes, the single source of truth.
class ArtifactSink {
 public:
  explicit ArtifactSink(std::string dir) : dir_(std::move(dir)) {}

  void put(const std::string& name, const std::string& content) {
    const fs::path p = fs::path(dir_) / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write artifact " + p.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw ConfigError("failed writing artifact " + p.string());
    artifacts_.push_back({name, content.size(), hex16(fnv1a64(content))});
  }

  std::vector<Artifact> take() { return std::move(artifacts_); }

 private:
  std::string dir_;
  std::vector<Artifact> artifacts_;
};

std::vector<double> resolve_levels(const ExperimentConfig& e) {
  if (!e.levels.empty()) return e.levels;
  std::vector<double> out;
  if (e.count == 1) {
    out.push_back(e.v_min);
    return out;
  }
  const double ratio = std::pow(e.v_max / e.v_min, 1.0 / (e.count - 1));
  for (int i = 0; i < e.count; ++i)
    out.push_back(e.v_min * std::pow(ratio, i));
  return out;
}

std::vector<double> resolve_y_grid(const ExperimentConfig& e) {
  if (!e.y_grid.empty()) return e.y_grid;
  std::vector<double> out;
  if (e.y_count == 1) {
    out.push_back(e.y_min);
    return out;
  }
  for (int i = 0; i < e.y_count; ++i)
    out.push_back(e.y_min + (e.y_max - e.y_min) * i / (e.y_count - 1));
  return out;
}

std::pair<double, double> resolve_xy(const ExperimentConfig& e,
                                     const Model& model) {
  if (e.line_y0 > 0) return {e.line_y0 / model.eq.theta_tilde, e.line_y0};
  return {e.x0, e.y0};
}

EnsembleSpec make_spec(const RunConfig& cfg, const Model& model) {
  EnsembleSpec s;
  s.n_paths = cfg.experiment.n_paths;
  if (cfg.experiment.line_y0 > 0)
    s.start = StartRule::on_line(cfg.experiment.line_y0);
  else
    s.start = StartRule::at_point(cfg.experiment.x0, cfg.experiment.y0);
  s.sigma0_grid = cfg.experiment.sigma0_grid;
  s.t_max = cfg.sde.t_max;
  s.base_seed = cfg.sde.seed;
  s.dt = cfg.sde.dt;
  s.detector = cfg.experiment.detector == "winding"
                   ? EnsembleSpec::Detector::winding
                   : EnsembleSpec::Detector::line;
  s.line_slope =
      cfg.experiment.line == "hat" ? model.eq.y_hat / model.eq.x_hat : 0.0;
  s.threads = cfg.threads;
  return s;
}

void run_equilibria(const Model& model, ArtifactSink& sink) {
  std::string csv = "x_hat,y_hat,x_tilde,y_tilde,theta_tilde,t_linear\n";
  csv += format_double(model.eq.x_hat) + "," + format_double(model.eq.y_hat) +
         "," + format_double(model.eq.x_tilde) + "," +
         format_double(model.eq.y_tilde) + "," +
         format_double(model.eq.theta_tilde) + "," +
         format_double(linearized_period(model)) + "\n";
  sink.put("equilibria.csv", csv);
}

void run_period_table(const RunConfig& cfg, const Model& model,
                      ArtifactSink& sink) {
  std::string csv = "v0,t_formula,t_return,x_under,x_bar,y_under,y_bar\n";
  for (double v0 : resolve_levels(cfg.experiment)) {
    PeriodResult pr = orbit_period(model, v0);
    if (cfg.experiment.with_return)
      pr.t_return =
          period_by_return(model, v0, cfg.sde.dt, 3.0 * pr.t_formula);
    csv += format_double(pr.v0) + "," + format_double(pr.t_formula) + "," +
           format_double(pr.t_return) + "," + format_double(pr.x_under) +
           "," + format_double(pr.x_bar) + "," + format_double(pr.y_under) +
           "," + format_double(pr.y_bar) + "\n";
  }
  sink.put("period_table.csv", csv);
}

void run_simulate_ode(const RunConfig& cfg, const Model& model,
                      ArtifactSink& sink) {
  const auto [x0, y0] = resolve_xy(cfg.experiment, model);
  OdeOptions opts;
  opts.dt = cfg.sde.dt;
  opts.record_stride = cfg.sde.record_stride;
  opts.record_v = true;
  const Trajectory tr =
      integrate_ode(model, x0, y0, cfg.experiment.t_end, opts);
  std::string csv = "t,x,y,v\n";
  for (std::size_t i = 0; i < tr.t.size(); ++i)
    csv += format_double(tr.t[i]) + "," + format_double(tr.x[i]) + "," +
           format_double(tr.y[i]) + "," + format_double(tr.v[i]) + "\n";
  sink.put("trajectory.csv", csv);
}

void run_simulate_sde(const RunConfig& cfg, const Model& model,
                      ArtifactSink& sink) {
  const auto [x0, y0] = resolve_xy(cfg.experiment, model);
  const StochasticPath path = simulate_sde(model, x0, y0, cfg.sde);
  const EconomicSeries econ = economic_series(path, model);
  std::string csv = "t,x,y,rho,region,a,P\n";
  for (std::size_t i = 0; i < path.t.size(); ++i)
    csv += format_double(path.t[i]) + "," + format_double(path.x[i]) + "," +
           format_double(path.y[i]) + "," + format_double(path.rho[i]) + "," +
           region_set_to_string(path.region[i]) + "," +
           format_double(econ.a[i]) + "," + format_double(econ.p[i]) + "\n";
  sink.put("path.csv", csv);
}

void run_ensemble_experiment(const RunConfig& cfg, const Model& model,
                             ArtifactSink& sink) {
  const std::vector<EnsembleStats> rows =
      ensemble_sweep(make_spec(cfg, model), cfg.model);
  std::string csv =
      "sigma0,mean_S,se_S,mean_yS,se_yS,completion_fraction,n_effective,"
      "n_paths\n";
  for (const EnsembleStats& r : rows)
    csv += format_double(r.sigma0) + "," + format_double(r.mean_s) + "," +
           format_double(r.se_s) + "," + format_double(r.mean_ys) + "," +
           format_double(r.se_ys) + "," +
           format_double(r.completion_fraction) + "," +
           std::to_string(r.n_effective) + "," + std::to_string(r.n_paths) +
           "\n";
  sink.put("ensemble.csv", csv);
}

void run_loop_map(const RunConfig& cfg, const Model& model,
                  ArtifactSink& sink) {
  const std::vector<LoopMapRow> table =
      loop_map(resolve_y_grid(cfg.experiment), make_spec(cfg, model),
               cfg.model);
  constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
  std::string csv = "y0,mean_yS,se_yS,mean_S,se_S,completion_fraction\n";
  for (const LoopMapRow& r : table) {
    const EnsembleStats& st = r.stats;
    csv += format_double(r.y0) + "," +
           format_double(r.ok ? st.mean_ys : kNan) + "," +
           format_double(r.ok ? st.se_ys : kNan) + "," +
           format_double(r.ok ? st.mean_s : kNan) + "," +
           format_double(r.ok ? st.se_s : kNan) + "," +
           format_double(st.completion_fraction) + "\n";
  }
  sink.put("loop_map.csv", csv);

  ordered_json fp;
  try {
    const FixedPointEstimate est = fixed_point(table);
    if (est.identity_map) {
      fp["identity_map"] = true;
    } else {
      fp["y_star"] = est.y_star;
      fp["ci_lo"] = est.ci_lo;
      fp["ci_hi"] = est.ci_hi;
      fp["bracket_lo"] = est.bracket_lo;
      fp["bracket_hi"] = est.bracket_hi;
    }
  } catch (const NumericalError& err) {
    fp["one_sided"] = true;
    fp["message"] = err.what();
  }
  sink.put("fixed_point.json", fp.dump(2) + "\n");
}

void run_exit_bound(const RunConfig& cfg, const Model& model,
                    ArtifactSink& sink) {
  const ExperimentConfig& e = cfg.experiment;
  ordered_json out;
  out["v0"] = e.v0;
  out["rho"] = e.rho;
  double mu = e.mu;
  if (e.has_p_target) {
    const ExitConstants c = estimate_constants(model, e.v0, e.rho);
    if (!(c.i_const.value > 0))
      throw ConfigError(
          "config: exit-bound with zero noise cannot calibrate mu from a "
          "probability target; the level never exits — give \"mu\" directly");
    mu = std::sqrt(c.i_const.value / (1.0 - e.p_target));
    out["p_lower_target"] = e.p_target;
  }
  out["mu"] = mu;
  const ExitBound b = exit_bound(model, e.v0, e.rho, mu);
  out["r_const"] = b.r_const;
  out["i_const"] = b.i_const;
  out["theta"] = b.theta;  // JSON null when the zero-noise bound degenerates
  out["p_lower"] = b.p_lower;
  out["p_lower_raw"] = b.p_lower_raw;
  out["degenerate"] = b.degenerate;
  if (e.n_paths > 0) {
    const BoundValidation bv =
        bound_validation(model, e.v0, e.rho, mu, e.n_paths, cfg.sde.dt,
                         cfg.sde.seed, cfg.threads);
    ordered_json v;
    v["n_paths"] = bv.n_paths;
    v["dt"] = cfg.sde.dt;
    v["seed"] = cfg.sde.seed;
    v["fraction"] = bv.fraction;
    v["wilson_lo"] = bv.wilson_lo;
    v["wilson_hi"] = bv.wilson_hi;
    v["pass"] = bv.pass;
    v["vacuous"] = bv.vacuous;
    out["validation"] = v;
  }
  sink.put("exit_bound.json", out.dump(2) + "\n");
}

void run_regions_audit(const RunConfig& cfg, const Model& model,
                       ArtifactSink& sink) {
  const auto [x0, y0] = resolve_xy(cfg.experiment, model);
  const StochasticPath path = simulate_sde(model, x0, y0, cfg.sde);
  const AuditReport report = region_path_audit(path, model);
  std::string jsonl;
  for (const AuditViolation& v : report.violations) {
    ordered_json r;
    r["t"] = v.t;
    r["kind"] = v.kind;
    r["detail"] = v.detail;
    jsonl += r.dump() + "\n";
  }
  sink.put("audit.jsonl", jsonl);
  ordered_json summary;
  summary["ratio_windows"] = report.ratio_windows;
  summary["transitions"] = report.transitions;
  summary["violations"] = report.violations.size();
  summary["clean"] = report.clean();
  sink.put("audit_summary.json", summary.dump(2) + "\n");
}

// --- reading artifacts back for plotting -------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name, const std::string& where) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ConfigError("artifact " + where + " has no column \"" + name +
                      "\"");
  }
};

CsvTable read_csv(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("plot input artifact missing: " + p.string());
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw ConfigError("artifact " + p.string() + " is empty");
  return t;
}

double cell_num(const std::string& s) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ConfigError("artifact cell \"" + s + "\" is not a number");
  return v;
}

std::vector<std::pair<double, double>> column_points(const CsvTable& t,
                                                     const std::string& where,
                                                     const char* xc,
                                                     const char* yc) {
  const std::size_t xi = t.col(xc, where), yi = t.col(yc, where);
  std::vector<std::pair<double, double>> pts;
  pts.reserve(t.rows.size());
  for (const auto& r : t.rows)
    pts.emplace_back(cell_num(r[xi]), cell_num(r[yi]));
  return pts;
}

void require_rows(const CsvTable& t, const fs::path& p) {
  if (t.rows.empty())
    throw ConfigError("artifact " + p.string() + " has no data rows to plot");
}

// Phase portrait: the trajectory plus the four reference curves that carve
// the plane into the eight sectors, clipped to the data's bounding box.
std::string phase_svg(const Model& model,
                      std::vector<std::pair<double, double>> pts,
                      const std::string& title) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double xlo = kInf, xhi = -kInf, ylo = kInf, yhi = -kInf;
  for (const auto& [x, y] : pts) {
    if (!std::isfinite(x) || !std::isfinite(y)) continue;
    xlo = std::min(xlo, x);
    xhi = std::max(xhi, x);
    ylo = std::min(ylo, y);
    yhi = std::max(yhi, y);
  }
  if (!(xlo <= xhi))
    throw ConfigError("plot \"" + title + "\" has no finite data points");

  PlotSpec sp;
  sp.title = title;
  sp.x_label = "wage share x";
  sp.y_label = "employment rate y";
  sp.series.push_back({std::move(pts), "#1f77b4", 1.2, false, "trajectory"});

  PlotSeries fcurve{{}, "#d62728", 1.0, false, "y = f(x)"};
  constexpr int kSamples = 256;
  for (int i = 0; i <= kSamples; ++i) {
    const double x = xlo + (xhi - xlo) * i / kSamples;
    const double y = model.curves.f(x);
    if (y >= ylo && y <= yhi) fcurve.points.emplace_back(x, y);
  }
  if (fcurve.points.size() >= 2) sp.series.push_back(std::move(fcurve));

  const Equilibria& eq = model.eq;
  if (eq.y_tilde >= ylo && eq.y_tilde <= yhi)
    sp.series.push_back({{{xlo, eq.y_tilde}, {xhi, eq.y_tilde}},
                         "#2ca02c",
                         1.0,
                         false,
                         "y = y~"});
  if (eq.x_tilde >= xlo && eq.x_tilde <= xhi)
    sp.series.push_back({{{eq.x_tilde, ylo}, {eq.x_tilde, yhi}},
                         "#9467bd",
                         1.0,
                         false,
                         "x = x~"});
  const double th = eq.theta_tilde;
  const double rx_lo = std::max(xlo, ylo / th), rx_hi = std::min(xhi, yhi / th);
  if (rx_lo < rx_hi)
    sp.series.push_back({{{rx_lo, th * rx_lo}, {rx_hi, th * rx_hi}},
                         "#ff7f0e",
                         1.0,
                         false,
                         "y = (y~/x~) x"});
  return render_svg(sp);
}

}  // namespace

std::vector<Artifact> render_plots(const RunConfig& config,
                                   const std::string& output_dir) {
  const std::string& kind = config.experiment.kind;
  ArtifactSink sink(output_dir);
  const fs::path dir(output_dir);

  if (kind == "period-table") {
    const fs::path p = dir / "period_table.csv";
    const CsvTable t = read_csv(p);
    require_rows(t, p);
    PlotSpec sp;
    sp.title = "orbit period against level";
    sp.x_label = "level V0";
    sp.y_label = "period T";
    sp.series.push_back({column_points(t, p.string(), "v0", "t_formula"),
                         "#1f77b4", 1.5, true, "T(V0)"});
    sink.put("period_vs_v.svg", render_svg(sp));
  } else if (kind == "simulate-ode") {
    const fs::path p = dir / "trajectory.csv";
    const CsvTable t = read_csv(p);
    require_rows(t, p);
    const Model model = make_model(config.model);
    sink.put("phase_portrait.svg",
             phase_svg(model, column_points(t, p.string(), "x", "y"),
                       "deterministic orbit"));
  } else if (kind == "simulate-sde") {
    const fs::path p = dir / "path.csv";
    const CsvTable t = read_csv(p);
    require_rows(t, p);
    const Model model = make_model(config.model);
    sink.put("phase_portrait.svg",
             phase_svg(model, column_points(t, p.string(), "x", "y"),
                       "noise-driven path"));
    PlotSpec sp;
    sp.title = "aggregate output along the path";
    sp.x_label = "time t";
    sp.y_label = "output P";
    sp.series.push_back(
        {column_points(t, p.string(), "t", "P"), "#1f77b4", 1.2, false, "P"});
    sink.put("output_vs_time.svg", render_svg(sp));
  } else if (kind == "loop-map") {
    const fs::path p = dir / "loop_map.csv";
    const CsvTable t = read_csv(p);
    require_rows(t, p);
    auto pts = column_points(t, p.string(), "y0", "mean_yS");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& [a, b2] : pts) {
      if (!std::isfinite(a)) continue;
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
    PlotSpec sp;
    sp.title = "one-loop employment map";
    sp.x_label = "start y0";
    sp.y_label = "mean y after one loop";
    sp.series.push_back({std::move(pts), "#1f77b4", 1.5, true, "E[y_S]"});
    if (lo < hi)
      sp.series.push_back(
          {{{lo, lo}, {hi, hi}}, "#888888", 1.0, false, "identity"});
    const fs::path fpp = dir / "fixed_point.json";
    std::ifstream fin(fpp, std::ios::binary);
    if (!fin)
      throw ConfigError("plot input artifact missing: " + fpp.string());
    json fp;
    try {
      fp = json::parse(fin);
    } catch (const json::exception& e) {
      throw ConfigError("artifact " + fpp.string() + " is not valid JSON: " +
                        e.what());
    }
    if (fp.contains("y_star")) {
      const double ys = fp["y_star"].get<double>();
      sp.series.push_back({{{ys, ys}}, "#d62728", 2.0, true, "fixed point"});
    }
    sink.put("loop_map.svg", render_svg(sp));
  }
  return sink.take();
}

RunResult run_experiment(const RunConfig& config) {
  const Model model = make_model(config.model);
  const std::string dir =
      config.output_dir.empty() ? std::string("goodwin-out")
                                : config.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory " + dir + ": " +
                      ec.message());

  ArtifactSink sink(dir);
  const std::string& kind = config.experiment.kind;
  if (kind == "equilibria")
    run_equilibria(model, sink);
  else if (kind == "period-table")
    run_period_table(config, model, sink);
  else if (kind == "simulate-ode")
    run_simulate_ode(config, model, sink);
  else if (kind == "simulate-sde")
    run_simulate_sde(config, model, sink);
  else if (kind == "ensemble")
    run_ensemble_experiment(config, model, sink);
  else if (kind == "loop-map")
    run_loop_map(config, model, sink);
  else if (kind == "exit-bound")
    run_exit_bound(config, model, sink);
  else if (kind == "regions-audit")
    run_regions_audit(config, model, sink);
  else
    throw ConfigError("config: unknown experiment kind \"" + kind + "\"");

  std::vector<Artifact> artifacts = sink.take();
  if (config.plots) {
    std::vector<Artifact> extra = render_plots(config, dir);
    artifacts.insert(artifacts.end(), extra.begin(), extra.end());
  }
  std::sort(artifacts.begin(), artifacts.end(),
            [](const Artifact& a, const Artifact& b) { return a.name < b.name; });

  ordered_json man;
  man["artifacts"] = ordered_json::array();
  for (const Artifact& a : artifacts) {
    ordered_json entry;
    entry["path"] = a.name;
    entry["bytes"] = a.bytes;
    entry["fnv1a64"] = a.fnv1a64;
    man["artifacts"].push_back(entry);
  }
  const std::string mtext = man.dump(2) + "\n";
  const fs::path mpath = fs::path(dir) / "manifest.json";
  {
    std::ofstream out(mpath, std::ios::binary);
    if (!out) throw ConfigError("cannot write manifest " + mpath.string());
    out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  }
  return {std::move(artifacts), mpath.string()};
}

}  // namespace goodwin
