#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "goodwin/deterministic.hpp"
#include "goodwin/errors.hpp"
#include "goodwin/io.hpp"
#include "goodwin/model.hpp"

using namespace goodwin;
namespace fs = std::filesystem;

namespace {

const char* kPresetModel =
    "{\"alpha\": 0.025, \"gamma\": 0.055, \"nu\": 3.0, "
    "\"phi0\": -0.040064, \"phi1\": 0.000064, \"sigma0\": 0.1}";

std::string wrap(const std::string& experiment,
                 const std::string& sde = "{\"dt\": 0.001}") {
  return std::string("{\"model\": ") + kPresetModel + ", \"sde\": " + sde +
         ", \"experiment\": " + experiment + "}";
}

RunConfig preset_config(const std::string& kind) {
  RunConfig c;
  c.experiment.kind = kind;
  c.threads = 4;
  return c;
}

// Scratch directory per test case, removed on scope exit.
struct TestDir {
  fs::path path;
  explicit TestDir(const std::string& tag)
      : path(fs::temp_directory_path() /
             ("goodwin_io_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TestDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(bool(in), "missing file " << p.string());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int run_cli(const std::string& args, const std::string& env_prefix = "") {
  const char* bin = std::getenv("GOODWIN_CLI_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "GOODWIN_CLI_BIN must point at the binary");
  const int status =
      std::system((env_prefix + bin + " " + args).c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::string parse_error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config parsing covers every field and serializes canonically") {
  const std::string text = wrap(
      "{\"kind\": \"ensemble\", \"line_y0\": 0.9, \"n_paths\": 24, "
      "\"sigma0_grid\": [0.05, 0.1], \"detector\": \"winding\", "
      "\"line\": \"hat\"}",
      "{\"dt\": 0.002, \"seed\": 42, \"t_max\": 80, \"max_halvings\": 30, "
      "\"record_stride\": 5, \"log_step_cap\": 0.2, \"force_halvings\": 1}");
  const RunConfig c = parse_config(text);
  CHECK(c.model.alpha == 0.025);
  CHECK(c.model.nu == 3.0);
  CHECK(c.model.sigma0 == 0.1);
  CHECK(c.model.beta == 0.03);  // production-side default kept
  CHECK(c.sde.dt == 0.002);
  CHECK(c.sde.seed == 42);
  CHECK(c.sde.t_max == 80);
  CHECK(c.sde.max_halvings == 30);
  CHECK(c.sde.record_stride == 5);
  CHECK(c.sde.log_step_cap == 0.2);
  CHECK(c.sde.force_halvings == 1);
  CHECK(c.experiment.kind == "ensemble");
  CHECK(c.experiment.line_y0 == 0.9);
  CHECK(c.experiment.n_paths == 24);
  CHECK(c.experiment.sigma0_grid == std::vector<double>{0.05, 0.1});
  CHECK(c.experiment.detector == "winding");
  CHECK(c.experiment.line == "hat");

  // serialize -> parse -> serialize reaches a fixed point, and the canonical
  // text parses back to the same meaning.
  const std::string s1 = serialize_config(c);
  const RunConfig c2 = parse_config(s1);
  const std::string s2 = serialize_config(c2);
  CHECK(s1 == s2);
  CHECK(c2.sde.seed == c.sde.seed);
  CHECK(c2.experiment.line_y0 == c.experiment.line_y0);
  CHECK(c2.experiment.detector == c.experiment.detector);

  // The other experiment shapes round-trip too.
  for (const char* exp :
       {"{\"kind\": \"equilibria\"}",
        "{\"kind\": \"period-table\", \"levels\": [0.01, 0.1], "
        "\"with_return\": true}",
        "{\"kind\": \"period-table\", \"v_min\": 0.001, \"v_max\": 0.5, "
        "\"count\": 10}",
        "{\"kind\": \"simulate-ode\", \"x0\": 0.9, \"y0\": 0.95, "
        "\"t_end\": 10.0}",
        "{\"kind\": \"simulate-sde\", \"line_y0\": 0.9}",
        "{\"kind\": \"regions-audit\", \"x0\": 0.9, \"y0\": 0.95}",
        "{\"kind\": \"loop-map\", \"y_min\": 0.2, \"y_max\": 0.9, "
        "\"y_count\": 8, \"n_paths\": 50}",
        "{\"kind\": \"exit-bound\", \"v0\": 0.05, \"rho\": 0.02, "
        "\"p_lower\": 0.5, \"n_paths\": 100}",
        "{\"kind\": \"exit-bound\", \"v0\": 0.05, \"rho\": 0.02, "
        "\"mu\": 0.01}"}) {
    const std::string one = serialize_config(parse_config(wrap(exp)));
    CHECK(serialize_config(parse_config(one)) == one);
  }
}

TEST_CASE("config parsing rejects unknown keys and contradictions") {
  // Unknown keys at every level, each named in the message.
  CHECK(parse_error_of("{\"modle\": {}, \"experiment\": {\"kind\": "
                       "\"equilibria\"}}")
            .find("modle") != std::string::npos);
  CHECK(parse_error_of(wrap("{\"kind\": \"equilibria\", \"extra\": 1}"))
            .find("extra") != std::string::npos);
  {
    std::string text = wrap("{\"kind\": \"equilibria\"}");
    text.replace(text.find("\"alpha\""), 7, "\"alhpa\"");
    CHECK(parse_error_of(text).find("alhpa") != std::string::npos);
  }
  CHECK(parse_error_of(wrap("{\"kind\": \"equilibria\"}", "{\"dtt\": 0.01}"))
            .find("dtt") != std::string::npos);

  // Missing required pieces and malformed values.
  CHECK_THROWS_AS(parse_config("{\"experiment\": {\"kind\": \"equilibria\"}}"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("not json at all"), ConfigError);
  CHECK(parse_error_of(std::string("{\"model\": {\"alpha\": 0.025, \"gamma\": "
                                   "0.055, \"phi0\": -0.040064, \"phi1\": "
                                   "0.000064, \"sigma0\": 0.1}, "
                                   "\"experiment\": {\"kind\": "
                                   "\"equilibria\"}}"))
            .find("nu") != std::string::npos);

  // A field that belongs to a different experiment kind is rejected.
  CHECK_THROWS_AS(
      parse_config(wrap("{\"kind\": \"equilibria\", \"n_paths\": 10}")),
      ConfigError);

  // Contradictory combinations.
  CHECK_THROWS_AS(parse_config(wrap(
                      "{\"kind\": \"exit-bound\", \"v0\": 0.05, \"rho\": "
                      "0.02, \"mu\": 0.01, \"p_lower\": 0.5}")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(wrap("{\"kind\": \"exit-bound\", \"v0\": "
                                    "0.05, \"rho\": 0.02}")),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config(wrap("{\"kind\": \"simulate-sde\", \"x0\": 0.9, \"y0\": "
                        "0.95, \"line_y0\": 0.9}")),
      ConfigError);
  CHECK_THROWS_AS(parse_config(wrap(
                      "{\"kind\": \"loop-map\", \"y_grid\": [0.5], "
                      "\"y_min\": 0.2, \"y_max\": 0.9, \"y_count\": 4, "
                      "\"n_paths\": 10}")),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config(wrap("{\"kind\": \"ensemble\", \"line_y0\": 0.9, "
                        "\"n_paths\": 10, \"detector\": \"banana\"}")),
      ConfigError);
  CHECK_THROWS_AS(parse_config(wrap("{\"kind\": \"warp-drive\"}")),
                  ConfigError);
}

TEST_CASE("equilibria experiment writes hashed artifacts reproducibly") {
  TestDir dir("equilibria");
  RunConfig c = preset_config("equilibria");
  c.output_dir = (dir.path / "a").string();
  const RunResult r1 = run_experiment(c);
  REQUIRE(r1.artifacts.size() == 1);
  CHECK(r1.artifacts[0].name == "equilibria.csv");

  const std::string csv = slurp(dir.path / "a" / "equilibria.csv");
  CHECK(csv.find("0.835,") != std::string::npos);
  CHECK(csv.rfind("x_hat,y_hat,x_tilde,y_tilde,theta_tilde,t_linear", 0) == 0);

  // The manifest hash matches the bytes on disk.
  CHECK(r1.artifacts[0].fnv1a64 == hex16(fnv1a64(csv)));
  CHECK(r1.artifacts[0].bytes == csv.size());

  // A second run elsewhere produces byte-identical artifacts and manifest.
  c.output_dir = (dir.path / "b").string();
  run_experiment(c);
  CHECK(slurp(dir.path / "a" / "manifest.json") ==
        slurp(dir.path / "b" / "manifest.json"));
  CHECK(slurp(dir.path / "b" / "equilibria.csv") == csv);
}

TEST_CASE("period-table experiment delegates row-for-row") {
  TestDir dir("period_table");
  RunConfig c = preset_config("period-table");
  c.experiment.levels = {0.001, 0.01, 0.1, 0.3};
  c.output_dir = dir.str();
  run_experiment(c);

  const Model model = make_model(c.model);
  std::ifstream in(dir.path / "period_table.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "v0,t_formula,t_return,x_under,x_bar,y_under,y_bar");
  int rows = 0;
  while (std::getline(in, line)) {
    double v0 = 0, tf = 0, xu = 0;
    const char* s = line.c_str();
    REQUIRE(std::sscanf(s, "%lf,%lf", &v0, &tf) == 2);
    const std::size_t third = line.find(',', line.find(',') + 1);
    CHECK(line.compare(third + 1, 3, "nan") == 0);  // return not requested
    const PeriodResult pr = orbit_period(model, v0);
    // Shortest round-trip formatting reproduces the doubles bit-for-bit.
    CHECK(tf == pr.t_formula);
    const std::size_t fourth = line.find(',', third + 1);
    REQUIRE(std::sscanf(line.c_str() + fourth + 1, "%lf", &xu) == 1);
    CHECK(xu == pr.x_under);
    ++rows;
  }
  CHECK(rows == 4);
  const std::string svg = slurp(dir.path / "period_vs_v.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("period T") != std::string::npos);
}

TEST_CASE("deterministic orbit trajectory closes and plots") {
  TestDir dir("orbit");
  RunConfig c = preset_config("simulate-ode");
  c.model.sigma0 = 0.0;
  const Model model = make_model(c.model);
  const Extent ext = level_extent(model, 0.05);
  c.experiment.x0 = ext.x_bar;
  c.experiment.y0 = model.eq.y_hat;
  c.experiment.t_end = orbit_period(model, 0.05).t_formula;
  c.sde.record_stride = 10;
  c.output_dir = dir.str();
  run_experiment(c);

  std::ifstream in(dir.path / "trajectory.csv");
  std::string line, first_row, last_row;
  std::getline(in, line);
  CHECK(line == "t,x,y,v");
  while (std::getline(in, line)) {
    if (first_row.empty()) first_row = line;
    if (!line.empty()) last_row = line;
  }
  double t0, x0, y0, v0, t1, x1, y1, v1;
  REQUIRE(std::sscanf(first_row.c_str(), "%lf,%lf,%lf,%lf", &t0, &x0, &y0,
                      &v0) == 4);
  REQUIRE(std::sscanf(last_row.c_str(), "%lf,%lf,%lf,%lf", &t1, &x1, &y1,
                      &v1) == 4);
  // One full period brings the state back to the start within a pixel.
  CHECK(std::hypot(x1 - x0, y1 - y0) < 1e-3);
  CHECK(v1 == doctest::Approx(0.05).epsilon(1e-5));

  const std::string svg = slurp(dir.path / "phase_portrait.svg");
  CHECK(svg.find("y = f(x)") != std::string::npos);
  CHECK(svg.find("wage share x") != std::string::npos);
}

TEST_CASE("sde path artifacts carry regions and economic series") {
  TestDir dir("sdepath");
  RunConfig c = preset_config("simulate-sde");
  c.experiment.line_y0 = 0.9;
  c.sde.seed = 7;
  c.sde.t_max = 20;
  c.sde.record_stride = 10;
  c.output_dir = dir.str();
  const RunResult r = run_experiment(c);

  std::vector<std::string> names;
  for (const Artifact& a : r.artifacts) names.push_back(a.name);
  CHECK(names == std::vector<std::string>{"output_vs_time.svg", "path.csv",
                                          "phase_portrait.svg"});

  const Model model = make_model(c.model);
  std::ifstream in(dir.path / "path.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,x,y,rho,region,a,P");
  int rows = 0;
  bool first = true;
  while (std::getline(in, line)) {
    double t, x, y, rho, a, p;
    char region[64] = {0};
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%63[^,],%lf,%lf", &t,
                        &x, &y, &rho, region, &a, &p) == 7);
    CHECK(x > 0);
    CHECK(y > 0);
    CHECK(y < 1);
    CHECK(a > 0);
    CHECK(p > 0);
    CHECK(region_set_to_string(classify_region(x, y, model.eq,
                                               model.curves)) == region);
    if (first) {
      CHECK(t == 0);
      CHECK(rho == 0);
      CHECK(a == 1);  // a0
      first = false;
    }
    ++rows;
  }
  CHECK(rows == 2001);  // 20000 steps, every 10th, plus the start
}

TEST_CASE("render_plots reads artifacts back and fails loudly") {
  TestDir dir("plots");
  RunConfig c = preset_config("simulate-ode");
  c.experiment.x0 = 0.9;
  c.experiment.y0 = 0.95;
  c.experiment.t_end = 1.0;

  // Missing artifact.
  CHECK_THROWS_WITH_AS(render_plots(c, dir.str()),
                       doctest::Contains("missing"), ConfigError);

  // Present but empty of data rows.
  spit(dir.path / "trajectory.csv", "t,x,y,v\n");
  CHECK_THROWS_WITH_AS(render_plots(c, dir.str()),
                       doctest::Contains("no data rows"), ConfigError);

  // Loop-map rendering consumes both artifacts and marks the fixed point.
  RunConfig lm = preset_config("loop-map");
  lm.experiment.y_grid = {0.85, 0.95};
  lm.experiment.n_paths = 10;
  spit(dir.path / "loop_map.csv",
       "y0,mean_yS,se_yS,mean_S,se_S,completion_fraction\n"
       "0.85,0.87,0.002,9.0,0.1,1\n"
       "0.95,0.93,0.002,7.0,0.1,1\n");
  CHECK_THROWS_WITH_AS(render_plots(lm, dir.str()),
                       doctest::Contains("missing"), ConfigError);
  spit(dir.path / "fixed_point.json",
       "{\"y_star\": 0.9, \"ci_lo\": 0.89, \"ci_hi\": 0.91, "
       "\"bracket_lo\": 0.85, \"bracket_hi\": 0.95}\n");
  const std::vector<Artifact> made = render_plots(lm, dir.str());
  REQUIRE(made.size() == 1);
  CHECK(made[0].name == "loop_map.svg");
  const std::string svg = slurp(dir.path / "loop_map.svg");
  CHECK(svg.find("fixed point") != std::string::npos);
  CHECK(svg.find("identity") != std::string::npos);
}

TEST_CASE("zero-noise loop map reports a one-sided diagonal verdict") {
  TestDir dir("loopmap0");
  RunConfig c = preset_config("loop-map");
  c.model.sigma0 = 0.0;
  c.experiment.y_grid = {0.88, 0.92};
  c.experiment.n_paths = 2;
  c.sde.t_max = 60;
  c.output_dir = dir.str();
  run_experiment(c);

  // Each deterministic loop returns to its start line a shade inside the
  // orbit (first-order integration bias), so the map sits below the diagonal
  // and no crossing exists.
  const nlohmann::json fp =
      nlohmann::json::parse(slurp(dir.path / "fixed_point.json"));
  CHECK(fp.value("one_sided", false));

  std::ifstream in(dir.path / "loop_map.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    double y0, ys;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf", &y0, &ys) == 2);
    CHECK(ys == doctest::Approx(y0).epsilon(2e-3));
    CHECK(ys < y0);
  }
}

TEST_CASE("cli runs are byte-identical and errors map to exit codes") {
  TestDir dir("cli");
  const std::string cfg_path = (dir.path / "run.json").string();
  spit(cfg_path, wrap("{\"kind\": \"simulate-sde\", \"line_y0\": 0.9}",
                      "{\"dt\": 0.001, \"seed\": 7, \"t_max\": 20, "
                      "\"record_stride\": 10}"));

  const std::string out_a = (dir.path / "a").string();
  const std::string out_b = (dir.path / "b").string();
  CHECK(run_cli("--config " + cfg_path + " --output " + out_a +
                " >/dev/null") == 0);
  CHECK(run_cli("--config " + cfg_path + " --output " + out_b +
                " >/dev/null") == 0);
  const std::string manifest = slurp(dir.path / "a" / "manifest.json");
  CHECK(manifest == slurp(dir.path / "b" / "manifest.json"));
  for (const auto& entry :
       nlohmann::json::parse(manifest).at("artifacts"))
    CHECK(slurp(dir.path / "a" / entry.at("path").get<std::string>()) ==
          slurp(dir.path / "b" / entry.at("path").get<std::string>()));

  // --no-plots trims the manifest to the data artifacts.
  const std::string out_c = (dir.path / "c").string();
  CHECK(run_cli("--config " + cfg_path + " --output " + out_c +
                " --no-plots >/dev/null") == 0);
  const auto man_c = nlohmann::json::parse(slurp(dir.path / "c" /
                                                 "manifest.json"));
  CHECK(man_c.at("artifacts").size() == 1);

  // The default output directory comes from the environment when neither
  // the flag nor the config provides one.
  const std::string out_env = (dir.path / "env").string();
  CHECK(run_cli("--config " + cfg_path + " >/dev/null",
                "GOODWIN_OUTPUT_DIR=" + out_env + " ") == 0);
  CHECK(fs::exists(dir.path / "env" / "path.csv"));

  // Config error: missing model field, structured stderr, no artifacts.
  const std::string bad_path = (dir.path / "bad.json").string();
  spit(bad_path,
       "{\"model\": {\"alpha\": 0.025, \"gamma\": 0.055, \"phi0\": "
       "-0.040064, \"phi1\": 0.000064, \"sigma0\": 0.1}, "
       "\"experiment\": {\"kind\": \"equilibria\"}}");
  const std::string errfile = (dir.path / "err.txt").string();
  CHECK(run_cli("--config " + bad_path + " --output " + (dir.path / "bad") .string() +
                " 2>" + errfile + " >/dev/null") == 2);
  const nlohmann::json err = nlohmann::json::parse(slurp(errfile));
  CHECK(err.at("error").at("type") == "config");
  CHECK(err.at("error").at("message").get<std::string>().find("nu") !=
        std::string::npos);
  CHECK(!fs::exists(dir.path / "bad"));

  // Assumption error: infeasible growth rate.
  const std::string bad2 = (dir.path / "bad2.json").string();
  spit(bad2,
       "{\"model\": {\"alpha\": -1.0, \"gamma\": 0.055, \"nu\": 3.0, "
       "\"phi0\": -0.040064, \"phi1\": 0.000064, \"sigma0\": 0.1}, "
       "\"experiment\": {\"kind\": \"equilibria\"}}");
  CHECK(run_cli("--config " + bad2 + " --output " + (dir.path / "x").string() +
                " 2>/dev/null >/dev/null") == 3);

  // Numerical error: a halving budget too small for the stiff corner.
  const std::string bad3 = (dir.path / "bad3.json").string();
  spit(bad3, wrap("{\"kind\": \"simulate-sde\", \"x0\": 0.835, "
                  "\"y0\": 0.99999}",
                  "{\"dt\": 0.001, \"t_max\": 5, \"max_halvings\": 1}"));
  CHECK(run_cli("--config " + bad3 + " --output " + (dir.path / "y").string() +
                " 2>/dev/null >/dev/null") == 4);
}
