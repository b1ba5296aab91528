// Command-line front end: run one configured experiment and leave CSV/JSON
// artifacts, SVG plots, and a content-hash manifest in the output directory.
// Exit codes: 0 success, 2 config error, 3 assumption failure, 4 numerical
// failure; every failure is also emitted as a JSON object on stderr.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "goodwin/errors.hpp"
#include "goodwin/io.hpp"

namespace {

int fail(const char* type, const std::exception& e, goodwin::ExitCode code) {
  nlohmann::ordered_json err;
  err["error"]["type"] = type;
  err["error"]["message"] = e.what();
  std::fprintf(stderr, "%s\n", err.dump().c_str());
  return static_cast<int>(code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Goodwin growth-cycle toolkit: deterministic orbits and periods, "
      "noise-driven paths, loop statistics, and level-exit bounds"};
  std::string config_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  bool no_plots = false;
  app.add_option("--config", config_path, "JSON run configuration file")
      ->required();
  auto* out_opt = app.add_option(
      "--output", output_dir,
      "output directory (overrides the config and $GOODWIN_OUTPUT_DIR)");
  auto* seed_opt = app.add_option("--seed", seed, "override sde.seed");
  auto* thr_opt =
      app.add_option("--threads", threads, "worker threads (0 = hardware)");
  app.add_flag("--no-plots", no_plots, "skip SVG rendering");
  CLI11_PARSE(app, argc, argv);

  try {
    goodwin::RunConfig cfg = goodwin::load_config(config_path);
    if (out_opt->count() > 0) cfg.output_dir = output_dir;
    if (cfg.output_dir.empty())
      if (const char* env = std::getenv("GOODWIN_OUTPUT_DIR"))
        cfg.output_dir = env;
    if (seed_opt->count() > 0) cfg.sde.seed = seed;
    if (thr_opt->count() > 0) cfg.threads = threads;
    cfg.plots = !no_plots;

    const goodwin::RunResult result = goodwin::run_experiment(cfg);
    for (const goodwin::Artifact& a : result.artifacts)
      std::printf("%s  %10llu B  %s\n", a.fnv1a64.c_str(),
                  static_cast<unsigned long long>(a.bytes), a.name.c_str());
    std::printf("manifest: %s\n", result.manifest_path.c_str());
    return static_cast<int>(goodwin::ExitCode::ok);
  } catch (const goodwin::ConfigError& e) {
    return fail("config", e, goodwin::ExitCode::config_error);
  } catch (const goodwin::AssumptionError& e) {
    return fail("assumption", e, goodwin::ExitCode::assumption_error);
  } catch (const goodwin::NumericalError& e) {
    return fail("numerical", e, goodwin::ExitCode::numerical_error);
  } catch (const std::exception& e) {
    return fail("internal", e, goodwin::ExitCode::numerical_error);
  }
}
