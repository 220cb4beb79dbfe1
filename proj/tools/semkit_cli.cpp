// semkit: simulate, restore, evaluate and measure SEM image sets.

#include "semkit/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumeric = 4 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SEM defocus simulation, restoration baselines and line metrology"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string method;
  std::string out_dir;
  app.add_option("--config", config_path, "Pipeline config (JSON)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Overrides the config seed");
  app.add_option("--method", method, "Restoration method")->check(CLI::IsMember({"rl", "wiener", "variational"}));
  app.add_option("--out", out_dir, "Output directory (overrides config)");

  auto* simulate = app.add_subcommand("simulate", "Crop and degrade clean inputs");
  auto* restore = app.add_subcommand("restore", "Restore the degraded eval split");
  auto* evaluate = app.add_subcommand("evaluate", "PSNR/SSIM (and optional losses) against references");
  auto* metrology = app.add_subcommand("metrology", "CD/LWR/LER/PSD reports and error summary");
  auto* benchmark = app.add_subcommand("benchmark", "simulate, restore, evaluate and metrology in one run");
  for (auto* sub : {simulate, restore, evaluate, metrology, benchmark}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    semkit::PipelineConfig cfg = config_path.empty() ? semkit::PipelineConfig{} : semkit::load_config(config_path);
    if (*seed_opt) cfg.seed = seed;
    if (!out_dir.empty()) cfg.output = out_dir;
    const semkit::Method m = method.empty() ? cfg.method : semkit::parse_method(method);

    nlohmann::json result;
    if (*simulate) result = semkit::run_simulate(cfg);
    if (*restore) result = semkit::run_restore(cfg, m);
    if (*evaluate) result = semkit::run_evaluate(cfg, m);
    if (*metrology) result = semkit::run_metrology(cfg, m);
    if (*benchmark) result = semkit::run_benchmark(cfg, m);
    if (result.contains("entries")) result.erase("entries");
    std::cout << result.dump(2) << "\n";
    return kOk;
  } catch (const semkit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const semkit::ArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const semkit::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
}
