#pragma once

#include "semkit/degrade.hpp"
#include "semkit/losses.hpp"
#include "semkit/metrology.hpp"
#include "semkit/restore.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace semkit {

enum class Method { RichardsonLucy, Wiener, Variational };

/// "rl", "wiener" or "variational"; anything else is a ConfigError.
Method parse_method(const std::string& name);
std::string method_name(Method m);

struct MetrologyConfig {
  bool enabled = true;
  DetectOptions detect;
  double sigma_multiple = 3.0;
  PsdBand band;
};

struct PipelineConfig {
  // Clean inputs: files, directories or filename globs (`*`, `?` in the last component).
  std::vector<std::string> inputs;
  std::filesystem::path output = "out";
  std::optional<std::uint64_t> seed;
  double crop_fraction = 0.0667;

  // Degradation: sample from `ranges`, or use `fixed` (midpoints when absent).
  bool sample_params = true;
  ParamRanges ranges;
  std::optional<DegradeParams> fixed;

  RestoreConfig restore;
  TileSpec tile;
  Method method = Method::RichardsonLucy;

  bool evaluate = true;
  bool evaluate_losses = false;
  LossWeights losses;
  // Optional explicit sets for evaluate/metrology; default to the pipeline's own outputs.
  std::vector<std::string> restored_set;
  std::vector<std::string> reference_set;

  MetrologyConfig metrology;

  int train_size = 10;
  int eval_size = 100;
  int bit_depth = 16;

  void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

/// Parses and validates; any schema or range problem becomes a ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json(const nlohmann::json& j);

/// Expands files, directories and globs; result is sorted and de-duplicated.
std::vector<std::filesystem::path> expand_inputs(const std::vector<std::string>& patterns);

/// Each stage writes under `config.output` and returns the manifest or summary it wrote.
nlohmann::json run_simulate(const PipelineConfig& config);
nlohmann::json run_restore(const PipelineConfig& config, Method method);
nlohmann::json run_evaluate(const PipelineConfig& config, Method method);
nlohmann::json run_metrology(const PipelineConfig& config, Method method);
nlohmann::json run_benchmark(const PipelineConfig& config, Method method);

/// Shortest round-trip text for CSV cells; ±inf and nan are spelled out.
std::string format_number(double v);

}  // namespace semkit
