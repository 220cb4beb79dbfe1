#include "semkit/pipeline.hpp"

#include "semkit/image_io.hpp"
#include "semkit/metrics.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

namespace fs = std::filesystem;
using nlohmann::json;

namespace semkit {
namespace {

constexpr const char* kSimulateDir = "simulate";
constexpr const char* kRestoreDir = "restore";
constexpr const char* kEvaluateDir = "evaluate";
constexpr const char* kMetrologyDir = "metrology";

std::string index_name(std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu%s", i, ext);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string(what) + " not found at '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

/// Path relative to the output root when it lives there, else unchanged.
std::string display_path(const fs::path& p, const fs::path& root) {
  const fs::path rel = p.lexically_relative(root);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join_row(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += csv_field(cells[i]);
  }
  return line + "\n";
}

std::uint64_t require_seed(const PipelineConfig& c) {
  if (!c.seed) throw ConfigError("a seed is required for simulation (config \"seed\" or --seed)");
  return *c.seed;
}

struct Pair {
  fs::path image;
  fs::path reference;
};

json load_simulate_manifest(const PipelineConfig& c) {
  return read_json(c.output / kSimulateDir / "manifest.json", "degraded manifest");
}

std::vector<json> eval_entries(const json& manifest) {
  std::vector<json> out;
  for (const json& e : manifest.at("entries")) {
    if (e.at("split").get<std::string>() == "eval") out.push_back(e);
  }
  if (out.empty()) throw ConfigError("the eval split is empty; increase the input count beyond split.train");
  return out;
}

std::vector<fs::path> restored_outputs(const PipelineConfig& c, Method m) {
  const json manifest = read_json(c.output / kRestoreDir / method_name(m) / "manifest.json", "restore manifest");
  std::vector<fs::path> out;
  for (const json& e : manifest.at("entries")) out.push_back(c.output / e.at("output").get<std::string>());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> clean_references(const PipelineConfig& c) {
  std::vector<fs::path> out;
  for (const json& e : eval_entries(load_simulate_manifest(c))) out.push_back(c.output / e.at("clean").get<std::string>());
  std::sort(out.begin(), out.end());
  return out;
}

/// Sorted-index pairing of test images with references.
std::vector<Pair> pair_sets(std::vector<fs::path> images, std::vector<fs::path> refs) {
  if (images.size() != refs.size()) {
    throw DataError("pairing error: " + std::to_string(images.size()) + " images vs " + std::to_string(refs.size()) +
                    " references");
  }
  std::sort(images.begin(), images.end());
  std::sort(refs.begin(), refs.end());
  std::vector<Pair> out;
  for (std::size_t i = 0; i < images.size(); ++i) out.push_back({images[i], refs[i]});
  return out;
}

std::optional<Image> try_load(const fs::path& p, std::string& flag) {
  try {
    return load_image(p);
  } catch (const std::exception& e) {
    flag = "missing";
    return std::nullopt;
  }
}

json method_settings(const RestoreConfig& rc, Method m, const Kernel& k) {
  json s{{"psf", rc.fixed_psf}, {"kernel_size", k.size()}};
  switch (m) {
    case Method::RichardsonLucy:
      s["iterations"] = rc.rl_iterations;
      break;
    case Method::Wiener:
      s["balance"] = rc.wiener_balance;
      break;
    case Method::Variational:
      s["steps"] = rc.variational_steps;
      s["step_size"] = rc.variational_step_size;
      s["weights"] = rc.weights;
      break;
  }
  return s;
}

TileOp make_op(const RestoreConfig& rc, Method m, const Kernel& k) {
  switch (m) {
    case Method::RichardsonLucy:
      return [&rc, &k](const Image& y) { return richardson_lucy(y, k, rc.rl_iterations); };
    case Method::Wiener:
      return [&rc, &k](const Image& y) { return wiener(y, k, rc.wiener_balance); };
    case Method::Variational:
      return [&rc, &k](const Image& y) {
        return variational_restore(y, k, rc.weights, rc.variational_steps, rc.variational_step_size).image;
      };
  }
  throw ConfigError("unknown method");
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::optional<MetrologyReport> measure_file(const fs::path& p, const MetrologyConfig& mc, std::string& flag) {
  const auto img = try_load(p, flag);
  if (!img) return std::nullopt;
  try {
    MetrologyReport r = measure(detect_edges(*img, mc.detect), mc.sigma_multiple);
    psd_summary(r, mc.band);
    return r;
  } catch (const DataError& e) {
    flag = std::string("unmeasurable: ") + e.what();
    return std::nullopt;
  }
}

std::vector<std::string> report_cells(const std::string& label, const std::optional<MetrologyReport>& r,
                                      const MetrologyConfig& mc, const std::string& flag) {
  if (!r) return {label, "", "", "", "", "", flag};
  return {label,
          format_number(r->cd),
          format_number(r->cd_std),
          format_number(r->lwr),
          format_number(r->ler),
          format_number(psd_summary(*r, mc.band)),
          flag};
}

void write_psd_csv(const fs::path& path, const MetrologyReport& r) {
  std::string text = "frequency,power\n";
  for (const PsdPoint& p : r.psd) text += format_number(p.frequency) + "," + format_number(p.power) + "\n";
  write_text(path, text);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "rl") return Method::RichardsonLucy;
  if (name == "wiener") return Method::Wiener;
  if (name == "variational") return Method::Variational;
  throw ConfigError("unknown method '" + name + "' (expected rl, wiener or variational)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::RichardsonLucy: return "rl";
    case Method::Wiener: return "wiener";
    case Method::Variational: return "variational";
  }
  return "?";
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void PipelineConfig::validate() const {
  if (!(crop_fraction >= 0.0 && crop_fraction < 1.0)) throw ConfigError("crop_fraction must lie in [0, 1)");
  if (train_size < 1 || eval_size < 1) throw ConfigError("split sizes must be at least 1");
  if (bit_depth != 8 && bit_depth != 16) throw ConfigError("bit_depth must be 8 or 16");
  if (metrology.sigma_multiple <= 0.0) throw ConfigError("metrology.sigma_multiple must be positive");
  if (!(metrology.band.lo < metrology.band.hi)) throw ConfigError("metrology.psd_band must be increasing");
  try {
    ranges.validate();
    if (fixed) fixed->validate();
    restore.validate();
    tile.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

void to_json(json& j, const PipelineConfig& c) {
  j = json{{"inputs", c.inputs},
           {"crop_fraction", c.crop_fraction},
           {"degrade", {{"mode", c.sample_params ? "sample" : "fixed"}, {"ranges", c.ranges}}},
           {"restore", c.restore},
           {"tile", c.tile},
           {"method", method_name(c.method)},
           {"evaluate", {{"enabled", c.evaluate}, {"losses", c.evaluate_losses}, {"weights", c.losses}}},
           {"restored_set", c.restored_set},
           {"reference_set", c.reference_set},
           {"metrology",
            {{"enabled", c.metrology.enabled},
             {"max_gap", c.metrology.detect.max_gap},
             {"poly_degree", c.metrology.detect.poly_degree},
             {"pixel_size", c.metrology.detect.pixel_size},
             {"min_width", c.metrology.detect.min_width},
             {"min_coverage", c.metrology.detect.min_coverage},
             {"sigma_multiple", c.metrology.sigma_multiple},
             {"psd_band", {c.metrology.band.lo, c.metrology.band.hi}}}},
           {"split", {{"train", c.train_size}, {"eval", c.eval_size}}},
           {"bit_depth", c.bit_depth}};
  if (c.fixed) j["degrade"]["params"] = *c.fixed;
  if (c.seed) j["seed"] = *c.seed;
}

void from_json(const json& j, PipelineConfig& c) {
  static const std::set<std::string> known{"inputs",   "output",       "seed",          "crop_fraction", "degrade",
                                           "restore",  "tile",         "method",        "evaluate",      "restored_set",
                                           "reference_set", "metrology", "split",       "bit_depth"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");
  }
  c.inputs = get_or(j, "inputs", c.inputs);
  if (j.contains("output")) c.output = j.at("output").get<std::string>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  c.crop_fraction = get_or(j, "crop_fraction", c.crop_fraction);
  if (j.contains("degrade")) {
    const json& d = j.at("degrade");
    const std::string mode = get_or<std::string>(d, "mode", "sample");
    if (mode != "sample" && mode != "fixed") throw ConfigError("degrade.mode must be 'sample' or 'fixed'");
    c.sample_params = mode == "sample";
    if (d.contains("ranges")) d.at("ranges").get_to(c.ranges);
    if (d.contains("params")) c.fixed = d.at("params").get<DegradeParams>();
  }
  if (j.contains("restore")) j.at("restore").get_to(c.restore);
  if (j.contains("tile")) j.at("tile").get_to(c.tile);
  if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
  if (j.contains("evaluate")) {
    const json& e = j.at("evaluate");
    c.evaluate = get_or(e, "enabled", c.evaluate);
    c.evaluate_losses = get_or(e, "losses", c.evaluate_losses);
    if (e.contains("weights")) e.at("weights").get_to(c.losses);
  }
  c.restored_set = get_or(j, "restored_set", c.restored_set);
  c.reference_set = get_or(j, "reference_set", c.reference_set);
  if (j.contains("metrology")) {
    const json& m = j.at("metrology");
    MetrologyConfig& mc = c.metrology;
    mc.enabled = get_or(m, "enabled", mc.enabled);
    mc.detect.max_gap = get_or(m, "max_gap", mc.detect.max_gap);
    mc.detect.poly_degree = get_or(m, "poly_degree", mc.detect.poly_degree);
    mc.detect.pixel_size = get_or(m, "pixel_size", mc.detect.pixel_size);
    mc.detect.min_width = get_or(m, "min_width", mc.detect.min_width);
    mc.detect.min_coverage = get_or(m, "min_coverage", mc.detect.min_coverage);
    mc.sigma_multiple = get_or(m, "sigma_multiple", mc.sigma_multiple);
    if (m.contains("psd_band")) {
      const auto band = m.at("psd_band").get<std::vector<double>>();
      if (band.size() != 2) throw ConfigError("metrology.psd_band must be [lo, hi]");
      mc.band = {band[0], band[1]};
    }
  }
  if (j.contains("split")) {
    c.train_size = get_or(j.at("split"), "train", c.train_size);
    c.eval_size = get_or(j.at("split"), "eval", c.eval_size);
  }
  c.bit_depth = get_or(j, "bit_depth", c.bit_depth);
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  try {
    j.get_to(c);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const FormatError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& patterns) {
  std::set<fs::path> found;
  for (const std::string& pattern : patterns) {
    const fs::path p(pattern);
    const std::string name = p.filename().string();
    if (name.find_first_of("*?[") != std::string::npos) {
      const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
      if (!fs::is_directory(dir)) continue;
      for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && fnmatch(name.c_str(), entry.path().filename().c_str(), 0) == 0) {
          found.insert(entry.path());
        }
      }
    } else if (fs::is_directory(p)) {
      for (const auto& entry : fs::directory_iterator(p)) {
        const std::string ext = entry.path().extension().string();
        if (entry.is_regular_file() && (ext == ".png" || ext == ".tif" || ext == ".tiff")) found.insert(entry.path());
      }
    } else if (fs::exists(p)) {
      found.insert(p);
    } else {
      throw ConfigError("input '" + pattern + "' does not exist");
    }
  }
  return {found.begin(), found.end()};
}

json run_simulate(const PipelineConfig& c) {
  const std::uint64_t seed = require_seed(c);
  const auto inputs = expand_inputs(c.inputs);
  if (inputs.empty()) throw ConfigError("empty input set");
  if (inputs.size() > static_cast<std::size_t>(c.train_size + c.eval_size)) {
    throw ConfigError("more inputs (" + std::to_string(inputs.size()) + ") than split.train + split.eval");
  }
  const fs::path root = c.output / kSimulateDir;
  json entries = json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Image clean = bottom_crop(load_image(inputs[i]), c.crop_fraction);
    const DegradeParams params =
        c.sample_params ? sample_params(c.ranges, Seed{seed, i, "params"}) : c.fixed.value_or(midpoint_params(c.ranges));
    const Kernel kernel = build_kernel(params.psf);
    if (kernel.size() >= 2 * std::min(clean.rows(), clean.cols())) {
      throw DataError("image '" + inputs[i].string() + "' is too small for a " + std::to_string(kernel.size()) +
                      "-pixel kernel");
    }
    const Image degraded = apply_forward_model(clean, kernel, params, Seed{seed, i, "forward"});

    const std::string clean_rel = std::string(kSimulateDir) + "/clean/" + index_name(i, ".png");
    const std::string degraded_rel = std::string(kSimulateDir) + "/degraded/" + index_name(i, ".png");
    const std::string sidecar_rel = std::string(kSimulateDir) + "/degraded/" + index_name(i, ".json");
    fs::create_directories(root / "clean");
    fs::create_directories(root / "degraded");
    save_image(clean, c.output / clean_rel, c.bit_depth);
    save_image(degraded, c.output / degraded_rel, c.bit_depth);

    const json entry{{"index", i},
                     {"split", i < static_cast<std::size_t>(c.train_size) ? "train" : "eval"},
                     {"source", inputs[i].generic_string()},
                     {"clean", clean_rel},
                     {"degraded", degraded_rel},
                     {"sidecar", sidecar_rel},
                     {"params", params}};
    json sidecar = entry;
    sidecar["seed"] = {{"seed", seed}, {"index", i}};
    sidecar["crop_fraction"] = c.crop_fraction;
    sidecar["kernel_size"] = kernel.size();
    sidecar["bit_depth"] = c.bit_depth;
    sidecar["noise"] = "poisson-gaussian";
    write_json(c.output / sidecar_rel, sidecar);
    entries.push_back(entry);
  }
  const json manifest{{"stage", "simulate"}, {"seed", seed}, {"count", inputs.size()}, {"entries", entries}};
  write_json(root / "manifest.json", manifest);
  return manifest;
}

json run_restore(const PipelineConfig& c, Method m) {
  const auto entries = eval_entries(load_simulate_manifest(c));
  const Kernel kernel = build_kernel(c.restore.fixed_psf);
  const TileOp op = make_op(c.restore, m, kernel);
  const json settings = method_settings(c.restore, m, kernel);
  const std::string fingerprint = hex64(fnv1a64(settings.dump() + json(c.tile).dump()));
  const std::string dir = std::string(kRestoreDir) + "/" + method_name(m);

  json out_entries = json::array();
  for (const json& e : entries) {
    const std::size_t i = e.at("index").get<std::size_t>();
    const Image y = load_image(c.output / e.at("degraded").get<std::string>());
    const bool tiled = y.rows() > c.tile.tile || y.cols() > c.tile.tile;
    const Image x = tiled ? tiled_apply(y, c.tile, op) : op(y);
    if (!x.allFinite()) throw NumericError("restoration of image " + std::to_string(i) + " produced non-finite values");

    const std::string out_rel = dir + "/" + index_name(i, ".png");
    fs::create_directories(c.output / dir);
    save_image(x, c.output / out_rel, c.bit_depth);
    const json entry{{"index", i}, {"source", e.at("degraded")}, {"output", out_rel}};
    json sidecar = entry;
    sidecar["method"] = method_name(m);
    sidecar["settings"] = settings;
    sidecar["tile"] = c.tile;
    sidecar["tiled"] = tiled;
    sidecar["fingerprint"] = fingerprint;
    write_json(c.output / dir / index_name(i, ".json"), sidecar);
    out_entries.push_back(entry);
  }
  const json manifest{{"stage", "restore"},
                      {"method", method_name(m)},
                      {"settings", settings},
                      {"fingerprint", fingerprint},
                      {"entries", out_entries}};
  write_json(c.output / dir / "manifest.json", manifest);
  return manifest;
}

json run_evaluate(const PipelineConfig& c, Method m) {
  const bool custom = !c.restored_set.empty();
  const auto pairs = custom ? pair_sets(expand_inputs(c.restored_set), expand_inputs(c.reference_set))
                            : pair_sets(restored_outputs(c, m), clean_references(c));

  std::vector<std::string> header{"index", "image", "reference", "psnr", "ssim"};
  if (c.evaluate_losses) header.insert(header.end(), {"charbonnier", "edge", "tv", "total"});
  header.push_back("flags");
  std::string csv = join_row(header);

  const std::size_t cols = header.size() - 4;
  std::vector<std::vector<double>> columns(cols);
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::string flag;
    auto x = try_load(pairs[i].image, flag);
    auto ref = x ? try_load(pairs[i].reference, flag) : std::nullopt;
    if (x && ref && (x->rows() != ref->rows() || x->cols() != ref->cols())) flag = "shape mismatch";
    std::vector<std::string> row{std::to_string(i), display_path(pairs[i].image, c.output),
                                 display_path(pairs[i].reference, c.output)};
    if (!flag.empty()) {
      ++flagged;
      row.resize(row.size() + cols, "");
    } else {
      std::vector<double> vals{psnr(*x, *ref), ssim(*x, *ref)};
      if (c.evaluate_losses) {
        vals.push_back(charbonnier(*x, *ref, c.losses.epsilon).value);
        vals.push_back(edge_loss(*x, *ref).value);
        vals.push_back(tv_loss(*x).value);
        vals.push_back(total_restoration_loss(*x, *ref, c.losses).value);
      }
      for (std::size_t k = 0; k < cols; ++k) {
        columns[k].push_back(vals[k]);
        row.push_back(format_number(vals[k]));
      }
    }
    row.push_back(flag);
    csv += join_row(row);
  }

  std::vector<std::string> summary{"mean", "", ""};
  json means = json::object();
  for (std::size_t k = 0; k < cols; ++k) {
    const double mu = mean_of(columns[k]);
    summary.push_back(format_number(mu));
    means[header[3 + k]] = format_number(mu);
  }
  summary.push_back(flagged ? std::to_string(flagged) + " flagged" : "");
  csv += join_row(summary);

  const std::string label = custom ? "custom" : method_name(m);
  write_text(c.output / kEvaluateDir / (label + ".csv"), csv);
  const json report{{"stage", "evaluate"}, {"label", label}, {"pairs", pairs.size()}, {"flagged", flagged}, {"mean", means}};
  write_json(c.output / kEvaluateDir / (label + ".json"), report);
  return report;
}

json run_metrology(const PipelineConfig& c, Method m) {
  const bool custom = !c.restored_set.empty();
  std::vector<fs::path> images = custom ? expand_inputs(c.restored_set) : restored_outputs(c, m);
  std::vector<fs::path> refs = custom ? expand_inputs(c.reference_set) : clean_references(c);
  const std::string label = custom ? "custom" : method_name(m);
  const fs::path root = c.output / kMetrologyDir;
  const MetrologyConfig& mc = c.metrology;

  const std::vector<std::string> header{"image", "cd", "cd_std", "lwr", "ler", "psd_summary", "flags"};
  auto run_set = [&](const std::vector<fs::path>& files, const std::string& name) {
    std::vector<std::optional<MetrologyReport>> reports;
    std::string csv = join_row(header);
    for (std::size_t i = 0; i < files.size(); ++i) {
      std::string flag;
      reports.push_back(measure_file(files[i], mc, flag));
      csv += join_row(report_cells(display_path(files[i], c.output), reports.back(), mc, flag));
      if (reports.back()) write_psd_csv(root / (name + "_psd") / index_name(i, ".csv"), *reports.back());
    }
    write_text(root / (name + ".csv"), csv);
    return reports;
  };

  std::sort(images.begin(), images.end());
  const auto reports = run_set(images, label);
  json summary{{"stage", "metrology"}, {"label", label}, {"images", images.size()}};
  summary["unmeasurable"] = std::count(reports.begin(), reports.end(), std::nullopt);
  if (refs.empty()) {
    write_json(root / (label + ".json"), summary);
    return summary;
  }

  const auto pairs = pair_sets(images, refs);
  std::sort(refs.begin(), refs.end());
  const auto ref_reports = run_set(refs, label + "_reference");

  std::vector<std::optional<MetricErrors>> errors;
  std::string csv = join_row({"index", "image", "reference", "cd", "cd_std", "lwr", "ler", "psd", "flags"});
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::vector<std::string> row{std::to_string(i), display_path(pairs[i].image, c.output),
                                 display_path(pairs[i].reference, c.output)};
    if (reports[i] && ref_reports[i]) {
      const MetricErrors e = compare_reports(*reports[i], *ref_reports[i], mc.band);
      errors.push_back(e);
      for (double v : {e.cd, e.cd_std, e.lwr, e.ler, e.psd}) row.push_back(format_number(v));
      row.push_back("");
    } else {
      errors.push_back(std::nullopt);
      row.insert(row.end(), {"", "", "", "", "", reports[i] ? "reference unmeasurable" : "unmeasurable"});
    }
    csv += join_row(row);
  }
  const ErrorAggregate agg = aggregate_errors(errors);
  csv += join_row({"CD(MAE)", "", "", format_number(agg.cd_mae), "", "", "", "", ""});
  csv += join_row({"Avg(MAE)", "", "", format_number(agg.avg_mae), "", "", "", "", ""});
  write_text(root / (label + "_errors.csv"), csv);

  summary["cd_mae"] = format_number(agg.cd_mae);
  summary["avg_mae"] = format_number(agg.avg_mae);
  summary["compared"] = agg.measured;
  summary["excluded"] = agg.unmeasurable;
  write_json(root / (label + ".json"), summary);
  return summary;
}

json run_benchmark(const PipelineConfig& c, Method m) {
  json cfg = c;
  cfg["method"] = method_name(m);
  write_json(c.output / "config.json", cfg);
  json out{{"simulate", run_simulate(c)["count"]}};
  out["restore"] = run_restore(c, m)["fingerprint"];
  if (c.evaluate) out["evaluate"] = run_evaluate(c, m);
  if (c.metrology.enabled) out["metrology"] = run_metrology(c, m);
  write_json(c.output / "benchmark.json", out);
  return out;
}

}  // namespace semkit
