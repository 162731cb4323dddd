#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ablation.hpp"
#include "batdiff/checkpoint.hpp"
#include "batdiff/error.hpp"
#include "batdiff/hash.hpp"
#include "batdiff/image_io.hpp"
#include "batdiff/metrics.hpp"
#include "batdiff/pipeline.hpp"
#include "batdiff/random.hpp"
#include "batdiff/synthetic.hpp"
#include "batdiff/wavelet.hpp"

#ifndef BATDIFF_VERSION
#define BATDIFF_VERSION "unknown"
#endif
#ifndef BATDIFF_GIT_HASH
#define BATDIFF_GIT_HASH "unknown"
#endif

namespace batdiff::cli {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json manifest_base(const std::string& command, const RunConfig& cfg) {
  json m;
  m["command"] = command;
  m["version"] = BATDIFF_VERSION;
  m["git_hash"] = BATDIFF_GIT_HASH;
  m["seed"] = cfg.sampler.seed;
  m["config"] = to_json(cfg);
  return m;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return hex64(fnv1a64(bytes));
}

std::string manifest_path(const RunConfig& cfg) {
  return cfg.manifest.empty() ? cfg.output + ".json" : cfg.manifest;
}

/// The observation: the LR input, or the reference degraded by the model.
Image observation(const RunConfig& cfg) {
  if (!cfg.input.empty()) return load_input(cfg.input);
  require(cfg.reference, "input");
  const Image gt = load_input(cfg.reference);
  if (cfg.degradation.noise_sigma > 0.0) {
    std::mt19937_64 rng = make_stream(cfg.sampler.seed, RandomStream::kNoiseSynthesis);
    return degrade(gt, cfg.degradation, true, &rng);
  }
  return degrade(gt, cfg.degradation);
}

bool is_image_file(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

std::vector<std::pair<fs::path, fs::path>> evaluation_pairs(const std::string& estimate,
                                                            const std::string& reference) {
  std::vector<std::pair<fs::path, fs::path>> pairs;
  if (!fs::is_directory(estimate)) {
    pairs.emplace_back(estimate, reference);
    return pairs;
  }
  if (!fs::is_directory(reference)) {
    throw ArgumentError("'input' is a directory, so 'reference' must be one too");
  }
  std::map<std::string, fs::path> refs;
  for (const auto& e : fs::directory_iterator(reference)) {
    if (e.is_regular_file() && is_image_file(e.path())) refs[e.path().stem().string()] = e.path();
  }
  std::vector<fs::path> estimates;
  for (const auto& e : fs::directory_iterator(estimate)) {
    if (e.is_regular_file() && is_image_file(e.path())) estimates.push_back(e.path());
  }
  std::sort(estimates.begin(), estimates.end());
  for (const auto& p : estimates) {
    auto it = refs.find(p.stem().string());
    if (it == refs.end()) throw ArgumentError("no reference image for " + p.string());
    pairs.emplace_back(p, it->second);
  }
  if (pairs.empty()) throw ArgumentError("no images found in " + estimate);
  return pairs;
}

}  // namespace

Image load_input(const std::string& spec) {
  const std::string prefix = "synthetic:";
  if (spec.rfind(prefix, 0) == 0) {
    const std::string size = spec.substr(prefix.size());
    int n = 0;
    try {
      std::size_t used = 0;
      n = std::stoi(size, &used);
      if (used != size.size()) n = 0;
    } catch (const std::exception&) {
      n = 0;
    }
    if (n < 2) throw ArgumentError("bad synthetic image spec '" + spec + "'");
    return checkerboard_stripes(n);
  }
  return load_image(spec);
}

int thread_count() {
  const char* env = std::getenv("BATDIFF_THREADS");
  if (env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1 || n > 4096) {
      throw ArgumentError(std::string("BATDIFF_THREADS must be a positive integer, got '") + env +
                          "'");
    }
    return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_train(const RunConfig& cfg, std::ostream& log) {
  require(cfg.input, "input");
  require(cfg.output, "output");
  cfg.degradation.validate();
  cfg.train.validate();
  cfg.sampler.validate();
  const Image y = load_input(cfg.input);

  json manifest = manifest_base("train", cfg);
  auto progress = [&](const LossPoint& p) {
    log << "iter " << p.iteration << " loss " << format_metric(p.loss) << "\n";
  };
  auto curve_json = [](const std::vector<LossPoint>& curve) {
    json c = json::array();
    for (const auto& p : curve) c.push_back({p.iteration, p.loss});
    return c;
  };

  try {
    const TrainResult result = train(y, cfg.degradation, cfg.train, cfg.sampler, progress);
    save_checkpoint(result.bank, cfg.output);
    manifest["iterations"] = cfg.train.iterations;
    manifest["loss_curve"] = curve_json(result.loss_curve);
    manifest["checkpoint"] = cfg.output;
    manifest["checkpoint_hash"] = file_hash(cfg.output);
    write_json(manifest_path(cfg), manifest);
    return kExitOk;
  } catch (const TrainingAborted& e) {
    save_checkpoint(e.last_good(), cfg.output);
    manifest["aborted_at"] = e.iteration();
    manifest["error"] = e.what();
    manifest["checkpoint"] = cfg.output;
    manifest["checkpoint_hash"] = file_hash(cfg.output);
    write_json(manifest_path(cfg), manifest);
    throw;
  }
}

int cmd_infer(const RunConfig& cfg, std::ostream& log) {
  require(cfg.input, "input");
  require(cfg.checkpoint, "checkpoint");
  require(cfg.output, "output");
  cfg.degradation.validate();
  cfg.sampler.validate();
  const Image y = load_input(cfg.input);
  const DenoiserBank bank = load_checkpoint(cfg.checkpoint);
  const SampleResult result = sample(y, bank, cfg.sampler, cfg.degradation);
  save_image(result.hr, cfg.output);

  json manifest = manifest_base("infer", cfg);
  manifest["output_hash"] = hex64(image_hash(quantize8(result.hr)));
  manifest["initial_lr_residual"] = result.initial_residual;
  manifest["final_lr_residual"] = result.lr_residuals.empty() ? 0.0 : result.lr_residuals.back();

  if (!cfg.trace.empty()) write_text(cfg.trace, format_trace(result.trace));
  if (!cfg.dump_subbands.empty()) {
    dump_subbands(atrous_decompose(result.hr, std::max(1, cfg.sampler.levels)),
                  cfg.dump_subbands);
  }
  if (!cfg.reference.empty()) {
    const Image gt = load_input(cfg.reference);
    const MetricReport r = evaluate(quantize8(result.hr), gt, cfg.metrics);
    std::ostringstream row;
    write_metrics_header(row);
    write_metrics_row(row, fs::path(cfg.output).filename().string(), r);
    if (cfg.metrics_csv.empty()) {
      log << row.str();
    } else {
      write_text(cfg.metrics_csv, row.str());
    }
    manifest["psnr"] = format_metric(r.psnr);
    manifest["ssim"] = format_metric(r.ssim);
  }
  write_json(manifest_path(cfg), manifest);
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require(cfg.input, "input");
  require(cfg.reference, "reference");
  std::ostringstream csv;
  write_metrics_header(csv);
  for (const auto& [est, ref] : evaluation_pairs(cfg.input, cfg.reference)) {
    const MetricReport r = evaluate(load_input(est.string()), load_input(ref.string()), cfg.metrics);
    write_metrics_row(csv, est.filename().string(), r);
  }
  if (cfg.output.empty()) {
    out << csv.str();
  } else {
    write_text(cfg.output, csv.str());
  }
  if (!cfg.manifest.empty()) write_json(cfg.manifest, manifest_base("eval", cfg));
  return kExitOk;
}

int cmd_ablate(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  require(cfg.suite, "suite");
  require(cfg.reference, "reference");
  cfg.degradation.validate();
  const std::vector<AblationCell> cells = suite_cells(cfg.suite, cfg.sampler, cfg.train);
  const Image gt = load_input(cfg.reference);
  const Image y = observation(cfg);
  const int threads = thread_count();
  log << "ablate " << cfg.suite << ": " << cells.size() << " cells x " << cfg.ablate_seeds
      << " seeds on " << threads << " threads\n";
  const std::vector<AblationRow> rows =
      run_ablation(cells, y, gt, cfg.degradation, cfg.metrics, cfg.ablate_seeds, threads);
  std::ostringstream csv;
  write_ablation_csv(csv, cfg.suite, rows);
  if (cfg.output.empty()) {
    out << csv.str();
  } else {
    write_text(cfg.output, csv.str());
    write_json(manifest_path(cfg), manifest_base("ablate", cfg));
  }
  return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"batdiff: single-image super-resolution with a trous wavelet diffusion"};
  app.set_version_flag("--version", std::string(BATDIFF_VERSION) + " (" + BATDIFF_GIT_HASH + ")");
  app.require_subcommand(1);

  struct Flag {
    const char* name;
    const char* key;
    const char* help;
  };
  static const Flag value_flags[] = {
      {"--input", "input", "LR image (or estimate directory for eval)"},
      {"--output", "output", "output path"},
      {"--checkpoint", "checkpoint", "checkpoint to read"},
      {"--reference", "reference", "ground-truth HR image or directory"},
      {"--manifest", "manifest", "run manifest path"},
      {"--trace", "trace", "trajectory hash manifest path"},
      {"--dump-subbands", "dump_subbands", "directory for subband PNGs"},
      {"--metrics-csv", "metrics_csv", "metrics CSV path"},
      {"--suite", "suite", "ablation suite"},
      {"--seeds", "ablate_seeds", "seeds per ablation cell"},
      {"--seed", "seed", "random seed"},
      {"--iterations", "iterations", "training iterations"},
      {"--scale", "scale_factor", "magnification factor"},
      {"--levels", "levels", "a trous levels S"},
      {"--timesteps", "timesteps", "diffusion steps T"},
      {"--parent-mode", "parent_mode", "time-aligned, misaligned, coarse-final or none"},
      {"--crop-border", "crop_border", "pixels cropped before metrics"},
  };
  static const Flag bool_flags[] = {
      {"--d-train-only", "d_train_only", "apply the detail gain to training targets only"},
      {"--y-channel", "y_channel", "evaluate on BT.601 luma"},
  };

  struct Parsed {
    std::string config;
    std::string from_manifest;
    std::vector<std::string> overrides;
    std::map<std::string, std::string> values;
    std::map<std::string, bool> bools;
  };
  auto parsed = std::make_shared<Parsed>();

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"train", "train a denoiser on one LR image"},
      {"infer", "super-resolve an LR image with a trained checkpoint"},
      {"eval", "PSNR/SSIM of estimates against references"},
      {"ablate", "run an ablation grid"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", parsed->config, "key = value config file");
    sub->add_option("--from-manifest", parsed->from_manifest,
                    "reuse the resolved config recorded in a run manifest");
    sub->add_option("--set", parsed->overrides, "override any key: --set key=value");
    for (const Flag& f : value_flags) sub->add_option(f.name, parsed->values[f.key], f.help);
    for (const Flag& f : bool_flags) sub->add_flag(f.name, parsed->bools[f.key], f.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg;
    if (!parsed->from_manifest.empty()) apply_settings(cfg, settings_from_manifest(parsed->from_manifest));
    if (!parsed->config.empty()) apply_settings(cfg, read_settings(parsed->config));
    for (const auto& o : parsed->overrides) apply_setting(cfg, parse_override(o));
    CLI::App* sub = app.get_subcommand(command);
    for (const Flag& f : value_flags) {
      if (sub->count(f.name)) apply_setting(cfg, Setting{f.key, parsed->values[f.key], f.name});
    }
    for (const Flag& f : bool_flags) {
      if (sub->count(f.name)) apply_setting(cfg, Setting{f.key, "true", f.name});
    }

    if (command == "train") return cmd_train(cfg, err);
    if (command == "infer") return cmd_infer(cfg, err);
    if (command == "eval") return cmd_eval(cfg, out, err);
    return cmd_ablate(cfg, out, err);
  } catch (const NumericError& e) {
    err << "batdiff " << command << ": numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "batdiff " << command << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "batdiff " << command << ": " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace batdiff::cli
