// Command-line front end: train, evaluate, infer, visualize, gen-data.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <optional>

#include "spotter/checkpoint.hpp"
#include "spotter/config.hpp"
#include "spotter/data.hpp"
#include "spotter/errors.hpp"
#include "spotter/pipeline.hpp"

namespace fs = std::filesystem;
using namespace spotter;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string device;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "run configuration JSON");
  cmd->add_option("--seed", c.seed, "override the run seed");
  cmd->add_option("--device", c.device, "cpu or cuda");
  cmd->add_option("--out", c.out, "output path");
}

config::RunConfig resolve_config(const Common& c) {
  auto cfg = c.config_path.empty() ? config::toy_profile() : config::load(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.device.empty()) cfg.device = c.device;
  cfg.validate();
  return cfg;
}

torch::Device to_device(const std::string& name) {
  if (name.empty() || name == "cpu") return torch::kCPU;
  if (name == "cuda") {
    if (!torch::cuda::is_available()) throw ConfigError("device cuda requested but CUDA is unavailable");
    return torch::kCUDA;
  }
  throw ConfigError("unknown device '" + name + "'");
}

void emit(const nlohmann::json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  const fs::path p(out);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw DataError("cannot write " + out);
  f << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene text spotter: query-based detection coupled to attention recognition"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  Common train_opts, eval_opts, infer_opts, vis_opts, gen_opts;

  auto* train_cmd = app.add_subcommand("train", "train a model; writes checkpoints, logs and metrics to --out");
  add_common(train_cmd, train_opts);
  int iterations = 0;
  train_cmd->add_option("--iterations", iterations, "override optimizer.iterations");

  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint and print a metrics report");
  add_common(eval_cmd, eval_opts);
  std::string eval_ckpt, eval_data;
  std::optional<double> eval_score;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval_data, "dataset JSON (default: the checkpoint's eval split)");
  eval_cmd->add_option("--score-threshold", eval_score, "detection score threshold");

  auto* infer_cmd = app.add_subcommand("infer", "run the spotter on images and emit predictions JSON");
  add_common(infer_cmd, infer_opts);
  std::string infer_ckpt;
  std::vector<std::string> infer_images;
  bool infer_attention = false, infer_nms = false;
  infer_cmd->add_option("--checkpoint", infer_ckpt, "checkpoint file")->required();
  infer_cmd->add_option("images", infer_images, "image paths");
  infer_cmd->add_flag("--attention", infer_attention, "include decoder attention maps");
  infer_cmd->add_flag("--nms", infer_nms, "apply polygon NMS to the detections");

  auto* vis_cmd = app.add_subcommand("visualize", "draw predictions over their images");
  add_common(vis_cmd, vis_opts);
  std::string vis_preds, vis_root;
  vis_cmd->add_option("--predictions", vis_preds, "predictions JSON from infer")->required();
  vis_cmd->add_option("--images-root", vis_root, "directory that relative image paths resolve against");

  auto* gen_cmd = app.add_subcommand("gen-data", "render a synthetic dataset");
  add_common(gen_cmd, gen_opts);
  int gen_count = 20;
  gen_cmd->add_option("--count", gen_count, "number of images")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? int(ExitCode::kOk) : int(ExitCode::kUsage);
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*train_cmd) {
      auto cfg = resolve_config(train_opts);
      if (iterations > 0) cfg.optimizer.iterations = iterations;
      cfg.validate();
      const fs::path out = train_opts.out.empty() ? fs::path("runs") / "latest" : fs::path(train_opts.out);
      auto result = pipeline::train(cfg, out);
      std::cout << result.metrics.dump(2) << "\n";
    } else if (*eval_cmd) {
      auto model = checkpoint::load(eval_ckpt, to_device(eval_opts.device));
      auto cfg = model->config();
      if (!eval_opts.config_path.empty()) cfg.eval = config::load(eval_opts.config_path).eval;
      if (eval_score) cfg.eval.score_threshold = *eval_score;
      const auto samples = eval_data.empty() ? pipeline::eval_split(cfg)
                                             : pipeline::dataset_samples(data::load_dataset(eval_data), cfg);
      emit(pipeline::evaluate_samples(model, samples, cfg.eval, pipeline::lexicon_of(samples)), eval_opts.out);
    } else if (*infer_cmd) {
      auto model = checkpoint::load(infer_ckpt, to_device(infer_opts.device));
      auto eval = model->config().eval;
      if (infer_nms) eval.nms = true;
      std::vector<fs::path> paths(infer_images.begin(), infer_images.end());
      emit(data::predictions_to_json(pipeline::infer(model, paths, eval, infer_attention)), infer_opts.out);
    } else if (*vis_cmd) {
      std::ifstream f(vis_preds);
      if (!f) throw DataError("cannot open " + vis_preds);
      nlohmann::json j;
      try {
        f >> j;
      } catch (const nlohmann::json::exception& e) {
        throw DataError(vis_preds + " is not valid JSON: " + e.what());
      }
      const fs::path out = vis_opts.out.empty() ? fs::path("overlays") : fs::path(vis_opts.out);
      const auto summary = pipeline::visualize(data::predictions_from_json(j), vis_root, out);
      std::cout << "wrote " << summary.overlays << " overlays to " << out.string() << "\n";
    } else if (*gen_cmd) {
      const auto cfg = resolve_config(gen_opts);
      const fs::path out = gen_opts.out.empty() ? fs::path("synthetic") : fs::path(gen_opts.out);
      const auto ds = pipeline::generate_dataset(cfg.data.synthetic, cfg.data.seed_offset + cfg.seed, gen_count, out);
      std::cout << "wrote " << ds.records.size() << " images to " << out.string() << "\n";
    }
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return int(ExitCode::kUsage);
  } catch (const DataError& e) {
    spdlog::error("{}", e.what());
    return int(ExitCode::kData);
  } catch (const NumericFault& e) {
    spdlog::error("{}", e.what());
    return int(ExitCode::kNumeric);
  } catch (const GeometryError& e) {
    spdlog::error("{}", e.what());
    return int(ExitCode::kNumeric);
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return int(ExitCode::kData);
  }
  return int(ExitCode::kOk);
}
