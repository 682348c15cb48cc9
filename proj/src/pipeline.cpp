#include "spotter/pipeline.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "spotter/checkpoint.hpp"
#include "spotter/errors.hpp"
#include "spotter/metrics.hpp"
#include "spotter/synthetic.hpp"

namespace spotter::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Held-out synthetic seeds start this far past the training seeds.
constexpr std::uint64_t kEvalSeedGap = 1'000'000;
constexpr std::uint64_t kBasisSeedGap = 2'000'000;

torch::Device device_of(const config::RunConfig& cfg) {
  if (cfg.device == "cuda") {
    if (!torch::cuda::is_available()) throw ConfigError("device cuda requested but CUDA is unavailable");
    return torch::kCUDA;
  }
  return torch::kCPU;
}

torch::Tensor batch_images(const std::vector<const Sample*>& batch, torch::Device device) {
  std::vector<torch::Tensor> imgs;
  for (const auto* s : batch) imgs.push_back(model::image_to_tensor(s->image));
  return torch::stack(imgs).to(device);
}

geometry::Polygon scale_polygon(const geometry::Polygon& p, double sx, double sy) {
  geometry::Polygon out;
  for (const auto& v : p.vertices) out.vertices.push_back({v.x * sx, v.y * sy});
  return out;
}

cv::Scalar palette(std::size_t i) {
  // Golden-angle hue walk: stable and well separated for small indices.
  const double hue = std::fmod(double(i) * 137.508, 360.0);
  cv::Mat hsv(1, 1, CV_8UC3, cv::Scalar(hue / 2.0, 200, 255)), bgr;
  cv::cvtColor(hsv, bgr, cv::COLOR_HSV2BGR);
  const auto c = bgr.at<cv::Vec3b>(0, 0);
  return {double(c[0]), double(c[1]), double(c[2])};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace

Sample make_sample(std::string name, const cv::Mat& image, std::vector<data::TextInstance> instances,
                   const config::RunConfig& cfg) {
  Sample s;
  s.name = std::move(name);
  const int w = cfg.data.input_width;
  const int h = cfg.data.input_height;
  s.scale_x = double(image.cols) / w;
  s.scale_y = double(image.rows) / h;
  cv::Mat bgr = image;
  if (image.channels() == 1) cv::cvtColor(image, bgr, cv::COLOR_GRAY2BGR);
  if (image.channels() == 4) cv::cvtColor(image, bgr, cv::COLOR_BGRA2BGR);
  if (bgr.cols != w || bgr.rows != h) {
    cv::resize(bgr, s.image, cv::Size(w, h), 0, 0, cv::INTER_AREA);
  } else {
    s.image = bgr.clone();
  }
  for (auto& inst : instances) inst.polygon = scale_polygon(inst.polygon, 1.0 / s.scale_x, 1.0 / s.scale_y);
  s.instances = std::move(instances);
  return s;
}

std::vector<Sample> synthetic_samples(const config::RunConfig& cfg, std::uint64_t first_seed, int count) {
  std::vector<Sample> out;
  for (int i = 0; i < count; ++i) {
    const auto seed = first_seed + std::uint64_t(i);
    auto syn = data::generate_synthetic_sample(seed, cfg.data.synthetic);
    out.push_back(make_sample("synthetic_" + std::to_string(seed), syn.image, std::move(syn.instances), cfg));
  }
  return out;
}

std::vector<Sample> dataset_samples(const data::Dataset& ds, const config::RunConfig& cfg) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto path = ds.image_path(i);
    cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (img.empty()) throw DataError("dataset record " + std::to_string(i) + ", field 'image': cannot read " + path.string());
    out.push_back(make_sample(ds.records[i].image, img, ds.records[i].instances, cfg));
  }
  return out;
}

std::vector<Sample> train_split(const config::RunConfig& cfg) {
  if (!cfg.data.train.empty()) return dataset_samples(data::load_dataset(cfg.data.train), cfg);
  return synthetic_samples(cfg, cfg.data.seed_offset, cfg.data.num_train);
}

std::vector<Sample> eval_split(const config::RunConfig& cfg) {
  if (!cfg.data.eval.empty()) return dataset_samples(data::load_dataset(cfg.data.eval), cfg);
  if (cfg.data.num_eval > 0) return synthetic_samples(cfg, cfg.data.seed_offset + kEvalSeedGap, cfg.data.num_eval);
  return train_split(cfg);
}

mask_codec::PcaBasis fit_training_basis(const config::RunConfig& cfg, const std::vector<Sample>& train) {
  std::vector<geometry::BinaryMask> masks;
  auto collect = [&](const std::vector<data::TextInstance>& insts, int w, int h) {
    for (const auto& inst : insts) {
      if (!inst.care) continue;
      const auto box = inst.polygon.bounding_box(w, h);
      if (!box.valid()) continue;
      auto m = geometry::rasterize_polygon(inst.polygon, box, w, h);
      if (m.valid) masks.push_back(std::move(m));
    }
  };
  for (const auto& s : train) collect(s.instances, s.image.cols, s.image.rows);
  const auto from_train = masks.size();
  const auto needed = std::size_t(std::max(cfg.mask.basis_min_masks, cfg.mask.n_pca));
  auto profile = cfg.data.synthetic;
  profile.dont_care_fraction = 0.0;
  for (std::uint64_t seed = cfg.data.seed_offset + kBasisSeedGap; masks.size() < needed; ++seed) {
    const auto syn = data::generate_synthetic_sample(seed, profile);
    collect(syn.instances, syn.image.cols, syn.image.rows);
  }
  if (masks.size() > from_train) {
    spdlog::info("mask basis: {} training masks topped up to {} with synthetic words", from_train, masks.size());
  }
  return mask_codec::fit_basis(masks, cfg.mask.n_pca);
}

Sample augment(const Sample& s, const config::AugmentSection& a, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  const double scale = range(a.min_scale, a.max_scale);
  const double angle = range(-a.max_rotation_deg, a.max_rotation_deg);
  const int w = s.image.cols, h = s.image.rows;
  const double tx = range(-a.max_shift, a.max_shift) * w;
  const double ty = range(-a.max_shift, a.max_shift) * h;
  cv::Mat m = cv::getRotationMatrix2D(cv::Point2f(w / 2.0f, h / 2.0f), angle, scale);
  m.at<double>(0, 2) += tx;
  m.at<double>(1, 2) += ty;

  Sample out = s;
  cv::warpAffine(s.image, out.image, m, s.image.size(), cv::INTER_LINEAR, cv::BORDER_REPLICATE);
  const double contrast = range(1.0 - a.contrast, 1.0 + a.contrast);
  const double brightness = range(-a.brightness, a.brightness) * 255.0;
  out.image.convertTo(out.image, -1, contrast, brightness);

  geometry::Polygon frame{{{0, 0}, {double(w), 0}, {double(w), double(h)}, {0, double(h)}}};
  for (auto& inst : out.instances) {
    for (auto& v : inst.polygon.vertices) {
      const double x = m.at<double>(0, 0) * v.x + m.at<double>(0, 1) * v.y + m.at<double>(0, 2);
      const double y = m.at<double>(1, 0) * v.x + m.at<double>(1, 1) * v.y + m.at<double>(1, 2);
      v = {x, y};
    }
    // Words cut by the frame keep an unreliable transcription.
    const double area = inst.polygon.area();
    const double inside = area > 0 ? geometry::polygon_iou(inst.polygon, frame) * frame.area() : 0.0;
    if (inside < 0.9 * area) inst.care = false;
  }
  return out;
}

double learning_rate(const config::OptimizerSection& opt, int it) {
  if (opt.warmup > 0 && it < opt.warmup) return opt.lr * double(it + 1) / double(opt.warmup);
  if (opt.schedule == "step") {
    int passed = 0;
    for (int m : opt.milestones) passed += it >= m ? 1 : 0;
    return opt.lr * std::pow(opt.gamma, passed);
  }
  const double span = std::max(1, opt.iterations - opt.warmup);
  const double progress = std::clamp(double(it - opt.warmup) / span, 0.0, 1.0);
  return opt.lr * 0.5 * (1.0 + std::cos(M_PI * progress));
}

TrainResult train(const config::RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const auto device = device_of(cfg);
  torch::set_num_threads(cfg.threads);
  torch::manual_seed(cfg.seed);
  fs::create_directories(out_dir);
  write_json(out_dir / "config.json", config::to_json(cfg));

  const auto samples = train_split(cfg);
  if (samples.empty()) throw DataError("training split is empty");
  const auto basis = fit_training_basis(cfg, samples);
  model::Spotter net(cfg, basis);
  net->to(device);
  net->train();
  const auto basis_dev = net->basis();

  std::vector<model::ImageTarget> fixed_targets;
  if (!cfg.data.augment.enabled) {
    for (const auto& s : samples) {
      fixed_targets.push_back(model::make_target(s.instances, s.image.cols, s.image.rows, basis_dev, device));
    }
  }

  torch::optim::AdamW opt(net->parameters(),
                          torch::optim::AdamWOptions(cfg.optimizer.lr).weight_decay(cfg.optimizer.weight_decay));
  std::mt19937_64 order_rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 1);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  std::ofstream log(out_dir / "train_log.jsonl");
  const auto latest = out_dir / "ckpt_latest.pt";
  std::string last_good = "none";
  const auto t0 = std::chrono::steady_clock::now();

  for (int it = 0; it < cfg.optimizer.iterations; ++it) {
    std::vector<const Sample*> batch;
    std::vector<Sample> augmented;
    std::vector<model::ImageTarget> targets;
    augmented.reserve(cfg.optimizer.batch_size);
    for (int j = 0; j < cfg.optimizer.batch_size; ++j) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      const auto idx = order[cursor++];
      if (cfg.data.augment.enabled) {
        augmented.push_back(augment(samples[idx], cfg.data.augment, cfg.seed ^ (std::uint64_t(it) << 20) ^ idx));
        const auto& a = augmented.back();
        batch.push_back(&a);
        targets.push_back(model::make_target(a.instances, a.image.cols, a.image.rows, basis_dev, device));
      } else {
        batch.push_back(&samples[idx]);
        targets.push_back(fixed_targets[idx]);
      }
    }
    const double lr = learning_rate(cfg.optimizer, it);
    for (auto& group : opt.param_groups()) group.options().set_lr(lr);

    model::LossOutput loss;
    try {
      loss = net->loss(batch_images(batch, device), targets);
    } catch (const NumericFault& e) {
      throw NumericFault(std::string(e.what()) + " at iteration " + std::to_string(it) +
                         "; last good checkpoint: " + last_good);
    }
    if (!std::isfinite(loss.terms["total"])) {
      throw NumericFault("non-finite loss at iteration " + std::to_string(it) + "; last good checkpoint: " + last_good);
    }
    opt.zero_grad();
    loss.total.backward();
    if (cfg.optimizer.grad_clip > 0) torch::nn::utils::clip_grad_norm_(net->parameters(), cfg.optimizer.grad_clip);
    opt.step();

    const bool final_iter = it + 1 == cfg.optimizer.iterations;
    if (it % cfg.log.interval == 0 || final_iter) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      json entry = {{"iter", it}, {"lr", lr}, {"seconds", secs}};
      for (const auto& [k, v] : loss.terms) entry[k] = v;
      log << entry.dump() << "\n" << std::flush;
      spdlog::debug("iter {} total {:.4f} ({:.1f}s)", it, loss.terms["total"], secs);
    }
    if ((it + 1) % cfg.log.checkpoint_interval == 0 && !final_iter) {
      checkpoint::save(net, latest);
      last_good = latest.string();
    }
  }

  TrainResult result;
  result.checkpoint = out_dir / "model_final.pt";
  checkpoint::save(net, result.checkpoint);
  checkpoint::save(net, latest);

  net->eval();
  const auto eval = eval_split(cfg);
  result.metrics = evaluate_samples(net, eval, cfg.eval, lexicon_of(eval));
  result.metrics["iterations"] = cfg.optimizer.iterations;
  result.metrics["train_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json(out_dir / "metrics.json", result.metrics);
  result.model = net;
  return result;
}

std::vector<data::SpottingResult> polygon_nms(std::vector<data::SpottingResult> results, double iou_thr) {
  std::stable_sort(results.begin(), results.end(),
                   [](const auto& a, const auto& b) { return a.confidence > b.confidence; });
  std::vector<data::SpottingResult> kept;
  for (auto& r : results) {
    bool keep = true;
    for (const auto& k : kept) {
      if (geometry::polygon_iou(r.polygon, k.polygon) > iou_thr) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(std::move(r));
  }
  return kept;
}

std::vector<std::vector<data::SpottingResult>> predict_samples(model::Spotter& model, const std::vector<Sample>& samples,
                                                               const config::EvalSection& eval, bool with_attention) {
  model->eval();
  const auto device = model->parameters().front().device();
  std::vector<std::vector<data::SpottingResult>> out;
  for (const auto& s : samples) {
    auto res = model->predict(batch_images({&s}, device), eval.score_threshold, eval.mask_threshold, with_attention);
    out.push_back(eval.nms ? polygon_nms(std::move(res[0]), eval.nms_iou) : std::move(res[0]));
  }
  return out;
}

std::vector<std::string> lexicon_of(const std::vector<Sample>& samples) {
  data::Dataset ds;
  for (const auto& s : samples) ds.records.push_back({s.name, s.instances});
  return metrics::build_lexicon(ds);
}

json evaluate_samples(model::Spotter& model, const std::vector<Sample>& samples, const config::EvalSection& eval,
                      const std::vector<std::string>& lexicon) {
  metrics::Evaluator ev(lexicon, eval.iou_threshold, eval.ned_penalize_false_positives);
  const auto preds = predict_samples(model, samples, eval);
  model::StageGiou giou;
  const auto device = model->parameters().front().device();
  const auto basis = model->basis();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ev.add_image(preds[i], samples[i].instances);
    const auto& s = samples[i];
    auto target = model::make_target(s.instances, s.image.cols, s.image.rows, basis, device);
    giou.add(model->stage_giou(batch_images({&s}, device), {target}));
  }
  // Text equality only removes matches, so this can only fail on a counting bug.
  if (ev.e2e_none() > ev.detection().hmean) throw std::logic_error("evaluation: end-to-end H exceeds detection H");
  auto report = ev.report();
  report["stage_giou"] = giou.means();
  report["images"] = samples.size();
  return report;
}

std::vector<data::ImagePredictions> infer(model::Spotter& model, const std::vector<fs::path>& images,
                                          const config::EvalSection& eval, bool with_attention) {
  std::vector<data::ImagePredictions> out;
  const auto& cfg = model->config();
  for (const auto& path : images) {
    data::ImagePredictions p;
    p.image = path.string();
    cv::Mat img = cv::imread(data::resolve_data_path(path).string(), cv::IMREAD_COLOR);
    if (img.empty()) {
      p.error = "cannot read image";
      spdlog::warn("infer: cannot read {}", path.string());
      out.push_back(std::move(p));
      continue;
    }
    const auto sample = make_sample(path.string(), img, {}, cfg);
    auto res = predict_samples(model, {sample}, eval, with_attention);
    for (auto& r : res[0]) r.polygon = scale_polygon(r.polygon, sample.scale_x, sample.scale_y);
    p.results = std::move(res[0]);
    out.push_back(std::move(p));
  }
  return out;
}

VisualizeSummary visualize(const std::vector<data::ImagePredictions>& preds, const fs::path& image_root,
                           const fs::path& out_dir) {
  fs::create_directories(out_dir);
  VisualizeSummary summary;
  constexpr int kPanel = 56;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    fs::path path = p.image;
    if (path.is_relative() && !image_root.empty()) path = image_root / path;
    cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (img.empty()) {
      spdlog::warn("visualize: skipping {}: image not readable", path.string());
      continue;
    }
    const auto stem = std::to_string(i) + "_" + fs::path(p.image).stem().string();
    for (std::size_t j = 0; j < p.results.size(); ++j) {
      const auto& r = p.results[j];
      std::vector<cv::Point> pts;
      for (const auto& v : r.polygon.vertices) pts.emplace_back(int(std::lround(v.x)), int(std::lround(v.y)));
      const auto color = palette(j);
      if (!pts.empty()) {
        cv::polylines(img, pts, true, color, 1, cv::LINE_AA);
        cv::putText(img, r.text, pts.front() + cv::Point(0, -3), cv::FONT_HERSHEY_SIMPLEX, 0.4, color, 1, cv::LINE_AA);
      }
      if (r.attention.empty()) continue;
      cv::Mat strip(kPanel, kPanel * int(r.attention.size()), CV_8UC3, cv::Scalar::all(0));
      for (std::size_t t = 0; t < r.attention.size(); ++t) {
        const auto& a = r.attention[t];
        const int side = int(std::lround(std::sqrt(double(a.size()))));
        if (side * side != int(a.size()) || side == 0) continue;
        cv::Mat map(side, side, CV_32F, const_cast<float*>(a.data()));
        cv::Mat norm, u8, color_map, big;
        cv::normalize(map, norm, 0, 255, cv::NORM_MINMAX);
        norm.convertTo(u8, CV_8U);
        cv::applyColorMap(u8, color_map, cv::COLORMAP_JET);
        cv::resize(color_map, big, cv::Size(kPanel, kPanel), 0, 0, cv::INTER_NEAREST);
        big.copyTo(strip(cv::Rect(int(t) * kPanel, 0, kPanel, kPanel)));
      }
      cv::imwrite((out_dir / (stem + "_attn" + std::to_string(j) + ".png")).string(), strip);
      summary.attention_panels.push_back(int(r.attention.size()));
    }
    cv::imwrite((out_dir / (stem + "_overlay.png")).string(), img);
    ++summary.overlays;
  }
  return summary;
}

data::Dataset generate_dataset(const data::SyntheticProfile& profile, std::uint64_t first_seed, int count,
                               const fs::path& out_dir) {
  fs::create_directories(out_dir / "images");
  data::Dataset ds;
  ds.root = out_dir;
  for (int i = 0; i < count; ++i) {
    const auto seed = first_seed + std::uint64_t(i);
    auto s = data::generate_synthetic_sample(seed, profile);
    const auto rel = "images/synthetic_" + std::to_string(seed) + ".png";
    if (!cv::imwrite((out_dir / rel).string(), s.image)) throw DataError("cannot write " + (out_dir / rel).string());
    ds.records.push_back({rel, std::move(s.instances)});
  }
  data::save_dataset(ds, out_dir / "dataset.json");
  return ds;
}

}  // namespace spotter::pipeline
