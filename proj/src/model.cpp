#include "spotter/model.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>

#include "spotter/errors.hpp"
#include "spotter/geometry.hpp"

namespace spotter::model {

namespace {

constexpr float kPixelMean = 0.5f;
constexpr float kPixelStd = 0.25f;

losses::StagePrediction stage_slice(const detector::StageOutput& s, int64_t b) {
  return {s.logits[b], s.boxes[b], s.codes[b]};
}

torch::Tensor index_tensor(const std::vector<int64_t>& v, torch::Device device) {
  return torch::tensor(v, torch::kLong).to(device);
}

}  // namespace

ImageTarget make_target(const std::vector<data::TextInstance>& instances, int image_w, int image_h,
                        const mask_codec::PcaBasis& basis, torch::Device device) {
  std::vector<float> boxes;
  std::vector<torch::Tensor> masks;
  ImageTarget t;
  for (const auto& inst : instances) {
    if (!inst.care) continue;
    const auto box = inst.polygon.bounding_box(image_w, image_h);
    if (!box.valid()) continue;
    boxes.insert(boxes.end(), {float(box.cx), float(box.cy), float(box.w), float(box.h)});
    masks.push_back(geometry::rasterize_polygon(inst.polygon, box, image_w, image_h).to_tensor());
    t.texts.push_back(inst.text);
  }
  const auto g = int64_t(t.texts.size());
  auto fopts = torch::TensorOptions().dtype(torch::kFloat32);
  if (g == 0) {
    t.gt.boxes = torch::zeros({0, 4}, fopts).to(device);
    t.gt.masks = torch::zeros({0, mask_codec::kMaskDim}, fopts).to(device);
    t.gt.codes = torch::zeros({0, basis.n_pca()}, fopts).to(device);
    return t;
  }
  t.gt.boxes = torch::tensor(boxes, fopts).view({g, 4}).to(device);
  t.gt.masks = torch::stack(masks).to(fopts.dtype()).to(device);
  t.gt.codes = mask_codec::encode(t.gt.masks, basis.to(device, torch::kFloat32));
  return t;
}

void StageGiou::add(const StageGiou& o) {
  if (sum.empty()) {
    sum.assign(o.sum.size(), 0.0);
    count.assign(o.count.size(), 0);
  }
  for (std::size_t k = 0; k < o.sum.size(); ++k) {
    sum[k] += o.sum[k];
    count[k] += o.count[k];
  }
}

std::vector<double> StageGiou::means() const {
  std::vector<double> m;
  for (std::size_t k = 0; k < sum.size(); ++k) m.push_back(count[k] ? sum[k] / double(count[k]) : 0.0);
  return m;
}

SpotterImpl::SpotterImpl(const config::RunConfig& cfg, const mask_codec::PcaBasis& basis) : cfg_(cfg) {
  cfg_.validate();
  if (!basis.fitted()) throw ConfigError("model: mask basis is not fitted");
  if (basis.n_pca() != cfg.mask.n_pca) {
    throw ConfigError("model: mask basis has n_pca " + std::to_string(basis.n_pca()) + " but the config asks for " +
                      std::to_string(cfg.mask.n_pca));
  }
  const int64_t c = cfg.backbone.d_model;
  backbone = register_module("backbone", backbone::Backbone(cfg.backbone));
  detector = register_module("detector", detector::Detector(cfg.detector, c, cfg.mask.n_pca));
  // Built in both modes so parameter initialization is identical across the ablation.
  rc = register_module("rc", rc::RecognitionConversion(c, cfg.detector.dim, cfg.rc.heads, cfg.rc.depth));
  recognizer = register_module(
      "recognizer", recognizer::Recognizer(c, cfg.recognizer.model, recognizer::Charset(cfg.recognizer.alphabet)));
  basis_mean_ = register_buffer("basis_mean", basis.mean.to(torch::kFloat32).clone());
  basis_components_ = register_buffer("basis_components", basis.components.to(torch::kFloat32).clone());
  basis_variance_ = register_buffer("basis_variance", basis.explained_variance.to(torch::kFloat32).clone());
}

mask_codec::PcaBasis SpotterImpl::basis() const {
  return {basis_mean_, basis_components_, basis_variance_};
}

torch::Tensor SpotterImpl::recognition_input(const backbone::FeaturePyramid& pyr, const torch::Tensor& boxes,
                                             const torch::Tensor& batch_index, const torch::Tensor& prop,
                                             const torch::Tensor& codes) {
  auto a = rc::extract_roi_pyramid(pyr, boxes, batch_index);
  if (cfg_.rc.enabled) return rc->forward(a, prop, rc::GradientMode::kCoupled).r3;
  auto mask = mask_codec::decode_soft(codes, basis()).view({-1, geometry::kMaskSize, geometry::kMaskSize});
  return rc->forward_without_rc(a, mask);
}

LossOutput SpotterImpl::loss(const torch::Tensor& images, const std::vector<ImageTarget>& targets) {
  TORCH_CHECK(int64_t(targets.size()) == images.size(0), "loss: one target per image");
  const auto batch = images.size(0);
  const auto device = images.device();
  auto pyr = backbone->forward(images);
  auto stages = detector->forward(pyr);
  const auto b = basis();

  LossOutput out;
  auto total = torch::zeros({}, images.options());
  std::map<std::string, torch::Tensor> sums;
  std::vector<losses::Assignment> final_assign(batch);

  for (std::size_t k = 0; k < stages.size(); ++k) {
    for (int64_t i = 0; i < batch; ++i) {
      const auto pred = stage_slice(stages[k], i);
      const auto& gt = targets[i].gt;
      losses::Assignment asg;
      if (gt.size() > 0) {
        torch::NoGradGuard ng;
        losses::StagePrediction detached{pred.logits.detach(), pred.boxes.detach(), pred.codes.detach()};
        asg = losses::hungarian_assign(
            losses::match_cost_matrix(detached, gt, cfg_.loss.weights, cfg_.loss.focal).to(torch::kDouble));
      }
      auto lb = losses::detection_loss_stage(pred, gt, asg, cfg_.loss.weights, b, cfg_.loss.focal);
      total = total + lb.total / double(batch);
      for (auto& [name, v] : lb.terms) {
        auto d = v.detach() / double(batch * stages.size());
        sums[name] = sums.count(name) ? sums[name] + d : d;
      }
      if (k + 1 == stages.size()) final_assign[i] = std::move(asg);
    }
  }
  out.terms["detection"] = total.item<double>();

  // Recognition on the final-stage matches.
  std::vector<int64_t> bidx, rows;
  std::vector<torch::Tensor> gt_boxes;
  std::vector<std::string> texts;
  for (int64_t i = 0; i < batch; ++i) {
    for (auto [r, g] : final_assign[i].pairs) {
      bidx.push_back(i);
      rows.push_back(i * cfg_.detector.num_proposals + r);
      gt_boxes.push_back(targets[i].gt.boxes[g]);
      texts.push_back(targets[i].texts[g]);
    }
  }
  double rec_value = 0.0;
  if (!rows.empty() && cfg_.loss.recognition > 0) {
    const auto& last = stages.back();
    auto ri = index_tensor(rows, device);
    auto boxes = cfg_.recognizer.train_roi == "gt"
                     ? torch::stack(gt_boxes)
                     : last.boxes.reshape({-1, 4}).index_select(0, ri).detach();
    auto prop = last.features.reshape({-1, last.features.size(-1)}).index_select(0, ri);
    auto codes = last.codes.reshape({-1, last.codes.size(-1)}).index_select(0, ri);
    auto r3 = recognition_input(pyr, boxes, index_tensor(bidx, device), prop, codes);
    auto enc = recognizer->encode(r3);
    auto tgt = recognizer->targets_for(texts, device);
    auto seq = recognizer->teacher_forced(enc, tgt);
    auto rec = losses::recognition_loss(seq.log_probs, tgt);
    rec_value = rec.item<double>();
    total = total + cfg_.loss.recognition * rec;
  }
  out.terms["recognition"] = rec_value;
  for (auto& [name, v] : sums) out.terms[name] = v.item<double>();
  out.total = total;
  out.terms["total"] = total.item<double>();
  return out;
}

StageGiou SpotterImpl::stage_giou(const torch::Tensor& images, const std::vector<ImageTarget>& targets) {
  torch::NoGradGuard ng;
  auto pyr = backbone->forward(images);
  auto stages = detector->forward(pyr);
  StageGiou out;
  out.sum.assign(stages.size(), 0.0);
  out.count.assign(stages.size(), 0);
  for (std::size_t k = 0; k < stages.size(); ++k) {
    for (int64_t i = 0; i < images.size(0); ++i) {
      const auto& gt = targets[i].gt;
      if (gt.size() == 0) continue;
      const auto pred = stage_slice(stages[k], i);
      auto asg = losses::hungarian_assign(
          losses::match_cost_matrix(pred, gt, cfg_.loss.weights, cfg_.loss.focal).to(torch::kDouble));
      for (auto [r, g] : asg.pairs) {
        out.sum[k] += geometry::giou_paired(pred.boxes[r].unsqueeze(0), gt.boxes[g].unsqueeze(0)).item<double>();
        ++out.count[k];
      }
    }
  }
  return out;
}

std::vector<std::vector<data::SpottingResult>> SpotterImpl::predict(const torch::Tensor& images,
                                                                    double score_threshold, double mask_threshold,
                                                                    bool with_attention) {
  torch::NoGradGuard ng;
  const auto batch = images.size(0);
  const int img_h = int(images.size(2));
  const int img_w = int(images.size(3));
  auto pyr = backbone->forward(images);
  auto stages = detector->forward(pyr);
  const auto& last = stages.back();
  auto scores = torch::sigmoid(last.logits).to(torch::kCPU);

  std::vector<int64_t> bidx, rows;
  for (int64_t i = 0; i < batch; ++i) {
    for (int64_t n = 0; n < cfg_.detector.num_proposals; ++n) {
      if (scores[i][n].item<double>() >= score_threshold) {
        bidx.push_back(i);
        rows.push_back(i * cfg_.detector.num_proposals + n);
      }
    }
  }
  std::vector<std::vector<data::SpottingResult>> out(batch);
  if (rows.empty()) return out;

  const auto device = images.device();
  auto ri = index_tensor(rows, device);
  auto boxes = last.boxes.reshape({-1, 4}).index_select(0, ri);
  auto prop = last.features.reshape({-1, last.features.size(-1)}).index_select(0, ri);
  auto codes = last.codes.reshape({-1, last.codes.size(-1)}).index_select(0, ri);
  auto r3 = recognition_input(pyr, boxes, index_tensor(bidx, device), prop, codes);
  auto seq = recognizer->greedy(recognizer->encode(r3));
  auto masks = mask_codec::decode(codes, basis()).view({-1, geometry::kMaskSize, geometry::kMaskSize}).to(torch::kCPU);
  auto boxes_cpu = boxes.to(torch::kCPU).to(torch::kDouble);
  auto attention = with_attention ? seq.attention.to(torch::kCPU).contiguous() : torch::Tensor();
  auto flat_scores = scores.reshape({-1});

  for (std::size_t j = 0; j < rows.size(); ++j) {
    auto bx = boxes_cpu[int64_t(j)];
    geometry::Box box{bx[0].item<double>(), bx[1].item<double>(), bx[2].item<double>(), bx[3].item<double>()};
    data::SpottingResult r;
    r.polygon = mask_to_polygon(masks[int64_t(j)], box, img_w, img_h, mask_threshold);
    r.text = seq.texts[j];
    r.confidence = flat_scores[rows[j]].item<double>();
    if (with_attention) {
      const auto& ids = seq.ids[j];
      for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
        if (ids[t] == recognizer::Charset::kEos) break;
        if (ids[t] < recognizer::Charset::kFirstSymbol) continue;
        auto map = attention[int64_t(j)][int64_t(t)].contiguous().to(torch::kFloat32);
        r.attention.emplace_back(map.data_ptr<float>(), map.data_ptr<float>() + map.numel());
      }
    }
    out[bidx[j]].push_back(std::move(r));
  }
  return out;
}

torch::Tensor image_to_tensor(const cv::Mat& bgr) {
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  rgb.convertTo(rgb, CV_32FC3, 1.0 / 255.0);
  auto t = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kFloat32).clone();
  return ((t - kPixelMean) / kPixelStd).permute({2, 0, 1}).contiguous();
}

geometry::Polygon mask_to_polygon(const torch::Tensor& mask, const geometry::Box& box, int image_w, int image_h,
                                  double threshold) {
  const double x0 = std::clamp(box.x0(), 0.0, 1.0) * image_w;
  const double y0 = std::clamp(box.y0(), 0.0, 1.0) * image_h;
  const double x1 = std::clamp(box.x1(), 0.0, 1.0) * image_w;
  const double y1 = std::clamp(box.y1(), 0.0, 1.0) * image_h;
  geometry::Polygon rect{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
  const int bw = std::max(1, int(std::lround(box.w * image_w)));
  const int bh = std::max(1, int(std::lround(box.h * image_h)));
  auto m = mask.to(torch::kFloat32).contiguous();
  cv::Mat small(geometry::kMaskSize, geometry::kMaskSize, CV_32F, m.data_ptr<float>());
  cv::Mat resized;
  cv::resize(small, resized, cv::Size(bw, bh), 0, 0, cv::INTER_LINEAR);
  cv::Mat binary = resized > threshold;
  std::vector<std::vector<cv::Point>> contours;
  cv::findContours(binary, contours, cv::RETR_EXTERNAL, cv::CHAIN_APPROX_SIMPLE);
  if (contours.empty()) return rect;
  const auto best = std::max_element(contours.begin(), contours.end(), [](const auto& a, const auto& b) {
    return cv::contourArea(a) < cv::contourArea(b);
  });
  std::vector<cv::Point> approx;
  cv::approxPolyDP(*best, approx, 1.0, true);
  if (approx.size() < 3 || cv::contourArea(approx) <= 0) return rect;
  // Contour points are pixel indices; map their centers back into the box.
  const double ox = box.x0() * image_w;
  const double oy = box.y0() * image_h;
  const double sx = box.w * image_w / bw;
  const double sy = box.h * image_h / bh;
  geometry::Polygon poly;
  for (const auto& p : approx) {
    poly.vertices.push_back({std::clamp(ox + (p.x + 0.5) * sx, 0.0, double(image_w)),
                             std::clamp(oy + (p.y + 0.5) * sy, 0.0, double(image_h))});
  }
  if (poly.area() <= 0) return rect;
  return poly;
}

}  // namespace spotter::model
