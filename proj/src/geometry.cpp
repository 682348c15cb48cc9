#include "spotter/geometry.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "spotter/errors.hpp"

namespace spotter::geometry {

namespace bg = boost::geometry;
using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint>;
using BgMultiPolygon = bg::model::multi_polygon<BgPolygon>;

namespace {

constexpr double kMaxLogScale = 4.135166556742356;  // log(1000 / 16)

BgPolygon to_boost(const Polygon& p) {
  BgPolygon out;
  for (const auto& v : p.vertices) bg::append(out.outer(), BgPoint(v.x, v.y));
  bg::correct(out);
  return out;
}

}  // namespace

Polygon Polygon::from_flat(const std::vector<double>& coords) {
  Polygon p;
  for (std::size_t i = 0; i + 1 < coords.size(); i += 2) p.vertices.push_back({coords[i], coords[i + 1]});
  return p;
}

std::vector<double> Polygon::flat() const {
  std::vector<double> out;
  out.reserve(vertices.size() * 2);
  for (const auto& v : vertices) {
    out.push_back(v.x);
    out.push_back(v.y);
  }
  return out;
}

double Polygon::signed_area() const {
  double acc = 0;
  const auto n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = vertices[i];
    const auto& b = vertices[(i + 1) % n];
    acc += a.x * b.y - b.x * a.y;
  }
  return acc / 2;
}

double Polygon::area() const { return std::abs(signed_area()); }

bool Polygon::contains(double x, double y) const {
  bool inside = false;
  const auto n = vertices.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = vertices[i];
    const auto& b = vertices[j];
    if ((a.y > y) != (b.y > y)) {
      const double xc = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (x < xc) inside = !inside;
    }
  }
  return inside;
}

Box Polygon::bounding_box(int image_w, int image_h) const {
  double x0 = std::numeric_limits<double>::max(), y0 = x0;
  double x1 = std::numeric_limits<double>::lowest(), y1 = x1;
  for (const auto& v : vertices) {
    x0 = std::min(x0, v.x);
    y0 = std::min(y0, v.y);
    x1 = std::max(x1, v.x);
    y1 = std::max(y1, v.y);
  }
  x0 = std::clamp(x0, 0.0, double(image_w));
  x1 = std::clamp(x1, 0.0, double(image_w));
  y0 = std::clamp(y0, 0.0, double(image_h));
  y1 = std::clamp(y1, 0.0, double(image_h));
  return Box::from_corners(x0 / image_w, y0 / image_h, x1 / image_w, y1 / image_h);
}

double BinaryMask::foreground_fraction() const {
  double on = 0;
  for (auto c : cells) on += c;
  return on / double(cells.size());
}

torch::Tensor BinaryMask::to_tensor() const {
  auto t = torch::empty({kMaskSize * kMaskSize}, torch::kFloat32);
  auto* data = t.data_ptr<float>();
  for (std::size_t i = 0; i < cells.size(); ++i) data[i] = cells[i];
  return t;
}

std::optional<double> iou(const Box& a, const Box& b) {
  if (!a.valid() || !b.valid()) return std::nullopt;
  const double iw = std::max(0.0, std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0()));
  const double ih = std::max(0.0, std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0()));
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

std::optional<double> giou(const Box& a, const Box& b) {
  if (!a.valid() || !b.valid()) return std::nullopt;
  const double iw = std::max(0.0, std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0()));
  const double ih = std::max(0.0, std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0()));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  const double cw = std::max(a.x1(), b.x1()) - std::min(a.x0(), b.x0());
  const double ch = std::max(a.y1(), b.y1()) - std::min(a.y0(), b.y0());
  const double enclosing = cw * ch;
  return inter / uni - (enclosing - uni) / enclosing;
}

BinaryMask rasterize_polygon(const Polygon& p, const Box& box, int image_w, int image_h) {
  BinaryMask mask;
  if (p.vertices.size() < 3 || !box.valid()) return mask;
  const double x0 = box.x0() * image_w;
  const double y0 = box.y0() * image_h;
  const double cell_w = box.w * image_w / kMaskSize;
  const double cell_h = box.h * image_h / kMaskSize;
  bool any = false;
  for (int r = 0; r < kMaskSize; ++r) {
    const double y = y0 + (r + 0.5) * cell_h;
    for (int c = 0; c < kMaskSize; ++c) {
      const double x = x0 + (c + 0.5) * cell_w;
      if (p.contains(x, y)) {
        mask.cells[r * kMaskSize + c] = 1;
        any = true;
      }
    }
  }
  mask.valid = any;
  return mask;
}

double polygon_iou(const Polygon& a, const Polygon& b) {
  if (a.vertices.size() < 3 || b.vertices.size() < 3 || a.area() <= 0 || b.area() <= 0) {
    spdlog::warn("polygon_iou: degenerate polygon ({} / {} vertices)", a.vertices.size(),
                 b.vertices.size());
    return 0.0;
  }
  const auto pa = to_boost(a);
  const auto pb = to_boost(b);
  std::string reason;
  if (!bg::is_valid(pa, reason) || !bg::is_valid(pb, reason)) {
    spdlog::warn("polygon_iou: invalid polygon: {}", reason);
    return 0.0;
  }
  BgMultiPolygon inter;
  bg::intersection(pa, pb, inter);
  const double inter_area = bg::area(inter);
  const double uni = bg::area(pa) + bg::area(pb) - inter_area;
  if (uni <= 0) return 0.0;
  return std::clamp(inter_area / uni, 0.0, 1.0);
}

Box apply_box_deltas(const Box& b, const std::array<double, 4>& deltas) {
  for (double d : deltas) {
    if (!std::isfinite(d)) throw GeometryError("apply_box_deltas: non-finite delta");
  }
  const double cx = b.cx + deltas[0] * b.w;
  const double cy = b.cy + deltas[1] * b.h;
  const double w = b.w * std::exp(std::min(deltas[2], kMaxLogScale));
  const double h = b.h * std::exp(std::min(deltas[3], kMaxLogScale));
  constexpr double kMin = 1e-4;
  double x0 = std::clamp(cx - w / 2, 0.0, 1.0 - kMin);
  double y0 = std::clamp(cy - h / 2, 0.0, 1.0 - kMin);
  double x1 = std::clamp(cx + w / 2, x0 + kMin, 1.0);
  double y1 = std::clamp(cy + h / 2, y0 + kMin, 1.0);
  return Box::from_corners(x0, y0, x1, y1);
}

torch::Tensor cxcywh_to_xyxy(const torch::Tensor& boxes) {
  auto c = boxes.unbind(-1);
  return torch::stack({c[0] - c[2] / 2, c[1] - c[3] / 2, c[0] + c[2] / 2, c[1] + c[3] / 2}, -1);
}

torch::Tensor xyxy_to_cxcywh(const torch::Tensor& boxes) {
  auto c = boxes.unbind(-1);
  return torch::stack({(c[0] + c[2]) / 2, (c[1] + c[3]) / 2, c[2] - c[0], c[3] - c[1]}, -1);
}

namespace {

torch::Tensor giou_core(const torch::Tensor& a, const torch::Tensor& b) {
  // a, b broadcastable [..., 4] cxcywh
  auto ax = cxcywh_to_xyxy(a).unbind(-1);
  auto bx = cxcywh_to_xyxy(b).unbind(-1);
  auto area_a = (ax[2] - ax[0]) * (ax[3] - ax[1]);
  auto area_b = (bx[2] - bx[0]) * (bx[3] - bx[1]);
  auto iw = (torch::min(ax[2], bx[2]) - torch::max(ax[0], bx[0])).clamp_min(0);
  auto ih = (torch::min(ax[3], bx[3]) - torch::max(ax[1], bx[1])).clamp_min(0);
  auto inter = iw * ih;
  auto uni = area_a + area_b - inter;
  auto cw = torch::max(ax[2], bx[2]) - torch::min(ax[0], bx[0]);
  auto ch = torch::max(ax[3], bx[3]) - torch::min(ax[1], bx[1]);
  auto enclosing = cw * ch;
  // Guards only degenerate boxes; a real area is never this small.
  constexpr double kEps = 1e-12;
  return inter / uni.clamp_min(kEps) - (enclosing - uni) / enclosing.clamp_min(kEps);
}

}  // namespace

torch::Tensor giou_paired(const torch::Tensor& a, const torch::Tensor& b) { return giou_core(a, b); }

torch::Tensor giou_pairwise(const torch::Tensor& a, const torch::Tensor& b) {
  return giou_core(a.unsqueeze(1), b.unsqueeze(0));
}

torch::Tensor apply_box_deltas(const torch::Tensor& boxes, const torch::Tensor& deltas) {
  if (!torch::isfinite(deltas).all().item<bool>()) {
    throw GeometryError("apply_box_deltas: non-finite deltas");
  }
  auto b = boxes.unbind(-1);
  auto d = deltas.unbind(-1);
  auto cx = b[0] + d[0] * b[2];
  auto cy = b[1] + d[1] * b[3];
  auto w = b[2] * torch::exp(d[2].clamp_max(kMaxLogScale));
  auto h = b[3] * torch::exp(d[3].clamp_max(kMaxLogScale));
  constexpr double kMin = 1e-4;
  auto x0 = (cx - w / 2).clamp(0.0, 1.0 - kMin);
  auto y0 = (cy - h / 2).clamp(0.0, 1.0 - kMin);
  auto x1 = torch::max((cx + w / 2).clamp_max(1.0), x0 + kMin);
  auto y1 = torch::max((cy + h / 2).clamp_max(1.0), y0 + kMin);
  return torch::stack({(x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0}, -1);
}

int level_for_box(double w, double h, int image_w, int image_h) {
  const double scale = std::sqrt(std::max(w * h * image_w * image_h, 1e-12));
  const int level = int(std::floor(2 + std::log2(scale / 224.0)));
  return std::clamp(level, 0, kNumLevels - 1);
}

RoiResult roi_extract(const std::vector<torch::Tensor>& levels, const torch::Tensor& boxes,
                      const torch::Tensor& batch_index, int out_h, int out_w, int image_h,
                      int image_w) {
  TORCH_CHECK(levels.size() == kNumLevels, "roi_extract: expected 4 pyramid levels");
  TORCH_CHECK(boxes.dim() == 2 && boxes.size(1) == 4, "roi_extract: boxes must be [M,4]");
  const auto m = boxes.size(0);
  const auto channels = levels[0].size(1);
  auto opts = levels[0].options();
  auto boxes_d = boxes.detach().to(torch::kCPU, torch::kDouble).contiguous();
  auto acc = boxes_d.accessor<double, 2>();

  std::vector<std::vector<int64_t>> per_level(kNumLevels);
  auto outside = torch::zeros({m}, torch::kBool);
  auto outside_acc = outside.accessor<bool, 1>();
  for (int64_t i = 0; i < m; ++i) {
    const double cx = acc[i][0], cy = acc[i][1], w = acc[i][2], h = acc[i][3];
    if (cx + w / 2 <= 0 || cx - w / 2 >= 1 || cy + h / 2 <= 0 || cy - h / 2 >= 1) {
      outside_acc[i] = true;
      continue;
    }
    per_level[level_for_box(w, h, image_w, image_h)].push_back(i);
  }

  auto out = torch::zeros({m, channels, out_h, out_w}, opts);
  // Bin-center offsets in [0,1] along each axis.
  auto fx = (torch::arange(out_w, opts) + 0.5) / out_w;
  auto fy = (torch::arange(out_h, opts) + 0.5) / out_h;
  for (int l = 0; l < kNumLevels; ++l) {
    if (per_level[l].empty()) continue;
    const auto& feat = levels[l];
    const double padded_w = double(feat.size(3)) * kLevelStrides[l];
    const double padded_h = double(feat.size(2)) * kLevelStrides[l];
    auto idx = torch::tensor(per_level[l], torch::kLong).to(boxes.device());
    auto sel = cxcywh_to_xyxy(boxes.index_select(0, idx).detach().to(opts.dtype()));
    auto xs = sel.select(1, 0).unsqueeze(1) + (sel.select(1, 2) - sel.select(1, 0)).unsqueeze(1) * fx;
    auto ys = sel.select(1, 1).unsqueeze(1) + (sel.select(1, 3) - sel.select(1, 1)).unsqueeze(1) * fy;
    auto gx = xs * (2.0 * image_w / padded_w) - 1.0;  // [k, out_w]
    auto gy = ys * (2.0 * image_h / padded_h) - 1.0;  // [k, out_h]
    const auto k = idx.size(0);
    auto grid = torch::stack({gx.unsqueeze(1).expand({k, out_h, out_w}),
                              gy.unsqueeze(2).expand({k, out_h, out_w})},
                             -1);
    auto src = feat.index_select(0, batch_index.index_select(0, idx));
    namespace F = torch::nn::functional;
    auto sampled = F::grid_sample(src, grid,
                                  F::GridSampleFuncOptions()
                                      .mode(torch::kBilinear)
                                      .padding_mode(torch::kZeros)
                                      .align_corners(false));
    out = out.index_copy(0, idx, sampled);
  }
  return {out, outside.to(boxes.device())};
}

}  // namespace spotter::geometry
