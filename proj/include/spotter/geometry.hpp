#pragma once

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace spotter::geometry {

inline constexpr int kMaskSize = 28;
inline constexpr int kDetectionRoi = 7;
inline constexpr int kRecognitionRoi = 28;
inline constexpr int kNumLevels = 4;
inline constexpr std::array<int, kNumLevels> kLevelStrides = {4, 8, 16, 32};

// Center/size box, normalized to the image extent.
struct Box {
  double cx = 0.5;
  double cy = 0.5;
  double w = 1.0;
  double h = 1.0;

  static Box from_corners(double x0, double y0, double x1, double y1) {
    return {(x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0};
  }
  double x0() const { return cx - w / 2; }
  double y0() const { return cy - h / 2; }
  double x1() const { return cx + w / 2; }
  double y1() const { return cy + h / 2; }
  double area() const { return w * h; }
  bool valid() const { return w > 0 && h > 0; }
};

struct Point {
  double x = 0;
  double y = 0;
};

// Simple polygon in absolute pixel coordinates.
struct Polygon {
  std::vector<Point> vertices;

  static Polygon from_flat(const std::vector<double>& coords);
  std::vector<double> flat() const;
  double signed_area() const;
  double area() const;
  bool contains(double x, double y) const;  // even-odd rule
  Box bounding_box(int image_w, int image_h) const;
};

struct BinaryMask {
  std::vector<std::uint8_t> cells = std::vector<std::uint8_t>(kMaskSize * kMaskSize, 0);
  bool valid = false;

  std::uint8_t at(int row, int col) const { return cells[row * kMaskSize + col]; }
  double foreground_fraction() const;
  torch::Tensor to_tensor() const;  // float [784]
};

// Generalized IoU of two boxes; nullopt when either box has zero area.
std::optional<double> giou(const Box& a, const Box& b);
std::optional<double> iou(const Box& a, const Box& b);

// Cell-center sampling of `p` over the 28x28 grid spanning `box`.
BinaryMask rasterize_polygon(const Polygon& p, const Box& box, int image_w, int image_h);

// Area IoU of two simple polygons; 0 (with a warning) for degenerate input.
double polygon_iou(const Polygon& a, const Polygon& b);

// Refine a box by (dx, dy, dw, dh): center offsets in units of the current
// size, log-space size update, result clipped to the unit square.
Box apply_box_deltas(const Box& b, const std::array<double, 4>& deltas);

// ---- batched tensor forms used by the model ----

// [..., 4] cxcywh <-> xyxy
torch::Tensor cxcywh_to_xyxy(const torch::Tensor& boxes);
torch::Tensor xyxy_to_cxcywh(const torch::Tensor& boxes);

// Elementwise gIoU of paired boxes [n,4] x [n,4] -> [n].
torch::Tensor giou_paired(const torch::Tensor& a, const torch::Tensor& b);
// All-pairs gIoU [n,4] x [m,4] -> [n,m].
torch::Tensor giou_pairwise(const torch::Tensor& a, const torch::Tensor& b);

// Batched delta application; non-finite deltas raise GeometryError.
torch::Tensor apply_box_deltas(const torch::Tensor& boxes, const torch::Tensor& deltas);

// Pyramid level index (0 => stride 4) for a box of the given normalized size.
int level_for_box(double w, double h, int image_w, int image_h);

struct RoiResult {
  torch::Tensor features;  // [M, C, out_h, out_w]
  torch::Tensor outside;   // bool [M], true when the box misses the image
};

// Bilinear RoI sampling (one sample per bin center) from the level chosen by
// level_for_box. `levels` are [B, C, H_l, W_l] at strides 4/8/16/32, `boxes`
// normalized cxcywh [M,4], `batch_index` int64 [M]. Differentiable w.r.t. levels.
RoiResult roi_extract(const std::vector<torch::Tensor>& levels, const torch::Tensor& boxes,
                      const torch::Tensor& batch_index, int out_h, int out_w, int image_h,
                      int image_w);

}  // namespace spotter::geometry
