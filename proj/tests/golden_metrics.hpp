#pragma once

// Ten hand-scored single-image cases. Boxes are 10x10 squares shifted along x;
// a shift of d gives IoU (10-d)/(10+d), so d=1 -> 9/11, d=2 -> 2/3, d=5 -> 1/3.

#include <string>
#include <vector>

#include "spotter/data.hpp"

namespace golden {

using spotter::data::SpottingResult;
using spotter::data::TextInstance;

inline spotter::geometry::Polygon square(double x) {
  spotter::geometry::Polygon p;
  p.vertices = {{x, 0}, {x + 10, 0}, {x + 10, 10}, {x, 10}};
  return p;
}

inline TextInstance gt(double x, std::string text, bool care = true) { return {square(x), std::move(text), care}; }
inline SpottingResult pred(double x, std::string text, double conf) { return {square(x), std::move(text), conf, {}}; }

struct Case {
  std::string name;
  std::vector<SpottingResult> preds;
  std::vector<TextInstance> gts;
  double p, r, h, e2e, one_minus_ned;
};

inline std::vector<Case> cases() {
  return {
      {"perfect", {pred(0, "ab", 0.9), pred(20, "cd", 0.8)}, {gt(0, "ab"), gt(20, "cd")}, 1, 1, 1, 1, 1},
      {"no predictions", {}, {gt(0, "ab"), gt(20, "cd")}, 0, 0, 0, 0, 0},
      {"one of two found", {pred(0, "ab", 0.9)}, {gt(0, "ab"), gt(20, "cd")}, 1, 0.5, 2.0 / 3, 2.0 / 3, 0.5},
      {"wrong text", {pred(0, "abd", 0.9)}, {gt(0, "abc")}, 1, 1, 1, 0, 2.0 / 3},
      {"do not care absorbs", {pred(0, "ab", 0.9), pred(40, "zz", 0.8)}, {gt(0, "ab"), gt(40, "###", false)}, 1, 1, 1,
       1, 1},
      {"duplicate", {pred(0, "ab", 0.9), pred(0, "ab", 0.8)}, {gt(0, "ab")}, 0.5, 1, 2.0 / 3, 2.0 / 3, 0.5},
      {"false positive only", {pred(0, "ab", 0.9)}, {}, 0, 0, 0, 0, 0},
      {"below iou threshold", {pred(5, "ab", 0.9)}, {gt(0, "ab")}, 0, 0, 0, 0, 0},
      {"case folded", {pred(2, "AB", 0.9)}, {gt(0, "ab")}, 1, 1, 1, 1, 1},
      // The 0.9 prediction claims the gt it overlaps most; the 0.6 one gets the other.
      {"confidence order", {pred(1, "cd", 0.6), pred(2, "cd", 0.9)}, {gt(0, "ab"), gt(3, "cd")}, 1, 1, 1, 0.5, 0.5},
  };
}

// Dataset totals over all ten cases.
struct Totals {
  long long matched = 9, correct = 7, preds = 12, gts = 13;
  double p = 9.0 / 12, r = 9.0 / 13, h = 18.0 / 25, e2e = 14.0 / 25, one_minus_ned = 23.0 / 48, word_accuracy = 7.0 / 13;
};

}  // namespace golden
