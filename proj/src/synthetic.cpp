#include "spotter/synthetic.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "spotter/errors.hpp"

namespace spotter::data {

void SyntheticProfile::validate() const {
  if (width < 32 || height < 32) throw ConfigError("synthetic profile: image must be at least 32x32");
  if (min_words < 1 || max_words < min_words || max_words > 8) {
    throw ConfigError("synthetic profile: word count range must satisfy 1 <= min <= max <= 8");
  }
  if (min_word_len < 1 || max_word_len < min_word_len) throw ConfigError("synthetic profile: bad word length range");
  if (alphabet.empty()) throw ConfigError("synthetic profile: empty alphabet");
  if (min_font_scale <= 0 || max_font_scale < min_font_scale) throw ConfigError("synthetic profile: bad font scale");
  if (max_rotation_deg < 0 || max_rotation_deg > 60) throw ConfigError("synthetic profile: rotation must be in [0, 60]");
  if (curved_fraction < 0 || curved_fraction > 1) throw ConfigError("synthetic profile: curved_fraction in [0,1]");
  if (dont_care_fraction < 0 || dont_care_fraction > 1) throw ConfigError("synthetic profile: dont_care_fraction in [0,1]");
}

namespace {

constexpr int kLayoutAttempts = 8;
constexpr int kPlacementAttempts = 40;
constexpr int kPad = 2;       // polygon padding around ink, local pixels
constexpr int kArcSamples = 8;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

// Maps word-canvas coordinates (u, v) into the image and back.
struct WordTransform {
  double cu = 0, cv = 0;  // canvas anchor
  double px = 0, py = 0;  // image position of the anchor
  double angle = 0;       // radians
  double radius = 0;      // 0 => straight baseline
  double bend = 1;        // +1 arc center below the text, -1 above

  cv::Point2d forward(double u, double v) const {
    double s = u - cu, t = v - cv, x = s, y = t;
    if (radius > 0) {
      const double phi = s / radius;
      const double r = radius - bend * t;
      x = r * std::sin(phi);
      y = bend * (radius - r * std::cos(phi));
    }
    const double c = std::cos(angle), sn = std::sin(angle);
    return {px + c * x - sn * y, py + sn * x + c * y};
  }

  cv::Point2d inverse(double x, double y) const {
    const double c = std::cos(angle), sn = std::sin(angle);
    const double dx = x - px, dy = y - py;
    double lx = c * dx + sn * dy, ly = -sn * dx + c * dy;
    if (radius > 0) {
      const double cy = ly - bend * radius;  // offset from the arc center
      const double r = std::hypot(lx, cy);
      const double phi = std::atan2(lx, -bend * cy);
      return {radius * phi + cu, bend * (radius - r) + cv};
    }
    return {lx + cu, ly + cv};
  }
};

cv::Mat make_background(Rng& rng, int w, int h, double& mean_level) {
  mean_level = rng.uniform(30, 225);
  cv::Mat coarse(4, 4, CV_32FC3);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      coarse.at<cv::Vec3f>(y, x) = cv::Vec3f(float(mean_level + rng.uniform(-25, 25)),
                                              float(mean_level + rng.uniform(-25, 25)),
                                              float(mean_level + rng.uniform(-25, 25)));
    }
  }
  cv::Mat bg;
  cv::resize(coarse, bg, cv::Size(w, h), 0, 0, cv::INTER_CUBIC);
  cv::Mat grain(h, w, CV_32FC3);
  auto* g = grain.ptr<float>();
  for (int i = 0; i < w * h * 3; ++i) g[i] = float(rng.uniform(-6, 6));
  bg += grain;
  return bg;
}

std::string random_word(Rng& rng, const SyntheticProfile& p) {
  const int len = rng.uniform_int(p.min_word_len, p.max_word_len);
  std::string s;
  for (int i = 0; i < len; ++i) s.push_back(p.alphabet[rng.uniform_int(0, int(p.alphabet.size()) - 1)]);
  return s;
}

struct Placed {
  TextInstance instance;
  cv::Mat alpha;
  cv::Rect2d bounds;
};

bool try_place_word(Rng& rng, const SyntheticProfile& p, const std::vector<Placed>& placed, Placed& out) {
  const std::string word = random_word(rng, p);
  const int font = rng.chance(0.5) ? cv::FONT_HERSHEY_SIMPLEX : cv::FONT_HERSHEY_DUPLEX;
  const double scale = rng.uniform(p.min_font_scale, p.max_font_scale);
  int baseline = 0;
  const auto size = cv::getTextSize(word, font, scale, p.thickness, &baseline);
  const int margin = p.thickness + 4;
  cv::Mat canvas = cv::Mat::zeros(size.height + baseline + 2 * margin, size.width + 2 * margin, CV_8U);
  cv::putText(canvas, word, cv::Point(margin, margin + size.height), font, scale, cv::Scalar(255), p.thickness,
              cv::LINE_AA);
  cv::Mat nz;
  cv::findNonZero(canvas, nz);
  if (nz.empty()) return false;
  const cv::Rect ink = cv::boundingRect(nz);
  const double u0 = ink.x - kPad, v0 = ink.y - kPad;
  const double u1 = ink.x + ink.width + kPad, v1 = ink.y + ink.height + kPad;

  WordTransform tf;
  tf.cu = (u0 + u1) / 2;
  tf.cv = (v0 + v1) / 2;
  tf.angle = rng.uniform(-p.max_rotation_deg, p.max_rotation_deg) * std::numbers::pi / 180.0;
  if (rng.chance(p.curved_fraction)) {
    tf.radius = (u1 - u0) * rng.uniform(0.9, 1.8);
    tf.bend = rng.chance(0.5) ? 1.0 : -1.0;
  }

  for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
    tf.px = rng.uniform(0, p.width);
    tf.py = rng.uniform(0, p.height);
    geometry::Polygon poly;
    if (tf.radius > 0) {
      for (int i = 0; i < kArcSamples; ++i) {
        auto q = tf.forward(u0 + (u1 - u0) * i / (kArcSamples - 1), v0);
        poly.vertices.push_back({q.x, q.y});
      }
      for (int i = kArcSamples - 1; i >= 0; --i) {
        auto q = tf.forward(u0 + (u1 - u0) * i / (kArcSamples - 1), v1);
        poly.vertices.push_back({q.x, q.y});
      }
    } else {
      for (auto [u, v] : {std::pair{u0, v0}, {u1, v0}, {u1, v1}, {u0, v1}}) {
        auto q = tf.forward(u, v);
        poly.vertices.push_back({q.x, q.y});
      }
    }
    double x0 = 1e9, y0 = 1e9, x1 = -1e9, y1 = -1e9;
    for (const auto& v : poly.vertices) {
      x0 = std::min(x0, v.x);
      y0 = std::min(y0, v.y);
      x1 = std::max(x1, v.x);
      y1 = std::max(y1, v.y);
    }
    if (x0 < 1 || y0 < 1 || x1 > p.width - 1 || y1 > p.height - 1) continue;
    const cv::Rect2d bounds(x0 - 2, y0 - 2, x1 - x0 + 4, y1 - y0 + 4);
    const bool overlaps = std::any_of(placed.begin(), placed.end(),
                                      [&](const Placed& o) { return (o.bounds & bounds).area() > 0; });
    if (overlaps) continue;

    cv::Mat map_x(p.height, p.width, CV_32F), map_y(p.height, p.width, CV_32F);
    for (int y = 0; y < p.height; ++y) {
      for (int x = 0; x < p.width; ++x) {
        auto uv = tf.inverse(x, y);
        map_x.at<float>(y, x) = float(uv.x);
        map_y.at<float>(y, x) = float(uv.y);
      }
    }
    cv::Mat canvas_f;
    canvas.convertTo(canvas_f, CV_32F, 1.0 / 255.0);
    cv::remap(canvas_f, out.alpha, map_x, map_y, cv::INTER_LINEAR, cv::BORDER_CONSTANT, 0);
    out.instance.polygon = std::move(poly);
    out.instance.text = word;
    out.bounds = bounds;
    return true;
  }
  return false;
}

}  // namespace

SyntheticSample generate_synthetic_sample(std::uint64_t seed, const SyntheticProfile& profile) {
  profile.validate();
  Rng rng(seed);
  for (int layout = 0; layout < kLayoutAttempts; ++layout) {
    double level = 0;
    cv::Mat bg = make_background(rng, profile.width, profile.height, level);
    const int target = rng.uniform_int(profile.min_words, profile.max_words);
    std::vector<Placed> placed;
    for (int i = 0; i < target; ++i) {
      Placed word;
      if (!try_place_word(rng, profile, placed, word)) break;  // overflow: keep fewer words
      placed.push_back(std::move(word));
    }
    if (int(placed.size()) < profile.min_words) continue;

    SyntheticSample sample;
    const double ink_level = level > 128 ? rng.uniform(0, level - 100) : rng.uniform(level + 100, 255);
    for (auto& w : placed) {
      const cv::Vec3f color(float(std::clamp(ink_level + rng.uniform(-15, 15), 0.0, 255.0)),
                            float(std::clamp(ink_level + rng.uniform(-15, 15), 0.0, 255.0)),
                            float(std::clamp(ink_level + rng.uniform(-15, 15), 0.0, 255.0)));
      for (int y = 0; y < profile.height; ++y) {
        auto* row = bg.ptr<cv::Vec3f>(y);
        const auto* a = w.alpha.ptr<float>(y);
        for (int x = 0; x < profile.width; ++x) row[x] = row[x] * (1 - a[x]) + color * a[x];
      }
      if (profile.dont_care_fraction > 0 && rng.chance(profile.dont_care_fraction)) {
        w.instance.care = false;
        w.instance.text = "###";
      }
      sample.instances.push_back(w.instance);
      sample.ink.push_back(w.alpha);
    }
    bg.convertTo(sample.image, CV_8UC3);
    return sample;
  }
  throw DataError("synthetic: could not lay out " + std::to_string(profile.min_words) + " words in " +
                  std::to_string(profile.width) + "x" + std::to_string(profile.height) + " after " +
                  std::to_string(kLayoutAttempts) + " attempts (seed " + std::to_string(seed) + ")");
}

}  // namespace spotter::data
