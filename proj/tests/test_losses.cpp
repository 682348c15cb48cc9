#include "testing.hpp"

#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "spotter/errors.hpp"
#include "spotter/geometry.hpp"
#include "spotter/losses.hpp"

using namespace spotter;
using namespace spotter::losses;

namespace {

oracle::Matrix random_matrix(std::mt19937_64& rng, int r, int c) {
  std::uniform_real_distribution<double> u(0, 10);
  oracle::Matrix m(r, std::vector<double>(c));
  for (auto& row : m) {
    for (auto& v : row) v = u(rng);
  }
  return m;
}

torch::Tensor random_boxes(int n) {
  auto c = torch::rand({n, 2}, torch::kDouble) * 0.6 + 0.2;
  auto s = torch::rand({n, 2}, torch::kDouble) * 0.3 + 0.05;
  return torch::cat({c, s}, 1);
}

mask_codec::PcaBasis small_basis(int n_pca) {
  auto m = (torch::rand({200, mask_codec::kMaskDim}) > 0.5).to(torch::kFloat);
  return mask_codec::fit_basis(m, n_pca);
}

}  // namespace

TEST_CASE("hungarian examples") {
  auto a = hungarian_assign(oracle::Matrix{{0, 1}, {1, 0}});
  CHECK(a.pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
  CHECK(a.total_cost == 0.0);
  auto b = hungarian_assign(oracle::Matrix{{1, 2}, {2, 1}});
  CHECK(b.pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
  CHECK(b.total_cost == 2.0);
  CHECK(hungarian_assign(oracle::Matrix{}).pairs.empty());
}

TEST_CASE("hungarian equals brute force on rectangular and square matrices") {
  std::mt19937_64 rng(1);
  for (int r = 1; r <= 6; ++r) {
    for (int c = 1; c <= 6; ++c) {
      for (int t = 0; t < 10; ++t) {
        auto m = random_matrix(rng, r, c);
        auto a = hungarian_assign(m);
        CHECK(a.pairs.size() == std::size_t(std::min(r, c)));
        double total = 0;
        std::vector<char> rows(r, 0), cols(c, 0);
        for (auto [i, j] : a.pairs) {
          CHECK_FALSE(rows[i]);
          CHECK_FALSE(cols[j]);
          rows[i] = cols[j] = 1;
          total += m[i][j];
        }
        CHECK(total == doctest::Approx(oracle::brute_force_min(m)).epsilon(1e-12));
        CHECK(a.total_cost == doctest::Approx(total).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("hungarian is invariant to positive scaling") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    auto m = random_matrix(rng, 5, 4);
    auto scaled = m;
    for (auto& row : scaled) {
      for (auto& v : row) v *= 3.7;
    }
    CHECK(hungarian_assign(m).pairs == hungarian_assign(scaled).pairs);
  }
}

TEST_CASE("hungarian rejects non-finite costs and ragged input") {
  CHECK_THROWS_AS(hungarian_assign(oracle::Matrix{{0, NAN}, {1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(hungarian_assign(oracle::Matrix{{0, INFINITY}, {1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(hungarian_assign(oracle::Matrix{{0, 1}, {1}}), std::invalid_argument);
  CHECK_THROWS_AS(hungarian_assign(torch::full({2, 2}, NAN, torch::kDouble)), std::invalid_argument);
}

TEST_CASE("focal loss") {
  CHECK(focal_loss(20.0, 1) < 1e-9);
  CHECK(focal_loss(-20.0, 0) < 1e-9);
  CHECK(focal_loss(0.0, 1, 1.0, 0.0) == doctest::Approx(std::log(2.0)));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 3);
  for (int i = 0; i < 200; ++i) {
    const double x = n(rng);
    const int t = i % 2;
    CHECK(focal_loss(x, t) == doctest::Approx(oracle::focal(x, t)).epsilon(1e-7));
  }
  auto logits = torch::randn({50}, torch::kDouble) * 3;
  auto targets = (torch::rand({50}, torch::kDouble) > 0.5).to(torch::kDouble);
  auto v = sigmoid_focal(logits, targets, {});
  for (int i = 0; i < 50; ++i) {
    CHECK(v[i].item<double>() ==
          doctest::Approx(oracle::focal(logits[i].item<double>(), int(targets[i].item<double>()))).epsilon(1e-7));
  }
}

TEST_CASE("match cost matrix") {
  torch::manual_seed(4);
  auto basis = small_basis(8);
  GtSet gt;
  gt.boxes = random_boxes(3);
  gt.masks = (torch::rand({3, mask_codec::kMaskDim}) > 0.5).to(torch::kFloat);
  gt.codes = mask_codec::encode(gt.masks, basis).to(torch::kDouble);
  StagePrediction pred{torch::randn({5}, torch::kDouble), random_boxes(5), torch::randn({5, 8}, torch::kDouble)};
  MatchWeights w;
  auto cost = match_cost_matrix(pred, gt, w);
  REQUIRE(cost.sizes() == torch::IntArrayRef({5, 3}));

  SUBCASE("equals a per-term oracle") {
    auto pb = oracle::to_vector(pred.boxes), gb = oracle::to_vector(gt.boxes);
    for (int i = 0; i < 5; ++i) {
      const double x = pred.logits[i].item<double>();
      for (int j = 0; j < 3; ++j) {
        const double expected =
            w.cls * (oracle::focal(x, 1) - oracle::focal(x, 0)) + w.l1 * oracle::l1(&pb[4 * i], &gb[4 * j]) +
            w.giou * (1 - oracle::giou(oracle::corners(&pb[4 * i]), oracle::corners(&gb[4 * j]))) +
            w.mask * oracle::cosine_cost(oracle::to_vector(pred.codes[i]), oracle::to_vector(gt.codes[j]));
        CHECK(cost[i][j].item<double>() == doctest::Approx(expected).epsilon(1e-6));
      }
    }
  }
  SUBCASE("a perfect prediction is the row minimum") {
    StagePrediction p2 = pred;
    p2.logits = pred.logits.clone();
    p2.boxes = pred.boxes.clone();
    p2.codes = pred.codes.clone();
    p2.logits[0] = 15.0;
    p2.boxes[0] = gt.boxes[1];
    p2.codes[0] = gt.codes[1];
    auto c2 = match_cost_matrix(p2, gt, w);
    CHECK(c2[0].argmin().item<int64_t>() == 1);
    CHECK(c2.select(1, 1).argmin().item<int64_t>() == 0);
  }
  SUBCASE("duplicate gts give equal columns") {
    GtSet dup = gt;
    dup.boxes = torch::cat({gt.boxes, gt.boxes.slice(0, 0, 1)});
    dup.codes = torch::cat({gt.codes, gt.codes.slice(0, 0, 1)});
    dup.masks = torch::cat({gt.masks, gt.masks.slice(0, 0, 1)});
    auto c3 = match_cost_matrix(pred, dup, w);
    CHECK(torch::equal(c3.select(1, 0), c3.select(1, 3)));
  }
  SUBCASE("zero-norm codes take the maximal cosine cost") {
    StagePrediction p3 = pred;
    p3.codes = torch::zeros_like(pred.codes);
    MatchWeights mask_only{0, 0, 0, 1};
    auto c4 = match_cost_matrix(p3, gt, mask_only);
    CHECK(torch::allclose(c4, torch::ones_like(c4)));
  }
}

TEST_CASE("dice") {
  auto p = torch::rand({4, 100}, torch::kDouble);
  CHECK(dice_loss(p, p).abs().max().item<double>() < 1e-12);
  auto g = (torch::rand({4, 100}, torch::kDouble) > 0.5).to(torch::kDouble);
  auto d = dice_loss(p, g);
  for (int i = 0; i < 4; ++i) {
    CHECK(d[i].item<double>() == doctest::Approx(oracle::dice(oracle::to_vector(p[i]), oracle::to_vector(g[i]))).epsilon(1e-9));
  }
  CHECK(dice_loss(torch::zeros({1, 10}), torch::ones({1, 10})).item<double>() == doctest::Approx(1.0));
}

TEST_CASE("stage detection loss") {
  torch::manual_seed(5);
  auto basis = small_basis(8).to(torch::kCPU, torch::kDouble);
  GtSet gt;
  gt.boxes = random_boxes(2);
  gt.masks = (torch::rand({2, mask_codec::kMaskDim}) > 0.5).to(torch::kDouble);
  // Codes of masks that lie in the basis span, so a perfect prediction exists.
  gt.codes = torch::randn({2, 8}, torch::kDouble);
  gt.masks = mask_codec::decode(gt.codes, basis).clamp(0, 1);
  gt.codes = mask_codec::encode(gt.masks, basis);
  MatchWeights w;

  SUBCASE("perfect matched predictions zero the box and mask terms") {
    StagePrediction pred{torch::tensor({30.0, 30.0, -30.0}, torch::kDouble),
                         torch::cat({gt.boxes, random_boxes(1)}), torch::cat({gt.codes, torch::zeros({1, 8}, torch::kDouble)})};
    Assignment a{{{0, 0}, {1, 1}}, 0};
    auto lb = detection_loss_stage(pred, gt, a, w, basis);
    CHECK(lb.terms["l1"].item<double>() < 1e-12);
    CHECK(lb.terms["giou"].item<double>() < 1e-12);
    CHECK(lb.terms["mask_l2"].item<double>() < 1e-12);
    CHECK(lb.terms["cls"].item<double>() < 1e-9);
    CHECK(lb.total.item<double>() >= 0);
  }
  SUBCASE("random instance matches the naive total and stays nonnegative") {
    StagePrediction pred{torch::randn({4}, torch::kDouble), random_boxes(4), torch::randn({4, 8}, torch::kDouble)};
    Assignment a{{{1, 0}, {3, 1}}, 0};
    auto lb = detection_loss_stage(pred, gt, a, w, basis);
    double cls = 0;
    for (int i = 0; i < 4; ++i) cls += oracle::focal(pred.logits[i].item<double>(), (i == 1 || i == 3) ? 1 : 0);
    cls /= 2;
    double l1 = 0, gi = 0, l2 = 0, dc = 0;
    auto pb = oracle::to_vector(pred.boxes), gb = oracle::to_vector(gt.boxes);
    for (auto [r, c] : a.pairs) {
      l1 += oracle::l1(&pb[4 * r], &gb[4 * c]);
      gi += 1 - oracle::giou(oracle::corners(&pb[4 * r]), oracle::corners(&gb[4 * c]));
      auto pc = oracle::to_vector(pred.codes[r]), gc = oracle::to_vector(gt.codes[c]);
      double s = 0;
      for (int k = 0; k < 8; ++k) s += (pc[k] - gc[k]) * (pc[k] - gc[k]);
      l2 += s / 8;
      dc += oracle::dice(oracle::to_vector(mask_codec::decode_soft(pred.codes[r], basis)), oracle::to_vector(gt.masks[c]));
    }
    const double expected = w.cls * cls + w.l1 * l1 / 2 + w.giou * gi / 2 + w.mask * (l2 / 2 + dc / 2);
    CHECK(lb.total.item<double>() == doctest::Approx(expected).epsilon(1e-9));
    CHECK(lb.total.item<double>() >= 0);
  }
  SUBCASE("no gts: background focal only") {
    GtSet empty{torch::zeros({0, 4}, torch::kDouble), torch::zeros({0, 784}, torch::kDouble), torch::zeros({0, 8}, torch::kDouble)};
    StagePrediction pred{torch::randn({3}, torch::kDouble), random_boxes(3), torch::randn({3, 8}, torch::kDouble)};
    auto lb = detection_loss_stage(pred, empty, {}, w, basis);
    double cls = 0;
    for (int i = 0; i < 3; ++i) cls += oracle::focal(pred.logits[i].item<double>(), 0);
    CHECK(lb.total.item<double>() == doctest::Approx(w.cls * cls).epsilon(1e-9));
  }
}

TEST_CASE("stage loss gradients match finite differences") {
  torch::manual_seed(6);
  std::mt19937_64 rng(6);
  auto basis = small_basis(6).to(torch::kCPU, torch::kDouble);
  GtSet gt{random_boxes(2), (torch::rand({2, 784}, torch::kDouble) > 0.5).to(torch::kDouble), torch::Tensor()};
  gt.codes = mask_codec::encode(gt.masks, basis);
  auto logits = torch::randn({4}, torch::kDouble).requires_grad_(true);
  auto boxes = random_boxes(4).requires_grad_(true);
  auto codes = (torch::randn({4, 6}, torch::kDouble) * 0.1).requires_grad_(true);
  Assignment a{{{0, 1}, {2, 0}}, 0};
  auto f = [&] { return detection_loss_stage({logits, boxes, codes}, gt, a, {}, basis).total; };
  CHECK(oracle::finite_difference_error(f, logits, 4, rng) < 1e-3);
  CHECK(oracle::finite_difference_error(f, boxes, 10, rng) < 1e-3);
  CHECK(oracle::finite_difference_error(f, codes, 10, rng) < 1e-3);
}

TEST_CASE("recognition loss") {
  const int v = 6;
  auto targets = torch::randint(0, v, {3, 5}, torch::kLong);
  SUBCASE("certain predictions give zero") {
    auto lp = torch::full({3, 5, v}, -1e9, torch::kDouble).scatter(2, targets.unsqueeze(2), 0.0);
    CHECK(recognition_loss(lp, targets).item<double>() == doctest::Approx(0.0));
  }
  SUBCASE("uniform predictions give log V") {
    auto lp = torch::full({3, 5, v}, -std::log(double(v)), torch::kDouble);
    CHECK(recognition_loss(lp, targets).item<double>() == doctest::Approx(std::log(double(v))));
  }
  SUBCASE("random distributions match the direct oracle") {
    auto lp = torch::log_softmax(torch::randn({3, 5, v}, torch::kDouble), -1);
    std::vector<std::vector<std::vector<double>>> naive(3, std::vector<std::vector<double>>(5));
    std::vector<std::vector<int>> tg(3, std::vector<int>(5));
    for (int m = 0; m < 3; ++m) {
      for (int t = 0; t < 5; ++t) {
        naive[m][t] = oracle::to_vector(lp[m][t]);
        tg[m][t] = int(targets[m][t].item<int64_t>());
      }
    }
    CHECK(recognition_loss(lp, targets).item<double>() == doctest::Approx(oracle::recognition_loss(naive, tg)).epsilon(1e-9));
  }
  CHECK(recognition_loss(torch::zeros({0, 5, v}), torch::zeros({0, 5}, torch::kLong)).item<double>() == 0.0);
}

TEST_CASE("loss weight validation") {
  MatchWeights w{-1, 1, 1, 1};
  CHECK_THROWS_AS(w.validate(), ConfigError);
  MatchWeights z{0, 0, 0, 0};
  CHECK_THROWS_AS(z.validate(), ConfigError);
}
