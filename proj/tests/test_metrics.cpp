#include "testing.hpp"

#include <algorithm>
#include <random>

#include "golden_metrics.hpp"
#include "spotter/errors.hpp"
#include "spotter/metrics.hpp"

using namespace spotter;
using namespace spotter::metrics;
using golden::gt;
using golden::pred;

TEST_CASE("edit distance") {
  CHECK(edit_distance("", "") == 0);
  CHECK(edit_distance("abc", "") == 3);
  CHECK(edit_distance("kitten", "sitting") == 3);
  CHECK(edit_distance("abc", "abd") == 1);
  CHECK(edit_distance("hel1o", "hello") == 1);
  CHECK(edit_distance("hel1o", "world") == 5);
}

TEST_CASE("edit distance is a metric on sampled strings") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> len(0, 6), ch(0, 2);
  auto word = [&] {
    std::string s(len(rng), 'a');
    for (auto& c : s) c = char('a' + ch(rng));
    return s;
  };
  for (int i = 0; i < 2000; ++i) {
    const auto a = word(), b = word(), c = word();
    CHECK(edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c));
    CHECK(edit_distance(a, b) == edit_distance(b, a));
    CHECK((edit_distance(a, b) == 0) == (a == b));
  }
}

TEST_CASE("lexicon correction") {
  CHECK(correct_with_lexicon("hel1o", {"hello", "world"}) == "hello");
  CHECK(correct_with_lexicon("ab", {"cb", "ac"}) == "ac");  // tie -> lexicographically smallest
  CHECK_THROWS_AS(correct_with_lexicon("x", {}), ConfigError);
  CHECK(e2e_hmean({pred(0, "hel1o", 0.9)}, {gt(0, "hello")}, std::vector<std::string>{"hello", "world"}) == 1.0);
  CHECK(e2e_hmean({pred(0, "hel1o", 0.9)}, {gt(0, "hello")}) == 0.0);
  CHECK_THROWS_AS(e2e_hmean({}, {}, std::vector<std::string>{}), ConfigError);
}

TEST_CASE("metric examples") {
  const std::vector<data::TextInstance> gts = {gt(0, "ab"), gt(20, "cd")};
  auto d = detection_hmean({pred(0, "x", 0.5), pred(20, "y", 0.5)}, gts);
  CHECK(d.precision == 1.0);
  CHECK(d.recall == 1.0);
  CHECK(d.hmean == 1.0);
  d = detection_hmean({}, gts);
  CHECK(d.hmean == 0.0);
  d = detection_hmean({pred(0, "ab", 0.5)}, gts);
  CHECK(d.precision == 1.0);
  CHECK(d.recall == 0.5);
  CHECK(d.hmean == 2.0 / 3);
  CHECK(e2e_hmean({pred(0, "zz", 0.5), pred(20, "zz", 0.5)}, gts) == 0.0);
  CHECK(one_minus_ned({pred(0, "ab", 0.5), pred(20, "cd", 0.5)}, gts) == 1.0);
  CHECK(one_minus_ned({pred(0, "abd", 0.5)}, {gt(0, "abc")}) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(one_minus_ned({pred(0, "ab", 0.5)}, gts) == 0.5);
  CHECK(one_minus_ned({pred(0, "", 0.5)}, {gt(0, "")}) == 1.0);
}

TEST_CASE("false positives in 1-NED are configurable") {
  const std::vector<data::TextInstance> gts = {gt(0, "ab")};
  const std::vector<data::SpottingResult> preds = {pred(0, "ab", 0.9), pred(40, "ab", 0.8)};
  CHECK(one_minus_ned(preds, gts, 0.5, true) == 0.5);
  CHECK(one_minus_ned(preds, gts, 0.5, false) == 1.0);
}

TEST_CASE("golden fixture per case") {
  for (const auto& c : golden::cases()) {
    CAPTURE(c.name);
    const auto d = detection_hmean(c.preds, c.gts);
    CHECK(d.precision == c.p);
    CHECK(d.recall == c.r);
    CHECK(d.hmean == c.h);
    CHECK(e2e_hmean(c.preds, c.gts) == c.e2e);
    CHECK(one_minus_ned(c.preds, c.gts) == doctest::Approx(c.one_minus_ned).epsilon(1e-15));
  }
}

TEST_CASE("golden fixture totals") {
  Evaluator ev;
  for (const auto& c : golden::cases()) ev.add_image(c.preds, c.gts);
  const golden::Totals t;
  CHECK(ev.counts().matched == t.matched);
  CHECK(ev.counts().correct == t.correct);
  CHECK(ev.counts().preds == t.preds);
  CHECK(ev.counts().gts == t.gts);
  CHECK(ev.detection().precision == t.p);
  CHECK(ev.detection().recall == t.r);
  CHECK(ev.detection().hmean == t.h);
  CHECK(ev.e2e_none() == t.e2e);
  CHECK(ev.word_accuracy() == t.word_accuracy);
  CHECK(ev.one_minus_ned() == doctest::Approx(t.one_minus_ned).epsilon(1e-15));
  const auto r = ev.report();
  CHECK(r["detection"]["H"].get<double>() == t.h);
  CHECK(r["counts"]["gts"].get<long long>() == t.gts);
}

TEST_CASE("matching details") {
  const auto m = match_image({pred(1, "cd", 0.6), pred(2, "cd", 0.9)}, {gt(0, "ab"), gt(3, "cd")});
  REQUIRE(m.pairs.size() == 2);
  CHECK(m.pairs[0] == std::pair<int, int>{0, 0});
  CHECK(m.pairs[1] == std::pair<int, int>{1, 1});
  // Equal confidence: the lower index goes first.
  const auto tie = match_image({pred(0, "a", 0.5), pred(0, "b", 0.5)}, {gt(0, "a")});
  CHECK(tie.pairs == std::vector<std::pair<int, int>>{{0, 0}});
  CHECK(tie.unmatched_preds == std::vector<int>{1});
}

TEST_CASE("metrics are invariant to prediction reordering and bounded") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pos(0, 60), conf(0, 1);
  std::uniform_int_distribution<int> n(0, 6), txt(0, 2);
  const std::vector<std::string> words = {"ab", "ba", "abc"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<data::TextInstance> gts;
    std::vector<data::SpottingResult> preds;
    for (int i = n(rng); i > 0; --i) gts.push_back(gt(std::round(pos(rng)), words[txt(rng)], txt(rng) != 0));
    for (int i = n(rng); i > 0; --i) preds.push_back(pred(std::round(pos(rng)), words[txt(rng)], conf(rng)));
    Evaluator a;
    a.add_image(preds, gts);
    auto shuffled = preds;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    Evaluator b;
    b.add_image(shuffled, gts);
    CHECK(a.report() == b.report());
    for (double v : {a.detection().precision, a.detection().recall, a.detection().hmean, a.e2e_none(),
                     a.one_minus_ned(), a.word_accuracy()}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(a.e2e_none() <= a.detection().hmean);
  }
}

TEST_CASE("empty evaluation") {
  Evaluator ev;
  ev.add_image({}, {});
  CHECK(ev.detection().hmean == 0.0);
  CHECK(ev.counts().gts == 0);
  CHECK(ev.counts().preds == 0);
  CHECK(ev.one_minus_ned() == 0.0);
}

TEST_CASE("lexicon from dataset") {
  data::Dataset ds;
  ds.records.push_back({"a.png", {gt(0, "Ab"), gt(20, "ab"), gt(40, "cc", false), gt(60, "")}});
  CHECK(build_lexicon(ds) == std::vector<std::string>{"ab"});
}
