#include "spotter/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>

#include "spotter/errors.hpp"

namespace spotter::metrics {

namespace {

std::string fold(std::string s) {
  for (auto& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double ned(const std::string& a, const std::string& b) {
  const auto longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  return double(edit_distance(a, b)) / double(longest);
}

}  // namespace

int edit_distance(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = int(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string correct_with_lexicon(const std::string& word, const std::vector<std::string>& lexicon) {
  if (lexicon.empty()) throw ConfigError("lexicon correction requested with an empty lexicon");
  const auto w = fold(word);
  const std::string* best = nullptr;
  int best_d = 0;
  for (const auto& cand : lexicon) {
    const int d = edit_distance(w, fold(cand));
    if (!best || d < best_d || (d == best_d && cand < *best)) {
      best = &cand;
      best_d = d;
    }
  }
  return *best;
}

ImageMatch match_image(const std::vector<data::SpottingResult>& preds, const std::vector<data::TextInstance>& gts,
                       double iou_thr) {
  std::vector<int> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return preds[a].confidence > preds[b].confidence; });
  std::vector<char> taken(gts.size(), 0);
  ImageMatch m;
  for (int pi : order) {
    int best = -1;
    double best_iou = iou_thr;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].care && taken[g]) continue;
      const double v = geometry::polygon_iou(preds[pi].polygon, gts[g].polygon);
      if (v >= best_iou && (best < 0 || v > best_iou)) {
        best = int(g);
        best_iou = v;
      }
    }
    if (best < 0) {
      m.unmatched_preds.push_back(pi);
    } else if (!gts[best].care) {
      m.ignored_preds.push_back(pi);
    } else {
      taken[best] = 1;
      m.pairs.emplace_back(pi, best);
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gts[g].care && !taken[g]) m.unmatched_gts.push_back(int(g));
  }
  std::sort(m.pairs.begin(), m.pairs.end());
  std::sort(m.unmatched_preds.begin(), m.unmatched_preds.end());
  std::sort(m.ignored_preds.begin(), m.ignored_preds.end());
  return m;
}

Prf prf(long long tp, long long preds, long long gts) {
  Prf r;
  r.precision = preds > 0 ? double(tp) / double(preds) : 0.0;
  r.recall = gts > 0 ? double(tp) / double(gts) : 0.0;
  // 2PR/(P+R) reduces to 2tp/(preds+gts); one division keeps it exact for hand-checked ratios.
  r.hmean = tp > 0 ? 2.0 * double(tp) / double(preds + gts) : 0.0;
  return r;
}

Prf detection_hmean(const std::vector<data::SpottingResult>& preds, const std::vector<data::TextInstance>& gts,
                    double iou_thr) {
  Evaluator ev({}, iou_thr);
  ev.add_image(preds, gts);
  return ev.detection();
}

double e2e_hmean(const std::vector<data::SpottingResult>& preds, const std::vector<data::TextInstance>& gts,
                 const std::optional<std::vector<std::string>>& lexicon, double iou_thr) {
  if (lexicon) {
    if (lexicon->empty()) throw ConfigError("e2e_hmean: Full mode needs a non-empty lexicon");
    Evaluator ev(*lexicon, iou_thr);
    ev.add_image(preds, gts);
    return ev.e2e_full();
  }
  Evaluator ev({}, iou_thr);
  ev.add_image(preds, gts);
  return ev.e2e_none();
}

double one_minus_ned(const std::vector<data::SpottingResult>& preds, const std::vector<data::TextInstance>& gts,
                     double iou_thr, bool penalize_false_positives) {
  Evaluator ev({}, iou_thr, penalize_false_positives);
  ev.add_image(preds, gts);
  return ev.one_minus_ned();
}

Evaluator::Evaluator(std::vector<std::string> full_lexicon, double iou_thr, bool ned_penalize_false_positives)
    : lexicon_(std::move(full_lexicon)), iou_thr_(iou_thr), ned_fp_(ned_penalize_false_positives) {}

void Evaluator::add_image(const std::vector<data::SpottingResult>& preds, const std::vector<data::TextInstance>& gts) {
  const auto m = match_image(preds, gts, iou_thr_);
  none_.matched += (long long)m.pairs.size();
  none_.preds += (long long)(preds.size() - m.ignored_preds.size());
  none_.gts += (long long)(m.pairs.size() + m.unmatched_gts.size());
  for (auto [pi, gi] : m.pairs) {
    const auto pred = fold(preds[pi].text);
    const auto gt = fold(gts[gi].text);
    if (pred == gt) ++none_.correct;
    if (!lexicon_.empty() && fold(correct_with_lexicon(pred, lexicon_)) == gt) ++full_correct_;
    ned_sum_ += ned(pred, gt);
    ++ned_items_;
  }
  ned_sum_ += double(m.unmatched_gts.size());
  ned_items_ += (long long)m.unmatched_gts.size();
  if (ned_fp_) {
    ned_sum_ += double(m.unmatched_preds.size());
    ned_items_ += (long long)m.unmatched_preds.size();
  }
}

Prf Evaluator::detection() const { return prf(none_.matched, none_.preds, none_.gts); }
double Evaluator::e2e_none() const { return prf(none_.correct, none_.preds, none_.gts).hmean; }
double Evaluator::e2e_full() const {
  return lexicon_.empty() ? 0.0 : prf(full_correct_, none_.preds, none_.gts).hmean;
}
double Evaluator::one_minus_ned() const { return ned_items_ > 0 ? 1.0 - ned_sum_ / double(ned_items_) : 0.0; }
double Evaluator::word_accuracy() const { return none_.gts > 0 ? double(none_.correct) / double(none_.gts) : 0.0; }

nlohmann::json Evaluator::report() const {
  const auto det = detection();
  return {{"detection", {{"P", det.precision}, {"R", det.recall}, {"H", det.hmean}}},
          {"e2e_none", e2e_none()},
          {"e2e_full", e2e_full()},
          {"one_minus_ned", one_minus_ned()},
          {"word_accuracy", word_accuracy()},
          {"counts",
           {{"matched", none_.matched}, {"correct", none_.correct}, {"predictions", none_.preds}, {"gts", none_.gts}}}};
}

std::vector<std::string> build_lexicon(const data::Dataset& ds) {
  std::set<std::string> words;
  for (const auto& r : ds.records) {
    for (const auto& i : r.instances) {
      if (i.care && !i.text.empty()) words.insert(fold(i.text));
    }
  }
  return {words.begin(), words.end()};
}

}  // namespace spotter::metrics
