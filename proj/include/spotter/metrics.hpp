#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spotter/data.hpp"

namespace spotter::metrics {

int edit_distance(const std::string& a, const std::string& b);

// Lexicon word closest in edit distance; ties go to the lexicographically smallest.
std::string correct_with_lexicon(const std::string& word, const std::vector<std::string>& lexicon);

struct ImageMatch {
  std::vector<std::pair<int, int>> pairs;  // (pred index, gt index), care gts only
  std::vector<int> unmatched_preds;        // counted as false positives
  std::vector<int> ignored_preds;          // absorbed by do-not-care gts
  std::vector<int> unmatched_gts;          // care gts without a prediction
};

// Greedy one-to-one matching in descending confidence (ties: lower index
// first). Each prediction takes the unmatched care gt, or any do-not-care gt,
// with the highest IoU >= thr; do-not-care hits are ignored.
ImageMatch match_image(const std::vector<data::SpottingResult>& preds, const std::vector<data::TextInstance>& gts,
                       double iou_thr = 0.5);

struct Counts {
  long long matched = 0;  // spatial matches
  long long correct = 0;  // spatial matches with equal text
  long long preds = 0;    // non-ignored predictions
  long long gts = 0;      // care gts
};

struct Prf {
  double precision = 0;
  double recall = 0;
  double hmean = 0;
};

Prf prf(long long tp, long long preds, long long gts);

// Single-image convenience forms.
Prf detection_hmean(const std::vector<data::SpottingResult>& preds, const std::vector<data::TextInstance>& gts,
                    double iou_thr = 0.5);
// `lexicon` set => predictions are first corrected against it (must be non-empty).
double e2e_hmean(const std::vector<data::SpottingResult>& preds, const std::vector<data::TextInstance>& gts,
                 const std::optional<std::vector<std::string>>& lexicon = std::nullopt, double iou_thr = 0.5);
double one_minus_ned(const std::vector<data::SpottingResult>& preds, const std::vector<data::TextInstance>& gts,
                     double iou_thr = 0.5, bool penalize_false_positives = true);

// Dataset-level accumulation of every reported metric.
class Evaluator {
 public:
  explicit Evaluator(std::vector<std::string> full_lexicon = {}, double iou_thr = 0.5,
                     bool ned_penalize_false_positives = true);

  void add_image(const std::vector<data::SpottingResult>& preds, const std::vector<data::TextInstance>& gts);

  Prf detection() const;
  double e2e_none() const;
  double e2e_full() const;  // 0 when no lexicon was supplied
  double one_minus_ned() const;
  double word_accuracy() const;  // correct / care gts
  const Counts& counts() const { return none_; }

  // {detection: {P,R,H}, e2e_none, e2e_full, one_minus_ned, word_accuracy, counts: {...}}
  nlohmann::json report() const;

 private:
  std::vector<std::string> lexicon_;
  double iou_thr_;
  bool ned_fp_;
  Counts none_;
  long long full_correct_ = 0;
  double ned_sum_ = 0;
  long long ned_items_ = 0;
};

// All care transcriptions of a dataset, deduplicated and case-folded.
std::vector<std::string> build_lexicon(const data::Dataset& ds);

}  // namespace spotter::metrics
