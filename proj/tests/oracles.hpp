#pragma once

// Independent reference implementations used as test oracles. These
// deliberately re-derive results from first principles (plain loops
// over the counter rules and per-datapoint sets) and never call into
// the code paths they check.

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "factcheck/core.hpp"
#include "factcheck/dataset.hpp"

namespace oracles {

using factcheck::ErrorLabel;
using factcheck::kAllLabels;
using factcheck::kLabelCount;
using factcheck::LabelSet;

// verdicts[label index] = would the model answer Yes for this label.
using VerdictAssignment = std::array<bool, kLabelCount>;

struct GatingOutcome {
  LabelSet predicted;
  std::size_t queries = 0;
};

// Direct transcription of the counter rules: walk the order, count
// positives, stop when the counter reaches the threshold.
inline GatingOutcome simulate_gating(const std::array<ErrorLabel, kLabelCount>& order,
                                     int threshold, const VerdictAssignment& verdicts) {
  GatingOutcome outcome;
  int counter = 0;
  for (ErrorLabel label : order) {
    ++outcome.queries;
    if (verdicts[static_cast<std::size_t>(label)]) {
      outcome.predicted.insert(label);
      ++counter;
      if (counter == threshold) {
        break;
      }
    }
  }
  return outcome;
}

// Label-major sweep: the outer loop visits label positions, the inner
// loop visits datapoints, skipping any datapoint whose counter already
// reached the threshold.
inline std::map<std::string, LabelSet> label_major_reference(
    const std::vector<std::string>& pair_ids,
    const std::array<ErrorLabel, kLabelCount>& order, int threshold,
    const std::function<bool(const std::string&, ErrorLabel)>& verdict) {
  std::map<std::string, LabelSet> predicted;
  std::map<std::string, int> counter;
  std::map<std::string, bool> stopped;
  for (const std::string& id : pair_ids) {
    predicted[id] = LabelSet{};
    counter[id] = 0;
    stopped[id] = false;
  }
  for (std::size_t position = 0; position < kLabelCount; ++position) {
    ErrorLabel label = order[position];
    for (const std::string& id : pair_ids) {
      if (stopped[id]) {
        continue;
      }
      if (verdict(id, label)) {
        predicted[id].insert(label);
        ++counter[id];
        if (counter[id] == threshold) {
          stopped[id] = true;
        }
      }
    }
  }
  return predicted;
}

// Plain vote counting for the ensemble rule.
inline LabelSet naive_ensemble(const std::vector<LabelSet>& members, int min_votes) {
  LabelSet final;
  for (ErrorLabel label : kAllLabels) {
    int votes = 0;
    for (const LabelSet& member : members) {
      if (member.contains(label)) {
        ++votes;
      }
    }
    if (votes >= min_votes) {
      final.insert(label);
    }
  }
  return final;
}

// Naive per-datapoint metric computation, kept structurally different
// from the library: no confusion-matrix struct, just counting loops.
struct NaiveMetrics {
  double macro_f1_positive = 0.0;
  double macro_f1_both = 0.0;
};

inline NaiveMetrics naive_metrics(const std::vector<std::pair<LabelSet, LabelSet>>& pred_gold,
                                  bool zero_division_one = false) {
  auto f1 = [&](long tp, long fp, long fn) {
    if (2 * tp + fp + fn == 0) {
      return zero_division_one ? 1.0 : 0.0;
    }
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  };
  NaiveMetrics metrics;
  double positive_sum = 0.0;
  double both_sum = 0.0;
  for (ErrorLabel label : kAllLabels) {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;
    for (const auto& [pred, gold] : pred_gold) {
      bool p = pred.contains(label);
      bool g = gold.contains(label);
      if (p && g) {
        ++tp;
      } else if (p && !g) {
        ++fp;
      } else if (!p && g) {
        ++fn;
      } else {
        ++tn;
      }
    }
    positive_sum += f1(tp, fp, fn);
    both_sum += f1(tp, fp, fn) + f1(tn, fn, fp);
  }
  metrics.macro_f1_positive = positive_sum / 4.0;
  metrics.macro_f1_both = both_sum / 8.0;
  return metrics;
}

}  // namespace oracles
