#pragma once

// Per-label confusion counts and the two macro-F1 variants.
//
// "Positive only" averages the positive-class F1 of the four labels.
// "Both" additionally scores each label's negative class (absence of
// the label, counted by swapping tp<->tn and fp<->fn) and averages all
// eight values. Reports name the interpretation so downstream readers
// never have to guess which variant a number is.

#include <array>
#include <cstddef>
#include <iomanip>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "factcheck/core.hpp"
#include "factcheck/dataset.hpp"
#include "factcheck/errors.hpp"

namespace factcheck {

// What F1 should be when a class has no true positives and no
// predicted or actual members at all (2*tp + fp + fn == 0).
enum class ZeroDivision { kZero, kOne };

struct ClassCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;
};

struct LabelCounts {
  std::array<ClassCounts, kLabelCount> per_label{};
  std::size_t evaluated = 0;              // N; tp+fp+fn+tn = N for every label
  std::vector<std::string> skipped;       // gold ids with no prediction record
};

// Gold ids with no prediction are scored as predicted-empty (and
// listed in `skipped`), so failed datapoints can never inflate scores.
inline LabelCounts confusion_counts(const std::vector<PredictionRecord>& predictions,
                                    const Dataset& gold) {
  if (!gold.has_gold) {
    throw MissingGoldError("dataset " + gold.source_path + " carries no gold labels");
  }
  std::unordered_map<std::string, LabelSet> predicted_by_id;
  for (const PredictionRecord& record : predictions) {
    if (!predicted_by_id.emplace(record.pair_id, record.predicted).second) {
      throw DuplicateIdError(record.pair_id);
    }
  }
  std::unordered_set<std::string> gold_ids;
  for (const LabeledExample& example : gold.examples) {
    gold_ids.insert(example.pair.id);
  }
  for (const PredictionRecord& record : predictions) {
    if (gold_ids.find(record.pair_id) == gold_ids.end()) {
      throw UnknownIdError(record.pair_id);
    }
  }

  LabelCounts counts;
  counts.evaluated = gold.examples.size();
  for (const LabeledExample& example : gold.examples) {
    LabelSet predicted;
    auto it = predicted_by_id.find(example.pair.id);
    if (it != predicted_by_id.end()) {
      predicted = it->second;
    } else {
      counts.skipped.push_back(example.pair.id);
    }
    for (ErrorLabel label : kAllLabels) {
      ClassCounts& c = counts.per_label[static_cast<std::size_t>(label)];
      const bool in_pred = predicted.contains(label);
      const bool in_gold = example.gold.contains(label);
      if (in_pred && in_gold) {
        ++c.tp;
      } else if (in_pred) {
        ++c.fp;
      } else if (in_gold) {
        ++c.fn;
      } else {
        ++c.tn;
      }
    }
  }
  return counts;
}

inline double f1_from_counts(long tp, long fp, long fn,
                             ZeroDivision zero_division = ZeroDivision::kZero) {
  const long denominator = 2 * tp + fp + fn;
  if (denominator == 0) {
    return zero_division == ZeroDivision::kZero ? 0.0 : 1.0;
  }
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denominator);
}

inline double positive_f1(const ClassCounts& c, ZeroDivision zd) {
  return f1_from_counts(c.tp, c.fp, c.fn, zd);
}

// The negative class of a label treats "label absent" as the positive
// event: tp' = tn, fp' = fn, fn' = fp.
inline double negative_f1(const ClassCounts& c, ZeroDivision zd) {
  return f1_from_counts(c.tn, c.fn, c.fp, zd);
}

inline double macro_f1_positive(const std::vector<PredictionRecord>& predictions,
                                const Dataset& gold,
                                ZeroDivision zd = ZeroDivision::kZero) {
  LabelCounts counts = confusion_counts(predictions, gold);
  double sum = 0.0;
  for (const ClassCounts& c : counts.per_label) {
    sum += positive_f1(c, zd);
  }
  return sum / static_cast<double>(kLabelCount);
}

inline double macro_f1_both(const std::vector<PredictionRecord>& predictions,
                            const Dataset& gold, ZeroDivision zd = ZeroDivision::kZero) {
  LabelCounts counts = confusion_counts(predictions, gold);
  double sum = 0.0;
  for (const ClassCounts& c : counts.per_label) {
    sum += positive_f1(c, zd) + negative_f1(c, zd);
  }
  return sum / static_cast<double>(2 * kLabelCount);
}

struct EvaluationReport {
  LabelCounts counts;
  std::array<double, kLabelCount> f1_positive{};
  std::array<double, kLabelCount> f1_negative{};
  double macro_f1_positive = 0.0;
  double macro_f1_both = 0.0;
  ZeroDivision zero_division = ZeroDivision::kZero;

  std::size_t evaluated() const { return counts.evaluated; }
};

inline constexpr std::string_view kBothInterpretation = "positive_and_negative_per_label";

inline EvaluationReport evaluate_run(const std::vector<PredictionRecord>& predictions,
                                     const Dataset& gold,
                                     ZeroDivision zd = ZeroDivision::kZero) {
  EvaluationReport report;
  report.counts = confusion_counts(predictions, gold);
  report.zero_division = zd;
  double positive_sum = 0.0;
  double both_sum = 0.0;
  for (ErrorLabel label : kAllLabels) {
    std::size_t i = static_cast<std::size_t>(label);
    const ClassCounts& c = report.counts.per_label[i];
    report.f1_positive[i] = positive_f1(c, zd);
    report.f1_negative[i] = negative_f1(c, zd);
    positive_sum += report.f1_positive[i];
    both_sum += report.f1_positive[i] + report.f1_negative[i];
  }
  report.macro_f1_positive = positive_sum / static_cast<double>(kLabelCount);
  report.macro_f1_both = both_sum / static_cast<double>(2 * kLabelCount);
  return report;
}

inline nlohmann::json report_to_json(const EvaluationReport& report) {
  nlohmann::json labels = nlohmann::json::object();
  for (ErrorLabel label : kAllLabels) {
    std::size_t i = static_cast<std::size_t>(label);
    const ClassCounts& c = report.counts.per_label[i];
    labels[std::string(canonical_name(label))] = {
        {"tp", c.tp},
        {"fp", c.fp},
        {"fn", c.fn},
        {"tn", c.tn},
        {"f1_positive", report.f1_positive[i]},
        {"f1_negative", report.f1_negative[i]},
    };
  }
  return {
      {"interpretation", std::string(kBothInterpretation)},
      {"zero_division", report.zero_division == ZeroDivision::kZero ? "zero" : "one"},
      {"n_evaluated", report.counts.evaluated},
      {"skipped", report.counts.skipped},
      {"labels", labels},
      {"macro_f1_positive", report.macro_f1_positive},
      {"macro_f1_both", report.macro_f1_both},
  };
}

inline std::string format_report_table(const EvaluationReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(22) << "label" << std::right << std::setw(6) << "tp"
      << std::setw(6) << "fp" << std::setw(6) << "fn" << std::setw(6) << "tn" << std::setw(9)
      << "F1+" << std::setw(9) << "F1-" << "\n";
  out << std::string(64, '-') << "\n";
  out << std::fixed << std::setprecision(4);
  for (ErrorLabel label : kAllLabels) {
    std::size_t i = static_cast<std::size_t>(label);
    const ClassCounts& c = report.counts.per_label[i];
    out << std::left << std::setw(22) << canonical_name(label) << std::right << std::setw(6)
        << c.tp << std::setw(6) << c.fp << std::setw(6) << c.fn << std::setw(6) << c.tn
        << std::setw(9) << report.f1_positive[i] << std::setw(9) << report.f1_negative[i]
        << "\n";
  }
  out << std::string(64, '-') << "\n";
  out << "macro-F1, positive classes only:         " << report.macro_f1_positive << "\n";
  out << "macro-F1, positive and negative classes: " << report.macro_f1_both << "\n";
  out << "evaluated " << report.counts.evaluated << " datapoints";
  if (!report.counts.skipped.empty()) {
    out << " (" << report.counts.skipped.size()
        << " without a prediction record, scored as predicted-empty)";
  }
  out << "\n";
  return out.str();
}

}  // namespace factcheck
