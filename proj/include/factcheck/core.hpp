#pragma once

// Core vocabulary shared by every other module: the four-way error
// taxonomy, document records, algorithm presets, and trace records.
// Everything here is an immutable value type, safe to share across
// threads once constructed.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "factcheck/errors.hpp"

namespace factcheck {

// The closed alphabet of factual-error categories. The taxonomy is
// fixed at four; there is deliberately no way to extend it.
enum class ErrorLabel : std::uint8_t {
  kMisrepresentation = 0,
  kIncorrectQuantities = 1,
  kFalseAttribution = 2,
  kFabrication = 3,
};

inline constexpr std::size_t kLabelCount = 4;

inline constexpr std::array<ErrorLabel, kLabelCount> kAllLabels = {
    ErrorLabel::kMisrepresentation,
    ErrorLabel::kIncorrectQuantities,
    ErrorLabel::kFalseAttribution,
    ErrorLabel::kFabrication,
};

// Canonical wire name; used verbatim in dataset files, prediction
// files, prompts, and CLI flags.
inline std::string_view canonical_name(ErrorLabel label) {
  switch (label) {
    case ErrorLabel::kMisrepresentation:
      return "misrepresentation";
    case ErrorLabel::kIncorrectQuantities:
      return "incorrect_quantities";
    case ErrorLabel::kFalseAttribution:
      return "false_attribution";
    case ErrorLabel::kFabrication:
      return "fabrication";
  }
  return "";  // unreachable; the enum is closed
}

// One-paragraph definition of each category, embedded into prompts so
// the model judges against a fixed description rather than its own
// reading of the label name.
inline std::string_view label_definition(ErrorLabel label) {
  switch (label) {
    case ErrorLabel::kMisrepresentation:
      return "This involves presenting information in a way that is misleading or "
             "gives a false impression. This could be done by exaggerating certain "
             "aspects, understating others, or twisting facts to fit a particular "
             "narrative.";
    case ErrorLabel::kIncorrectQuantities:
      return "This occurs when precise quantities, measurements, or statistics are "
             "misrepresented, whether by error or intent.";
    case ErrorLabel::kFalseAttribution:
      return "Incorrectly attributing a statement, idea, or action to a person or "
             "group that did not actually produce or perform it.";
    case ErrorLabel::kFabrication:
      return "Making up data, sources, or events. This involves creating \"facts\" "
             "that have no basis in reality.";
  }
  return "";
}

// Case-insensitive parse of a canonical name. Anything outside the
// closed alphabet is rejected.
inline ErrorLabel parse_label(std::string_view name) {
  std::string lowered;
  lowered.reserve(name.size());
  for (char c : name) {
    lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  for (ErrorLabel label : kAllLabels) {
    if (lowered == canonical_name(label)) {
      return label;
    }
  }
  throw UnknownLabelError(std::string(name));
}

// Order-free subset of the four labels, backed by a bitmask.
class LabelSet {
 public:
  constexpr LabelSet() = default;
  LabelSet(std::initializer_list<ErrorLabel> labels) {
    for (ErrorLabel l : labels) {
      insert(l);
    }
  }

  void insert(ErrorLabel label) { bits_ |= bit(label); }
  void erase(ErrorLabel label) { bits_ &= static_cast<std::uint8_t>(~bit(label)); }
  bool contains(ErrorLabel label) const { return (bits_ & bit(label)) != 0; }
  bool empty() const { return bits_ == 0; }

  std::size_t size() const {
    std::size_t n = 0;
    for (ErrorLabel l : kAllLabels) {
      if (contains(l)) {
        ++n;
      }
    }
    return n;
  }

  // Members in canonical (declaration) order.
  std::vector<ErrorLabel> to_vector() const {
    std::vector<ErrorLabel> out;
    for (ErrorLabel l : kAllLabels) {
      if (contains(l)) {
        out.push_back(l);
      }
    }
    return out;
  }

  friend bool operator==(LabelSet a, LabelSet b) { return a.bits_ == b.bits_; }
  friend bool operator!=(LabelSet a, LabelSet b) { return !(a == b); }

 private:
  static constexpr std::uint8_t bit(ErrorLabel label) {
    return static_cast<std::uint8_t>(1u << static_cast<std::uint8_t>(label));
  }
  std::uint8_t bits_ = 0;
};

// Wire encoding of a label set: semicolon-separated canonical names in
// canonical order; the empty set encodes as the empty string.
inline std::string format_label_set(LabelSet set) {
  std::string out;
  for (ErrorLabel l : set.to_vector()) {
    if (!out.empty()) {
      out.push_back(';');
    }
    out += canonical_name(l);
  }
  return out;
}

inline LabelSet parse_label_set(std::string_view text) {
  LabelSet set;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(';', start);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    std::string_view token = text.substr(start, end - start);
    // Trim surrounding spaces.
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (!token.empty()) {
      set.insert(parse_label(token));
    }
    if (end == text.size()) {
      break;
    }
    start = end + 1;
  }
  return set;
}

// One (article, summary) unit of classification.
struct DocumentPair {
  std::string id;
  std::string article;
  std::string summary;
};

struct LabeledExample {
  DocumentPair pair;
  LabelSet gold;
};

// A label-order permutation plus a stop threshold. The five shipped
// presets are instances of this; custom specs are allowed as long as
// the invariants hold.
struct AlgorithmSpec {
  std::string name;
  std::array<ErrorLabel, kLabelCount> order{};
  int threshold = 1;                  // stop after this many positive verdicts
  std::vector<double> temperatures;   // one sequential run per entry
  int min_votes = 1;                  // ensemble: keep labels with >= this many votes

  void validate() const {
    std::array<bool, kLabelCount> seen{};
    for (ErrorLabel l : order) {
      std::size_t idx = static_cast<std::size_t>(l);
      if (idx >= kLabelCount || seen[idx]) {
        throw OutOfRangeError("algorithm order must be a permutation of all four labels");
      }
      seen[idx] = true;
    }
    if (threshold != 1 && threshold != 2 && threshold != 4) {
      throw OutOfRangeError("threshold must be one of {1, 2, 4}");
    }
    if (temperatures.empty()) {
      throw OutOfRangeError("at least one temperature is required");
    }
    for (double t : temperatures) {
      if (t < 0.0 || t > 1.0) {
        throw OutOfRangeError("temperatures must lie in [0, 1]");
      }
    }
    if (min_votes < 1 || static_cast<std::size_t>(min_votes) > temperatures.size()) {
      throw OutOfRangeError("min_votes must lie in [1, number of temperatures]");
    }
  }

  friend bool operator==(const AlgorithmSpec& a, const AlgorithmSpec& b) {
    return a.name == b.name && a.order == b.order && a.threshold == b.threshold &&
           a.temperatures == b.temperatures && a.min_votes == b.min_votes;
  }
};

inline constexpr double kDefaultSingleTemperature = 0.7;

// The temperature grid used by the ensemble preset.
inline const std::vector<double> kEnsembleTemperatures = {0.5, 0.6, 0.7, 0.8, 0.9};

// Returns preset n of the five shipped query algorithms.
//
//   1: misrepresentation, fabrication, false_attribution, incorrect_quantities;
//      stop at the first positive.
//   2: false_attribution first, otherwise like 1.
//   3: misrepresentation, false_attribution, fabrication, incorrect_quantities;
//      stop at the second positive.
//   4: misrepresentation, fabrication, false_attribution, incorrect_quantities;
//      stop at the second positive.
//   5: order of 3, check all four labels, run once per temperature in
//      {0.5 .. 0.9} and keep labels voted by at least two runs.
//
// Presets 1-4 issue a single run at `single_temperature`.
inline AlgorithmSpec algorithm_preset(int n, double single_temperature = kDefaultSingleTemperature) {
  using enum ErrorLabel;
  AlgorithmSpec spec;
  spec.name = "algorithm-" + std::to_string(n);
  spec.temperatures = {single_temperature};
  spec.min_votes = 1;
  switch (n) {
    case 1:
      spec.order = {kMisrepresentation, kFabrication, kFalseAttribution, kIncorrectQuantities};
      spec.threshold = 1;
      break;
    case 2:
      spec.order = {kFalseAttribution, kMisrepresentation, kFabrication, kIncorrectQuantities};
      spec.threshold = 1;
      break;
    case 3:
      spec.order = {kMisrepresentation, kFalseAttribution, kFabrication, kIncorrectQuantities};
      spec.threshold = 2;
      break;
    case 4:
      spec.order = {kMisrepresentation, kFabrication, kFalseAttribution, kIncorrectQuantities};
      spec.threshold = 2;
      break;
    case 5:
      spec.order = {kMisrepresentation, kFalseAttribution, kFabrication, kIncorrectQuantities};
      spec.threshold = 4;
      spec.temperatures = kEnsembleTemperatures;
      spec.min_votes = 2;
      break;
    default:
      throw OutOfRangeError("algorithm preset must be in 1..5, got " + std::to_string(n));
  }
  spec.validate();
  return spec;
}

// Parsed yes/no outcome of one label query. Ambiguous marks
// unparseable output; it never survives into a finalized trace.
enum class Verdict : std::uint8_t { kYes, kNo, kAmbiguous };

inline std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kYes:
      return "yes";
    case Verdict::kNo:
      return "no";
    case Verdict::kAmbiguous:
      return "ambiguous";
  }
  return "";
}

// One resolved label query as recorded in a trace.
struct QueryRecord {
  ErrorLabel label{};
  double temperature = 0.0;
  std::string raw_text;   // last raw response seen for this label
  Verdict verdict = Verdict::kNo;
  int attempts = 1;       // backend calls spent resolving this label
};

// Audit trail of one sequential run over a single datapoint. Queried
// labels are always a prefix of the algorithm's order.
struct RunTrace {
  std::string pair_id;
  std::string algorithm;
  double temperature = 0.0;
  std::vector<QueryRecord> queries;
  LabelSet predicted;

  std::size_t queries_issued() const { return queries.size(); }
};

}  // namespace factcheck
