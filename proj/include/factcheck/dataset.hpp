#pragma once

// Dataset and prediction file formats.
//
// Dataset: UTF-8 CSV with header `id,article,summary` (plus a final
// `labels` column when gold labels are present). Fields are RFC 4180
// quoted; the labels cell is a semicolon-separated list of canonical
// label names and an empty cell is the empty set.
//
// Predictions: UTF-8 CSV with header `id,labels,algorithm`, same
// labels encoding. Both formats round-trip bit-exactly.

#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "factcheck/core.hpp"
#include "factcheck/detail/csv.hpp"
#include "factcheck/errors.hpp"

namespace factcheck {

struct Dataset {
  std::vector<LabeledExample> examples;  // file order preserved
  std::string source_path;
  bool has_gold = false;

  std::size_t size() const { return examples.size(); }

  const LabeledExample* find(std::string_view id) const {
    for (const LabeledExample& ex : examples) {
      if (ex.pair.id == id) {
        return &ex;
      }
    }
    return nullptr;
  }
};

struct PredictionRecord {
  std::string pair_id;
  LabelSet predicted;
  std::string algorithm;
  // In-memory annotation only; not part of the wire format.
  std::optional<std::string> trace_ref;

  friend bool operator==(const PredictionRecord& a, const PredictionRecord& b) {
    return a.pair_id == b.pair_id && a.predicted == b.predicted && a.algorithm == b.algorithm;
  }
};

struct LoadOptions {
  // Empty gold sets usually signal data corruption (every summary in
  // this task contains at least one error), so they are rejected
  // unless explicitly allowed.
  bool allow_empty_gold = false;
};

namespace detail {

inline bool row_is_blank(const CsvRow& row) {
  return row.size() == 1 && row[0].empty();
}

}  // namespace detail

// Loads all rows of a dataset file, preserving order. When `has_gold`
// is set the fourth column is parsed into label sets. Row numbers in
// errors are 1-based file lines (the header is row 1).
inline Dataset load_dataset(const std::string& path, bool has_gold,
                            const LoadOptions& options = {}) {
  auto rows = detail::read_csv_file(path);
  if (rows.empty()) {
    throw MalformedRowError(1, "missing header");
  }
  const detail::CsvRow expected_header =
      has_gold ? detail::CsvRow{"id", "article", "summary", "labels"}
               : detail::CsvRow{"id", "article", "summary"};
  if (rows[0] != expected_header) {
    throw MalformedRowError(1, "unexpected header in " + path + " (want \"" +
                                   (has_gold ? "id,article,summary,labels"
                                             : "id,article,summary") +
                                   "\")");
  }

  Dataset dataset;
  dataset.source_path = path;
  dataset.has_gold = has_gold;
  std::unordered_set<std::string> seen_ids;

  const std::size_t want_fields = has_gold ? 4 : 3;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const detail::CsvRow& row = rows[i];
    const std::size_t line = i + 1;
    if (detail::row_is_blank(row)) {
      continue;
    }
    if (row.size() != want_fields) {
      throw MalformedRowError(line, "expected " + std::to_string(want_fields) +
                                        " fields, got " + std::to_string(row.size()));
    }
    LabeledExample example;
    example.pair.id = detail::trim_copy(row[0]);
    example.pair.article = row[1];
    example.pair.summary = row[2];
    if (example.pair.id.empty()) {
      throw MalformedRowError(line, "empty id");
    }
    if (detail::trim_copy(example.pair.article).empty()) {
      throw MalformedRowError(line, "empty article");
    }
    if (detail::trim_copy(example.pair.summary).empty()) {
      throw MalformedRowError(line, "empty summary");
    }
    if (!seen_ids.insert(example.pair.id).second) {
      throw DuplicateIdError(example.pair.id);
    }
    if (has_gold) {
      example.gold = parse_label_set(row[3]);  // throws UnknownLabelError
      if (example.gold.empty() && !options.allow_empty_gold) {
        throw MalformedRowError(line, "empty gold label set for id \"" +
                                          example.pair.id + "\"");
      }
    }
    dataset.examples.push_back(std::move(example));
  }
  return dataset;
}

// True when the file's header carries the trailing labels column.
inline bool dataset_file_has_gold(const std::string& path) {
  auto rows = detail::read_csv_file(path);
  if (rows.empty()) {
    throw MalformedRowError(1, "missing header");
  }
  return rows[0] == detail::CsvRow{"id", "article", "summary", "labels"};
}

inline constexpr std::string_view kPredictionHeader = "id,labels,algorithm";

inline std::string format_predictions(const std::vector<PredictionRecord>& records) {
  std::string out;
  out += kPredictionHeader;
  out.push_back('\n');
  for (const PredictionRecord& rec : records) {
    out += detail::format_csv_row({rec.pair_id, format_label_set(rec.predicted), rec.algorithm});
  }
  return out;
}

// Writes one line per record. The writer does not join against any
// dataset; id validity is checked at evaluation time.
inline void write_predictions(const std::vector<PredictionRecord>& records,
                              const std::string& path) {
  if (records.empty()) {
    throw IoError("refusing to write an empty prediction list to " + path);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open file for writing: " + path);
  }
  out << format_predictions(records);
  if (!out) {
    throw IoError("write failed: " + path);
  }
}

inline std::vector<PredictionRecord> load_predictions(const std::string& path) {
  auto rows = detail::read_csv_file(path);
  if (rows.empty() || rows[0] != detail::CsvRow{"id", "labels", "algorithm"}) {
    throw MalformedRowError(1, "unexpected prediction header in " + path);
  }
  std::vector<PredictionRecord> records;
  std::unordered_set<std::string> seen_ids;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const detail::CsvRow& row = rows[i];
    const std::size_t line = i + 1;
    if (detail::row_is_blank(row)) {
      continue;
    }
    if (row.size() != 3) {
      throw MalformedRowError(line, "expected 3 fields, got " + std::to_string(row.size()));
    }
    PredictionRecord rec;
    rec.pair_id = detail::trim_copy(row[0]);
    if (rec.pair_id.empty()) {
      throw MalformedRowError(line, "empty id");
    }
    if (!seen_ids.insert(rec.pair_id).second) {
      throw DuplicateIdError(rec.pair_id);
    }
    rec.predicted = parse_label_set(row[1]);
    rec.algorithm = row[2];
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace factcheck
