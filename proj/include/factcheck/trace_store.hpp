#pragma once

// Append-only audit trail of every query issued. JSON lines, three
// record kinds:
//
//   {"kind":"query", "pair_id", "algorithm", "temperature", "label",
//    "raw", "verdict", "attempts", "ts"}
//   {"kind":"result", "pair_id", "algorithm", "predicted", "votes", "ts"}
//   {"kind":"failure", "pair_id", "algorithm", "error", "ts"}
//
// A result record marks a datapoint as done for resume purposes;
// failure records are informational and the datapoint is retried.

#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcheck/backend_cache.hpp"  // detail::utc_timestamp
#include "factcheck/core.hpp"
#include "factcheck/errors.hpp"

namespace factcheck {

class TraceStore {
 public:
  explicit TraceStore(std::string path) : path_(std::move(path)) {}

  // Appends a block of records atomically with respect to other blocks.
  void append_block(const std::vector<nlohmann::json>& records) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) {
      throw IoError("cannot append to trace file: " + path_);
    }
    for (const nlohmann::json& record : records) {
      out << record.dump() << "\n";
    }
    out.flush();
    if (!out) {
      throw IoError("write failed: " + path_);
    }
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::mutex mutex_;
};

inline std::vector<nlohmann::json> load_trace_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open trace file: " + path);
  }
  std::vector<nlohmann::json> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    try {
      records.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& ex) {
      throw IoError("corrupt trace record at " + path + ":" + std::to_string(line_no) + ": " +
                    ex.what());
    }
  }
  return records;
}

// Predicted sets of datapoints already completed under `algorithm`,
// keyed by pair id. Missing file means nothing is done yet.
inline std::map<std::string, LabelSet> completed_predictions(const std::string& path,
                                                             const std::string& algorithm) {
  std::map<std::string, LabelSet> done;
  std::ifstream probe(path, std::ios::binary);
  if (!probe) {
    return done;
  }
  probe.close();
  for (const nlohmann::json& record : load_trace_records(path)) {
    if (record.value("kind", "") != "result" || record.value("algorithm", "") != algorithm) {
      continue;
    }
    LabelSet predicted;
    for (const auto& name : record.at("predicted")) {
      predicted.insert(parse_label(name.get<std::string>()));
    }
    done[record.at("pair_id").get<std::string>()] = predicted;
  }
  return done;
}

}  // namespace factcheck
