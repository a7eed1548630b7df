#pragma once

// Persistent response cache. The cache file is append-only JSON lines,
// one record per completed request: the request digest, a short
// request summary, the raw response, and a timestamp. Readable entries
// always win over re-querying; unreadable entries are treated as
// misses and reported on stderr.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "factcheck/backend.hpp"
#include "factcheck/detail/sha256.hpp"
#include "factcheck/errors.hpp"

namespace factcheck {

namespace detail {

inline void append_length_prefixed(std::string& out, std::string_view field) {
  out += std::to_string(field.size());
  out.push_back(':');
  out += field;
  out.push_back(';');
}

inline std::string format_temperature(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", t);
  return buf;
}

inline std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

// Digest of everything that determines the endpoint's behavior: model,
// temperature, the full prompt text, max_tokens, and stop. Fields are
// length-prefixed so no two distinct requests can serialize alike.
inline std::string cache_key(const CompletionRequest& request) {
  std::string material;
  detail::append_length_prefixed(material, request.model);
  detail::append_length_prefixed(material, detail::format_temperature(request.temperature));
  detail::append_length_prefixed(material, request.system);
  detail::append_length_prefixed(material, request.user);
  detail::append_length_prefixed(material, std::to_string(request.max_tokens));
  // Leading presence byte keeps "no stop" distinct from an empty stop string.
  detail::append_length_prefixed(material, request.stop ? "1" + *request.stop : "0");
  return detail::sha256_hex(material);
}

class CachingBackend : public ChatBackend {
 public:
  CachingBackend(std::shared_ptr<ChatBackend> inner, std::string cache_path)
      : inner_(std::move(inner)), cache_path_(std::move(cache_path)) {
    load_existing();
  }

  CompletionResponse complete(const CompletionRequest& request) override {
    const std::string key = cache_key(request);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = entries_.find(key);
      if (it != entries_.end()) {
        CompletionResponse response;
        response.raw_text = it->second;
        response.from_cache = true;
        return response;
      }
    }
    CompletionResponse response = inner_->complete(request);
    std::lock_guard<std::mutex> lock(mutex_);
    // A concurrent call may have raced us to the same key; first write wins.
    if (entries_.emplace(key, response.raw_text).second) {
      persist(key, request, response.raw_text);
    }
    return response;
  }

  std::size_t entry_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
  }

 private:
  void load_existing() {
    std::ifstream in(cache_path_, std::ios::binary);
    if (!in) {
      return;  // no cache yet
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) {
        continue;
      }
      try {
        nlohmann::json record = nlohmann::json::parse(line);
        entries_[record.at("key").get<std::string>()] =
            record.at("response").get<std::string>();
      } catch (const nlohmann::json::exception&) {
        std::cerr << "warning: skipping corrupt cache entry at " << cache_path_ << ":"
                  << line_no << "\n";
      }
    }
  }

  void persist(const std::string& key, const CompletionRequest& request,
               const std::string& raw_text) {
    std::ofstream out(cache_path_, std::ios::binary | std::ios::app);
    if (!out) {
      throw IoError("cannot append to cache file: " + cache_path_);
    }
    nlohmann::json record = {
        {"key", key},
        {"model", request.model},
        {"temperature", request.temperature},
        {"pair_id", request.pair_id},
        {"label", request.label},
        {"response", raw_text},
        {"ts", detail::utc_timestamp()},
    };
    out << record.dump() << "\n";
    if (!out) {
      throw IoError("write failed: " + cache_path_);
    }
  }

  std::shared_ptr<ChatBackend> inner_;
  std::string cache_path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
};

inline std::shared_ptr<ChatBackend> with_cache(std::shared_ptr<ChatBackend> inner,
                                               std::string cache_path) {
  return std::make_shared<CachingBackend>(std::move(inner), std::move(cache_path));
}

struct CacheStats {
  std::size_t entries = 0;
  std::size_t corrupt_lines = 0;
};

inline CacheStats read_cache_stats(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open cache file: " + path);
  }
  CacheStats stats;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    try {
      nlohmann::json record = nlohmann::json::parse(line);
      record.at("key").get<std::string>();
      record.at("response").get<std::string>();
      ++stats.entries;
    } catch (const nlohmann::json::exception&) {
      ++stats.corrupt_lines;
    }
  }
  return stats;
}

}  // namespace factcheck
