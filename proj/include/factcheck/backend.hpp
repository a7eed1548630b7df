#pragma once

// Uniform chat-completion interface. Three implementations ship with
// the library: a live HTTP endpoint (backend_http.hpp), a deterministic
// scripted mock (below), and caching/retry wrappers that compose around
// any other backend (backend_cache.hpp, backend_retry.hpp).
//
// Backends must be safely callable from multiple threads.

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "factcheck/core.hpp"
#include "factcheck/detail/csv.hpp"
#include "factcheck/errors.hpp"

namespace factcheck {

inline constexpr std::string_view kDefaultModel = "gpt-3.5-turbo";

struct CompletionRequest {
  std::string model;
  std::string system;  // system message text
  std::string user;    // user message text
  double temperature = kDefaultSingleTemperature;
  int max_tokens = 50;
  std::optional<std::string> stop;  // none by default

  // Annotations for scripted mocks and trace records; not sent on the
  // wire and not part of the cache key.
  std::string pair_id;
  std::string label;
};

struct CompletionResponse {
  std::string raw_text;  // may be empty; parsed downstream
  std::chrono::microseconds latency{0};
  bool from_cache = false;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

// Temperatures are bucketed to one decimal for script lookup, matching
// the 0.5..0.9 grid the ensemble preset runs on.
inline int temperature_bucket(double temperature) {
  return static_cast<int>(temperature * 10.0 + (temperature >= 0 ? 0.5 : -0.5));
}

inline std::string format_temperature_bucket(double temperature) {
  int bucket = temperature_bucket(temperature);
  return std::to_string(bucket / 10) + "." + std::to_string(bucket % 10);
}

// Scripted responses keyed by (pair id, label, temperature bucket).
// Any component may be the wildcard "*"; lookup tries keys from most
// to least specific and falls back to `default_response`, so it is
// total. A key may carry several candidate responses; the choice is a
// pure function of (seed, key), which keeps replays deterministic.
class MockScript {
 public:
  static constexpr std::string_view kWildcard = "*";

  void add(std::string_view pair_id, std::string_view label, std::string_view temperature,
           std::string response) {
    entries_[make_key(pair_id, label, temperature)].push_back(std::move(response));
  }

  void set_default_response(std::string response) { default_response_ = std::move(response); }
  const std::string& default_response() const { return default_response_; }

  const std::string& lookup(std::string_view pair_id, std::string_view label,
                            double temperature, std::uint64_t seed) const {
    const std::string bucket = format_temperature_bucket(temperature);
    const std::string_view any = kWildcard;
    // Most specific first; id outranks label outranks temperature.
    const std::array<std::string, 8> candidates = {
        make_key(pair_id, label, bucket), make_key(pair_id, label, any),
        make_key(pair_id, any, bucket),   make_key(any, label, bucket),
        make_key(pair_id, any, any),      make_key(any, label, any),
        make_key(any, any, bucket),       make_key(any, any, any),
    };
    for (const std::string& key : candidates) {
      auto it = entries_.find(key);
      if (it != entries_.end() && !it->second.empty()) {
        return pick(it->second, key, seed);
      }
    }
    return default_response_;
  }

  std::size_t entry_count() const { return entries_.size(); }

 private:
  static std::string make_key(std::string_view pair_id, std::string_view label,
                              std::string_view temperature) {
    std::string key;
    key.reserve(pair_id.size() + label.size() + temperature.size() + 2);
    key += pair_id;
    key.push_back('\x1f');
    key += label;
    key.push_back('\x1f');
    key += temperature;
    return key;
  }

  // FNV-1a, fixed here rather than std::hash so that tie-breaking is
  // stable across platforms.
  static std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = 14695981039346656037ull ^ seed;
    for (unsigned char c : data) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }

  static const std::string& pick(const std::vector<std::string>& choices,
                                 std::string_view key, std::uint64_t seed) {
    if (choices.size() == 1) {
      return choices.front();
    }
    return choices[fnv1a(key, seed) % choices.size()];
  }

  std::map<std::string, std::vector<std::string>> entries_;
  std::string default_response_ = "No";
};

// Script file format: CSV with header `id,label,temperature,response`.
// `*` is the wildcard in the first three columns; the temperature
// column holds a one-decimal bucket such as `0.7`.
inline MockScript load_mock_script(const std::string& path) {
  auto rows = detail::read_csv_file(path);
  if (rows.empty() || rows[0] != detail::CsvRow{"id", "label", "temperature", "response"}) {
    throw MalformedRowError(1, "unexpected mock script header in " + path);
  }
  MockScript script;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const detail::CsvRow& row = rows[i];
    if (row.size() == 1 && row[0].empty()) {
      continue;
    }
    if (row.size() != 4) {
      throw MalformedRowError(i + 1, "expected 4 fields, got " + std::to_string(row.size()));
    }
    if (row[1] != MockScript::kWildcard) {
      parse_label(row[1]);  // validate label names eagerly
    }
    if (row[2] != MockScript::kWildcard) {
      try {
        std::size_t used = 0;
        double t = std::stod(row[2], &used);
        if (used != row[2].size() || t < 0.0 || t > 1.0) {
          throw std::invalid_argument("range");
        }
      } catch (const std::exception&) {
        throw MalformedRowError(i + 1, "bad temperature bucket \"" + row[2] + "\"");
      }
    }
    std::string temperature =
        row[2] == MockScript::kWildcard ? row[2] : format_temperature_bucket(std::stod(row[2]));
    script.add(row[0], row[1], temperature, row[3]);
  }
  return script;
}

// Deterministic offline backend: a pure function of (script, seed,
// request), so repeated calls always return identical responses.
class MockBackend : public ChatBackend {
 public:
  explicit MockBackend(MockScript script, std::uint64_t seed = 0)
      : script_(std::move(script)), seed_(seed) {}

  CompletionResponse complete(const CompletionRequest& request) override {
    CompletionResponse response;
    response.raw_text = script_.lookup(request.pair_id, request.label, request.temperature, seed_);
    return response;
  }

 private:
  MockScript script_;
  std::uint64_t seed_;
};

// Caps the total number of calls reaching the wrapped backend; guards
// against runaway loops when talking to a paid endpoint.
class BudgetedBackend : public ChatBackend {
 public:
  BudgetedBackend(std::shared_ptr<ChatBackend> inner, std::uint64_t max_calls)
      : inner_(std::move(inner)), max_calls_(max_calls) {}

  CompletionResponse complete(const CompletionRequest& request) override {
    std::uint64_t used = calls_.fetch_add(1) + 1;
    if (used > max_calls_) {
      calls_.fetch_sub(1);
      throw BudgetExceededError("call budget of " + std::to_string(max_calls_) + " exhausted");
    }
    return inner_->complete(request);
  }

  std::uint64_t calls_used() const { return calls_.load(); }

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::uint64_t max_calls_;
  std::atomic<std::uint64_t> calls_{0};
};

inline std::shared_ptr<ChatBackend> with_budget(std::shared_ptr<ChatBackend> inner,
                                                std::uint64_t max_calls) {
  return std::make_shared<BudgetedBackend>(std::move(inner), max_calls);
}

inline constexpr std::uint64_t kDefaultCallBudget = 10000;

}  // namespace factcheck
