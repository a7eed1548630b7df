#pragma once

// Run configuration shared by the CLI commands. Values come from
// defaults, then an optional key=value config file, then command-line
// flags; later sources win.

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "factcheck/backend.hpp"
#include "factcheck/core.hpp"
#include "factcheck/errors.hpp"
#include "factcheck/prompt.hpp"

namespace factcheck {

enum class BackendKind { kMock, kLive, kCachedLive };

inline BackendKind parse_backend_kind(const std::string& name) {
  if (name == "mock") {
    return BackendKind::kMock;
  }
  if (name == "live") {
    return BackendKind::kLive;
  }
  if (name == "cached-live") {
    return BackendKind::kCachedLive;
  }
  throw ConfigError("unknown backend kind \"" + name + "\" (want mock, live, or cached-live)");
}

struct RunConfig {
  BackendKind backend = BackendKind::kMock;
  std::string endpoint;                       // live base URL
  std::string model = std::string(kDefaultModel);
  std::string credential_env = "FACTCHECK_API_KEY";
  std::string algorithm = "1";                // preset 1..5 or a spec file path
  std::string template_path;                  // empty = built-in default template
  std::size_t article_char_budget = PromptTemplate::kDefaultArticleCharBudget;
  int retries = 1;
  int max_in_flight = 4;
  std::uint64_t call_budget = kDefaultCallBudget;
  std::string cache_path;                     // empty disables caching for mock/live
  std::string trace_path = "traces.jsonl";
  std::string script_path;                    // mock backend script
  double single_temperature = kDefaultSingleTemperature;
  std::uint64_t seed = 0;                     // mock-script tie-breaking only
  bool resume = false;
  bool allow_empty_gold = false;
};

// Resolves the live credential through the environment; the config
// file never holds the secret itself, only the variable's name.
inline std::string resolve_credential(const RunConfig& config) {
  const char* value = std::getenv(config.credential_env.c_str());
  if (value == nullptr || *value == '\0') {
    throw ConfigError("live backend needs a credential: environment variable " +
                      config.credential_env + " is not set");
  }
  return value;
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(trim_copy(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  parts.push_back(trim_copy(current));
  return parts;
}

}  // namespace detail

// Custom algorithm spec file: key=value lines with the keys
// name, order (comma-separated canonical label names), threshold,
// temperatures (comma-separated reals), min_votes.
inline AlgorithmSpec load_algorithm_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open algorithm spec file: " + path);
  }
  AlgorithmSpec spec;
  spec.name = "custom";
  spec.temperatures = {kDefaultSingleTemperature};
  bool saw_order = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string trimmed = detail::trim_copy(line);
    if (trimmed.empty() || trimmed[0] == '#') {
      continue;
    }
    std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = detail::trim_copy(trimmed.substr(0, eq));
    std::string value = detail::trim_copy(trimmed.substr(eq + 1));
    try {
      if (key == "name") {
        spec.name = value;
      } else if (key == "order") {
        auto names = detail::split_list(value, ',');
        if (names.size() != kLabelCount) {
          throw ConfigError("order needs exactly four labels");
        }
        for (std::size_t i = 0; i < kLabelCount; ++i) {
          spec.order[i] = parse_label(names[i]);
        }
        saw_order = true;
      } else if (key == "threshold") {
        spec.threshold = std::stoi(value);
      } else if (key == "temperatures") {
        spec.temperatures.clear();
        for (const std::string& t : detail::split_list(value, ',')) {
          spec.temperatures.push_back(std::stod(t));
        }
      } else if (key == "min_votes") {
        spec.min_votes = std::stoi(value);
      } else {
        throw ConfigError("unknown key \"" + key + "\"");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  if (!saw_order) {
    throw ConfigError(path + ": missing required key \"order\"");
  }
  try {
    spec.validate();
  } catch (const Error& ex) {
    throw ConfigError(path + ": " + ex.what());
  }
  return spec;
}

// The algorithm selector is a one-digit preset number or a path to a
// custom spec file.
inline AlgorithmSpec resolve_algorithm(const std::string& selector, double single_temperature) {
  bool numeric = !selector.empty();
  for (char c : selector) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      numeric = false;
      break;
    }
  }
  if (numeric) {
    try {
      return algorithm_preset(std::stoi(selector), single_temperature);
    } catch (const OutOfRangeError& ex) {
      throw ConfigError(ex.what());
    } catch (const std::exception&) {
      throw ConfigError("algorithm preset must be in 1..5, got " + selector);
    }
  }
  return load_algorithm_spec(selector);
}

}  // namespace factcheck
