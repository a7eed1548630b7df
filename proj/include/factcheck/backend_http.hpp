#pragma once

// Live chat-completion backend. Sends one HTTP POST per request:
//
//   POST {base_url}/chat/completions
//   { "model": ..., "messages": [{system}, {user}],
//     "temperature": ..., "max_tokens": ..., "stop": null }
//
// and reads the first choice's message text. At most `max_in_flight`
// calls run concurrently; a fresh connection is opened per call so the
// backend is safe to share across threads.

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "factcheck/backend.hpp"
#include "factcheck/errors.hpp"

namespace factcheck {

struct LiveOptions {
  std::string base_url;     // e.g. "http://127.0.0.1:8080/v1"
  std::string credential;   // bearer token; may be empty for local endpoints
  int max_in_flight = 4;
  std::chrono::seconds timeout{60};
};

class LiveBackend : public ChatBackend {
 public:
  explicit LiveBackend(LiveOptions options)
      : options_(std::move(options)),
        semaphore_(options_.max_in_flight < 1 ? 1 : options_.max_in_flight) {
    split_base_url(options_.base_url, host_, path_prefix_);
  }

  CompletionResponse complete(const CompletionRequest& request) override {
    nlohmann::json body = {
        {"model", request.model},
        {"messages",
         {{{"role", "system"}, {"content", request.system}},
          {{"role", "user"}, {"content", request.user}}}},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
    if (request.stop) {
      body["stop"] = *request.stop;
    } else {
      body["stop"] = nullptr;
    }

    semaphore_.acquire();
    auto start = std::chrono::steady_clock::now();
    httplib::Result result = post(body.dump());
    auto elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now() - start);
    semaphore_.release();

    if (!result) {
      throw TransportError("chat completion request to " + options_.base_url +
                           " failed: " + httplib::to_string(result.error()));
    }
    const int status = result->status;
    if (status == 401 || status == 403) {
      throw AuthError("endpoint rejected the credential (HTTP " + std::to_string(status) + ")");
    }
    if (status == 429) {
      throw RateLimitedError("endpoint rate-limited the request (HTTP 429)");
    }
    if (status < 200 || status >= 300) {
      throw TransportError("chat completion returned HTTP " + std::to_string(status));
    }

    CompletionResponse response;
    response.latency = elapsed;
    try {
      nlohmann::json payload = nlohmann::json::parse(result->body);
      response.raw_text =
          payload.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
      throw TransportError(std::string("malformed completion response: ") + ex.what());
    }
    return response;
  }

 private:
  httplib::Result post(const std::string& body) {
    httplib::Client client(host_);
    client.set_connection_timeout(options_.timeout.count(), 0);
    client.set_read_timeout(options_.timeout.count(), 0);
    client.set_write_timeout(options_.timeout.count(), 0);
    httplib::Headers headers;
    if (!options_.credential.empty()) {
      headers.emplace("Authorization", "Bearer " + options_.credential);
    }
    return client.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
  }

  // "https://api.example.com/v1" -> ("https://api.example.com", "/v1")
  static void split_base_url(const std::string& base_url, std::string& host,
                             std::string& prefix) {
    std::size_t scheme_end = base_url.find("://");
    std::size_t path_start =
        base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) {
      host = base_url;
      prefix.clear();
    } else {
      host = base_url.substr(0, path_start);
      prefix = base_url.substr(path_start);
      while (!prefix.empty() && prefix.back() == '/') {
        prefix.pop_back();
      }
    }
  }

  LiveOptions options_;
  std::counting_semaphore<> semaphore_;
  std::string host_;
  std::string path_prefix_;
};

}  // namespace factcheck
