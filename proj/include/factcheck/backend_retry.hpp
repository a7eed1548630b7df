#pragma once

// Retry wrapper: transport failures and rate limits are retried with
// exponential backoff; credential failures and budget exhaustion are
// never retried. After max_attempts the last error propagates.

#include <chrono>
#include <functional>
#include <memory>
#include <thread>

#include "factcheck/backend.hpp"
#include "factcheck/errors.hpp"

namespace factcheck {

class RetryingBackend : public ChatBackend {
 public:
  using SleepFn = std::function<void(std::chrono::milliseconds)>;

  RetryingBackend(std::shared_ptr<ChatBackend> inner, int max_attempts,
                  std::chrono::milliseconds base_delay, SleepFn sleep = default_sleep)
      : inner_(std::move(inner)),
        max_attempts_(max_attempts < 1 ? 1 : max_attempts),
        base_delay_(base_delay),
        sleep_(std::move(sleep)) {}

  CompletionResponse complete(const CompletionRequest& request) override {
    std::chrono::milliseconds delay = base_delay_;
    for (int attempt = 1;; ++attempt) {
      try {
        return inner_->complete(request);
      } catch (const TransportError&) {
        if (attempt >= max_attempts_) {
          throw;
        }
      } catch (const RateLimitedError&) {
        if (attempt >= max_attempts_) {
          throw;
        }
      }
      // AuthError and BudgetExceededError fall through uncaught.
      sleep_(delay);
      delay *= 2;
    }
  }

 private:
  static void default_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

  std::shared_ptr<ChatBackend> inner_;
  int max_attempts_;
  std::chrono::milliseconds base_delay_;
  SleepFn sleep_;
};

inline std::shared_ptr<ChatBackend> with_retry(
    std::shared_ptr<ChatBackend> inner, int max_attempts,
    std::chrono::milliseconds base_delay = std::chrono::milliseconds(250)) {
  return std::make_shared<RetryingBackend>(std::move(inner), max_attempts, base_delay);
}

}  // namespace factcheck
