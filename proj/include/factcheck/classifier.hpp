#pragma once

// The gated-sequential classifier and its temperature ensemble.
//
// A single run walks the algorithm's label order, asks one yes/no
// question per label, and stops as soon as the positive counter hits
// the threshold (or all four labels are spent). The ensemble repeats
// the run once per temperature and keeps every label voted for by at
// least `min_votes` member runs.
//
// Batch execution is datapoint-major: all labels for one datapoint,
// then the next. For any fixed verdict function this yields the same
// per-datapoint predictions as a label-major sweep, and it is what
// makes per-datapoint caching and resume possible.

#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "factcheck/backend.hpp"
#include "factcheck/core.hpp"
#include "factcheck/dataset.hpp"
#include "factcheck/errors.hpp"
#include "factcheck/prompt.hpp"
#include "factcheck/trace_store.hpp"

namespace factcheck {

// One sequential pass over the label order at a fixed temperature.
// Backend errors propagate to the caller.
inline RunTrace classify_sequential(const DocumentPair& pair, const AlgorithmSpec& spec,
                                    double temperature, ChatBackend& backend,
                                    const PromptTemplate& tmpl, int retries,
                                    const std::string& model = std::string(kDefaultModel)) {
  spec.validate();
  RunTrace trace;
  trace.pair_id = pair.id;
  trace.algorithm = spec.name;
  trace.temperature = temperature;

  int positives = 0;
  for (ErrorLabel label : spec.order) {
    ResolvedVerdict resolved =
        resolve_verdict(pair, label, temperature, backend, tmpl, retries, model);
    QueryRecord query;
    query.label = label;
    query.temperature = temperature;
    query.raw_text = resolved.raw_text;
    query.verdict = resolved.verdict;
    query.attempts = resolved.attempts;
    trace.queries.push_back(std::move(query));
    if (resolved.verdict == Verdict::kYes) {
      trace.predicted.insert(label);
      ++positives;
      if (positives == spec.threshold) {
        break;
      }
    }
  }
  return trace;
}

struct EnsembleTrace {
  std::string pair_id;
  std::string algorithm;
  std::vector<RunTrace> members;           // one per temperature, grid order
  std::array<int, kLabelCount> votes{};    // votes[label] = member runs predicting it
  LabelSet final;
};

// Vote counting is a pure multiset operation: the outcome never
// depends on member order.
inline std::array<int, kLabelCount> count_votes(const std::vector<LabelSet>& members) {
  std::array<int, kLabelCount> votes{};
  for (const LabelSet& member : members) {
    for (ErrorLabel label : kAllLabels) {
      if (member.contains(label)) {
        ++votes[static_cast<std::size_t>(label)];
      }
    }
  }
  return votes;
}

inline LabelSet labels_with_min_votes(const std::array<int, kLabelCount>& votes, int min_votes) {
  LabelSet final;
  for (ErrorLabel label : kAllLabels) {
    if (votes[static_cast<std::size_t>(label)] >= min_votes) {
      final.insert(label);
    }
  }
  return final;
}

// Runs classify_sequential once per temperature (sequentially, so the
// global in-flight cap stays meaningful) and aggregates the votes. A
// failed member run fails the whole datapoint.
inline EnsembleTrace classify_ensemble(const DocumentPair& pair, const AlgorithmSpec& spec,
                                       ChatBackend& backend, const PromptTemplate& tmpl,
                                       int retries,
                                       const std::string& model = std::string(kDefaultModel)) {
  spec.validate();
  EnsembleTrace trace;
  trace.pair_id = pair.id;
  trace.algorithm = spec.name;
  std::vector<LabelSet> member_sets;
  member_sets.reserve(spec.temperatures.size());
  for (double temperature : spec.temperatures) {
    trace.members.push_back(
        classify_sequential(pair, spec, temperature, backend, tmpl, retries, model));
    member_sets.push_back(trace.members.back().predicted);
  }
  trace.votes = count_votes(member_sets);
  trace.final = labels_with_min_votes(trace.votes, spec.min_votes);
  return trace;
}

struct DatapointFailure {
  std::string pair_id;
  std::string error;
};

struct BatchOptions {
  int retries = 1;             // ambiguous-output retries per label query
  bool resume = false;         // skip datapoints already in the trace store
  int workers = 1;             // concurrent datapoints
  std::string model = std::string(kDefaultModel);
  std::string trace_path;      // empty disables trace persistence (and resume)
  // Called after each datapoint settles (completed, resumed, or failed).
  std::function<void(std::size_t done, std::size_t total, const std::string& pair_id)> progress;
};

struct BatchResult {
  std::vector<PredictionRecord> records;    // dataset order, failed datapoints omitted
  std::vector<EnsembleTrace> traces;        // dataset order, non-resumed datapoints only
  std::vector<DatapointFailure> failures;   // dataset order
};

namespace detail {

inline std::vector<nlohmann::json> trace_block(const EnsembleTrace& trace) {
  std::vector<nlohmann::json> block;
  for (const RunTrace& member : trace.members) {
    for (const QueryRecord& query : member.queries) {
      block.push_back({
          {"kind", "query"},
          {"pair_id", trace.pair_id},
          {"algorithm", trace.algorithm},
          {"temperature", member.temperature},
          {"label", canonical_name(query.label)},
          {"raw", query.raw_text},
          {"verdict", verdict_name(query.verdict)},
          {"attempts", query.attempts},
          {"ts", utc_timestamp()},
      });
    }
  }
  nlohmann::json predicted = nlohmann::json::array();
  for (ErrorLabel label : trace.final.to_vector()) {
    predicted.push_back(std::string(canonical_name(label)));
  }
  nlohmann::json votes = nlohmann::json::object();
  for (ErrorLabel label : kAllLabels) {
    votes[std::string(canonical_name(label))] = trace.votes[static_cast<std::size_t>(label)];
  }
  block.push_back({
      {"kind", "result"},
      {"pair_id", trace.pair_id},
      {"algorithm", trace.algorithm},
      {"predicted", predicted},
      {"votes", votes},
      {"ts", utc_timestamp()},
  });
  return block;
}

// Flushes per-datapoint trace blocks to the store in dataset order no
// matter which worker finishes first.
class OrderedFlusher {
 public:
  explicit OrderedFlusher(TraceStore* store) : store_(store) {}

  void add(std::size_t index, std::vector<nlohmann::json> block) {
    if (store_ == nullptr) {
      return;
    }
    std::lock_guard<std::mutex> lock(mutex_);
    pending_[index] = std::move(block);
    while (!pending_.empty() && pending_.begin()->first == next_) {
      store_->append_block(pending_.begin()->second);
      pending_.erase(pending_.begin());
      ++next_;
    }
  }

  void skip(std::size_t index) { add(index, {}); }

  // Writes any remaining blocks in index order; gaps are left by
  // aborted datapoints and simply skipped.
  void drain() {
    if (store_ == nullptr) {
      return;
    }
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& [index, block] : pending_) {
      store_->append_block(block);
    }
    pending_.clear();
  }

 private:
  TraceStore* store_;
  std::mutex mutex_;
  std::map<std::size_t, std::vector<nlohmann::json>> pending_;
  std::size_t next_ = 0;
};

}  // namespace detail

// Classifies every datapoint of the dataset with the given algorithm.
// Per-datapoint backend failures are collected, never fatal; only
// budget exhaustion and trace-storage failures abort the batch.
// Output order follows dataset order regardless of completion order.
inline BatchResult batch_classify(const Dataset& dataset, const AlgorithmSpec& spec,
                                  ChatBackend& backend, const PromptTemplate& tmpl,
                                  const BatchOptions& options = {}) {
  spec.validate();
  if (dataset.examples.empty()) {
    throw OutOfRangeError("dataset is empty");
  }

  std::unique_ptr<TraceStore> store;
  std::map<std::string, LabelSet> resumed;
  if (!options.trace_path.empty()) {
    if (options.resume) {
      resumed = completed_predictions(options.trace_path, spec.name);
    }
    store = std::make_unique<TraceStore>(options.trace_path);
  }

  const std::size_t total = dataset.examples.size();
  enum class Outcome { kPending, kDone, kResumed, kFailed };
  std::vector<Outcome> outcomes(total, Outcome::kPending);
  std::vector<LabelSet> predictions(total);
  std::vector<EnsembleTrace> traces(total);
  std::vector<std::string> failure_messages(total);

  detail::OrderedFlusher flusher(store.get());
  std::atomic<std::size_t> next_index{0};
  std::atomic<std::size_t> settled{0};
  std::atomic<bool> aborted{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  std::mutex progress_mutex;

  auto report_progress = [&](const std::string& pair_id) {
    std::size_t done = settled.fetch_add(1) + 1;
    if (options.progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      options.progress(done, total, pair_id);
    }
  };

  auto worker = [&] {
    while (!aborted.load()) {
      std::size_t index = next_index.fetch_add(1);
      if (index >= total) {
        return;
      }
      const LabeledExample& example = dataset.examples[index];
      auto it = resumed.find(example.pair.id);
      if (it != resumed.end()) {
        outcomes[index] = Outcome::kResumed;
        predictions[index] = it->second;
        flusher.skip(index);
        report_progress(example.pair.id);
        continue;
      }
      try {
        EnsembleTrace trace =
            classify_ensemble(example.pair, spec, backend, tmpl, options.retries, options.model);
        predictions[index] = trace.final;
        flusher.add(index, detail::trace_block(trace));
        traces[index] = std::move(trace);
        outcomes[index] = Outcome::kDone;
      } catch (const BudgetExceededError&) {
        std::lock_guard<std::mutex> lock(fatal_mutex);
        if (!fatal) {
          fatal = std::current_exception();
        }
        aborted.store(true);
        return;
      } catch (const IoError&) {
        std::lock_guard<std::mutex> lock(fatal_mutex);
        if (!fatal) {
          fatal = std::current_exception();
        }
        aborted.store(true);
        return;
      } catch (const Error& ex) {
        outcomes[index] = Outcome::kFailed;
        failure_messages[index] = ex.what();
        flusher.add(index, {nlohmann::json{{"kind", "failure"},
                                           {"pair_id", example.pair.id},
                                           {"algorithm", spec.name},
                                           {"error", ex.what()},
                                           {"ts", detail::utc_timestamp()}}});
      }
      report_progress(example.pair.id);
    }
  };

  int worker_count = options.workers < 1 ? 1 : options.workers;
  if (static_cast<std::size_t>(worker_count) > total) {
    worker_count = static_cast<int>(total);
  }
  if (worker_count == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(worker_count);
    for (int i = 0; i < worker_count; ++i) {
      threads.emplace_back(worker);
    }
    for (std::thread& t : threads) {
      t.join();
    }
  }
  flusher.drain();
  if (fatal) {
    std::rethrow_exception(fatal);
  }

  BatchResult result;
  for (std::size_t i = 0; i < total; ++i) {
    const LabeledExample& example = dataset.examples[i];
    switch (outcomes[i]) {
      case Outcome::kDone:
      case Outcome::kResumed: {
        PredictionRecord record;
        record.pair_id = example.pair.id;
        record.predicted = predictions[i];
        record.algorithm = spec.name;
        if (store) {
          record.trace_ref = store->path();
        }
        result.records.push_back(std::move(record));
        if (outcomes[i] == Outcome::kDone) {
          result.traces.push_back(std::move(traces[i]));
        }
        break;
      }
      case Outcome::kFailed:
        result.failures.push_back({example.pair.id, failure_messages[i]});
        break;
      case Outcome::kPending:
        break;  // only reachable after an abort
    }
  }
  return result;
}

}  // namespace factcheck
