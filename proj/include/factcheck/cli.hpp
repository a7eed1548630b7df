#pragma once

// Command-line front end: `classify`, `evaluate`, `trace`, and
// `cache stats|clear`. Exit codes are 0 (success), 1 (one or more
// datapoints failed during classify), and 2 (fatal: bad usage, bad
// config, bad input files, or an aborted batch).

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "factcheck/backend.hpp"
#include "factcheck/backend_cache.hpp"
#include "factcheck/backend_http.hpp"
#include "factcheck/backend_retry.hpp"
#include "factcheck/classifier.hpp"
#include "factcheck/config.hpp"
#include "factcheck/core.hpp"
#include "factcheck/dataset.hpp"
#include "factcheck/evaluation.hpp"
#include "factcheck/prompt.hpp"
#include "factcheck/trace_store.hpp"

namespace factcheck::cli {

constexpr int kExitOk = 0;
constexpr int kExitDatapointFailures = 1;
constexpr int kExitFatal = 2;

namespace detail {

inline std::shared_ptr<ChatBackend> build_backend(const RunConfig& config) {
  std::shared_ptr<ChatBackend> backend;
  std::string cache_path = config.cache_path;
  switch (config.backend) {
    case BackendKind::kMock: {
      if (config.script_path.empty()) {
        throw ConfigError("mock backend needs --script <file>");
      }
      backend = std::make_shared<MockBackend>(load_mock_script(config.script_path), config.seed);
      backend = with_budget(std::move(backend), config.call_budget);
      break;
    }
    case BackendKind::kCachedLive:
      if (cache_path.empty()) {
        cache_path = "cache.jsonl";
      }
      [[fallthrough]];
    case BackendKind::kLive: {
      if (config.endpoint.empty()) {
        throw ConfigError("live backend needs --endpoint <base-url>");
      }
      LiveOptions options;
      options.base_url = config.endpoint;
      options.credential = resolve_credential(config);
      options.max_in_flight = config.max_in_flight;
      backend = std::make_shared<LiveBackend>(options);
      backend = with_budget(std::move(backend), config.call_budget);
      backend = with_retry(std::move(backend), /*max_attempts=*/3);
      break;
    }
  }
  if (!cache_path.empty()) {
    backend = with_cache(std::move(backend), cache_path);
  }
  return backend;
}

inline PromptTemplate build_template(const RunConfig& config) {
  PromptTemplate tmpl =
      config.template_path.empty() ? default_prompt_template()
                                   : load_prompt_template(config.template_path);
  tmpl.article_char_budget = config.article_char_budget;
  return tmpl;
}

inline int cmd_classify(const RunConfig& config, const std::string& dataset_path,
                        const std::string& out_path, bool quiet) {
  AlgorithmSpec spec = resolve_algorithm(config.algorithm, config.single_temperature);
  PromptTemplate tmpl = build_template(config);
  LoadOptions load_options;
  load_options.allow_empty_gold = config.allow_empty_gold;
  Dataset dataset =
      load_dataset(dataset_path, dataset_file_has_gold(dataset_path), load_options);
  std::shared_ptr<ChatBackend> backend = build_backend(config);

  BatchOptions options;
  options.retries = config.retries;
  options.resume = config.resume;
  options.workers = config.max_in_flight;
  options.model = config.model;
  options.trace_path = config.trace_path;
  if (!quiet) {
    options.progress = [](std::size_t done, std::size_t total, const std::string& pair_id) {
      std::cerr << "[" << done << "/" << total << "] " << pair_id << "\n";
    };
  }

  BatchResult result = batch_classify(dataset, spec, *backend, tmpl, options);

  if (result.records.empty()) {
    // Valid but empty prediction file; every datapoint failed.
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    out << kPredictionHeader << "\n";
    if (!out) {
      throw IoError("cannot write " + out_path);
    }
  } else {
    write_predictions(result.records, out_path);
  }
  std::cout << "wrote " << result.records.size() << " prediction(s) to " << out_path << "\n";
  if (!config.trace_path.empty()) {
    std::cout << "traces appended to " << config.trace_path << "\n";
  }
  if (!result.failures.empty()) {
    std::cerr << result.failures.size() << " datapoint(s) failed:\n";
    for (const DatapointFailure& failure : result.failures) {
      std::cerr << "  " << failure.pair_id << ": " << failure.error << "\n";
    }
    return kExitDatapointFailures;
  }
  return kExitOk;
}

inline int cmd_evaluate(const std::string& pred_path, const std::string& gold_path,
                        const std::string& report_path, ZeroDivision zd, bool allow_empty_gold) {
  std::vector<PredictionRecord> predictions = load_predictions(pred_path);
  LoadOptions load_options;
  load_options.allow_empty_gold = allow_empty_gold;
  Dataset gold = load_dataset(gold_path, /*has_gold=*/true, load_options);
  EvaluationReport report = evaluate_run(predictions, gold, zd);
  std::cout << format_report_table(report);
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot write report file: " + report_path);
    }
    out << report_to_json(report).dump(2) << "\n";
    std::cout << "report written to " << report_path << "\n";
  }
  return kExitOk;
}

inline int cmd_trace(const std::string& trace_path, const std::string& pair_id) {
  std::vector<nlohmann::json> records = load_trace_records(trace_path);
  bool found = false;
  double current_temperature = -1.0;
  bool in_run = false;
  for (const nlohmann::json& record : records) {
    if (record.value("pair_id", "") != pair_id) {
      continue;
    }
    found = true;
    const std::string kind = record.value("kind", "");
    if (kind == "query") {
      double temperature = record.value("temperature", 0.0);
      if (!in_run || temperature != current_temperature) {
        std::cout << "run of " << record.value("algorithm", "?") << " @ temperature "
                  << temperature << "\n";
        current_temperature = temperature;
        in_run = true;
      }
      std::cout << "  " << record.value("label", "?") << " -> " << record.value("verdict", "?")
                << "  (attempts " << record.value("attempts", 1) << ", raw: "
                << nlohmann::json(record.value("raw", "")).dump() << ")\n";
    } else if (kind == "result") {
      in_run = false;
      std::cout << "votes:";
      for (ErrorLabel label : kAllLabels) {
        std::string name(canonical_name(label));
        std::cout << " " << name << "=" << record.at("votes").value(name, 0);
      }
      std::cout << "\n";
      std::string final_set;
      for (const auto& name : record.at("predicted")) {
        if (!final_set.empty()) {
          final_set += ";";
        }
        final_set += name.get<std::string>();
      }
      std::cout << "final: " << (final_set.empty() ? "(empty)" : final_set) << "\n";
    } else if (kind == "failure") {
      in_run = false;
      std::cout << "failure: " << record.value("error", "?") << "\n";
    }
  }
  if (!found) {
    std::cerr << "no trace records for id \"" << pair_id << "\" in " << trace_path << "\n";
    return kExitFatal;
  }
  return kExitOk;
}

inline int cmd_cache_stats(const std::string& cache_path) {
  CacheStats stats = read_cache_stats(cache_path);
  std::cout << "cache " << cache_path << ": " << stats.entries << " entr"
            << (stats.entries == 1 ? "y" : "ies");
  if (stats.corrupt_lines > 0) {
    std::cout << ", " << stats.corrupt_lines << " corrupt line(s)";
  }
  std::cout << "\n";
  return kExitOk;
}

inline int cmd_cache_clear(const std::string& cache_path) {
  std::error_code ec;
  bool removed = std::filesystem::remove(cache_path, ec);
  if (ec) {
    throw IoError("cannot remove " + cache_path + ": " + ec.message());
  }
  std::cout << (removed ? "removed " : "nothing to remove at ") << cache_path << "\n";
  return kExitOk;
}

}  // namespace detail

inline int run(int argc, const char* const* argv) {
  CLI::App app{"Zero-shot factual-error classification of machine-generated summaries"};
  app.require_subcommand(1);
  // Key=value config file with one [section] per subcommand; flags win.
  app.set_config("--config", "", "Config file ([classify] section, key=value lines)");

  RunConfig config;
  bool quiet = false;

  // --- classify ---
  auto* classify = app.add_subcommand(
      "classify", "Classify every datapoint of a dataset and write a prediction file");
  classify->fallthrough();  // lets --config appear after the subcommand name
  std::string dataset_path;
  std::string out_path;
  classify->add_option("dataset", dataset_path, "Input dataset CSV")->required();
  classify->add_option("output", out_path, "Output prediction CSV")->required();
  std::string backend_name = "mock";
  classify->add_option("--backend", backend_name, "Backend kind: mock, live, or cached-live")
      ->capture_default_str();
  classify->add_option("--algorithm", config.algorithm,
                       "Algorithm preset 1..5 or path to a custom spec file")
      ->capture_default_str();
  classify->add_option("--endpoint", config.endpoint, "Live backend base URL");
  classify->add_option("--model", config.model, "Model name sent to the endpoint")
      ->capture_default_str();
  classify->add_option("--credential-env", config.credential_env,
                       "Environment variable holding the live credential")
      ->capture_default_str();
  classify->add_option("--script", config.script_path, "Mock backend script CSV");
  classify->add_option("--template", config.template_path,
                       "Prompt template file ([system]/[user] sections)");
  classify->add_option("--article-budget", config.article_char_budget,
                       "Article truncation budget in characters")
      ->capture_default_str();
  classify->add_option("--retries", config.retries,
                       "Re-queries per label while the output stays ambiguous")
      ->capture_default_str();
  classify->add_option("--max-in-flight", config.max_in_flight,
                       "Concurrent datapoints / live calls")
      ->capture_default_str();
  classify->add_option("--budget", config.call_budget, "Backend call budget for this run")
      ->capture_default_str();
  classify->add_option("--cache", config.cache_path,
                       "Response cache file (enables caching for any backend)");
  classify->add_option("--trace", config.trace_path, "Trace store file; empty disables tracing")
      ->capture_default_str();
  classify->add_option("--temperature", config.single_temperature,
                       "Sampling temperature for single-run presets 1..4")
      ->capture_default_str();
  classify->add_option("--seed", config.seed,
                       "Mock-script tie-breaking seed. Live endpoints are nondeterministic "
                       "and cannot be seeded.")
      ->capture_default_str();
  classify->add_flag("--resume", config.resume,
                     "Skip datapoints that already have a result in the trace store");
  classify->add_flag("--allow-empty-gold", config.allow_empty_gold,
                     "Accept dataset rows whose gold label set is empty");
  classify->add_flag("--quiet", quiet, "Suppress per-datapoint progress output");

  // --- evaluate ---
  auto* evaluate = app.add_subcommand(
      "evaluate", "Score a prediction file against a gold dataset (both macro-F1 variants)");
  std::string pred_path;
  std::string gold_path;
  std::string report_path = "report.json";
  std::string zero_division_name = "zero";
  bool eval_allow_empty_gold = false;
  evaluate->add_option("predictions", pred_path, "Prediction CSV")->required();
  evaluate->add_option("gold", gold_path, "Gold dataset CSV (with labels column)")->required();
  evaluate->add_option("--report", report_path, "Machine-readable report output path")
      ->capture_default_str();
  evaluate->add_option("--zero-division", zero_division_name,
                       "F1 value for empty classes: zero or one")
      ->check(CLI::IsMember({"zero", "one"}))
      ->capture_default_str();
  evaluate->add_flag("--allow-empty-gold", eval_allow_empty_gold,
                     "Accept gold rows with an empty label set");

  // --- trace ---
  auto* trace = app.add_subcommand("trace", "Print the query sequence for one datapoint");
  std::string trace_path = "traces.jsonl";
  std::string trace_pair_id;
  trace->add_option("pair_id", trace_pair_id, "Datapoint id")->required();
  trace->add_option("--trace", trace_path, "Trace store file")->capture_default_str();

  // --- cache ---
  auto* cache = app.add_subcommand("cache", "Inspect or clear the response cache");
  cache->require_subcommand(1);
  std::string cache_file = "cache.jsonl";
  auto* cache_stats = cache->add_subcommand("stats", "Show cache entry counts");
  cache_stats->add_option("cache_file", cache_file, "Cache file")->capture_default_str();
  auto* cache_clear = cache->add_subcommand("clear", "Delete the cache file");
  cache_clear->add_option("cache_file", cache_file, "Cache file")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help
    }
    app.exit(e);
    return kExitFatal;
  }

  try {
    if (classify->parsed()) {
      config.backend = parse_backend_kind(backend_name);
      return detail::cmd_classify(config, dataset_path, out_path, quiet);
    }
    if (evaluate->parsed()) {
      ZeroDivision zd =
          zero_division_name == "one" ? ZeroDivision::kOne : ZeroDivision::kZero;
      return detail::cmd_evaluate(pred_path, gold_path, report_path, zd, eval_allow_empty_gold);
    }
    if (trace->parsed()) {
      return detail::cmd_trace(trace_path, trace_pair_id);
    }
    if (cache->parsed()) {
      if (cache_stats->parsed()) {
        return detail::cmd_cache_stats(cache_file);
      }
      return detail::cmd_cache_clear(cache_file);
    }
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitFatal;
  } catch (const std::exception& ex) {
    std::cerr << "unexpected error: " << ex.what() << "\n";
    return kExitFatal;
  }
  return kExitFatal;
}

}  // namespace factcheck::cli
