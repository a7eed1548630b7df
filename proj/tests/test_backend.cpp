#include "factcheck/backend.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "factcheck/backend_cache.hpp"
#include "factcheck/backend_http.hpp"
#include "factcheck/backend_retry.hpp"
#include "factcheck/detail/sha256.hpp"
#include "test_backends.hpp"

using namespace factcheck;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "factcheck_backend_tests";
  std::filesystem::create_directories(dir);
  auto path = dir / name;
  std::filesystem::remove(path);
  return path;
}

CompletionRequest make_request(std::string pair_id = "d1",
                               std::string label = "misrepresentation",
                               double temperature = 0.7) {
  CompletionRequest request;
  request.model = "test-model";
  request.system = "system text";
  request.user = "user text";
  request.temperature = temperature;
  request.pair_id = std::move(pair_id);
  request.label = std::move(label);
  return request;
}

}  // namespace

TEST_CASE("sha256 matches the published test vectors") {
  REQUIRE(detail::sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  REQUIRE(detail::sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  REQUIRE(detail::sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  // Long input exercises multi-block hashing.
  REQUIRE(detail::sha256_hex(std::string(1000000, 'a')) ==
          "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}

TEST_CASE("temperature buckets round to one decimal") {
  REQUIRE(temperature_bucket(0.5) == 5);
  REQUIRE(temperature_bucket(0.7) == 7);
  REQUIRE(temperature_bucket(0.75) == 8);
  REQUIRE(temperature_bucket(0.04) == 0);
  REQUIRE(format_temperature_bucket(0.5) == "0.5");
  REQUIRE(format_temperature_bucket(0.9) == "0.9");
  REQUIRE(format_temperature_bucket(1.0) == "1.0");
}

TEST_CASE("mock script looks up exact keys and falls back to the default") {
  MockScript script;
  script.add("d1", "misrepresentation", "0.7", "Yes");
  REQUIRE(script.lookup("d1", "misrepresentation", 0.7, 0) == "Yes");
  REQUIRE(script.lookup("d1", "misrepresentation", 0.5, 0) == "No");
  REQUIRE(script.lookup("d2", "fabrication", 0.7, 0) == "No");

  script.set_default_response("Maybe");
  REQUIRE(script.lookup("d2", "fabrication", 0.7, 0) == "Maybe");
}

TEST_CASE("mock script wildcard precedence prefers specific keys") {
  MockScript script;
  script.add("*", "*", "*", "fallback");
  script.add("*", "fabrication", "*", "label-wide");
  script.add("d1", "*", "*", "id-wide");
  script.add("d1", "fabrication", "0.7", "exact");

  REQUIRE(script.lookup("d1", "fabrication", 0.7, 0) == "exact");
  REQUIRE(script.lookup("d1", "fabrication", 0.5, 0) == "id-wide");
  REQUIRE(script.lookup("d2", "fabrication", 0.5, 0) == "label-wide");
  REQUIRE(script.lookup("d2", "misrepresentation", 0.5, 0) == "fallback");
}

TEST_CASE("duplicate script keys are tie-broken deterministically by seed") {
  MockScript script;
  script.add("d1", "fabrication", "0.7", "first");
  script.add("d1", "fabrication", "0.7", "second");

  std::string pick_seed0 = script.lookup("d1", "fabrication", 0.7, 0);
  std::string pick_seed9 = script.lookup("d1", "fabrication", 0.7, 9);
  REQUIRE((pick_seed0 == "first" || pick_seed0 == "second"));
  // The same seed always picks the same entry.
  for (int i = 0; i < 10; ++i) {
    REQUIRE(script.lookup("d1", "fabrication", 0.7, 0) == pick_seed0);
    REQUIRE(script.lookup("d1", "fabrication", 0.7, 9) == pick_seed9);
  }
}

TEST_CASE("mock script file parsing") {
  auto path = temp_file("script.csv");
  {
    std::ofstream out(path);
    out << "id,label,temperature,response\n";
    out << "*,*,*,No\n";
    out << "d1,misrepresentation,0.7,\"Yes, clearly\"\n";
  }
  MockScript script = load_mock_script(path.string());
  REQUIRE(script.lookup("d1", "misrepresentation", 0.7, 0) == "Yes, clearly");
  REQUIRE(script.lookup("d1", "misrepresentation", 0.8, 0) == "No");

  {
    std::ofstream out(path);
    out << "id,label,temperature,response\nd1,banana,0.7,Yes\n";
  }
  REQUIRE_THROWS_AS(load_mock_script(path.string()), UnknownLabelError);

  {
    std::ofstream out(path);
    out << "id,label,temperature,response\nd1,fabrication,hot,Yes\n";
  }
  REQUIRE_THROWS_AS(load_mock_script(path.string()), MalformedRowError);

  {
    std::ofstream out(path);
    out << "wrong,header\n";
  }
  REQUIRE_THROWS_AS(load_mock_script(path.string()), MalformedRowError);
}

TEST_CASE("mock backend is a pure function of script and request") {
  MockScript script;
  script.add("d1", "misrepresentation", "0.7", "Yes");
  MockBackend backend(script, 0);
  CompletionRequest request = make_request();
  for (int i = 0; i < 5; ++i) {
    CompletionResponse response = backend.complete(request);
    REQUIRE(response.raw_text == "Yes");
    REQUIRE_FALSE(response.from_cache);
  }
}

TEST_CASE("budget wrapper stops at the cap") {
  auto inner =
      std::make_shared<testing::SequenceBackend>(std::vector<std::string>{"Yes"});
  auto budgeted = with_budget(inner, 5);
  CompletionRequest request = make_request();
  for (int i = 0; i < 5; ++i) {
    REQUIRE_NOTHROW(budgeted->complete(request));
  }
  REQUIRE_THROWS_AS(budgeted->complete(request), BudgetExceededError);
  REQUIRE(inner->calls() == 5);
}

TEST_CASE("retry succeeds after transient failures") {
  auto flaky = std::make_shared<testing::FlakyBackend>(2, testing::FlakyBackend::ErrorKind::kTransport);
  RetryingBackend backend(flaky, 3, std::chrono::milliseconds(10),
                          [](std::chrono::milliseconds) {});
  CompletionResponse response = backend.complete(make_request());
  REQUIRE(response.raw_text == "Yes");
  REQUIRE(flaky->calls() == 3);
}

TEST_CASE("retry never touches AuthError") {
  auto flaky = std::make_shared<testing::FlakyBackend>(99, testing::FlakyBackend::ErrorKind::kAuth);
  RetryingBackend backend(flaky, 5, std::chrono::milliseconds(1),
                          [](std::chrono::milliseconds) {});
  REQUIRE_THROWS_AS(backend.complete(make_request()), AuthError);
  REQUIRE(flaky->calls() == 1);
}

TEST_CASE("retry exhausts attempts on a permanent failure") {
  auto flaky = std::make_shared<testing::FlakyBackend>(99, testing::FlakyBackend::ErrorKind::kTransport);
  std::vector<std::chrono::milliseconds> delays;
  RetryingBackend backend(flaky, 4, std::chrono::milliseconds(100),
                          [&](std::chrono::milliseconds d) { delays.push_back(d); });
  REQUIRE_THROWS_AS(backend.complete(make_request()), TransportError);
  REQUIRE(flaky->calls() == 4);
  // Exponential backoff: 100, 200, 400.
  REQUIRE(delays == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(100),
                                                           std::chrono::milliseconds(200),
                                                           std::chrono::milliseconds(400)});
}

TEST_CASE("rate limits are retried like transport errors") {
  auto flaky = std::make_shared<testing::FlakyBackend>(1, testing::FlakyBackend::ErrorKind::kRateLimited);
  RetryingBackend backend(flaky, 2, std::chrono::milliseconds(1),
                          [](std::chrono::milliseconds) {});
  REQUIRE(backend.complete(make_request()).raw_text == "Yes");
  REQUIRE(flaky->calls() == 2);
}

TEST_CASE("cache key covers every request component") {
  CompletionRequest base = make_request();
  std::string key = cache_key(base);

  auto changed = [&](auto mutate) {
    CompletionRequest request = make_request();
    mutate(request);
    return cache_key(request);
  };

  REQUIRE(changed([](CompletionRequest& r) { r.model = "other"; }) != key);
  REQUIRE(changed([](CompletionRequest& r) { r.temperature = 0.8; }) != key);
  REQUIRE(changed([](CompletionRequest& r) { r.system += "!"; }) != key);
  REQUIRE(changed([](CompletionRequest& r) { r.user += "!"; }) != key);
  REQUIRE(changed([](CompletionRequest& r) { r.max_tokens = 51; }) != key);
  REQUIRE(changed([](CompletionRequest& r) { r.stop = ""; }) != key);
  REQUIRE(changed([](CompletionRequest& r) { r.stop = "END"; }) != key);

  // Annotations are not part of the key.
  REQUIRE(changed([](CompletionRequest& r) { r.pair_id = "other"; }) == key);
  REQUIRE(changed([](CompletionRequest& r) { r.label = "fabrication"; }) == key);

  // Field boundaries cannot be shifted between components.
  CompletionRequest a = make_request();
  a.system = "xy";
  a.user = "z";
  CompletionRequest b = make_request();
  b.system = "x";
  b.user = "yz";
  REQUIRE(cache_key(a) != cache_key(b));
}

TEST_CASE("identical requests hit the cache exactly once") {
  auto inner = std::make_shared<testing::SequenceBackend>(std::vector<std::string>{"Yes"});
  auto counting = std::make_shared<testing::CountingBackend>(inner);
  auto cached = with_cache(counting, temp_file("cache_once.jsonl").string());

  CompletionRequest request = make_request();
  CompletionResponse first = cached->complete(request);
  CompletionResponse second = cached->complete(request);
  REQUIRE(counting->calls() == 1);
  REQUIRE_FALSE(first.from_cache);
  REQUIRE(second.from_cache);
  REQUIRE(second.raw_text == "Yes");
}

TEST_CASE("different temperatures are distinct cache entries") {
  auto inner = std::make_shared<testing::SequenceBackend>(std::vector<std::string>{"Yes"});
  auto counting = std::make_shared<testing::CountingBackend>(inner);
  auto cached = with_cache(counting, temp_file("cache_temp.jsonl").string());

  cached->complete(make_request("d1", "misrepresentation", 0.5));
  cached->complete(make_request("d1", "misrepresentation", 0.9));
  REQUIRE(counting->calls() == 2);
}

TEST_CASE("cache persists across instances") {
  auto path = temp_file("cache_persist.jsonl").string();
  {
    auto inner = std::make_shared<testing::SequenceBackend>(std::vector<std::string>{"Yes"});
    auto cached = with_cache(inner, path);
    cached->complete(make_request());
  }
  auto inner = std::make_shared<testing::SequenceBackend>(std::vector<std::string>{"DIFFERENT"});
  auto counting = std::make_shared<testing::CountingBackend>(inner);
  auto cached = with_cache(counting, path);
  CompletionResponse response = cached->complete(make_request());
  REQUIRE(response.from_cache);
  REQUIRE(response.raw_text == "Yes");
  REQUIRE(counting->calls() == 0);
}

TEST_CASE("corrupt cache entries are treated as misses") {
  auto path = temp_file("cache_corrupt.jsonl").string();
  {
    auto inner = std::make_shared<testing::SequenceBackend>(std::vector<std::string>{"Yes"});
    auto cached = with_cache(inner, path);
    cached->complete(make_request());
  }
  // Corrupt the stored line, then add garbage.
  {
    std::ofstream out(path, std::ios::trunc);
    out << "{\"key\": \"truncated...\n";
    out << "not json at all\n";
  }
  auto inner = std::make_shared<testing::SequenceBackend>(std::vector<std::string>{"Fresh"});
  auto counting = std::make_shared<testing::CountingBackend>(inner);
  auto cached = with_cache(counting, path);
  CompletionResponse response = cached->complete(make_request());
  REQUIRE_FALSE(response.from_cache);
  REQUIRE(response.raw_text == "Fresh");
  REQUIRE(counting->calls() == 1);

  CacheStats stats = read_cache_stats(path);
  REQUIRE(stats.entries == 1);  // the re-persisted entry
  REQUIRE(stats.corrupt_lines == 2);
}

TEST_CASE("warm cache serves 100 random replays with zero inner calls") {
  auto path = temp_file("cache_replay.jsonl").string();
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> id_dist(0, 9);
  std::uniform_int_distribution<int> label_dist(0, 3);
  std::uniform_int_distribution<int> temp_dist(5, 9);

  std::vector<CompletionRequest> requests;
  for (int i = 0; i < 100; ++i) {
    CompletionRequest request = make_request("d" + std::to_string(id_dist(rng)),
                                             std::string(canonical_name(kAllLabels[label_dist(rng)])),
                                             temp_dist(rng) / 10.0);
    request.user = "prompt for " + request.pair_id + "/" + request.label + "/" +
                   format_temperature_bucket(request.temperature);
    requests.push_back(std::move(request));
  }

  auto inner = std::make_shared<testing::SequenceBackend>(std::vector<std::string>{"Yes"});
  auto warm_counting = std::make_shared<testing::CountingBackend>(inner);
  auto cached = with_cache(warm_counting, path);
  for (const CompletionRequest& request : requests) {
    cached->complete(request);
  }
  std::size_t warm_calls = warm_counting->calls();
  REQUIRE(warm_calls > 0);

  // Replay everything; the counting mock is the oracle for "no inner calls".
  auto replay_counting = std::make_shared<testing::CountingBackend>(inner);
  auto replay_cached = with_cache(replay_counting, path);
  for (const CompletionRequest& request : requests) {
    CompletionResponse response = replay_cached->complete(request);
    REQUIRE(response.from_cache);
  }
  REQUIRE(replay_counting->calls() == 0);
}

TEST_CASE("cache wrapper composes with retry") {
  // cache(retry(x)): one inner call per unique key after warm-up even
  // when the first attempt fails.
  auto flaky = std::make_shared<testing::FlakyBackend>(1, testing::FlakyBackend::ErrorKind::kTransport);
  auto retrying = std::make_shared<RetryingBackend>(flaky, 3, std::chrono::milliseconds(1),
                                                    [](std::chrono::milliseconds) {});
  auto cached = with_cache(retrying, temp_file("cache_retry.jsonl").string());
  CompletionRequest request = make_request();
  REQUIRE(cached->complete(request).raw_text == "Yes");
  int calls_after_first = flaky->calls();
  REQUIRE(calls_after_first == 2);  // one failure, one success
  REQUIRE(cached->complete(request).from_cache);
  REQUIRE(flaky->calls() == calls_after_first);
}

TEST_CASE("cache stats on a missing file is an error") {
  REQUIRE_THROWS_AS(read_cache_stats("/nonexistent/cache.jsonl"), IoError);
}

namespace {

struct ScopedServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit ScopedServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server.Post("/v1/chat/completions", std::move(handler));
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~ScopedServer() {
    server.stop();
    thread.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port) + "/v1"; }
};

}  // namespace

TEST_CASE("live backend sends the chat-completion wire format") {
  nlohmann::json seen_body;
  std::string seen_auth;
  ScopedServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen_body = nlohmann::json::parse(req.body);
    seen_auth = req.get_header_value("Authorization");
    nlohmann::json reply = {
        {"choices", {{{"message", {{"role", "assistant"}, {"content", "Yes"}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });

  LiveOptions options;
  options.base_url = server.base_url();
  options.credential = "sk-test";
  LiveBackend backend(options);

  CompletionRequest request = make_request();
  request.max_tokens = 50;
  CompletionResponse response = backend.complete(request);

  REQUIRE(response.raw_text == "Yes");
  REQUIRE_FALSE(response.from_cache);
  REQUIRE(response.latency.count() > 0);
  REQUIRE(seen_auth == "Bearer sk-test");
  REQUIRE(seen_body.at("model") == "test-model");
  REQUIRE(seen_body.at("temperature").get<double>() == Catch::Approx(0.7));
  REQUIRE(seen_body.at("max_tokens") == 50);
  REQUIRE(seen_body.at("stop").is_null());
  auto messages = seen_body.at("messages");
  REQUIRE(messages.size() == 2);
  REQUIRE(messages[0].at("role") == "system");
  REQUIRE(messages[0].at("content") == "system text");
  REQUIRE(messages[1].at("role") == "user");
  REQUIRE(messages[1].at("content") == "user text");
}

TEST_CASE("live backend maps HTTP statuses onto the error taxonomy") {
  auto respond_with = [](int status) {
    return [status](const httplib::Request&, httplib::Response& res) {
      res.status = status;
      res.set_content("{}", "application/json");
    };
  };

  {
    ScopedServer server(respond_with(401));
    LiveOptions options;
    options.base_url = server.base_url();
    options.credential = "bad";
    LiveBackend backend(options);
    REQUIRE_THROWS_AS(backend.complete(make_request()), AuthError);
  }
  {
    ScopedServer server(respond_with(429));
    LiveOptions options;
    options.base_url = server.base_url();
    LiveBackend backend(options);
    REQUIRE_THROWS_AS(backend.complete(make_request()), RateLimitedError);
  }
  {
    ScopedServer server(respond_with(500));
    LiveOptions options;
    options.base_url = server.base_url();
    LiveBackend backend(options);
    REQUIRE_THROWS_AS(backend.complete(make_request()), TransportError);
  }
}

TEST_CASE("live backend reports malformed payloads and dead endpoints") {
  {
    ScopedServer server([](const httplib::Request&, httplib::Response& res) {
      res.set_content("not json", "text/plain");
    });
    LiveOptions options;
    options.base_url = server.base_url();
    LiveBackend backend(options);
    REQUIRE_THROWS_AS(backend.complete(make_request()), TransportError);
  }
  {
    LiveOptions options;
    options.base_url = "http://127.0.0.1:1";  // nothing listens here
    options.timeout = std::chrono::seconds(2);
    LiveBackend backend(options);
    REQUIRE_THROWS_AS(backend.complete(make_request()), TransportError);
  }
}
