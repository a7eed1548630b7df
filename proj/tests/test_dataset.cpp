#include "factcheck/dataset.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "factcheck/detail/csv.hpp"

using namespace factcheck;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "factcheck_dataset_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

const std::string kFixtureDir = FACTCHECK_FIXTURE_DIR;

}  // namespace

TEST_CASE("CSV parser handles quoting, escapes, and embedded separators") {
  auto rows = detail::parse_csv("a,b\n\"x,y\",\"he said \"\"hi\"\"\"\n\"line1\nline2\",z\n");
  REQUIRE(rows.size() == 3);
  REQUIRE(rows[0] == detail::CsvRow{"a", "b"});
  REQUIRE(rows[1] == detail::CsvRow{"x,y", "he said \"hi\""});
  REQUIRE(rows[2] == detail::CsvRow{"line1\nline2", "z"});
}

TEST_CASE("CSV parser accepts CRLF and missing trailing newline") {
  auto rows = detail::parse_csv("a,b\r\nc,d");
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[1] == detail::CsvRow{"c", "d"});
}

TEST_CASE("CSV parser keeps empty trailing fields") {
  auto rows = detail::parse_csv("a,\nb,");
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0] == detail::CsvRow{"a", ""});
  REQUIRE(rows[1] == detail::CsvRow{"b", ""});
}

TEST_CASE("CSV parser rejects an unterminated quote") {
  REQUIRE_THROWS_AS(detail::parse_csv("a,\"unterminated\n"), IoError);
}

TEST_CASE("CSV field round-trip on adversarial content") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> len_dist(0, 12);
  const std::string alphabet = "ab,\"\n\r;x ";
  std::uniform_int_distribution<std::size_t> char_dist(0, alphabet.size() - 1);
  for (int trial = 0; trial < 200; ++trial) {
    detail::CsvRow row;
    int fields = 1 + trial % 4;
    for (int f = 0; f < fields; ++f) {
      std::string field;
      int len = len_dist(rng);
      for (int i = 0; i < len; ++i) {
        field.push_back(alphabet[char_dist(rng)]);
      }
      row.push_back(field);
    }
    auto parsed = detail::parse_csv(detail::format_csv_row(row));
    REQUIRE(parsed.size() == 1);
    REQUIRE(parsed[0] == row);
  }
}

TEST_CASE("train fixture loads with the documented shape") {
  Dataset dataset = load_dataset(kFixtureDir + "/train_small.csv", /*has_gold=*/true);
  REQUIRE(dataset.size() == 20);
  REQUIRE(dataset.has_gold);
  REQUIRE(dataset.examples.front().pair.id == "t01");
  REQUIRE(dataset.examples.back().pair.id == "t20");
  REQUIRE(dataset.examples[4].gold ==
          LabelSet{ErrorLabel::kMisrepresentation, ErrorLabel::kFabrication});
  // t12's article spans two physical lines inside a quoted field.
  REQUIRE(dataset.examples[11].pair.article.find('\n') != std::string::npos);
  // t09 carries escaped quotes.
  REQUIRE(dataset.examples[8].pair.article.find("\"within a month\"") != std::string::npos);
}

TEST_CASE("test fixture loads without gold") {
  Dataset dataset = load_dataset(kFixtureDir + "/test_small.csv", /*has_gold=*/false);
  REQUIRE(dataset.size() == 10);
  REQUIRE_FALSE(dataset.has_gold);
  for (const LabeledExample& example : dataset.examples) {
    REQUIRE(example.gold.empty());
  }
}

TEST_CASE("gold header sniffing") {
  REQUIRE(dataset_file_has_gold(kFixtureDir + "/train_small.csv"));
  REQUIRE_FALSE(dataset_file_has_gold(kFixtureDir + "/test_small.csv"));
}

TEST_CASE("well-formed rows parse in order") {
  auto path = temp_file("ok.csv");
  write_file(path, "id,article,summary\nb,second article,second summary\na,first,second\n");
  Dataset dataset = load_dataset(path.string(), false);
  REQUIRE(dataset.size() == 2);
  REQUIRE(dataset.examples[0].pair.id == "b");
  REQUIRE(dataset.examples[1].pair.id == "a");
}

TEST_CASE("empty summary reports the offending row") {
  auto path = temp_file("empty_summary.csv");
  write_file(path, "id,article,summary\nd1,text,ok\nd2,text,   \n");
  try {
    load_dataset(path.string(), false);
    FAIL("expected MalformedRowError");
  } catch (const MalformedRowError& ex) {
    REQUIRE(ex.row() == 3);
  }
}

TEST_CASE("gold cell with semicolons parses into a set") {
  auto path = temp_file("gold.csv");
  write_file(path, "id,article,summary,labels\nd1,a,s,misrepresentation;fabrication\n");
  Dataset dataset = load_dataset(path.string(), true);
  REQUIRE(dataset.examples[0].gold ==
          LabelSet{ErrorLabel::kMisrepresentation, ErrorLabel::kFabrication});
}

TEST_CASE("duplicate ids are rejected") {
  auto path = temp_file("dup.csv");
  write_file(path, "id,article,summary\nd1,a,s\nd1,b,t\n");
  REQUIRE_THROWS_AS(load_dataset(path.string(), false), DuplicateIdError);
}

TEST_CASE("unknown label in the gold column is rejected") {
  auto path = temp_file("badlabel.csv");
  write_file(path, "id,article,summary,labels\nd1,a,s,exaggeration\n");
  REQUIRE_THROWS_AS(load_dataset(path.string(), true), UnknownLabelError);
}

TEST_CASE("empty gold sets need the allow-empty-gold option") {
  auto path = temp_file("emptygold.csv");
  write_file(path, "id,article,summary,labels\nd1,a,s,\n");
  REQUIRE_THROWS_AS(load_dataset(path.string(), true), MalformedRowError);
  LoadOptions options;
  options.allow_empty_gold = true;
  Dataset dataset = load_dataset(path.string(), true, options);
  REQUIRE(dataset.examples[0].gold.empty());
}

TEST_CASE("header mismatch and field-count errors") {
  auto path = temp_file("badheader.csv");
  write_file(path, "id,text\nd1,a\n");
  REQUIRE_THROWS_AS(load_dataset(path.string(), false), MalformedRowError);

  write_file(path, "id,article,summary\nd1,a\n");
  REQUIRE_THROWS_AS(load_dataset(path.string(), false), MalformedRowError);

  write_file(path, "");
  REQUIRE_THROWS_AS(load_dataset(path.string(), false), MalformedRowError);
}

TEST_CASE("missing file raises IoError") {
  REQUIRE_THROWS_AS(load_dataset("/nonexistent/path.csv", false), IoError);
}

TEST_CASE("prediction with empty label set writes an empty field") {
  auto path = temp_file("preds_empty.csv");
  PredictionRecord record;
  record.pair_id = "d1";
  record.algorithm = "algorithm-1";
  write_predictions({record}, path.string());

  std::ifstream in(path);
  std::string header;
  std::string line;
  std::getline(in, header);
  std::getline(in, line);
  REQUIRE(header == "id,labels,algorithm");
  REQUIRE(line == "d1,,algorithm-1");
}

TEST_CASE("write_predictions refuses an empty record list") {
  REQUIRE_THROWS_AS(write_predictions({}, temp_file("none.csv").string()), IoError);
}

TEST_CASE("writer does not join against datasets") {
  // An id that exists in no dataset is accepted here; evaluation is
  // where membership is enforced.
  PredictionRecord record;
  record.pair_id = "not-in-any-dataset";
  record.predicted = LabelSet{ErrorLabel::kFabrication};
  record.algorithm = "algorithm-2";
  auto path = temp_file("stray.csv");
  REQUIRE_NOTHROW(write_predictions({record}, path.string()));
  auto loaded = load_predictions(path.string());
  REQUIRE(loaded.size() == 1);
  REQUIRE(loaded[0] == record);
}

TEST_CASE("prediction round-trip on 50 random records") {
  std::mt19937 rng(42);
  std::uniform_int_distribution<int> mask_dist(0, 15);
  std::uniform_int_distribution<int> name_dist(0, 2);
  const std::string algos[] = {"algorithm-5", "custom, with comma", "quoted \"algo\""};

  std::vector<PredictionRecord> records;
  for (int i = 0; i < 50; ++i) {
    PredictionRecord record;
    record.pair_id = "r" + std::to_string(i);
    int mask = mask_dist(rng);
    for (ErrorLabel label : kAllLabels) {
      if (mask & (1 << static_cast<int>(label))) {
        record.predicted.insert(label);
      }
    }
    record.algorithm = algos[name_dist(rng)];
    records.push_back(std::move(record));
  }

  auto path = temp_file("roundtrip.csv");
  write_predictions(records, path.string());
  auto loaded = load_predictions(path.string());
  REQUIRE(loaded == records);
}

TEST_CASE("load_predictions validates header and duplicates") {
  auto path = temp_file("badpreds.csv");
  write_file(path, "id,algorithm\nd1,a\n");
  REQUIRE_THROWS_AS(load_predictions(path.string()), MalformedRowError);

  write_file(path, "id,labels,algorithm\nd1,,a\nd1,,a\n");
  REQUIRE_THROWS_AS(load_predictions(path.string()), DuplicateIdError);

  write_file(path, "id,labels,algorithm\n");
  REQUIRE(load_predictions(path.string()).empty());
}
