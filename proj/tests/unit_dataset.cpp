#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ppcl/dataset.hpp"

using namespace ppcl;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

}  // namespace

TEST_CASE("derive_arguments groups maximal same-label runs") {
  const std::vector<std::string> tokens = {"wake", "me", "up", "at",
                                           "five", "am", "this", "week"};
  const std::vector<std::string> tags = {"Other", "Other", "Other", "Other",
                                         "time",  "time",  "date",  "date"};
  const auto args = derive_arguments(tokens, tags);
  REQUIRE(args.size() == 2);
  CHECK(args[0] == Argument{"time", "five am"});
  CHECK(args[1] == Argument{"date", "this week"});
}

TEST_CASE("derive_arguments edge cases") {
  CHECK(derive_arguments({"a", "b"}, {"Other", "Other"}).empty());

  const auto split_runs = derive_arguments({"a", "b", "c"}, {"time", "Other", "time"});
  REQUIRE(split_runs.size() == 2);
  CHECK(split_runs[0] == Argument{"time", "a"});
  CHECK(split_runs[1] == Argument{"time", "c"});

  CHECK_THROWS_AS(derive_arguments({"a"}, {}), FormatError);
}

TEST_CASE("load_dataset parses canonical records") {
  const std::string line =
      R"({"id":"e1","domain":"alarm","intent":"alarm_set",)"
      R"("tokens":["wake","me","up","at","five","am","this","week"],)"
      R"("tags":["Other","Other","Other","Other","time","time","date","date"]})";
  const auto path = write_temp("ppcl_ds_ok.jsonl", line + "\n");
  const Dataset ds = load_dataset(path, "test");
  REQUIRE(ds.examples.size() == 1);
  const auto& e = ds.examples[0];
  CHECK(e.id == "e1");
  CHECK(e.arguments == std::vector<Argument>{{"time", "five am"}, {"date", "this week"}});
  CHECK(ds.inventories.domains == std::set<std::string>{"alarm"});
  CHECK(ds.inventories.intents == std::set<std::string>{"alarm_set"});
  CHECK(ds.inventories.slot_labels == std::set<std::string>{"date", "time"});
}

TEST_CASE("load_dataset on an empty file yields an empty dataset") {
  const auto path = write_temp("ppcl_ds_empty.jsonl", "");
  const Dataset ds = load_dataset(path, "train");
  CHECK(ds.examples.empty());
  CHECK(ds.inventories.domains.empty());
}

TEST_CASE("load_dataset rejects malformed records") {
  SECTION("length mismatch carries the line number") {
    const std::string line =
        R"({"id":"e1","domain":"d","intent":"i",)"
        R"("tokens":["a","b","c","d","e","f","g","h"],)"
        R"("tags":["Other","Other","Other","Other","Other","Other","Other"]})";
    const auto path = write_temp("ppcl_ds_mismatch.jsonl", line + "\n");
    CHECK_THROWS_WITH(load_dataset(path, "train"), "length mismatch at line 1");
  }
  SECTION("duplicate id") {
    const std::string line =
        R"({"id":"e1","domain":"d","intent":"i","tokens":["a"],"tags":["Other"]})";
    const auto path = write_temp("ppcl_ds_dup.jsonl", line + "\n" + line + "\n");
    CHECK_THROWS_WITH(load_dataset(path, "train"),
                      Catch::Matchers::ContainsSubstring("duplicate id"));
  }
  SECTION("unparseable json names the line") {
    const auto path = write_temp("ppcl_ds_bad.jsonl", "{not json\n");
    CHECK_THROWS_WITH(load_dataset(path, "train"),
                      Catch::Matchers::ContainsSubstring("line 1"));
  }
  SECTION("unknown fields are ignored") {
    const std::string line =
        R"({"id":"e1","domain":"d","intent":"i","tokens":["a"],"tags":["Other"],"extra":1})";
    const auto path = write_temp("ppcl_ds_extra.jsonl", line + "\n");
    CHECK(load_dataset(path, "train").examples.size() == 1);
  }
}

TEST_CASE("synth_fixture is a pure function of its arguments") {
  auto [train_a, test_a] = synth_fixture(7, 50, 10);
  auto [train_b, test_b] = synth_fixture(7, 50, 10);
  CHECK(train_a.examples == train_b.examples);
  CHECK(test_a.examples == test_b.examples);

  auto [train_c, test_c] = synth_fixture(8, 50, 10);
  CHECK(train_a.examples != train_c.examples);
}

TEST_CASE("synth_fixture inventories at experiment scale") {
  auto [train, test] = synth_fixture(7, 2000, 200);
  CHECK(train.examples.size() == 2000);
  CHECK(test.examples.size() == 200);
  CHECK(train.inventories.domains == std::set<std::string>{"alarm", "music", "weather"});
  CHECK(train.inventories.intents ==
        std::set<std::string>{"alarm_query", "alarm_set", "music_pause", "music_play",
                              "weather_forecast", "weather_query"});
  CHECK(train.inventories.slot_labels ==
        std::set<std::string>{"date", "person", "place", "song", "time"});

  for (const auto& e : train.examples) {
    CHECK(e.tags.size() == e.tokens.size());
    CHECK(e.arguments == derive_arguments(e.tokens, e.tags));
  }
}

TEST_CASE("save then load round-trips a dataset") {
  auto [train, test] = synth_fixture(11, 25, 5);
  const auto path = (std::filesystem::temp_directory_path() / "ppcl_ds_rt.jsonl").string();
  save_dataset(train, path);
  const Dataset loaded = load_dataset(path, train.split);
  CHECK(loaded.examples == train.examples);
  CHECK(loaded.inventories.domains == train.inventories.domains);
  CHECK(loaded.inventories.intents == train.inventories.intents);
  CHECK(loaded.inventories.slot_labels == train.inventories.slot_labels);
}
