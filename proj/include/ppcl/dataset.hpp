#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppcl/common.hpp"

namespace ppcl {

/// One slot argument: label plus the space-joined surface text of its span.
struct Argument {
  std::string label;
  std::string text;
  bool operator==(const Argument&) const = default;
};

inline constexpr const char* kOtherTag = "Other";

/// A maximal run of one non-"Other" tag yields one argument; runs are
/// reported in token order.
inline std::vector<Argument> derive_arguments(const std::vector<std::string>& tokens,
                                              const std::vector<std::string>& tags) {
  if (tokens.size() != tags.size()) {
    throw FormatError("derive_arguments: tokens/tags length mismatch");
  }
  std::vector<Argument> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (tags[i] == kOtherTag) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < tokens.size() && tags[j + 1] == tags[i]) ++j;
    std::vector<std::string> span(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                  tokens.begin() + static_cast<std::ptrdiff_t>(j + 1));
    out.push_back({tags[i], join(span, " ")});
    i = j + 1;
  }
  return out;
}

/// One annotated utterance. Tags are plain per-token labels ("Other" for
/// non-slot tokens); entity boundaries are the maximal same-label runs.
struct Example {
  std::string id;
  std::string domain;
  std::string intent;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::vector<Argument> arguments;  // always derive_arguments(tokens, tags)

  bool operator==(const Example&) const = default;

  static Example make(std::string id, std::string domain, std::string intent,
                      std::vector<std::string> tokens, std::vector<std::string> tags) {
    Example e;
    e.id = std::move(id);
    e.domain = std::move(domain);
    e.intent = std::move(intent);
    e.tokens = std::move(tokens);
    e.tags = std::move(tags);
    e.arguments = derive_arguments(e.tokens, e.tags);
    return e;
  }
};

struct LabelInventories {
  std::set<std::string> domains;
  std::set<std::string> intents;
  std::set<std::string> slot_labels;  // excludes "Other"
};

struct Dataset {
  std::string name;
  std::string split;  // train | dev | test
  std::vector<Example> examples;
  LabelInventories inventories;

  const Example* find(std::string_view id) const {
    for (const auto& e : examples) {
      if (e.id == id) return &e;
    }
    return nullptr;
  }
};

inline void add_to_inventories(LabelInventories& inv, const Example& e) {
  inv.domains.insert(e.domain);
  inv.intents.insert(e.intent);
  for (const auto& t : e.tags) {
    if (t != kOtherTag) inv.slot_labels.insert(t);
  }
}

// ---------------------------------------------------------------------------
// Canonical dataset file: UTF-8, one JSON record per line with fields
// id/domain/intent/tokens/tags. Unknown fields are ignored.
// ---------------------------------------------------------------------------

inline Example parse_example_record(const nlohmann::json& rec, std::size_t line_no) {
  const auto require = [&](const char* field) -> const nlohmann::json& {
    auto it = rec.find(field);
    if (it == rec.end()) {
      throw FormatError("missing field '" + std::string(field) + "' at line " +
                        std::to_string(line_no));
    }
    return *it;
  };
  Example e;
  e.id = require("id").get<std::string>();
  e.domain = require("domain").get<std::string>();
  e.intent = require("intent").get<std::string>();
  e.tokens = require("tokens").get<std::vector<std::string>>();
  e.tags = require("tags").get<std::vector<std::string>>();
  if (e.tokens.size() != e.tags.size()) {
    throw FormatError("length mismatch at line " + std::to_string(line_no));
  }
  if (e.tokens.empty()) {
    throw FormatError("empty token list at line " + std::to_string(line_no));
  }
  e.arguments = derive_arguments(e.tokens, e.tags);
  return e;
}

inline Dataset load_dataset(const std::string& path, const std::string& split) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset file: " + path);
  Dataset ds;
  ds.name = path;
  ds.split = split;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError("malformed record at line " + std::to_string(line_no) + ": " +
                        ex.what());
    }
    Example e = parse_example_record(rec, line_no);
    if (!seen_ids.insert(e.id).second) {
      throw FormatError("duplicate id '" + e.id + "' at line " + std::to_string(line_no));
    }
    add_to_inventories(ds.inventories, e);
    ds.examples.push_back(std::move(e));
  }
  return ds;
}

inline nlohmann::json example_to_json(const Example& e) {
  return nlohmann::json{{"id", e.id},
                        {"domain", e.domain},
                        {"intent", e.intent},
                        {"tokens", e.tokens},
                        {"tags", e.tags}};
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write dataset file: " + path);
  for (const auto& e : ds.examples) {
    out << example_to_json(e).dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Synthetic fixture corpus: a small deterministic grammar over 3 domains
// (alarm, weather, music), 2 intents each, and 5 slot labels (time, date,
// place, song, person). Identical (seed, counts) give identical datasets.
// ---------------------------------------------------------------------------

namespace fixture {

struct SlotPool {
  const char* label;
  std::vector<std::vector<std::string>> values;
};

inline const SlotPool& pool_time() {
  static const SlotPool p{"time",
                          {{"five", "am"},
                           {"six", "pm"},
                           {"ten", "am"},
                           {"noon"},
                           {"midnight"},
                           {"seven", "thirty"}}};
  return p;
}
inline const SlotPool& pool_date() {
  static const SlotPool p{"date",
                          {{"today"},
                           {"tomorrow"},
                           {"this", "week"},
                           {"next", "monday"},
                           {"this", "evening"}}};
  return p;
}
inline const SlotPool& pool_place() {
  static const SlotPool p{"place", {{"boston"}, {"paris"}, {"seattle"}, {"denver"}, {"tokyo"}}};
  return p;
}
inline const SlotPool& pool_song() {
  static const SlotPool p{"song",
                          {{"yesterday"}, {"thunder", "road"}, {"hey", "jude"}, {"believer"}}};
  return p;
}
inline const SlotPool& pool_person() {
  static const SlotPool p{"person",
                          {{"mariah", "carey"}, {"adele"}, {"the", "beatles"}, {"drake"}}};
  return p;
}

/// A template is a mix of literal words and slot pools.
struct Piece {
  std::string literal;        // used when pool == nullptr
  const SlotPool* pool = nullptr;
};

struct Template {
  const char* domain;
  const char* intent;
  std::vector<Piece> pieces;
};

inline Piece lit(const char* w) { return Piece{w, nullptr}; }
inline Piece slot(const SlotPool& p) { return Piece{"", &p}; }

inline const std::vector<Template>& templates() {
  static const std::vector<Template> t = {
      // alarm / alarm_set
      {"alarm", "alarm_set",
       {lit("wake"), lit("me"), lit("up"), lit("at"), slot(pool_time()), slot(pool_date())}},
      {"alarm", "alarm_set",
       {lit("get"), lit("me"), lit("up"), lit("at"), slot(pool_time()), slot(pool_date())}},
      {"alarm", "alarm_set",
       {lit("i"), lit("need"), lit("an"), lit("alarm"), lit("at"), slot(pool_time()),
        slot(pool_date())}},
      // alarm / alarm_query
      {"alarm", "alarm_query",
       {lit("when"), lit("do"), lit("i"), lit("get"), lit("up"), slot(pool_date())}},
      {"alarm", "alarm_query",
       {lit("do"), lit("i"), lit("have"), lit("any"), lit("alarms"), lit("for"),
        slot(pool_date())}},
      // weather / weather_query
      {"weather", "weather_query",
       {lit("tell"), lit("me"), lit("the"), lit("weather"), lit("in"), slot(pool_place()),
        slot(pool_date())}},
      {"weather", "weather_query",
       {lit("hows"), lit("the"), lit("weather"), lit("looking"), lit("in"), slot(pool_place())}},
      // weather / weather_forecast
      {"weather", "weather_forecast",
       {lit("give"), lit("me"), lit("the"), lit("weather"), lit("for"), slot(pool_place()),
        slot(pool_date())}},
      {"weather", "weather_forecast",
       {lit("will"), lit("it"), lit("rain"), lit("in"), slot(pool_place()), slot(pool_date())}},
      // music / music_play
      {"music", "music_play",
       {lit("play"), slot(pool_song()), lit("by"), slot(pool_person())}},
      {"music", "music_play",
       {lit("put"), lit("on"), slot(pool_song()), lit("by"), slot(pool_person())}},
      {"music", "music_play",
       {lit("i"), lit("want"), lit("to"), lit("hear"), slot(pool_song())}},
      // music / music_pause
      {"music", "music_pause", {lit("pause"), lit("the"), lit("track"), lit("for"), lit("me")}},
      {"music", "music_pause",
       {lit("hold"), lit("the"), lit("tune"), lit("for"), lit("a"), lit("moment")}},
  };
  return t;
}

inline Example generate_example(const std::string& id, Rng& rng) {
  const auto& all = templates();
  const Template& tpl = all[rng.uniform(all.size())];
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  for (const auto& piece : tpl.pieces) {
    if (piece.pool == nullptr) {
      tokens.push_back(piece.literal);
      tags.emplace_back(kOtherTag);
    } else {
      const auto& value = piece.pool->values[rng.uniform(piece.pool->values.size())];
      for (const auto& w : value) {
        tokens.push_back(w);
        tags.emplace_back(piece.pool->label);
      }
    }
  }
  return Example::make(id, tpl.domain, tpl.intent, std::move(tokens), std::move(tags));
}

}  // namespace fixture

/// Deterministic toy corpus; a desk-scale stand-in for the public IC-SF
/// benchmarks. Every template is exercised at modest sizes, so the
/// inventories are exactly 3 domains, 6 intents, 5 slot labels.
inline std::pair<Dataset, Dataset> synth_fixture(std::uint64_t seed, std::size_t n_train,
                                                 std::size_t n_test) {
  if (n_train == 0 || n_test == 0) throw FormatError("synth_fixture: counts must be > 0");
  const auto make_split = [&](const std::string& split, std::size_t n,
                              std::uint64_t split_salt) {
    Dataset ds;
    ds.name = "fixture";
    ds.split = split;
    Rng rng(SeedMixer(seed).mix(split_salt).mix(split).seed());
    for (std::size_t i = 0; i < n; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s-%06zu", split.c_str(), i);
      Example e = fixture::generate_example(buf, rng);
      add_to_inventories(ds.inventories, e);
      ds.examples.push_back(std::move(e));
    }
    return ds;
  };
  return {make_split("train", n_train, 1), make_split("test", n_test, 2)};
}

}  // namespace ppcl
