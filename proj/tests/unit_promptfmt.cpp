#include <catch2/catch_amalgamated.hpp>

#include "ppcl/dataset.hpp"
#include "ppcl/promptfmt.hpp"

using namespace ppcl;

namespace {

Example table_example() {
  return Example::make("e1", "alarm", "alarm_set",
                       {"wake", "me", "up", "at", "five", "am", "this", "week"},
                       {"Other", "Other", "Other", "Other", "time", "time", "date", "date"});
}

const std::vector<FormatSpec> kAllSpecs = {
    {PromptFormat::Simple, SlotFormat::TagOnly},
    {PromptFormat::Simple, SlotFormat::SentinelTag},
    {PromptFormat::Simple, SlotFormat::ExtractiveSentinelTag},
    {PromptFormat::Structured, SlotFormat::TagOnly},
    {PromptFormat::Structured, SlotFormat::SentinelTag},
    {PromptFormat::Structured, SlotFormat::ExtractiveSentinelTag},
};

}  // namespace

TEST_CASE("sentinelize prefixes each token with its index") {
  CHECK(sentinelize(table_example().tokens) ==
        "<0>wake <1>me <2>up <3>at <4>five <5>am <6>this <7>week");
  CHECK(sentinelize({"hi"}) == "<0>hi");
  CHECK_THROWS_AS(sentinelize({}), FormatError);
  // tokens containing '<' render verbatim; only a leading "<N>" is special
  CHECK(sentinelize({"a<3>b"}) == "<0>a<3>b");
  CHECK(sentinel_tokenize("<0>a<3>b") == std::vector<std::string>{"<0>", "a<3>b"});
}

TEST_CASE("render matches the normative simple sentinel template") {
  const auto text = render(table_example(), {PromptFormat::Simple, SlotFormat::SentinelTag},
                           RenderMode::Training);
  CHECK(text ==
        "Utterance: <0>wake <1>me <2>up <3>at <4>five <5>am <6>this <7>week "
        "Domain: alarm Intent: alarm_set "
        "Slots: <0>Other <1>Other <2>Other <3>Other <4>time <5>time <6>date <7>date "
        "Arguments: [time : five am, date : this week]");
}

TEST_CASE("extractive slots list only non-Other positions") {
  const auto text = render(table_example(),
                           {PromptFormat::Simple, SlotFormat::ExtractiveSentinelTag},
                           RenderMode::Training);
  CHECK_THAT(text, Catch::Matchers::ContainsSubstring(
                       "Slots: <4>time <5>time <6>date <7>date Arguments:"));
}

TEST_CASE("structured prompt arranges intent in domain") {
  const auto text = render(table_example(), {PromptFormat::Structured, SlotFormat::TagOnly},
                           RenderMode::Training);
  CHECK(text ==
        "Utterance: wake me up at five am this week "
        "Intent in Domain: alarm_set in alarm "
        "Slots with Arguments: Other Other Other Other time time date date "
        "with [time : five am, date : this week]");
}

TEST_CASE("inference render is a strict prefix of the training render") {
  const Example e = table_example();
  for (const auto spec : kAllSpecs) {
    const auto training = render(e, spec, RenderMode::Training);
    const auto inference = render(e, spec, RenderMode::Inference);
    REQUIRE(inference.size() < training.size());
    CHECK(training.substr(0, inference.size()) == inference);
  }
}

TEST_CASE("render then parse reproduces the labels for every format") {
  auto [train, test] = synth_fixture(21, 40, 5);
  std::vector<Example> examples = train.examples;
  examples.push_back(table_example());
  // an example without any slot exercises the empty extractive section
  examples.push_back(Example::make("none", "music", "music_pause",
                                   {"pause", "the", "track"}, {"Other", "Other", "Other"}));
  for (const auto& e : examples) {
    for (const auto spec : kAllSpecs) {
      const auto text = render(e, spec, RenderMode::Training);
      const auto parsed = parse_response(text, spec, e.tokens.size());
      REQUIRE(parsed.ok());
      CHECK(parsed.value().domain == e.domain);
      CHECK(parsed.value().intent == e.intent);
      CHECK(parsed.value().tags == e.tags);
      CHECK(parsed.value().warnings.empty());

      const auto with_args = parse_hypothesis(text, spec, e.tokens);
      REQUIRE(with_args.ok());
      CHECK(with_args.value().arguments == e.arguments);
    }
  }
}

TEST_CASE("sentinel parsing rejects out-of-range indices") {
  const FormatSpec spec{PromptFormat::Simple, SlotFormat::ExtractiveSentinelTag};
  const auto r = parse_response(
      "Utterance: <0>hi Domain: d Intent: i Slots: <9>time Arguments: []", spec, 8);
  REQUIRE_FALSE(r.ok());
  CHECK(r.error().kind == ParseIssue::Kind::IndexOutOfRange);
  CHECK_THAT(r.error().detail, Catch::Matchers::ContainsSubstring("9"));
}

TEST_CASE("extractive parsing fills unlisted indices with Other") {
  const FormatSpec spec{PromptFormat::Simple, SlotFormat::ExtractiveSentinelTag};
  const auto r = parse_response(
      "Utterance: x Domain: alarm Intent: alarm_set "
      "Slots: <4>time <5>time <6>date <7>date Arguments: []",
      spec, 8);
  REQUIRE(r.ok());
  CHECK(r.value().tags == std::vector<std::string>{"Other", "Other", "Other", "Other",
                                                   "time", "time", "date", "date"});
}

TEST_CASE("duplicate sentinel indices keep the last value and warn") {
  const FormatSpec spec{PromptFormat::Simple, SlotFormat::SentinelTag};
  const auto r = parse_response(
      "Utterance: x Domain: d Intent: i Slots: <0>time <0>date Arguments: []", spec, 1);
  REQUIRE(r.ok());
  CHECK(r.value().tags == std::vector<std::string>{"date"});
  REQUIRE_FALSE(r.value().warnings.empty());
  CHECK_THAT(r.value().warnings[0], Catch::Matchers::ContainsSubstring("duplicate"));
}

TEST_CASE("tag-only parsing requires exactly n tags") {
  const FormatSpec spec{PromptFormat::Simple, SlotFormat::TagOnly};
  const auto r = parse_response("Utterance: a b Domain: d Intent: i Slots: Other Arguments: []",
                                spec, 2);
  REQUIRE_FALSE(r.ok());
  CHECK(r.error().kind == ParseIssue::Kind::TagCountMismatch);
}

TEST_CASE("missing sections are reported by name") {
  const FormatSpec spec{PromptFormat::Simple, SlotFormat::SentinelTag};
  const auto r = parse_response("Utterance: <0>hi Domain: d Intent: i", spec, 1);
  REQUIRE_FALSE(r.ok());
  CHECK(r.error().kind == ParseIssue::Kind::MissingField);
  CHECK(r.error().detail == "Slots");
}

TEST_CASE("garbage sentinel fragments are rejected, not fabricated") {
  const FormatSpec spec{PromptFormat::Simple, SlotFormat::SentinelTag};
  const auto r = parse_response(
      "Utterance: <0>hi Domain: d Intent: i Slots: time <0> Arguments: []", spec, 1);
  REQUIRE_FALSE(r.ok());
  CHECK(r.error().kind == ParseIssue::Kind::UnparseableSentinel);
}

TEST_CASE("unknown labels are preserved rather than crashing") {
  const FormatSpec spec{PromptFormat::Simple, SlotFormat::SentinelTag};
  const auto r = parse_response(
      "Utterance: <0>hi Domain: d Intent: i Slots: <0>flavor Arguments: []", spec, 1);
  REQUIRE(r.ok());
  CHECK(r.value().tags == std::vector<std::string>{"flavor"});
}

TEST_CASE("placeholder hypothesis scores as all-Other") {
  const auto h = placeholder_hypothesis(3);
  CHECK(h.tags == std::vector<std::string>{"Other", "Other", "Other"});
  CHECK(h.intent.empty());
}
