#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "ppcl/lexicon.hpp"

using namespace ppcl;

namespace {

const std::string kFixtureDict = std::string(PPCL_FIXTURE_DIR) + "/pronouncing.dict";
const std::string kFixtureThesaurus = std::string(PPCL_FIXTURE_DIR) + "/thesaurus.tsv";

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

}  // namespace

TEST_CASE("load_pronouncing parses the fixture lexicon") {
  const auto lex = load_pronouncing(kFixtureDict);

  const auto* week = lex.lookup("week");
  REQUIRE(week != nullptr);
  REQUIRE(week->size() == 1);
  CHECK((*week)[0] == PhoneSeq{"W", "IY1", "K"});

  // comment lines skipped, lookup case-insensitive
  CHECK(lex.lookup("WEEK") != nullptr);
  CHECK(lex.lookup(";;;") == nullptr);

  // weak and week share one stress-stripped pronunciation
  const auto* weak = lex.lookup("weak");
  REQUIRE(weak != nullptr);
  CHECK(strip_stress((*weak)[0]) == strip_stress((*week)[0]));

  // alternates merge under the base word
  const auto* the = lex.lookup("the");
  REQUIRE(the != nullptr);
  CHECK(the->size() == 2);
}

TEST_CASE("load_pronouncing rejects bad lines") {
  CHECK_THROWS_AS(load_pronouncing(write_temp("ppcl_lex_short.dict", "WORD\n")), FormatError);
  CHECK_THROWS_AS(load_pronouncing(write_temp("ppcl_lex_sym.dict", "WORD  W $H\n")),
                  FormatError);
  CHECK_THROWS_AS(load_pronouncing("/nonexistent/file.dict"), FormatError);
}

TEST_CASE("homophones at distance zero") {
  const auto lex = load_pronouncing(kFixtureDict);
  CHECK(homophones("week", lex, 0) == std::vector<std::string>{"weak"});
  CHECK(homophones("xyzzy", lex, 0).empty());
  CHECK(homophones("to", lex, 0) == std::vector<std::string>{"too", "two"});
  // stress digits are ignored
  CHECK(homophones("insight", lex, 0) == std::vector<std::string>{"incite"});
}

TEST_CASE("homophones never contain the word itself and are symmetric") {
  const auto lex = load_pronouncing(kFixtureDict);
  for (const auto& [word, prons] : lex.entries()) {
    const auto hs = homophones(word, lex, 0);
    CHECK(std::find(hs.begin(), hs.end(), word) == hs.end());
    for (const auto& other : hs) {
      const auto back = homophones(other, lex, 0);
      CHECK(std::find(back.begin(), back.end(), word) != back.end());
    }
  }
}

TEST_CASE("homophones at distance one") {
  const auto lex = load_pronouncing(kFixtureDict);
  // noon (N UW N) is one substitution from the do/due/dew group? no: N UW N
  // vs D UW -> distance 2. me (M IY) vs mi (M IY) identical; my (M AY) is one
  // edit from me.
  const auto hs = homophones("me", lex, 1);
  CHECK(std::find(hs.begin(), hs.end(), "mi") != hs.end());
  CHECK(std::find(hs.begin(), hs.end(), "my") != hs.end());
}

TEST_CASE("thesaurus lookups") {
  const auto th = load_thesaurus(kFixtureThesaurus);
  CHECK(th.synonyms("new") == std::vector<std::string>{"novel", "fresh"});
  CHECK(th.synonyms("zzz").empty());
  CHECK(synonyms("NEW", th) == std::vector<std::string>{"novel", "fresh"});
}

TEST_CASE("thesaurus drops self-synonyms and duplicates") {
  const auto path = write_temp("ppcl_th_self.tsv", "a\ta,b,b\n");
  const auto th = load_thesaurus(path);
  CHECK(th.synonyms("a") == std::vector<std::string>{"b"});
}

TEST_CASE("thesaurus rejects lines without a tab") {
  const auto path = write_temp("ppcl_th_bad.tsv", "word no tab\n");
  CHECK_THROWS_WITH(load_thesaurus(path), Catch::Matchers::ContainsSubstring("line 1"));
}
