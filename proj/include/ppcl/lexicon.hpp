#pragma once

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ppcl/common.hpp"

namespace ppcl {

/// An ARPABET pronunciation; vowels may carry stress digits 0-2.
using PhoneSeq = std::vector<std::string>;

/// Drops trailing stress digits so "IY1" and "IY2" compare equal.
inline PhoneSeq strip_stress(const PhoneSeq& phones) {
  PhoneSeq out;
  out.reserve(phones.size());
  for (const auto& p : phones) {
    std::string q = p;
    while (!q.empty() && q.back() >= '0' && q.back() <= '2') q.pop_back();
    out.push_back(std::move(q));
  }
  return out;
}

/// CMU-style pronouncing dictionary: lowercase word -> one or more
/// pronunciations. Lookup is case-insensitive.
class PronouncingLexicon {
 public:
  void add(const std::string& word, PhoneSeq phones) {
    entries_[to_lower(word)].push_back(std::move(phones));
  }
  const std::vector<PhoneSeq>* lookup(const std::string& word) const {
    auto it = entries_.find(to_lower(word));
    return it == entries_.end() ? nullptr : &it->second;
  }
  const std::map<std::string, std::vector<PhoneSeq>>& entries() const { return entries_; }

 private:
  std::map<std::string, std::vector<PhoneSeq>> entries_;
};

/// Lines are "WORD  PH PH ..." with any whitespace run as separator;
/// ";;;" starts a comment line; "WORD(2)" marks alternate pronunciations
/// and merges under the base word.
inline PronouncingLexicon load_pronouncing(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open pronouncing file: " + path);
  PronouncingLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.rfind(";;;", 0) == 0) continue;
    auto fields = split_whitespace(t);
    if (fields.size() < 2) {
      throw FormatError("pronunciation missing phonemes at line " + std::to_string(line_no));
    }
    std::string word = fields[0];
    // strip an "(n)" alternate marker
    if (auto pos = word.find('('); pos != std::string::npos && word.back() == ')') {
      word = word.substr(0, pos);
    }
    PhoneSeq phones(fields.begin() + 1, fields.end());
    for (const auto& p : phones) {
      for (const char c : p) {
        const bool ok = (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '2');
        if (!ok) {
          throw FormatError("unknown phoneme symbol '" + p + "' at line " +
                            std::to_string(line_no));
        }
      }
    }
    lex.add(word, std::move(phones));
  }
  return lex;
}

/// Phoneme-level Levenshtein distance.
inline std::size_t phoneme_edit_distance(const PhoneSeq& a, const PhoneSeq& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

/// All other lexicon words with some pronunciation within the given
/// phoneme edit distance of some pronunciation of `word`, stress ignored,
/// sorted lexicographically. Unknown words yield an empty list.
inline std::vector<std::string> homophones(const std::string& word,
                                           const PronouncingLexicon& lexicon,
                                           std::size_t max_phoneme_edits = 0) {
  const std::string key = to_lower(word);
  const auto* prons = lexicon.lookup(key);
  if (prons == nullptr) return {};
  std::vector<PhoneSeq> stripped;
  stripped.reserve(prons->size());
  for (const auto& p : *prons) stripped.push_back(strip_stress(p));

  std::vector<std::string> out;
  for (const auto& [other, other_prons] : lexicon.entries()) {
    if (other == key) continue;
    bool hit = false;
    for (const auto& op : other_prons) {
      const PhoneSeq os = strip_stress(op);
      for (const auto& ps : stripped) {
        if (phoneme_edit_distance(ps, os) <= max_phoneme_edits) {
          hit = true;
          break;
        }
      }
      if (hit) break;
    }
    if (hit) out.push_back(other);
  }
  return out;  // map iteration is already lexicographic
}

/// Synonym table: lowercase word -> ordered, deduplicated synonyms.
/// A word is never its own synonym.
class Thesaurus {
 public:
  void add(const std::string& word, const std::vector<std::string>& syns) {
    const std::string key = to_lower(word);
    auto& list = entries_[key];
    for (const auto& s : syns) {
      const std::string sl = to_lower(s);
      if (sl == key || sl.empty()) continue;
      if (std::find(list.begin(), list.end(), sl) == list.end()) list.push_back(sl);
    }
  }
  std::vector<std::string> synonyms(const std::string& word) const {
    auto it = entries_.find(to_lower(word));
    return it == entries_.end() ? std::vector<std::string>{} : it->second;
  }

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

/// Lines are "word<TAB>syn1,syn2,...".
inline Thesaurus load_thesaurus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open thesaurus file: " + path);
  Thesaurus th;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError("thesaurus line missing tab at line " + std::to_string(line_no));
    }
    const std::string word = trim(line.substr(0, tab));
    std::vector<std::string> syns;
    for (auto& piece : split_on(line.substr(tab + 1), ',')) {
      const std::string s = trim(piece);
      if (!s.empty()) syns.push_back(s);
    }
    th.add(word, syns);
  }
  return th;
}

inline std::vector<std::string> synonyms(const std::string& word, const Thesaurus& th) {
  return th.synonyms(word);
}

}  // namespace ppcl
