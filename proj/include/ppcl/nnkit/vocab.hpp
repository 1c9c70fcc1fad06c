#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ppcl/common.hpp"
#include "ppcl/promptfmt.hpp"

namespace ppcl {

/// Word-level token<->id bijection with reserved specials and sentinel
/// atoms. One vocab entry per "<i>" marker and per word keeps token/slot
/// alignment exact.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocab() = default;

  static Vocab from_tokens(const std::vector<std::string>& tokens, std::size_t n_sentinels) {
    Vocab v;
    v.n_sentinels_ = n_sentinels;
    v.push("<pad>");
    v.push("<bos>");
    v.push("<eos>");
    v.push("<unk>");
    for (std::size_t i = 0; i < n_sentinels; ++i) v.push(sentinel_token(i));
    for (const auto& t : tokens) {
      if (v.token_to_id_.count(t) == 0) v.push(t);
    }
    return v;
  }

  int id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
  }
  const std::string& token(int id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return id_to_token_.size(); }
  std::size_t n_sentinels() const { return n_sentinels_; }

  std::vector<int> encode_tokens(const std::vector<std::string>& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(id(t));
    return out;
  }

  /// Sentinel-aware encoding of rendered text (no BOS/EOS added).
  std::vector<int> encode(const std::string& text) const {
    return encode_tokens(sentinel_tokenize(text));
  }

  /// Space-joined surface form; specials skipped by default.
  std::string decode(const std::vector<int>& ids, bool skip_specials = true) const {
    std::vector<std::string> toks;
    for (const int i : ids) {
      if (skip_specials && i >= kPad && i <= kUnk && i != kUnk) continue;
      toks.push_back(token(i));
    }
    return join(toks, " ");
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write vocab file: " + path);
    out << n_sentinels_ << '\n';
    for (const auto& t : id_to_token_) out << t << '\n';
  }

  static Vocab load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open vocab file: " + path);
    Vocab v;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty vocab file: " + path);
    v.n_sentinels_ = static_cast<std::size_t>(std::stoul(line));
    while (std::getline(in, line)) {
      if (!line.empty()) v.push(line);
    }
    if (v.size() < 4 + v.n_sentinels_) throw FormatError("truncated vocab file: " + path);
    return v;
  }

 private:
  void push(std::string tok) {
    token_to_id_[tok] = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(std::move(tok));
  }

  std::vector<std::string> id_to_token_;
  std::map<std::string, int> token_to_id_;
  std::size_t n_sentinels_ = 0;
};

/// Deterministic vocabulary over rendered training texts: specials, then
/// max_sentinels sentinel atoms, then corpus tokens by descending frequency
/// (ties broken lexicographically). Fails if any text uses a sentinel at or
/// beyond max_sentinels.
inline Vocab build_vocab(const std::vector<std::string>& rendered_texts,
                         std::size_t max_sentinels) {
  std::map<std::string, std::size_t> freq;
  for (const auto& text : rendered_texts) {
    for (const auto& tok : sentinel_tokenize(text)) {
      if (const auto idx = sentinel_index(tok)) {
        if (*idx >= max_sentinels) {
          throw FormatError("build_vocab: sentinel " + tok + " exceeds max_sentinels=" +
                            std::to_string(max_sentinels));
        }
        continue;  // reserved entry
      }
      ++freq[tok];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> ordered;
  ordered.reserve(items.size());
  for (auto& [tok, n] : items) ordered.push_back(tok);
  return Vocab::from_tokens(ordered, max_sentinels);
}

}  // namespace ppcl
