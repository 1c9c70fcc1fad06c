#pragma once

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ppcl/common.hpp"

namespace ppcl {

/// Scores how close a perturbed token list stays to its clean original,
/// in [0, 1]. Pluggable so that externally computed scores (e.g. from a
/// learned model) can replace the built-in scorer.
class SimilarityScorer {
 public:
  virtual ~SimilarityScorer() = default;
  virtual double score(const std::vector<std::string>& clean,
                       const std::vector<std::string>& perturbed) const = 0;
};

/// Deterministic lexical scorer. Token-pair score is the Dice coefficient
/// over character trigrams of '#'-padded words; precision is the mean over
/// perturbed tokens of the best match against clean tokens, recall is the
/// symmetric mean, and the score is their harmonic mean.
class TrigramDiceScorer : public SimilarityScorer {
 public:
  double score(const std::vector<std::string>& clean,
               const std::vector<std::string>& perturbed) const override {
    if (clean.empty() || perturbed.empty()) {
      throw FormatError("similarity_score: empty token list");
    }
    const double precision = directional(perturbed, clean);
    const double recall = directional(clean, perturbed);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
  }

  static double token_dice(const std::string& a, const std::string& b) {
    const auto ta = trigrams(a);
    const auto tb = trigrams(b);
    if (ta.empty() && tb.empty()) return 1.0;
    if (ta.empty() || tb.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& t : ta) common += tb.count(t);
    return 2.0 * static_cast<double>(common) /
           static_cast<double>(ta.size() + tb.size());
  }

 private:
  static std::set<std::string> trigrams(const std::string& w) {
    const std::string padded = "#" + w + "#";
    std::set<std::string> out;
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) out.insert(padded.substr(i, 3));
    return out;
  }

  static double directional(const std::vector<std::string>& from,
                            const std::vector<std::string>& to) {
    double total = 0.0;
    for (const auto& f : from) {
      double best = 0.0;
      for (const auto& t : to) best = std::max(best, token_dice(f, t));
      total += best;
    }
    return total / static_cast<double>(from.size());
  }
};

inline const TrigramDiceScorer& default_scorer() {
  static const TrigramDiceScorer scorer;
  return scorer;
}

inline double similarity_score(const std::vector<std::string>& clean,
                               const std::vector<std::string>& perturbed) {
  return default_scorer().score(clean, perturbed);
}

/// Externally supplied scores: lines "clean_id<TAB>score".
inline std::map<std::string, double> load_external_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open similarity file: " + path);
  std::map<std::string, double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError("similarity line missing tab at line " + std::to_string(line_no));
    }
    try {
      out[trim(line.substr(0, tab))] = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw FormatError("bad similarity value at line " + std::to_string(line_no));
    }
  }
  return out;
}

}  // namespace ppcl
