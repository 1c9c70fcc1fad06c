#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ppcl/common.hpp"
#include "ppcl/dataset.hpp"
#include "ppcl/lexicon.hpp"
#include "ppcl/similarity.hpp"

namespace ppcl {

enum class PerturbationKind { Oronym, Synonym, Paraphrase };

inline const char* kind_name(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::Oronym: return "oronym";
    case PerturbationKind::Synonym: return "synonym";
    case PerturbationKind::Paraphrase: return "paraphrase";
  }
  return "?";
}

inline std::optional<PerturbationKind> kind_from_name(std::string_view name) {
  if (name == "oronym") return PerturbationKind::Oronym;
  if (name == "synonym") return PerturbationKind::Synonym;
  if (name == "paraphrase") return PerturbationKind::Paraphrase;
  return std::nullopt;
}

/// A perturbed counterpart of a clean example. Domain and intent are always
/// inherited from the clean example and never stored here.
struct PerturbedExample {
  std::string clean_id;
  PerturbationKind kind = PerturbationKind::Synonym;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::vector<std::size_t> replaced_positions;  // empty for Paraphrase
  double similarity = 0.0;
};

/// Materializes a perturbed example as a full Example, inheriting the clean
/// side's domain/intent and recomputing arguments from the new tokens.
inline Example to_example(const PerturbedExample& p, const Example& clean,
                          const std::string& new_id) {
  return Example::make(new_id, clean.domain, clean.intent, p.tokens, p.tags);
}

/// Words derived from label names; perturbation never substitutes them.
struct ProtectedVocab {
  std::set<std::string> words;
  bool contains(const std::string& w) const { return words.count(to_lower(w)) > 0; }
};

/// Union of the lowercase underscore-split pieces of every domain, intent,
/// and slot label, minus the literal "other".
inline ProtectedVocab build_protected_vocab(const Dataset& dataset) {
  ProtectedVocab out;
  const auto add_pieces = [&](const std::string& label) {
    for (const auto& piece : split_on(to_lower(label), '_')) {
      if (!piece.empty() && piece != "other") out.words.insert(piece);
    }
  };
  for (const auto& d : dataset.inventories.domains) add_pieces(d);
  for (const auto& i : dataset.inventories.intents) add_pieces(i);
  for (const auto& s : dataset.inventories.slot_labels) add_pieces(s);
  return out;
}

/// Replacement resources for the word-level perturbations.
struct Lexicons {
  const PronouncingLexicon* pronouncing = nullptr;
  const Thesaurus* thesaurus = nullptr;
  std::size_t max_phoneme_edits = 0;
};

namespace detail {

/// Single-token replacement candidates for one word under one kind.
/// Multi-word entries are dropped so token counts never change.
inline std::vector<std::string> replacements_for(const std::string& word,
                                                 PerturbationKind kind,
                                                 const Lexicons& lex) {
  std::vector<std::string> raw;
  if (kind == PerturbationKind::Oronym) {
    if (lex.pronouncing != nullptr) {
      raw = homophones(word, *lex.pronouncing, lex.max_phoneme_edits);
    }
  } else if (kind == PerturbationKind::Synonym) {
    if (lex.thesaurus != nullptr) raw = lex.thesaurus->synonyms(word);
  }
  std::vector<std::string> out;
  for (auto& r : raw) {
    if (r.find(' ') == std::string::npos && !r.empty()) out.push_back(std::move(r));
  }
  return out;
}

}  // namespace detail

/// Substitutes up to max_words unprotected tokens that have replacements.
/// The draw is a pure function of (seed, example id, kind): k =
/// min(max_words, candidate count) distinct positions chosen uniformly
/// without replacement, then one replacement per position uniformly.
/// Returns absent when no token is substitutable.
inline std::optional<PerturbedExample> word_level_perturb(
    const Example& example, PerturbationKind kind, const Lexicons& lexicons,
    const ProtectedVocab& protected_vocab, std::uint64_t seed, std::size_t max_words = 3,
    const SimilarityScorer& scorer = default_scorer()) {
  if (kind == PerturbationKind::Paraphrase) {
    throw FormatError("word_level_perturb: paraphrase is not a word-level kind");
  }
  if (max_words == 0) throw FormatError("word_level_perturb: max_words must be >= 1");

  struct Candidate {
    std::size_t position;
    std::vector<std::string> options;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < example.tokens.size(); ++i) {
    if (protected_vocab.contains(example.tokens[i])) continue;
    auto options = detail::replacements_for(to_lower(example.tokens[i]), kind, lexicons);
    if (!options.empty()) candidates.push_back({i, std::move(options)});
  }
  if (candidates.empty()) return std::nullopt;

  Rng rng(SeedMixer(seed).mix(example.id).mix(kind_name(kind)).seed());
  const std::size_t k = std::min(max_words, candidates.size());
  const auto chosen = rng.sample_indices(candidates.size(), k);

  PerturbedExample out;
  out.clean_id = example.id;
  out.kind = kind;
  out.tokens = example.tokens;
  out.tags = example.tags;
  for (const std::size_t ci : chosen) {
    const auto& cand = candidates[ci];
    out.tokens[cand.position] = cand.options[rng.uniform(cand.options.size())];
    out.replaced_positions.push_back(cand.position);
  }
  std::sort(out.replaced_positions.begin(), out.replaced_positions.end());
  out.similarity = scorer.score(example.tokens, out.tokens);
  return out;
}

// ---------------------------------------------------------------------------
// Paraphrase ingestion: slot labels for a paraphrase are re-derived by
// locating each clean argument's text in the paraphrase tokens.
// ---------------------------------------------------------------------------

struct IngestError {
  enum class Kind { ArgumentNotFound, OverlappingArguments } kind;
  std::string label;
  std::string text;
  std::string message;
};

using ParaphraseTokenizer = std::vector<std::string> (*)(std::string_view);

inline Result<PerturbedExample, IngestError> ingest_paraphrase(
    const Example& example, const std::string& paraphrase_text,
    const SimilarityScorer& scorer = default_scorer(),
    ParaphraseTokenizer tokenizer = &split_whitespace) {
  const auto ptokens = tokenizer(paraphrase_text);
  if (ptokens.empty()) throw FormatError("ingest_paraphrase: empty paraphrase");

  std::vector<std::string> tags(ptokens.size(), kOtherTag);
  std::vector<bool> claimed(ptokens.size(), false);

  for (const auto& arg : example.arguments) {
    const auto span = split_whitespace(arg.text);
    // Candidate start positions: exact matches first (left to right), then
    // additional case-insensitive matches.
    std::vector<std::size_t> starts;
    const auto matches_at = [&](std::size_t s, bool fold) {
      if (s + span.size() > ptokens.size()) return false;
      for (std::size_t j = 0; j < span.size(); ++j) {
        const bool eq = fold ? to_lower(ptokens[s + j]) == to_lower(span[j])
                             : ptokens[s + j] == span[j];
        if (!eq) return false;
      }
      return true;
    };
    for (std::size_t s = 0; s + span.size() <= ptokens.size(); ++s) {
      if (matches_at(s, false)) starts.push_back(s);
    }
    for (std::size_t s = 0; s + span.size() <= ptokens.size(); ++s) {
      if (!matches_at(s, false) && matches_at(s, true)) starts.push_back(s);
    }
    if (starts.empty()) {
      return IngestError{IngestError::Kind::ArgumentNotFound, arg.label, arg.text,
                         "argument '" + arg.text + "' (" + arg.label +
                             ") not found in paraphrase"};
    }
    bool placed = false;
    for (const std::size_t s : starts) {
      bool free = true;
      for (std::size_t j = 0; j < span.size(); ++j) free = free && !claimed[s + j];
      if (!free) continue;
      for (std::size_t j = 0; j < span.size(); ++j) {
        claimed[s + j] = true;
        tags[s + j] = arg.label;
      }
      placed = true;
      break;
    }
    if (!placed) {
      return IngestError{IngestError::Kind::OverlappingArguments, arg.label, arg.text,
                         "arguments claim overlapping positions at '" + arg.text + "'"};
    }
  }

  PerturbedExample out;
  out.clean_id = example.id;
  out.kind = PerturbationKind::Paraphrase;
  out.tokens = ptokens;
  out.tags = std::move(tags);
  out.similarity = scorer.score(example.tokens, out.tokens);
  return out;
}

// ---------------------------------------------------------------------------
// Built-in rule paraphraser: a fixed set of rewrites that move argument
// spans without altering them, so ingest_paraphrase always re-derives the
// labels. It exists to make the pipeline self-contained; externally
// generated paraphrases enter through ingest_paraphrase.
// ---------------------------------------------------------------------------

inline std::optional<PerturbedExample> template_paraphrase(
    const Example& example, std::uint64_t seed,
    const SimilarityScorer& scorer = default_scorer()) {
  static const std::set<std::string> kLeadingVerbs = {
      "play", "wake", "set", "give", "put", "pause", "hold", "get", "tell", "show"};

  std::vector<std::vector<std::string>> rewrites;
  const auto& t = example.tokens;
  const bool head_other = !example.tags.empty() && example.tags[0] == kOtherTag;

  if (t.size() >= 3 && t[0] == "tell" && t[1] == "me" && head_other &&
      example.tags[1] == kOtherTag) {
    std::vector<std::string> r = {"whats"};
    r.insert(r.end(), t.begin() + 2, t.end());
    rewrites.push_back(std::move(r));
  }
  if (head_other && kLeadingVerbs.count(t[0]) > 0) {
    std::vector<std::string> wrapped = {"can", "you"};
    wrapped.insert(wrapped.end(), t.begin(), t.end());
    rewrites.push_back(std::move(wrapped));

    std::vector<std::string> polite = t;
    polite.push_back("please");
    rewrites.push_back(std::move(polite));
  }
  if (rewrites.empty()) return std::nullopt;

  Rng rng(SeedMixer(seed).mix(example.id).mix(kind_name(PerturbationKind::Paraphrase)).seed());
  const auto& pick = rewrites[rng.uniform(rewrites.size())];
  auto result = ingest_paraphrase(example, join(pick, " "), scorer);
  if (!result.ok()) return std::nullopt;  // rewrites preserve spans, so not expected
  return result.value();
}

// ---------------------------------------------------------------------------
// Paired sets and augmentation.
// ---------------------------------------------------------------------------

/// Clean and perturbed sides in one-to-one correspondence; every retained
/// pair scored at or above the recorded threshold.
struct PairedSet {
  std::vector<std::pair<Example, PerturbedExample>> pairs;
  PerturbationKind kind = PerturbationKind::Synonym;
  double threshold = 0.0;
};

/// Keeps pairs whose similarity clears the threshold, resolving clean ids
/// and enforcing one clean example per pair (first occurrence wins).
/// When an external score table is given it overrides the stored
/// similarity for listed clean ids.
inline PairedSet build_paired_set(const Dataset& dataset,
                                  const std::vector<PerturbedExample>& perturbed,
                                  double threshold = 0.85,
                                  const std::map<std::string, double>* external_scores = nullptr) {
  std::map<std::string, const Example*> by_id;
  for (const auto& e : dataset.examples) by_id[e.id] = &e;

  PairedSet out;
  out.threshold = threshold;
  std::set<std::string> used;
  bool kind_set = false;
  for (const auto& p : perturbed) {
    auto it = by_id.find(p.clean_id);
    if (it == by_id.end()) {
      throw FormatError("build_paired_set: dangling clean_id '" + p.clean_id + "'");
    }
    if (!kind_set) {
      out.kind = p.kind;
      kind_set = true;
    } else if (p.kind != out.kind) {
      throw FormatError("build_paired_set: mixed perturbation kinds");
    }
    PerturbedExample item = p;
    if (external_scores != nullptr) {
      if (auto sc = external_scores->find(p.clean_id); sc != external_scores->end()) {
        item.similarity = sc->second;
      }
    }
    if (item.similarity < threshold) continue;
    if (!used.insert(p.clean_id).second) continue;
    out.pairs.emplace_back(*it->second, std::move(item));
  }
  return out;
}

/// Extends the dataset with up to k distinct filtered perturbations per
/// clean example, as full Examples inheriting domain and intent. Each
/// attempt draws from a sub-seed of (seed, id, kind, attempt), so output is
/// a pure function of the inputs.
inline Dataset augment(const Dataset& dataset, PerturbationKind kind, std::size_t k,
                       std::uint64_t seed, double threshold, const Lexicons& lexicons,
                       std::size_t max_words = 3,
                       const SimilarityScorer& scorer = default_scorer()) {
  if (k == 0) throw FormatError("augment: k must be >= 1");
  const ProtectedVocab protected_vocab = build_protected_vocab(dataset);

  Dataset out;
  out.name = dataset.name;
  out.split = dataset.split;
  out.examples = dataset.examples;
  out.inventories = dataset.inventories;

  const std::size_t attempt_budget = std::max<std::size_t>(4 * k, k + 8);
  for (const auto& clean : dataset.examples) {
    std::vector<std::vector<std::string>> accepted_tokens;
    std::size_t made = 0;
    for (std::size_t attempt = 0; attempt < attempt_budget && made < k; ++attempt) {
      const std::uint64_t sub_seed = SeedMixer(seed).mix(attempt).seed();
      std::optional<PerturbedExample> p;
      if (kind == PerturbationKind::Paraphrase) {
        p = template_paraphrase(clean, sub_seed, scorer);
      } else {
        p = word_level_perturb(clean, kind, lexicons, protected_vocab, sub_seed, max_words,
                               scorer);
      }
      if (!p || p->similarity < threshold) continue;
      if (std::find(accepted_tokens.begin(), accepted_tokens.end(), p->tokens) !=
          accepted_tokens.end()) {
        continue;
      }
      accepted_tokens.push_back(p->tokens);
      const std::string new_id =
          clean.id + "-" + kind_name(kind) + "-" + std::to_string(made);
      out.examples.push_back(to_example(*p, clean, new_id));
      ++made;
    }
  }
  return out;
}

}  // namespace ppcl
