#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ppcl/common.hpp"
#include "ppcl/dataset.hpp"

namespace ppcl {

enum class PromptFormat { Simple, Structured };
enum class SlotFormat { TagOnly, SentinelTag, ExtractiveSentinelTag };

struct FormatSpec {
  PromptFormat prompt = PromptFormat::Simple;
  SlotFormat slots = SlotFormat::SentinelTag;
};

enum class RenderMode { Training, Inference };

inline const char* prompt_format_name(PromptFormat p) {
  return p == PromptFormat::Simple ? "simple" : "structured";
}
inline const char* slot_format_name(SlotFormat s) {
  switch (s) {
    case SlotFormat::TagOnly: return "tag_only";
    case SlotFormat::SentinelTag: return "sentinel_tag";
    case SlotFormat::ExtractiveSentinelTag: return "extractive_sentinel_tag";
  }
  return "?";
}

inline std::string sentinel_token(std::size_t i) { return "<" + std::to_string(i) + ">"; }

/// "<0>tok0 <1>tok1 ..." — the index marker is fused to its word.
inline std::string sentinelize(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw FormatError("sentinelize: empty token list");
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += sentinel_token(i) + tokens[i];
  }
  return out;
}

/// Splits on whitespace, then peels leading "<N>" markers off each piece so
/// sentinels are atomic. "<0>wake" and "<0> wake" tokenize identically;
/// a '<' anywhere past the start of a piece is left verbatim.
inline std::vector<std::string> sentinel_tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& piece : split_whitespace(text)) {
    std::string_view rest = piece;
    while (rest.size() >= 3 && rest[0] == '<') {
      std::size_t j = 1;
      while (j < rest.size() && rest[j] >= '0' && rest[j] <= '9') ++j;
      if (j == 1 || j >= rest.size() || rest[j] != '>') break;
      out.emplace_back(rest.substr(0, j + 1));
      rest = rest.substr(j + 1);
    }
    if (!rest.empty()) out.emplace_back(rest);
  }
  return out;
}

/// Parses "<N>"; returns npos-like failure via optional.
inline std::optional<std::size_t> sentinel_index(std::string_view atom) {
  if (atom.size() < 3 || atom.front() != '<' || atom.back() != '>') return std::nullopt;
  std::size_t value = 0;
  for (std::size_t i = 1; i + 1 < atom.size(); ++i) {
    if (atom[i] < '0' || atom[i] > '9') return std::nullopt;
    value = value * 10 + static_cast<std::size_t>(atom[i] - '0');
  }
  return value;
}

namespace detail {

inline std::string utterance_section(const Example& e, SlotFormat slots) {
  return slots == SlotFormat::TagOnly ? join(e.tokens, " ") : sentinelize(e.tokens);
}

inline std::string slots_section(const Example& e, SlotFormat slots) {
  switch (slots) {
    case SlotFormat::TagOnly:
      return join(e.tags, " ");
    case SlotFormat::SentinelTag: {
      std::vector<std::string> items;
      items.reserve(e.tags.size());
      for (std::size_t i = 0; i < e.tags.size(); ++i) {
        items.push_back(sentinel_token(i) + e.tags[i]);
      }
      return join(items, " ");
    }
    case SlotFormat::ExtractiveSentinelTag: {
      std::vector<std::string> items;
      for (std::size_t i = 0; i < e.tags.size(); ++i) {
        if (e.tags[i] != kOtherTag) items.push_back(sentinel_token(i) + e.tags[i]);
      }
      return join(items, " ");
    }
  }
  return {};
}

inline std::string arguments_section(const Example& e) {
  std::vector<std::string> items;
  items.reserve(e.arguments.size());
  for (const auto& a : e.arguments) items.push_back(a.label + " : " + a.text);
  return "[" + join(items, ", ") + "]";
}

}  // namespace detail

/// Renders an example into one of the six prompt/slot format combinations.
///
/// Normative templates (single spaces between fields; an empty extractive
/// slots section contributes nothing between its header and the next field):
///   simple      "Utterance: U Domain: d Intent: i Slots: S Arguments: A"
///   structured  "Utterance: U Intent in Domain: i in d Slots with Arguments: S with A"
/// where U is the plain utterance for tag_only and the sentinelized
/// utterance otherwise, S is the slots section for the slot format, and A
/// is "[label : text, ...]". Inference mode stops after the first target
/// field header so generation continues from there.
inline std::string render(const Example& e, FormatSpec spec, RenderMode mode) {
  const std::string u = detail::utterance_section(e, spec.slots);
  std::vector<std::string> parts = {"Utterance:", u};
  if (spec.prompt == PromptFormat::Simple) {
    parts.push_back("Domain:");
    if (mode == RenderMode::Training) {
      parts.push_back(e.domain);
      parts.push_back("Intent:");
      parts.push_back(e.intent);
      parts.push_back("Slots:");
      const std::string s = detail::slots_section(e, spec.slots);
      if (!s.empty()) parts.push_back(s);
      parts.push_back("Arguments:");
      parts.push_back(detail::arguments_section(e));
    }
  } else {
    parts.push_back("Intent");
    parts.push_back("in");
    parts.push_back("Domain:");
    if (mode == RenderMode::Training) {
      parts.push_back(e.intent);
      parts.push_back("in");
      parts.push_back(e.domain);
      parts.push_back("Slots");
      parts.push_back("with");
      parts.push_back("Arguments:");
      const std::string s = detail::slots_section(e, spec.slots);
      if (!s.empty()) parts.push_back(s);
      parts.push_back("with");
      parts.push_back(detail::arguments_section(e));
    }
  }
  return join(parts, " ");
}

// ---------------------------------------------------------------------------
// Response parsing.
// ---------------------------------------------------------------------------

/// Structured model output. Arguments are recomputed from tags (given the
/// queried utterance's tokens), never trusted from the generated text.
struct Hypothesis {
  std::string domain;
  std::string intent;
  std::vector<std::string> tags;
  std::vector<Argument> arguments;
  std::vector<std::string> warnings;  // duplicate sentinel indices etc.
};

struct ParseIssue {
  enum class Kind {
    MissingField,
    IndexOutOfRange,
    TagCountMismatch,
    UnparseableSentinel,
  } kind;
  std::string detail;
};

/// The harness substitutes this when a response cannot be parsed; it scores
/// zero everywhere without crashing.
inline Hypothesis placeholder_hypothesis(std::size_t n_tokens) {
  Hypothesis h;
  h.tags.assign(n_tokens, kOtherTag);
  h.warnings.emplace_back("parse failure placeholder");
  return h;
}

namespace detail {

struct SectionScan {
  std::string_view text;
  std::size_t cursor = 0;

  /// Finds `header` at or after the cursor and advances past it.
  std::optional<std::size_t> advance_past(std::string_view header) {
    const auto pos = text.find(header, cursor);
    if (pos == std::string_view::npos) return std::nullopt;
    cursor = pos + header.size();
    return cursor;
  }

  std::string_view slice_until(std::size_t end) const {
    return text.substr(cursor, end - cursor);
  }
};

inline Result<std::vector<std::string>, ParseIssue> parse_slot_items(
    std::string_view slots_text, SlotFormat fmt, std::size_t n_tokens,
    std::vector<std::string>& warnings) {
  if (fmt == SlotFormat::TagOnly) {
    auto items = split_whitespace(slots_text);
    if (items.size() != n_tokens) {
      return ParseIssue{ParseIssue::Kind::TagCountMismatch,
                        "expected " + std::to_string(n_tokens) + " tags, got " +
                            std::to_string(items.size())};
    }
    return items;
  }

  std::vector<std::string> tags(n_tokens, kOtherTag);
  std::vector<bool> seen(n_tokens, false);
  const auto atoms = sentinel_tokenize(slots_text);
  std::size_t i = 0;
  while (i < atoms.size()) {
    const auto idx = sentinel_index(atoms[i]);
    if (!idx) {
      return ParseIssue{ParseIssue::Kind::UnparseableSentinel,
                        "expected sentinel, got '" + atoms[i] + "'"};
    }
    if (*idx >= n_tokens) {
      return ParseIssue{ParseIssue::Kind::IndexOutOfRange,
                        "index " + std::to_string(*idx) + " out of range for " +
                            std::to_string(n_tokens) + " tokens"};
    }
    if (i + 1 >= atoms.size() || sentinel_index(atoms[i + 1]).has_value()) {
      return ParseIssue{ParseIssue::Kind::UnparseableSentinel,
                        "sentinel '" + atoms[i] + "' has no label"};
    }
    if (seen[*idx]) {
      warnings.push_back("duplicate index " + atoms[i] + "; last value wins");
    }
    seen[*idx] = true;
    tags[*idx] = atoms[i + 1];
    i += 2;
  }
  // Indices a sentinel_tag response fails to list default to "Other",
  // matching the extractive convention.
  return tags;
}

}  // namespace detail

/// Extracts domain, intent and per-token tags from a rendered or generated
/// text in the given format. Duplicate sentinel indices keep the last value
/// and add a warning; unknown labels are preserved as-is.
inline Result<Hypothesis, ParseIssue> parse_response(const std::string& text, FormatSpec spec,
                                                     std::size_t n_tokens) {
  if (n_tokens == 0) throw FormatError("parse_response: n_tokens must be >= 1");
  using Kind = ParseIssue::Kind;
  detail::SectionScan scan{text};
  Hypothesis h;

  if (!scan.advance_past("Utterance:")) {
    return ParseIssue{Kind::MissingField, "Utterance"};
  }

  std::string slots_text;
  if (spec.prompt == PromptFormat::Simple) {
    if (!scan.advance_past("Domain:")) return ParseIssue{Kind::MissingField, "Domain"};
    const auto intent_pos = scan.text.find("Intent:", scan.cursor);
    if (intent_pos == std::string_view::npos) {
      return ParseIssue{Kind::MissingField, "Intent"};
    }
    h.domain = trim(scan.slice_until(intent_pos));
    scan.cursor = intent_pos;
    scan.advance_past("Intent:");
    const auto slots_pos = scan.text.find("Slots:", scan.cursor);
    if (slots_pos == std::string_view::npos) return ParseIssue{Kind::MissingField, "Slots"};
    h.intent = trim(scan.slice_until(slots_pos));
    scan.cursor = slots_pos;
    scan.advance_past("Slots:");
    const auto args_pos = scan.text.find("Arguments:", scan.cursor);
    if (args_pos == std::string_view::npos) {
      return ParseIssue{Kind::MissingField, "Arguments"};
    }
    slots_text = std::string(scan.slice_until(args_pos));
  } else {
    if (!scan.advance_past("Intent in Domain:")) {
      return ParseIssue{Kind::MissingField, "Intent in Domain"};
    }
    const auto slots_pos = scan.text.find("Slots with Arguments:", scan.cursor);
    if (slots_pos == std::string_view::npos) {
      return ParseIssue{Kind::MissingField, "Slots with Arguments"};
    }
    const std::string pair_text = trim(scan.slice_until(slots_pos));
    const auto in_pos = pair_text.find(" in ");
    if (in_pos == std::string::npos) {
      return ParseIssue{Kind::MissingField, "Intent in Domain separator"};
    }
    h.intent = trim(pair_text.substr(0, in_pos));
    h.domain = trim(pair_text.substr(in_pos + 4));
    scan.cursor = slots_pos;
    scan.advance_past("Slots with Arguments:");
    const auto with_pos = scan.text.find(" with [", scan.cursor);
    if (with_pos == std::string_view::npos) {
      return ParseIssue{Kind::MissingField, "Arguments"};
    }
    slots_text = std::string(scan.slice_until(with_pos));
  }

  auto tags = detail::parse_slot_items(slots_text, spec.slots, n_tokens, h.warnings);
  if (!tags.ok()) return tags.error();
  h.tags = tags.value();
  return h;
}

/// As parse_response, additionally recomputing arguments from the queried
/// utterance's tokens.
inline Result<Hypothesis, ParseIssue> parse_hypothesis(const std::string& text, FormatSpec spec,
                                                       const std::vector<std::string>& tokens) {
  auto r = parse_response(text, spec, tokens.size());
  if (!r.ok()) return r;
  Hypothesis h = r.value();
  h.arguments = derive_arguments(tokens, h.tags);
  return h;
}

}  // namespace ppcl
