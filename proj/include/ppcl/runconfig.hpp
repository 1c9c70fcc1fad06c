#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ppcl/common.hpp"
#include "ppcl/perturb.hpp"
#include "ppcl/promptfmt.hpp"
#include "ppcl/train.hpp"

namespace ppcl {

/// One experiment = one declarative config file of "key = value" lines
/// ('#' comments). Flags override file keys; the PPCL_SEED environment
/// variable overrides the seed last.
struct RunConfig {
  // paths
  std::string train_path, test_path;
  std::string pronouncing_path, thesaurus_path;
  std::string paraphrases_path, external_scores_path;  // optional
  std::string out_dir = "out";
  // formats
  FormatSpec format;
  // perturbation
  std::vector<PerturbationKind> kinds = {PerturbationKind::Synonym};
  double threshold = 0.85;
  std::size_t max_words = 3;
  std::size_t max_phoneme_edits = 0;
  std::size_t augment_k = 1;
  // fixture synthesis
  std::size_t synth_train = 2000, synth_test = 200;
  // model
  ModelConfig model;  // vocab_size filled at training time
  std::size_t max_sentinels = 24;
  std::size_t max_new_tokens = 64;
  // training
  TrainConfig train;
  std::uint64_t seed = 7;

  std::map<std::string, std::string> raw;  // exactly as given, for provenance

  void validate() const {
    if (threshold < 0.0 || threshold > 1.0) {
      throw FormatError("config: threshold must be in [0, 1]");
    }
    if (max_words == 0) throw FormatError("config: max_words must be >= 1");
    if (augment_k == 0) throw FormatError("config: augment_k must be >= 1");
    for (const auto& [label, path] :
         {std::pair<const char*, const std::string&>{"train_path", train_path},
          {"test_path", test_path},
          {"pronouncing_path", pronouncing_path},
          {"thesaurus_path", thesaurus_path},
          {"paraphrases_path", paraphrases_path},
          {"external_scores_path", external_scores_path}}) {
      if (!path.empty() && !std::filesystem::exists(path)) {
        throw FormatError("config: " + std::string(label) + " does not exist: " + path);
      }
    }
    train.validate();
  }
};

namespace configdetail {

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw FormatError("config: bad integer for " + key + ": '" + v + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    return std::stod(v);
  } catch (const std::exception&) {
    throw FormatError("config: bad number for " + key + ": '" + v + "'");
  }
}

inline void apply_key(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "train_path") c.train_path = value;
  else if (key == "test_path") c.test_path = value;
  else if (key == "pronouncing_path") c.pronouncing_path = value;
  else if (key == "thesaurus_path") c.thesaurus_path = value;
  else if (key == "paraphrases_path") c.paraphrases_path = value;
  else if (key == "external_scores_path") c.external_scores_path = value;
  else if (key == "out_dir") c.out_dir = value;
  else if (key == "prompt_format") {
    if (value == "simple") c.format.prompt = PromptFormat::Simple;
    else if (value == "structured") c.format.prompt = PromptFormat::Structured;
    else throw FormatError("config: unknown prompt_format '" + value + "'");
  } else if (key == "slot_format") {
    if (value == "tag_only") c.format.slots = SlotFormat::TagOnly;
    else if (value == "sentinel_tag") c.format.slots = SlotFormat::SentinelTag;
    else if (value == "extractive_sentinel_tag") c.format.slots = SlotFormat::ExtractiveSentinelTag;
    else throw FormatError("config: unknown slot_format '" + value + "'");
  } else if (key == "kinds") {
    c.kinds.clear();
    for (const auto& piece : split_on(value, ',')) {
      const auto k = kind_from_name(trim(piece));
      if (!k) throw FormatError("config: unknown perturbation kind '" + trim(piece) + "'");
      c.kinds.push_back(*k);
    }
    if (c.kinds.empty()) throw FormatError("config: kinds list is empty");
  } else if (key == "threshold") c.threshold = parse_double(key, value);
  else if (key == "max_words") c.max_words = parse_u64(key, value);
  else if (key == "max_phoneme_edits") c.max_phoneme_edits = parse_u64(key, value);
  else if (key == "augment_k") c.augment_k = parse_u64(key, value);
  else if (key == "synth_train") c.synth_train = parse_u64(key, value);
  else if (key == "synth_test") c.synth_test = parse_u64(key, value);
  else if (key == "embed_dim") c.model.embed_dim = parse_u64(key, value);
  else if (key == "n_layers") c.model.n_layers = parse_u64(key, value);
  else if (key == "n_heads") c.model.n_heads = parse_u64(key, value);
  else if (key == "context_length") c.model.context_length = parse_u64(key, value);
  else if (key == "max_sentinels") c.max_sentinels = parse_u64(key, value);
  else if (key == "max_new_tokens") c.max_new_tokens = parse_u64(key, value);
  else if (key == "learning_rate") c.train.learning_rate = parse_double(key, value);
  else if (key == "warmup_steps") c.train.warmup_steps = parse_u64(key, value);
  else if (key == "sft_epochs") c.train.sft_epochs = parse_u64(key, value);
  else if (key == "ppcl_epochs") c.train.ppcl_epochs = parse_u64(key, value);
  else if (key == "batch_size") c.train.batch_size = parse_u64(key, value);
  else if (key == "lambda_clean") c.train.weights.lambda_clean = parse_double(key, value);
  else if (key == "lambda_perturb") c.train.weights.lambda_perturb = parse_double(key, value);
  else if (key == "lambda_js") c.train.weights.lambda_js = parse_double(key, value);
  else if (key == "seed") c.seed = parse_u64(key, value);
  else throw FormatError("config: unknown key '" + key + "'");
  c.raw[key] = value;
}

}  // namespace configdetail

inline RunConfig parse_config_text(const std::string& text) {
  RunConfig c;
  std::size_t line_no = 0;
  for (const auto& raw_line : split_on(text, '\n')) {
    ++line_no;
    std::string line = raw_line;
    if (const auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config: missing '=' at line " + std::to_string(line_no));
    }
    configdetail::apply_key(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

/// Key-by-key overrides (from command-line flags), then the PPCL_SEED
/// environment variable, which wins over everything.
inline void apply_overrides(RunConfig& c,
                            const std::vector<std::pair<std::string, std::string>>& overrides) {
  for (const auto& [key, value] : overrides) configdetail::apply_key(c, key, value);
  if (const char* env = std::getenv("PPCL_SEED"); env != nullptr && *env != '\0') {
    configdetail::apply_key(c, "seed", env);
  }
  c.train.seed = c.seed;
  c.model.seed = c.seed;
}

}  // namespace ppcl
