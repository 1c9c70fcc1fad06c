#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppcl/dataset.hpp"
#include "ppcl/eval.hpp"
#include "ppcl/lexicon.hpp"
#include "ppcl/perturb.hpp"
#include "ppcl/runconfig.hpp"
#include "ppcl/train.hpp"

namespace ppcl {

// Stage functions shared by the command-line tool and the test drivers.
// Every artifact embeds the effective config and seed; stages resume from
// on-disk artifacts only.

inline nlohmann::json provenance_json(const RunConfig& c) {
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : c.raw) cfg[k] = v;
  return nlohmann::json{{"seed", c.seed}, {"config", cfg}};
}

inline void write_meta(const RunConfig& c, const std::string& artifact_path) {
  std::ofstream out(artifact_path + ".meta.json");
  if (!out) throw FormatError("cannot write meta file for " + artifact_path);
  out << provenance_json(c).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Paired-set artifacts.
// ---------------------------------------------------------------------------

inline nlohmann::json perturbed_to_json(const PerturbedExample& p) {
  return nlohmann::json{{"clean_id", p.clean_id},
                        {"kind", kind_name(p.kind)},
                        {"tokens", p.tokens},
                        {"tags", p.tags},
                        {"replaced_positions", p.replaced_positions},
                        {"similarity", p.similarity}};
}

inline PerturbedExample perturbed_from_json(const nlohmann::json& j) {
  PerturbedExample p;
  p.clean_id = j.at("clean_id").get<std::string>();
  const auto kind = kind_from_name(j.at("kind").get<std::string>());
  if (!kind) throw FormatError("paired set: unknown kind");
  p.kind = *kind;
  p.tokens = j.at("tokens").get<std::vector<std::string>>();
  p.tags = j.at("tags").get<std::vector<std::string>>();
  p.replaced_positions = j.at("replaced_positions").get<std::vector<std::size_t>>();
  p.similarity = j.at("similarity").get<double>();
  return p;
}

inline void save_paired_set(const PairedSet& set, const RunConfig& config,
                            const std::string& path) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [clean, pert] : set.pairs) {
    pairs.push_back(
        nlohmann::json{{"clean", example_to_json(clean)}, {"perturbed", perturbed_to_json(pert)}});
  }
  nlohmann::json doc{{"provenance", provenance_json(config)},
                     {"kind", kind_name(set.kind)},
                     {"threshold", set.threshold},
                     {"pairs", pairs}};
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write paired set: " + path);
  out << doc.dump(2) << '\n';
}

inline PairedSet load_paired_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open paired set: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError("malformed paired set " + path + ": " + ex.what());
  }
  PairedSet set;
  const auto kind = kind_from_name(doc.at("kind").get<std::string>());
  if (!kind) throw FormatError("paired set: unknown kind");
  set.kind = *kind;
  set.threshold = doc.at("threshold").get<double>();
  for (const auto& item : doc.at("pairs")) {
    Example clean = parse_example_record(item.at("clean"), 0);
    set.pairs.emplace_back(std::move(clean), perturbed_from_json(item.at("perturbed")));
  }
  return set;
}

/// External paraphrase pairs: one JSON record per line,
/// {"id": clean id, "paraphrase": text}.
inline std::vector<std::pair<std::string, std::string>> load_paraphrase_pairs(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open paraphrase file: " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError("malformed paraphrase record at line " + std::to_string(line_no) +
                        ": " + ex.what());
    }
    out.emplace_back(rec.at("id").get<std::string>(), rec.at("paraphrase").get<std::string>());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stages.
// ---------------------------------------------------------------------------

struct Stages {
  RunConfig config;

  std::filesystem::path out(const std::string& name) const {
    std::filesystem::create_directories(config.out_dir);
    return std::filesystem::path(config.out_dir) / name;
  }

  void synth() const {
    auto [train, test] = synth_fixture(config.seed, config.synth_train, config.synth_test);
    const auto train_path = out("train.jsonl");
    const auto test_path = out("test.jsonl");
    save_dataset(train, train_path.string());
    save_dataset(test, test_path.string());
    write_meta(config, train_path.string());
    write_meta(config, test_path.string());
  }

  Dataset load_split(const std::string& which) const {
    std::string path;
    if (which == "train") path = config.train_path;
    else if (which == "test") path = config.test_path;
    else throw FormatError("unknown split: " + which);
    if (path.empty()) path = (std::filesystem::path(config.out_dir) / (which + ".jsonl")).string();
    return load_dataset(path, which);
  }

  Lexicons lexicons(PronouncingLexicon& pron, Thesaurus& thes) const {
    Lexicons lex;
    lex.max_phoneme_edits = config.max_phoneme_edits;
    if (!config.pronouncing_path.empty()) {
      pron = load_pronouncing(config.pronouncing_path);
      lex.pronouncing = &pron;
    }
    if (!config.thesaurus_path.empty()) {
      thes = load_thesaurus(config.thesaurus_path);
      lex.thesaurus = &thes;
    }
    return lex;
  }

  /// One filtered perturbation per clean example, as a paired set artifact.
  PairedSet make_paired_set(const Dataset& dataset, PerturbationKind kind) const {
    PronouncingLexicon pron;
    Thesaurus thes;
    const Lexicons lex = lexicons(pron, thes);
    const ProtectedVocab protected_vocab = build_protected_vocab(dataset);

    std::vector<PerturbedExample> perturbed;
    if (kind == PerturbationKind::Paraphrase && !config.paraphrases_path.empty()) {
      // externally generated paraphrases, labels re-derived on ingest
      for (const auto& [id, text] : load_paraphrase_pairs(config.paraphrases_path)) {
        const Example* clean = dataset.find(id);
        if (clean == nullptr) throw FormatError("paraphrase for unknown id '" + id + "'");
        auto r = ingest_paraphrase(*clean, text);
        if (r.ok()) perturbed.push_back(r.value());
      }
    } else {
      for (const auto& e : dataset.examples) {
        std::optional<PerturbedExample> p;
        if (kind == PerturbationKind::Paraphrase) {
          p = template_paraphrase(e, config.seed);
        } else {
          p = word_level_perturb(e, kind, lex, protected_vocab, config.seed,
                                 config.max_words);
        }
        if (p) perturbed.push_back(std::move(*p));
      }
    }
    if (!config.external_scores_path.empty()) {
      const auto scores = load_external_scores(config.external_scores_path);
      return build_paired_set(dataset, perturbed, config.threshold, &scores);
    }
    return build_paired_set(dataset, perturbed, config.threshold);
  }

  void perturb_stage(PerturbationKind kind, const std::string& split) const {
    const Dataset ds = load_split(split);
    const PairedSet set = make_paired_set(ds, kind);
    const auto path = out(std::string("paired_") + kind_name(kind) + "_" + split + ".json");
    save_paired_set(set, config, path.string());
  }

  void augment_stage(PerturbationKind kind) const {
    const Dataset train = load_split("train");
    PronouncingLexicon pron;
    Thesaurus thes;
    const Lexicons lex = lexicons(pron, thes);
    const Dataset augmented = augment(train, kind, config.augment_k, config.seed,
                                      config.threshold, lex, config.max_words);
    const auto path = out(std::string("train_augmented_") + kind_name(kind) + ".jsonl");
    save_dataset(augmented, path.string());
    write_meta(config, path.string());
  }

  Vocab build_vocab_for(const Dataset& train) const {
    std::vector<std::string> texts;
    texts.reserve(train.examples.size());
    for (const auto& e : train.examples) {
      texts.push_back(render(e, config.format, RenderMode::Training));
    }
    return build_vocab(texts, config.max_sentinels);
  }

  std::pair<TinyLM<float>, TrainResult> train_sft_stage(const Dataset& train) const {
    const Vocab vocab = build_vocab_for(train);
    ModelConfig mc = config.model;
    mc.vocab_size = vocab.size();
    mc.seed = config.seed;
    TinyLM<float> model = init_model<float>(mc);
    TrainConfig tc = config.train;
    tc.seed = config.seed;
    TrainResult result = train_sft(model, train, config.format, vocab, tc);
    vocab.save(out("vocab.txt").string());
    save_checkpoint(model, out("sft.ckpt").string());
    save_loss_curve(result.curve, out("loss_sft.csv").string());
    write_meta(config, out("sft.ckpt").string());
    write_meta(config, out("loss_sft.csv").string());
    return {std::move(model), std::move(result)};
  }

  std::pair<TinyLM<float>, TrainResult> train_ppcl_stage(const std::string& init_ckpt,
                                                         const PairedSet& pairs,
                                                         const std::string& out_name) const {
    TinyLM<float> model = load_checkpoint<float>(init_ckpt);
    const Vocab vocab = Vocab::load(out("vocab.txt").string());
    TrainConfig tc = config.train;
    tc.seed = config.seed;
    TrainResult result = train_ppcl(model, pairs, config.format, vocab, tc);
    save_checkpoint(model, out(out_name).string());
    save_loss_curve(result.curve, out("loss_ppcl.csv").string());
    write_meta(config, out(out_name).string());
    write_meta(config, out("loss_ppcl.csv").string());
    return {std::move(model), std::move(result)};
  }

  EvalReport eval_stage(const std::string& ckpt, const PairedSet& pairs,
                        const std::string& run_id) const {
    const TinyLM<float> model = load_checkpoint<float>(ckpt);
    const Vocab vocab = Vocab::load(out("vocab.txt").string());
    EvalReport report = evaluate_pair_set(model, vocab, pairs, config.format, run_id,
                                          config.max_new_tokens);
    save_report(report, run_id);
    return report;
  }

  void save_report(const EvalReport& report, const std::string& run_id) const {
    nlohmann::json doc{{"provenance", provenance_json(config)},
                       {"reports", nlohmann::json::array({report_to_json(report)})}};
    std::ofstream out_json(out("report_" + run_id + ".json"));
    if (!out_json) throw FormatError("cannot write report");
    out_json << doc.dump(2) << '\n';
    std::ofstream out_csv(out("report_" + run_id + ".csv"));
    out_csv << report_csv_header() << '\n' << report_csv_row(report) << '\n';
  }
};

inline std::vector<EvalReport> load_reports(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open report: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError("malformed report " + path + ": " + ex.what());
  }
  std::vector<EvalReport> out;
  for (const auto& r : doc.at("reports")) out.push_back(report_from_json(r));
  return out;
}

}  // namespace ppcl
