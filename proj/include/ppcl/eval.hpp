#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppcl/common.hpp"
#include "ppcl/dataset.hpp"
#include "ppcl/nnkit/model.hpp"
#include "ppcl/nnkit/vocab.hpp"
#include "ppcl/perturb.hpp"
#include "ppcl/promptfmt.hpp"

namespace ppcl {

// ---------------------------------------------------------------------------
// Metrics.
// ---------------------------------------------------------------------------

inline double intent_accuracy(const std::vector<Hypothesis>& hypotheses,
                              const std::vector<Example>& golds) {
  if (hypotheses.size() != golds.size()) {
    throw FormatError("intent_accuracy: length mismatch");
  }
  if (golds.empty()) throw FormatError("intent_accuracy: empty inputs");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (hypotheses[i].intent == golds[i].intent) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(golds.size());
}

/// Entities are maximal same-label non-"Other" runs as (start, end, label).
inline std::vector<std::tuple<std::size_t, std::size_t, std::string>> entity_spans(
    const std::vector<std::string>& tags) {
  std::vector<std::tuple<std::size_t, std::size_t, std::string>> out;
  std::size_t i = 0;
  while (i < tags.size()) {
    if (tags[i] == kOtherTag) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < tags.size() && tags[j + 1] == tags[i]) ++j;
    out.emplace_back(i, j, tags[i]);
    i = j + 1;
  }
  return out;
}

/// Micro-averaged entity F1 over predicted vs gold span multisets. With no
/// entities on either side the score is 1; one empty side scores 0 on that
/// direction.
inline double slot_f1(const std::vector<Hypothesis>& hypotheses,
                      const std::vector<Example>& golds) {
  if (hypotheses.size() != golds.size()) throw FormatError("slot_f1: length mismatch");
  if (golds.empty()) throw FormatError("slot_f1: empty inputs");
  std::size_t tp = 0, n_pred = 0, n_gold = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (hypotheses[i].tags.size() != golds[i].tags.size()) {
      throw FormatError("slot_f1: token count mismatch in pair " + golds[i].id);
    }
    auto pred = entity_spans(hypotheses[i].tags);
    auto gold = entity_spans(golds[i].tags);
    n_pred += pred.size();
    n_gold += gold.size();
    // multiset intersection
    std::sort(pred.begin(), pred.end());
    std::sort(gold.begin(), gold.end());
    std::size_t a = 0, b = 0;
    while (a < pred.size() && b < gold.size()) {
      if (pred[a] == gold[b]) {
        ++tp;
        ++a;
        ++b;
      } else if (pred[a] < gold[b]) {
        ++a;
      } else {
        ++b;
      }
    }
  }
  const double precision =
      n_pred == 0 ? (n_gold == 0 ? 1.0 : 0.0)
                  : static_cast<double>(tp) / static_cast<double>(n_pred);
  const double recall =
      n_gold == 0 ? (n_pred == 0 ? 1.0 : 0.0)
                  : static_cast<double>(tp) / static_cast<double>(n_gold);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

/// Relative performance decline, in percent. May be negative when the
/// perturbed score improves on the clean one.
inline double pdr(double clean_score, double perturbed_score) {
  if (clean_score <= 0) throw FormatError("pdr: clean score must be positive");
  return 100.0 * (1.0 - perturbed_score / clean_score);
}

/// Fraction of a baseline drop eliminated by a mitigation, in percent.
inline double recovery(double pdr_baseline, double pdr_mitigated) {
  if (pdr_baseline == 0) throw FormatError("recovery: zero baseline");
  return 100.0 * (1.0 - pdr_mitigated / pdr_baseline);
}

// ---------------------------------------------------------------------------
// Paired-set evaluation.
// ---------------------------------------------------------------------------

struct EvalReport {
  std::string run_id;
  PerturbationKind kind = PerturbationKind::Synonym;
  std::size_t pair_count = 0;
  double clean_ic = 0, perturbed_ic = 0;  // accuracies in [0,1]
  double clean_sf = 0, perturbed_sf = 0;  // F1 in [0,1]
  std::optional<double> ic_pdr, sf_pdr;   // percent; absent when clean score is 0
  std::optional<double> ic_recovery, sf_recovery;
  std::string baseline_run_id;
  std::size_t parse_failures_clean = 0, parse_failures_perturbed = 0;
};

/// Greedy-decodes and parses one example; unparseable output falls back to
/// the all-"Other" placeholder and bumps `failures`.
template <typename Real>
Hypothesis decode_hypothesis(const TinyLM<Real>& model, const Vocab& vocab, const Example& e,
                             FormatSpec spec, std::size_t max_new_tokens,
                             std::size_t& failures) {
  const std::string prompt_text = render(e, spec, RenderMode::Inference);
  std::vector<int> prompt_ids = {Vocab::kBos};
  for (const int id : vocab.encode(prompt_text)) prompt_ids.push_back(id);

  std::vector<int> generated;
  try {
    generated = greedy_decode(model, prompt_ids, max_new_tokens, Vocab::kEos);
  } catch (const FormatError&) {
    ++failures;
    return placeholder_hypothesis(e.tokens.size());
  }
  const std::string full_text = prompt_text + " " + vocab.decode(generated);
  auto parsed = parse_hypothesis(full_text, spec, e.tokens);
  if (!parsed.ok()) {
    ++failures;
    return placeholder_hypothesis(e.tokens.size());
  }
  return parsed.value();
}

/// Core of the paired evaluation, parameterized over hypothesis production
/// so tests can substitute oracle or degenerate responders. The callable
/// receives the gold example of its side and a failure counter to bump.
template <typename DecodeFn>
EvalReport evaluate_pairs_with(DecodeFn&& decode, const PairedSet& paired,
                               const std::string& run_id) {
  if (paired.pairs.empty()) throw FormatError("evaluate_pair_set: empty paired set");
  EvalReport r;
  r.run_id = run_id;
  r.kind = paired.kind;
  r.pair_count = paired.pairs.size();

  std::vector<Hypothesis> clean_hyps, pert_hyps;
  std::vector<Example> clean_golds, pert_golds;
  for (const auto& [clean, pert] : paired.pairs) {
    const Example pert_gold = to_example(pert, clean, clean.id + "#perturbed");
    clean_hyps.push_back(decode(clean, r.parse_failures_clean));
    pert_hyps.push_back(decode(pert_gold, r.parse_failures_perturbed));
    clean_golds.push_back(clean);
    pert_golds.push_back(pert_gold);
  }
  r.clean_ic = intent_accuracy(clean_hyps, clean_golds);
  r.perturbed_ic = intent_accuracy(pert_hyps, pert_golds);
  r.clean_sf = slot_f1(clean_hyps, clean_golds);
  r.perturbed_sf = slot_f1(pert_hyps, pert_golds);
  if (r.clean_ic > 0) r.ic_pdr = pdr(r.clean_ic, r.perturbed_ic);
  if (r.clean_sf > 0) r.sf_pdr = pdr(r.clean_sf, r.perturbed_sf);
  return r;
}

/// Scores one model on the clean and perturbed sides of a paired set and
/// assembles the drop-rate report.
template <typename Real>
EvalReport evaluate_pair_set(const TinyLM<Real>& model, const Vocab& vocab,
                             const PairedSet& paired, FormatSpec spec,
                             const std::string& run_id, std::size_t max_new_tokens = 64) {
  return evaluate_pairs_with(
      [&](const Example& e, std::size_t& failures) {
        return decode_hypothesis(model, vocab, e, spec, max_new_tokens, failures);
      },
      paired, run_id);
}

/// Fills the recovery fields of `mitigated` against a baseline report of
/// the same perturbation kind.
inline EvalReport with_recovery(EvalReport mitigated, const EvalReport& baseline) {
  if (baseline.kind != mitigated.kind) {
    throw FormatError("with_recovery: perturbation kinds differ");
  }
  mitigated.baseline_run_id = baseline.run_id;
  if (baseline.ic_pdr && mitigated.ic_pdr && *baseline.ic_pdr != 0) {
    mitigated.ic_recovery = recovery(*baseline.ic_pdr, *mitigated.ic_pdr);
  }
  if (baseline.sf_pdr && mitigated.sf_pdr && *baseline.sf_pdr != 0) {
    mitigated.sf_recovery = recovery(*baseline.sf_pdr, *mitigated.sf_pdr);
  }
  return mitigated;
}

// ---------------------------------------------------------------------------
// Report files: JSON records with every field, plus a flat comma-separated
// summary (perturbation, run, clean/perturbed scores as percentages, PDRs).
// ---------------------------------------------------------------------------

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j{{"run_id", r.run_id},
                   {"kind", kind_name(r.kind)},
                   {"pair_count", r.pair_count},
                   {"clean_ic", r.clean_ic},
                   {"perturbed_ic", r.perturbed_ic},
                   {"clean_sf", r.clean_sf},
                   {"perturbed_sf", r.perturbed_sf},
                   {"parse_failures_clean", r.parse_failures_clean},
                   {"parse_failures_perturbed", r.parse_failures_perturbed}};
  if (r.ic_pdr) j["ic_pdr"] = *r.ic_pdr;
  if (r.sf_pdr) j["sf_pdr"] = *r.sf_pdr;
  if (r.ic_recovery) j["ic_recovery"] = *r.ic_recovery;
  if (r.sf_recovery) j["sf_recovery"] = *r.sf_recovery;
  if (!r.baseline_run_id.empty()) j["baseline_run_id"] = r.baseline_run_id;
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.run_id = j.at("run_id").get<std::string>();
  const auto kind = kind_from_name(j.at("kind").get<std::string>());
  if (!kind) throw FormatError("report_from_json: unknown kind");
  r.kind = *kind;
  r.pair_count = j.at("pair_count").get<std::size_t>();
  r.clean_ic = j.at("clean_ic").get<double>();
  r.perturbed_ic = j.at("perturbed_ic").get<double>();
  r.clean_sf = j.at("clean_sf").get<double>();
  r.perturbed_sf = j.at("perturbed_sf").get<double>();
  r.parse_failures_clean = j.value("parse_failures_clean", std::size_t{0});
  r.parse_failures_perturbed = j.value("parse_failures_perturbed", std::size_t{0});
  if (j.contains("ic_pdr")) r.ic_pdr = j["ic_pdr"].get<double>();
  if (j.contains("sf_pdr")) r.sf_pdr = j["sf_pdr"].get<double>();
  if (j.contains("ic_recovery")) r.ic_recovery = j["ic_recovery"].get<double>();
  if (j.contains("sf_recovery")) r.sf_recovery = j["sf_recovery"].get<double>();
  r.baseline_run_id = j.value("baseline_run_id", std::string{});
  return r;
}

inline std::string report_csv_header() {
  return "perturb,run,clean_ic,perturbed_ic,ic_pdr,clean_sf,perturbed_sf,sf_pdr";
}

inline std::string report_csv_row(const EvalReport& r) {
  char buf[256];
  const auto opt = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    char b[32];
    std::snprintf(b, sizeof(b), "%.2f", *v);
    return std::string(b);
  };
  std::snprintf(buf, sizeof(buf), "%s,%s,%.2f,%.2f,%s,%.2f,%.2f,%s", kind_name(r.kind),
                r.run_id.c_str(), 100.0 * r.clean_ic, 100.0 * r.perturbed_ic,
                opt(r.ic_pdr).c_str(), 100.0 * r.clean_sf, 100.0 * r.perturbed_sf,
                opt(r.sf_pdr).c_str());
  return buf;
}

}  // namespace ppcl
