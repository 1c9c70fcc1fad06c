// ppcl-lab: drives the prompt-perturbation robustness pipeline end to end
// from a declarative config file. Subcommands cover fixture synthesis,
// perturbation generation, augmentation, the two training phases,
// evaluation, report joins, and the published-arithmetic cross-checks.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ppcl/pipeline.hpp"
#include "ppcl/reference_results.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct CommonOpts {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("-c,--config", opts.config_path, "experiment config file (key = value lines)");
  cmd->add_option_function<std::vector<std::string>>(
      "--set",
      [&opts](const std::vector<std::string>& kvs) {
        for (const auto& kv : kvs) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) {
            throw CLI::ValidationError("--set expects key=value, got '" + kv + "'");
          }
          opts.overrides.emplace_back(ppcl::trim(kv.substr(0, eq)),
                                      ppcl::trim(kv.substr(eq + 1)));
        }
      },
      "override a config key (repeatable), e.g. --set seed=9");
}

ppcl::RunConfig resolve_config(const CommonOpts& opts) {
  ppcl::RunConfig config =
      opts.config_path.empty() ? ppcl::RunConfig{} : ppcl::load_config(opts.config_path);
  ppcl::apply_overrides(config, opts.overrides);
  config.validate();
  return config;
}

ppcl::PerturbationKind parse_kind(const std::string& name) {
  const auto kind = ppcl::kind_from_name(name);
  if (!kind) throw ppcl::FormatError("unknown perturbation kind '" + name + "'");
  return *kind;
}

int run_oracle_check() {
  using namespace ppcl::reference;
  std::vector<CheckLine> lines;
  for (const auto& l : check_drop_rows()) lines.push_back(l);
  for (const auto& l : check_aggregates()) lines.push_back(l);
  for (const auto& l : check_recovery_rows()) lines.push_back(l);

  std::size_t failed = 0;
  for (const auto& line : lines) {
    const char* status = line.informational ? "NOTE" : (line.pass ? "PASS" : "FAIL");
    if (!line.informational && !line.pass) ++failed;
    std::printf("[%s] %-64s computed %8.4f expected %8.2f (tol %.2f)%s%s\n", status,
                line.label.c_str(), line.computed, line.expected, line.tolerance,
                line.note.empty() ? "" : " -- ", line.note.c_str());
  }
  std::printf("%zu checks, %zu failed\n", lines.size(), failed);
  return failed == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale prompt-perturbation consistency laboratory"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string kind_name = "synonym";
  std::string split = "test";
  std::string pairs_path, init_ckpt, model_ckpt, run_id = "run";
  std::string out_ckpt = "ppcl.ckpt";
  std::string baseline_path, mitigated_path;

  auto* synth = app.add_subcommand("synth", "generate the deterministic fixture corpus");
  add_common(synth, opts);

  auto* perturb = app.add_subcommand("perturb", "build a filtered paired evaluation set");
  add_common(perturb, opts);
  perturb->add_option("--kind", kind_name, "oronym | synonym | paraphrase");
  perturb->add_option("--split", split, "train | test");

  auto* augment = app.add_subcommand("augment", "extend the training set with perturbations");
  add_common(augment, opts);
  augment->add_option("--kind", kind_name, "oronym | synonym | paraphrase");

  auto* train_sft = app.add_subcommand("train-sft", "supervised fine-tuning phase");
  add_common(train_sft, opts);

  auto* train_ppcl =
      app.add_subcommand("train-ppcl", "consistency fine-tuning from a checkpoint");
  add_common(train_ppcl, opts);
  train_ppcl->add_option("--pairs", pairs_path, "paired training set artifact")->required();
  train_ppcl->add_option("--init", init_ckpt, "initial checkpoint (default sft.ckpt)");
  train_ppcl->add_option("--out", out_ckpt, "output checkpoint name");

  auto* eval = app.add_subcommand("eval", "score a checkpoint on a paired set");
  add_common(eval, opts);
  eval->add_option("--model", model_ckpt, "checkpoint to evaluate (default sft.ckpt)");
  eval->add_option("--pairs", pairs_path, "paired evaluation set artifact")->required();
  eval->add_option("--run-id", run_id, "label for the report artifacts");

  auto* report = app.add_subcommand("report", "join baseline and mitigated reports");
  add_common(report, opts);
  report->add_option("--baseline", baseline_path, "baseline report json")->required();
  report->add_option("--mitigated", mitigated_path, "mitigated report json")->required();

  auto* oracle =
      app.add_subcommand("oracle-check", "verify pdr/recovery against published results");
  (void)oracle;

  CLI11_PARSE(app, argc, argv);

  try {
    if (oracle->parsed()) return run_oracle_check();

    ppcl::RunConfig config;
    ppcl::PerturbationKind kind = ppcl::PerturbationKind::Synonym;
    try {
      config = resolve_config(opts);
      if (perturb->parsed() || augment->parsed()) kind = parse_kind(kind_name);
      if (perturb->parsed() && split != "train" && split != "test") {
        throw ppcl::FormatError("unknown split '" + split + "'");
      }
    } catch (const ppcl::FormatError& e) {
      std::cerr << "error: kind=validation detail=" << e.what() << '\n';
      return kExitValidation;
    }
    ppcl::Stages stages{config};

    if (synth->parsed()) {
      stages.synth();
      std::printf("wrote %s and %s\n", stages.out("train.jsonl").string().c_str(),
                  stages.out("test.jsonl").string().c_str());
    } else if (perturb->parsed()) {
      stages.perturb_stage(kind, split);
      std::printf("wrote %s\n",
                  stages.out("paired_" + kind_name + "_" + split + ".json").string().c_str());
    } else if (augment->parsed()) {
      stages.augment_stage(kind);
      std::printf("wrote %s\n",
                  stages.out("train_augmented_" + kind_name + ".jsonl").string().c_str());
    } else if (train_sft->parsed()) {
      const ppcl::Dataset train = stages.load_split("train");
      auto [model, result] = stages.train_sft_stage(train);
      std::printf("sft done: %zu epochs, final mean loss %.4f -> %s\n",
                  result.epoch_mean_loss.size(), result.epoch_mean_loss.back(),
                  stages.out("sft.ckpt").string().c_str());
    } else if (train_ppcl->parsed()) {
      if (init_ckpt.empty()) init_ckpt = stages.out("sft.ckpt").string();
      const ppcl::PairedSet pairs = ppcl::load_paired_set(pairs_path);
      auto [model, result] = stages.train_ppcl_stage(init_ckpt, pairs, out_ckpt);
      std::printf("ppcl done: %zu epochs, final mean loss %.4f -> %s\n",
                  result.epoch_mean_loss.size(), result.epoch_mean_loss.back(),
                  stages.out(out_ckpt).string().c_str());
    } else if (eval->parsed()) {
      if (model_ckpt.empty()) model_ckpt = stages.out("sft.ckpt").string();
      const ppcl::PairedSet pairs = ppcl::load_paired_set(pairs_path);
      const ppcl::EvalReport r = stages.eval_stage(model_ckpt, pairs, run_id);
      std::printf("%s\n%s\n", ppcl::report_csv_header().c_str(),
                  ppcl::report_csv_row(r).c_str());
    } else if (report->parsed()) {
      const auto baselines = ppcl::load_reports(baseline_path);
      const auto mitigated = ppcl::load_reports(mitigated_path);
      if (baselines.empty() || mitigated.empty()) {
        throw ppcl::FormatError("report files must hold at least one record each");
      }
      nlohmann::json rows = nlohmann::json::array();
      std::printf("perturb,baseline,mitigated,ic_pdr_base,ic_pdr,ic_recovery,"
                  "sf_pdr_base,sf_pdr,sf_recovery\n");
      for (const auto& m : mitigated) {
        for (const auto& b : baselines) {
          if (b.kind != m.kind) continue;
          const ppcl::EvalReport joined = ppcl::with_recovery(m, b);
          rows.push_back(ppcl::report_to_json(joined));
          const auto fmt = [](const std::optional<double>& v) {
            if (!v) return std::string("-");
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.2f", *v);
            return std::string(buf);
          };
          std::printf("%s,%s,%s,%s,%s,%s,%s,%s,%s\n", ppcl::kind_name(m.kind),
                      b.run_id.c_str(), m.run_id.c_str(), fmt(b.ic_pdr).c_str(),
                      fmt(m.ic_pdr).c_str(), fmt(joined.ic_recovery).c_str(),
                      fmt(b.sf_pdr).c_str(), fmt(m.sf_pdr).c_str(),
                      fmt(joined.sf_recovery).c_str());
        }
      }
      nlohmann::json doc{{"provenance", ppcl::provenance_json(config)}, {"reports", rows}};
      std::ofstream out(stages.out("recovery.json"));
      out << doc.dump(2) << '\n';
    }
    return kExitOk;
  } catch (const std::exception& e) {
    // config problems were handled above; anything here is a stage failure
    std::cerr << "error: kind=runtime detail=" << e.what() << '\n';
    return kExitRuntime;
  }
}
