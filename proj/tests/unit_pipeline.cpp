#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ppcl/pipeline.hpp"

using namespace ppcl;
namespace fs = std::filesystem;

namespace {

const std::string kFixtureDict = std::string(PPCL_FIXTURE_DIR) + "/pronouncing.dict";
const std::string kFixtureThesaurus = std::string(PPCL_FIXTURE_DIR) + "/thesaurus.tsv";

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig tiny_config(const fs::path& out_dir) {
  RunConfig c = parse_config_text(
      "seed = 11\n"
      "synth_train = 24\n"
      "synth_test = 6\n"
      "threshold = 0.5\n"
      "sft_epochs = 1\n"
      "ppcl_epochs = 1\n"
      "batch_size = 8\n"
      "warmup_steps = 4\n"
      "embed_dim = 32\n"
      "n_layers = 1\n"
      "n_heads = 2\n"
      "context_length = 96\n"
      "max_new_tokens = 48\n");
  c.out_dir = out_dir.string();
  c.pronouncing_path = kFixtureDict;
  c.thesaurus_path = kFixtureThesaurus;
  apply_overrides(c, {});
  return c;
}

}  // namespace

TEST_CASE("config files parse with comments and overrides") {
  RunConfig c = parse_config_text(
      "# an experiment\n"
      "seed = 42\n"
      "threshold = 0.85  # keep the strict filter\n"
      "kinds = synonym, oronym\n"
      "prompt_format = structured\n"
      "slot_format = extractive_sentinel_tag\n"
      "lambda_js = 0.5\n");
  CHECK(c.seed == 42);
  CHECK(c.threshold == 0.85);
  REQUIRE(c.kinds.size() == 2);
  CHECK(c.kinds[0] == PerturbationKind::Synonym);
  CHECK(c.format.prompt == PromptFormat::Structured);
  CHECK(c.format.slots == SlotFormat::ExtractiveSentinelTag);
  CHECK(c.train.weights.lambda_js == 0.5);

  apply_overrides(c, {{"seed", "99"}, {"batch_size", "4"}});
  CHECK(c.seed == 99);
  CHECK(c.train.seed == 99);
  CHECK(c.model.seed == 99);
  CHECK(c.train.batch_size == 4);
}

TEST_CASE("config errors") {
  CHECK_THROWS_WITH(parse_config_text("nope = 1\n"),
                    Catch::Matchers::ContainsSubstring("unknown key"));
  CHECK_THROWS_WITH(parse_config_text("seed 42\n"),
                    Catch::Matchers::ContainsSubstring("missing '='"));
  CHECK_THROWS_AS(parse_config_text("threshold = 1.5\n").validate(), FormatError);
  CHECK_THROWS_AS(parse_config_text("seed = banana\n"), FormatError);
}

TEST_CASE("PPCL_SEED environment variable wins") {
  RunConfig c = parse_config_text("seed = 1\n");
  setenv("PPCL_SEED", "777", 1);
  apply_overrides(c, {{"seed", "2"}});
  unsetenv("PPCL_SEED");
  CHECK(c.seed == 777);
  CHECK(c.train.seed == 777);
}

TEST_CASE("synth stage writes loadable datasets with provenance") {
  const auto dir = fresh_dir("ppcl_stage_synth");
  Stages stages{tiny_config(dir)};
  stages.synth();

  CHECK(fs::exists(dir / "train.jsonl"));
  CHECK(fs::exists(dir / "train.jsonl.meta.json"));
  const Dataset train = stages.load_split("train");
  CHECK(train.examples.size() == 24);

  const auto meta = nlohmann::json::parse(slurp(dir / "train.jsonl.meta.json"));
  CHECK(meta.at("seed").get<std::uint64_t>() == 11);
  CHECK(meta.at("config").contains("synth_train"));

  // identical runs produce byte-identical artifacts
  const std::string first = slurp(dir / "train.jsonl");
  stages.synth();
  CHECK(slurp(dir / "train.jsonl") == first);
}

TEST_CASE("perturb stage writes a paired set that round-trips") {
  const auto dir = fresh_dir("ppcl_stage_perturb");
  Stages stages{tiny_config(dir)};
  stages.synth();
  stages.perturb_stage(PerturbationKind::Synonym, "test");

  const auto path = dir / "paired_synonym_test.json";
  REQUIRE(fs::exists(path));
  const PairedSet set = load_paired_set(path.string());
  CHECK(set.kind == PerturbationKind::Synonym);
  CHECK(set.threshold == 0.5);
  CHECK(!set.pairs.empty());
  for (const auto& [clean, pert] : set.pairs) {
    CHECK(pert.similarity >= set.threshold);
    CHECK(pert.tokens.size() == clean.tokens.size());
  }

  const std::string first = slurp(path);
  stages.perturb_stage(PerturbationKind::Synonym, "test");
  CHECK(slurp(path) == first);
}

TEST_CASE("augment stage extends the training set on disk") {
  const auto dir = fresh_dir("ppcl_stage_augment");
  auto config = tiny_config(dir);
  config.threshold = 0.0;
  Stages stages{config};
  stages.synth();
  stages.augment_stage(PerturbationKind::Synonym);
  const Dataset augmented =
      load_dataset((dir / "train_augmented_synonym.jsonl").string(), "train");
  CHECK(augmented.examples.size() > 24);
}

TEST_CASE("paraphrase pair files are ingested by id") {
  const auto dir = fresh_dir("ppcl_stage_para");
  auto config = tiny_config(dir);
  config.threshold = 0.0;
  Stages stages{config};
  stages.synth();
  const Dataset test = stages.load_split("test");

  // external paraphrases for the first two examples: token order shuffled
  // around the argument spans
  const auto para_path = dir / "paraphrases.jsonl";
  {
    std::ofstream out(para_path);
    for (std::size_t i = 0; i < 2; ++i) {
      const auto& e = test.examples[i];
      nlohmann::json rec{{"id", e.id}, {"paraphrase", "listen " + join(e.tokens, " ")}};
      out << rec.dump() << '\n';
    }
  }
  Stages with_para = stages;
  with_para.config.paraphrases_path = para_path.string();
  const PairedSet set = with_para.make_paired_set(test, PerturbationKind::Paraphrase);
  CHECK(set.pairs.size() == 2);
  for (const auto& [clean, pert] : set.pairs) {
    CHECK(pert.tokens.size() == clean.tokens.size() + 1);
    CHECK(pert.tags[0] == kOtherTag);
  }
}

TEST_CASE("training stages produce resumable artifacts") {
  const auto dir = fresh_dir("ppcl_stage_train");
  Stages stages{tiny_config(dir)};
  stages.synth();
  const Dataset train = stages.load_split("train");

  auto [model, sft_result] = stages.train_sft_stage(train);
  CHECK(fs::exists(dir / "sft.ckpt"));
  CHECK(fs::exists(dir / "vocab.txt"));
  CHECK(fs::exists(dir / "loss_sft.csv"));
  CHECK(sft_result.epoch_mean_loss.size() == 1);

  const auto curve = slurp(dir / "loss_sft.csv");
  CHECK_THAT(curve, Catch::Matchers::StartsWith("phase,epoch,step,L_C,L_P,L_JS,L\n"));
  CHECK_THAT(curve, Catch::Matchers::ContainsSubstring("sft,1,1,"));

  stages.perturb_stage(PerturbationKind::Synonym, "train");
  const PairedSet pairs = load_paired_set((dir / "paired_synonym_train.json").string());
  auto [ppcl_model, ppcl_result] =
      stages.train_ppcl_stage((dir / "sft.ckpt").string(), pairs, "ppcl.ckpt");
  CHECK(fs::exists(dir / "ppcl.ckpt"));
  CHECK(fs::exists(dir / "loss_ppcl.csv"));

  stages.perturb_stage(PerturbationKind::Synonym, "test");
  const PairedSet test_pairs = load_paired_set((dir / "paired_synonym_test.json").string());
  const EvalReport report =
      stages.eval_stage((dir / "ppcl.ckpt").string(), test_pairs, "smoke");
  CHECK(fs::exists(dir / "report_smoke.json"));
  CHECK(fs::exists(dir / "report_smoke.csv"));
  const auto loaded = load_reports((dir / "report_smoke.json").string());
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].pair_count == report.pair_count);
}

TEST_CASE("sft training is deterministic and descends") {
  auto [train, test] = synth_fixture(3, 64, 4);
  const FormatSpec spec{PromptFormat::Simple, SlotFormat::SentinelTag};
  std::vector<std::string> texts;
  for (const auto& e : train.examples) texts.push_back(render(e, spec, RenderMode::Training));
  const Vocab vocab = build_vocab(texts, 24);

  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.context_length = 96;
  mc.embed_dim = 32;
  mc.n_layers = 1;
  mc.n_heads = 2;
  mc.seed = 5;

  TrainConfig tc;
  tc.sft_epochs = 5;
  tc.batch_size = 8;
  tc.warmup_steps = 10;
  tc.seed = 5;

  auto model_a = init_model<float>(mc);
  const auto result_a = train_sft(model_a, train, spec, vocab, tc);
  REQUIRE(result_a.epoch_mean_loss.size() == 5);
  CHECK(result_a.epoch_mean_loss.back() < result_a.epoch_mean_loss.front());

  auto model_b = init_model<float>(mc);
  train_sft(model_b, train, spec, vocab, tc);
  CHECK(model_a.w_out == model_b.w_out);
  CHECK(model_a.tok_embed == model_b.tok_embed);

  // zero learning rate leaves the parameters untouched
  auto frozen = init_model<float>(mc);
  const auto before = frozen.w_out;
  TrainConfig zero = tc;
  zero.learning_rate = 0.0;
  zero.sft_epochs = 1;
  train_sft(frozen, train, spec, vocab, zero);
  CHECK(frozen.w_out == before);
}

TEST_CASE("prompt overflow names the offending example") {
  auto [train, test] = synth_fixture(3, 4, 2);
  const FormatSpec spec{PromptFormat::Simple, SlotFormat::SentinelTag};
  std::vector<std::string> texts;
  for (const auto& e : train.examples) texts.push_back(render(e, spec, RenderMode::Training));
  const Vocab vocab = build_vocab(texts, 24);
  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.context_length = 10;  // far too small
  mc.embed_dim = 16;
  mc.n_layers = 1;
  mc.n_heads = 2;
  auto model = init_model<float>(mc);
  TrainConfig tc;
  CHECK_THROWS_WITH(train_sft(model, train, spec, vocab, tc),
                    Catch::Matchers::ContainsSubstring(train.examples[0].id));
}

TEST_CASE("consistency phase with clean-only weights equals plain supervised steps") {
  auto [train, test] = synth_fixture(17, 16, 2);
  const FormatSpec spec{PromptFormat::Simple, SlotFormat::SentinelTag};
  std::vector<std::string> texts;
  for (const auto& e : train.examples) texts.push_back(render(e, spec, RenderMode::Training));
  const Vocab vocab = build_vocab(texts, 24);

  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.context_length = 96;
  mc.embed_dim = 32;
  mc.n_layers = 1;
  mc.n_heads = 2;
  mc.seed = 9;

  // pairs whose perturbed side is irrelevant under (1, 0, 0) weights
  std::vector<PerturbedExample> perturbed;
  for (const auto& e : train.examples) {
    PerturbedExample p;
    p.clean_id = e.id;
    p.kind = PerturbationKind::Synonym;
    p.tokens = e.tokens;
    p.tokens.back() = "zzz";
    p.tags = e.tags;
    p.replaced_positions = {e.tokens.size() - 1};
    p.similarity = 1.0;
    perturbed.push_back(std::move(p));
  }
  const PairedSet pairs = build_paired_set(train, perturbed, 0.0);

  TrainConfig tc;
  tc.sft_epochs = 1;
  tc.ppcl_epochs = 1;
  tc.batch_size = 4;
  tc.warmup_steps = 2;
  tc.seed = 9;
  tc.weights = {1.0, 0.0, 0.0};

  auto model_sft = init_model<float>(mc);
  train_sft(model_sft, train, spec, vocab, tc);

  auto model_ppcl = init_model<float>(mc);
  train_ppcl(model_ppcl, pairs, spec, vocab, tc);

  CHECK(model_sft.w_out == model_ppcl.w_out);
  CHECK(model_sft.tok_embed == model_ppcl.tok_embed);
}

TEST_CASE("identical clean and perturbed pairs keep the consistency term at zero") {
  auto [train, test] = synth_fixture(19, 12, 2);
  const FormatSpec spec{PromptFormat::Simple, SlotFormat::SentinelTag};
  std::vector<std::string> texts;
  for (const auto& e : train.examples) texts.push_back(render(e, spec, RenderMode::Training));
  const Vocab vocab = build_vocab(texts, 24);

  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.context_length = 96;
  mc.embed_dim = 32;
  mc.n_layers = 1;
  mc.n_heads = 2;
  mc.seed = 3;

  std::vector<PerturbedExample> perturbed;
  for (const auto& e : train.examples) {
    PerturbedExample p;
    p.clean_id = e.id;
    p.kind = PerturbationKind::Synonym;
    p.tokens = e.tokens;  // identical
    p.tags = e.tags;
    p.replaced_positions = {0};
    p.similarity = 1.0;
    perturbed.push_back(std::move(p));
  }
  const PairedSet pairs = build_paired_set(train, perturbed, 0.0);

  TrainConfig tc;
  tc.ppcl_epochs = 2;
  tc.batch_size = 4;
  tc.seed = 3;
  auto model = init_model<float>(mc);
  const auto result = train_ppcl(model, pairs, spec, vocab, tc);
  for (const auto& point : result.curve) {
    CHECK_THAT(point.l_js, Catch::Matchers::WithinAbs(0.0, 1e-9));
    CHECK_THAT(point.l_c, Catch::Matchers::WithinAbs(point.l_p, 1e-6));
  }
}

TEST_CASE("word-level pairs with mismatched response masks are rejected") {
  const Example clean = Example::make("m1", "d", "i", {"a", "b"}, {"Other", "Other"});
  PerturbedExample pert;
  pert.clean_id = "m1";
  pert.kind = PerturbationKind::Synonym;
  pert.tokens = {"a", "b", "c"};  // invalid for a word-level kind
  pert.tags = {"Other", "Other", "Other"};
  pert.similarity = 1.0;
  const Vocab vocab = build_vocab({"Utterance: <0>a <1>b <2>c Domain: d Intent: i "
                                   "Slots: <0>Other <1>Other <2>Other Arguments: []"},
                                  8);
  CHECK_THROWS_WITH(encode_pair(clean, pert, {PromptFormat::Simple, SlotFormat::SentinelTag},
                                vocab, 96),
                    Catch::Matchers::ContainsSubstring("mismatched response masks"));
}
