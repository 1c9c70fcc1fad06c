#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ppcl/common.hpp"
#include "ppcl/dataset.hpp"
#include "ppcl/losses.hpp"
#include "ppcl/nnkit/model.hpp"
#include "ppcl/nnkit/vocab.hpp"
#include "ppcl/perturb.hpp"
#include "ppcl/promptfmt.hpp"

namespace ppcl {

struct TrainConfig {
  double learning_rate = 3e-4;
  std::size_t warmup_steps = 100;
  std::size_t sft_epochs = 5;
  std::size_t ppcl_epochs = 2;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  LossWeights weights;

  void validate() const {
    if (learning_rate < 0) throw FormatError("TrainConfig: negative learning rate");
    if (batch_size == 0) throw FormatError("TrainConfig: batch_size must be positive");
    if (sft_epochs == 0 && ppcl_epochs == 0) {
      throw FormatError("TrainConfig: zero epochs in both phases");
    }
    weights.validate();
  }
};

struct LossCurvePoint {
  std::string phase;
  std::size_t epoch = 0;
  std::size_t step = 0;  // global step within the phase, 1-based
  double l_c = 0, l_p = 0, l_js = 0, l = 0;
};

struct TrainResult {
  std::vector<double> epoch_mean_loss;
  std::vector<LossCurvePoint> curve;
};

/// Comma-separated loss curve: phase, epoch, step, L_C, L_P, L_JS, L.
inline void save_loss_curve(const std::vector<LossCurvePoint>& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write loss curve: " + path);
  out << "phase,epoch,step,L_C,L_P,L_JS,L\n";
  char buf[160];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,%.6f,%.6f,%.6f,%.6f\n", p.phase.c_str(),
                  p.epoch, p.step, p.l_c, p.l_p, p.l_js, p.l);
    out << buf;
  }
}

/// A rendered training prompt, encoded with BOS/EOS and a response mask.
/// mask[i] marks the prediction of ids[i+1]; response tokens (everything
/// after the inference prefix, including EOS) carry the loss.
struct EncodedSample {
  std::string source_id;
  std::vector<int> ids;
  std::vector<int> targets;    // targets[i] == ids[i+1]
  std::vector<char> mask;      // size ids.size()-1
  std::size_t masked_count = 0;
};

inline EncodedSample encode_training_sample(const Example& e, FormatSpec spec,
                                            const Vocab& vocab,
                                            std::size_t context_length) {
  const std::string train_text = render(e, spec, RenderMode::Training);
  const std::string inf_text = render(e, spec, RenderMode::Inference);
  const auto body = vocab.encode(train_text);
  const std::size_t prefix_len = vocab.encode(inf_text).size();

  EncodedSample s;
  s.source_id = e.id;
  s.ids.reserve(body.size() + 2);
  s.ids.push_back(Vocab::kBos);
  s.ids.insert(s.ids.end(), body.begin(), body.end());
  s.ids.push_back(Vocab::kEos);
  if (s.ids.size() > context_length) {
    throw FormatError("rendered prompt for example '" + e.id + "' (" +
                      std::to_string(s.ids.size()) + " tokens) exceeds context_length " +
                      std::to_string(context_length));
  }
  s.targets.assign(s.ids.begin() + 1, s.ids.end());
  s.mask.assign(s.ids.size() - 1, 0);
  for (std::size_t i = prefix_len; i < s.mask.size(); ++i) {
    s.mask[i] = 1;
    ++s.masked_count;
  }
  return s;
}

namespace traindetail {

inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                           std::uint64_t seed,
                                                           std::size_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(SeedMixer(seed).mix("epoch").mix(epoch).seed());
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace traindetail

/// Supervised fine-tuning: cross-entropy over the masked response tokens of
/// every rendered training prompt, Adam with linear warm-up then a constant
/// rate. Deterministic for a fixed seed.
template <typename Real>
TrainResult train_sft(TinyLM<Real>& model, const Dataset& dataset, FormatSpec spec,
                      const Vocab& vocab, const TrainConfig& config) {
  config.validate();
  std::vector<EncodedSample> samples;
  samples.reserve(dataset.examples.size());
  for (const auto& e : dataset.examples) {
    samples.push_back(encode_training_sample(e, spec, vocab, model.config.context_length));
  }
  if (samples.empty()) throw FormatError("train_sft: empty dataset");

  TrainResult result;
  AdamState<Real> adam(model);
  std::size_t global_step = 0;
  for (std::size_t epoch = 0; epoch < config.sft_epochs; ++epoch) {
    double epoch_loss = 0;
    std::size_t epoch_steps = 0;
    for (const auto& batch :
         traindetail::epoch_batches(samples.size(), config.batch_size, config.seed, epoch)) {
      std::size_t total_masked = 0;
      for (const auto si : batch) total_masked += samples[si].masked_count;
      TinyLM<Real> grads = zero_like(model);
      double ce_sum = 0;
      for (const auto si : batch) {
        const auto& s = samples[si];
        auto trace = forward_trace(model, s.ids);
        typename TinyLM<Real>::Mat dlogits =
            TinyLM<Real>::Mat::Zero(trace.logits.rows(), trace.logits.cols());
        ce_sum += lossgrad::ce_sum_and_grad(trace, s.targets, s.mask,
                                            1.0 / static_cast<double>(total_masked), &dlogits);
        backward(model, trace, dlogits, grads);
      }
      ++global_step;
      const double lr = warmup_lr(config.learning_rate, global_step, config.warmup_steps);
      adam_step(model, grads, adam, lr);
      const double l_c = ce_sum / static_cast<double>(total_masked);
      result.curve.push_back({"sft", epoch + 1, global_step, l_c, 0.0, 0.0, l_c});
      epoch_loss += l_c;
      ++epoch_steps;
    }
    result.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(epoch_steps));
  }
  return result;
}

/// One (clean, perturbed) pair, encoded for the consistency phase.
struct EncodedPair {
  EncodedSample clean;
  EncodedSample perturbed;
};

inline EncodedPair encode_pair(const Example& clean, const PerturbedExample& pert,
                               FormatSpec spec, const Vocab& vocab,
                               std::size_t context_length) {
  EncodedPair pair;
  pair.clean = encode_training_sample(clean, spec, vocab, context_length);
  const Example pert_example = to_example(pert, clean, clean.id + "#perturbed");
  pair.perturbed = encode_training_sample(pert_example, spec, vocab, context_length);
  if (pert.kind != PerturbationKind::Paraphrase &&
      pair.clean.mask != pair.perturbed.mask) {
    throw FormatError("encode_pair: word-level pair '" + clean.id +
                      "' has mismatched response masks");
  }
  return pair;
}

/// Consistency fine-tuning: per batch of pairs, clean and perturbed
/// cross-entropy plus the kind-appropriate consistency divergence
/// (token-level for word-level kinds, averaged-distribution for
/// paraphrases), combined with the configured weights. Both sequences of a
/// pair share the batch. With the perturbed and consistency weights at
/// zero the perturbed side is skipped entirely, so the update matches a
/// plain supervised step on the clean side.
template <typename Real>
TrainResult train_ppcl(TinyLM<Real>& model, const PairedSet& paired, FormatSpec spec,
                       const Vocab& vocab, const TrainConfig& config) {
  config.validate();
  if (paired.pairs.empty()) throw FormatError("train_ppcl: empty paired set");
  const LossWeights& w = config.weights;
  const bool need_perturbed = w.lambda_perturb != 0 || w.lambda_js != 0;

  std::vector<EncodedPair> pairs;
  pairs.reserve(paired.pairs.size());
  for (const auto& [clean, pert] : paired.pairs) {
    pairs.push_back(encode_pair(clean, pert, spec, vocab, model.config.context_length));
  }

  TrainResult result;
  AdamState<Real> adam(model);
  std::size_t global_step = 0;
  for (std::size_t epoch = 0; epoch < config.ppcl_epochs; ++epoch) {
    double epoch_loss = 0;
    std::size_t epoch_steps = 0;
    for (const auto& batch :
         traindetail::epoch_batches(pairs.size(), config.batch_size, config.seed, epoch)) {
      std::size_t masked_c = 0, masked_p = 0;
      for (const auto pi : batch) {
        masked_c += pairs[pi].clean.masked_count;
        masked_p += pairs[pi].perturbed.masked_count;
      }
      TinyLM<Real> grads = zero_like(model);
      double ce_c = 0, ce_p = 0, js_sum = 0;
      const double inv_pairs = 1.0 / static_cast<double>(batch.size());
      for (const auto pi : batch) {
        const auto& pair = pairs[pi];
        auto trace_c = forward_trace(model, pair.clean.ids);
        typename TinyLM<Real>::Mat dlog_c =
            TinyLM<Real>::Mat::Zero(trace_c.logits.rows(), trace_c.logits.cols());
        ce_c += lossgrad::ce_sum_and_grad(
            trace_c, pair.clean.targets, pair.clean.mask,
            w.lambda_clean / static_cast<double>(masked_c), &dlog_c);

        if (need_perturbed) {
          auto trace_p = forward_trace(model, pair.perturbed.ids);
          typename TinyLM<Real>::Mat dlog_p =
              TinyLM<Real>::Mat::Zero(trace_p.logits.rows(), trace_p.logits.cols());
          ce_p += lossgrad::ce_sum_and_grad(
              trace_p, pair.perturbed.targets, pair.perturbed.mask,
              w.lambda_perturb / static_cast<double>(masked_p), &dlog_p);
          if (w.lambda_js != 0) {
            if (paired.kind == PerturbationKind::Paraphrase) {
              js_sum += lossgrad::mean_dist_js_and_grad(
                  trace_c, pair.clean.mask, trace_p, pair.perturbed.mask,
                  w.lambda_js * inv_pairs, dlog_c, dlog_p);
            } else {
              js_sum += lossgrad::token_js_and_grad(trace_c, trace_p, pair.clean.mask,
                                                    w.lambda_js * inv_pairs, dlog_c, dlog_p);
            }
          }
          backward(model, trace_p, dlog_p, grads);
        }
        backward(model, trace_c, dlog_c, grads);
      }
      ++global_step;
      const double lr = warmup_lr(config.learning_rate, global_step, config.warmup_steps);
      adam_step(model, grads, adam, lr);

      const double l_c = ce_c / static_cast<double>(masked_c);
      const double l_p = need_perturbed ? ce_p / static_cast<double>(masked_p) : 0.0;
      const double l_js = js_sum * inv_pairs;
      const double l = combined_loss(l_c, l_p, l_js, w);
      result.curve.push_back({"ppcl", epoch + 1, global_step, l_c, l_p, l_js, l});
      epoch_loss += l;
      ++epoch_steps;
    }
    result.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(epoch_steps));
  }
  return result;
}

}  // namespace ppcl
