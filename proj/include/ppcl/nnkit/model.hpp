#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ppcl/common.hpp"

namespace ppcl {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t context_length = 96;
  std::size_t embed_dim = 128;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::uint64_t seed = 0;

  void validate() const {
    if (vocab_size == 0 || context_length == 0 || embed_dim == 0 || n_layers == 0 ||
        n_heads == 0) {
      throw FormatError("ModelConfig: all sizes must be positive");
    }
    if (embed_dim % n_heads != 0) {
      throw FormatError("ModelConfig: embed_dim must be divisible by n_heads");
    }
  }
};

/// A small decoder-only autoregressive transformer: learned token and
/// position embeddings, pre-norm blocks (RMS normalization with learned
/// gains, causal multi-head attention, GELU feed-forward), and an untied
/// output projection. Templated on the scalar type so the same math runs
/// in float for training and double for finite-difference verification.
template <typename Real>
struct TinyLM {
  using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

  struct Layer {
    Vec norm1_gain;
    Mat wq, wk, wv, wo;
    Vec norm2_gain;
    Mat w1, w2;  // d x 4d, 4d x d
  };

  ModelConfig config;
  Mat tok_embed;  // V x d
  Mat pos_embed;  // C x d
  std::vector<Layer> layers;
  Vec normf_gain;
  Mat w_out;  // d x V

  std::size_t head_dim() const { return config.embed_dim / config.n_heads; }
};

namespace nn {

inline constexpr double kNormEps = 1e-6;
inline constexpr double kInitStd = 0.02;

/// Parameter tensors in checkpoint order. Gains are exposed as 1-column
/// matrices through the Map so every tensor walks the same way.
template <typename Real, typename Fn>
void visit_params(TinyLM<Real>& m, Fn&& fn) {
  fn(m.tok_embed);
  fn(m.pos_embed);
  for (auto& layer : m.layers) {
    fn(layer.norm1_gain);
    fn(layer.wq);
    fn(layer.wk);
    fn(layer.wv);
    fn(layer.wo);
    fn(layer.norm2_gain);
    fn(layer.w1);
    fn(layer.w2);
  }
  fn(m.normf_gain);
  fn(m.w_out);
}

template <typename Real, typename Fn>
void visit_params2(TinyLM<Real>& a, TinyLM<Real>& b, Fn&& fn) {
  fn(a.tok_embed, b.tok_embed);
  fn(a.pos_embed, b.pos_embed);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    fn(a.layers[l].norm1_gain, b.layers[l].norm1_gain);
    fn(a.layers[l].wq, b.layers[l].wq);
    fn(a.layers[l].wk, b.layers[l].wk);
    fn(a.layers[l].wv, b.layers[l].wv);
    fn(a.layers[l].wo, b.layers[l].wo);
    fn(a.layers[l].norm2_gain, b.layers[l].norm2_gain);
    fn(a.layers[l].w1, b.layers[l].w1);
    fn(a.layers[l].w2, b.layers[l].w2);
  }
  fn(a.normf_gain, b.normf_gain);
  fn(a.w_out, b.w_out);
}

template <typename Real>
void shape_like_config(TinyLM<Real>& m) {
  const auto& c = m.config;
  const auto d = static_cast<Eigen::Index>(c.embed_dim);
  const auto v = static_cast<Eigen::Index>(c.vocab_size);
  m.tok_embed.resize(v, d);
  m.pos_embed.resize(static_cast<Eigen::Index>(c.context_length), d);
  m.layers.resize(c.n_layers);
  for (auto& layer : m.layers) {
    layer.norm1_gain.resize(d);
    layer.wq.resize(d, d);
    layer.wk.resize(d, d);
    layer.wv.resize(d, d);
    layer.wo.resize(d, d);
    layer.norm2_gain.resize(d);
    layer.w1.resize(d, 4 * d);
    layer.w2.resize(4 * d, d);
  }
  m.normf_gain.resize(d);
  m.w_out.resize(d, v);
}

}  // namespace nn

/// Scaled-normal initialization (sigma 0.02) for all weights, unit gains,
/// with a fill order fixed by the checkpoint parameter order.
template <typename Real>
TinyLM<Real> init_model(const ModelConfig& config) {
  config.validate();
  TinyLM<Real> m;
  m.config = config;
  nn::shape_like_config(m);
  Rng rng(SeedMixer(config.seed).mix("init").seed());
  nn::visit_params(m, [&](auto& tensor) {
    for (Eigen::Index r = 0; r < tensor.rows(); ++r) {
      for (Eigen::Index c = 0; c < tensor.cols(); ++c) {
        tensor(r, c) = static_cast<Real>(nn::kInitStd * rng.normal());
      }
    }
  });
  for (auto& layer : m.layers) {
    layer.norm1_gain.setOnes();
    layer.norm2_gain.setOnes();
  }
  m.normf_gain.setOnes();
  return m;
}

template <typename To, typename From>
TinyLM<To> cast_model(const TinyLM<From>& src) {
  TinyLM<To> dst;
  dst.config = src.config;
  nn::shape_like_config(dst);
  std::vector<std::pair<const From*, std::size_t>> srcs;
  nn::visit_params(const_cast<TinyLM<From>&>(src), [&](auto& t) {
    srcs.emplace_back(t.data(), static_cast<std::size_t>(t.size()));
  });
  std::size_t i = 0;
  nn::visit_params(dst, [&](auto& t) {
    const auto [ptr, n] = srcs[i++];
    for (std::size_t k = 0; k < n; ++k) t.data()[k] = static_cast<To>(ptr[k]);
  });
  return dst;
}

/// Gradient accumulator with the same shape as the model.
template <typename Real>
TinyLM<Real> zero_like(const TinyLM<Real>& m) {
  TinyLM<Real> g;
  g.config = m.config;
  nn::shape_like_config(g);
  nn::visit_params(g, [](auto& t) { t.setZero(); });
  return g;
}

// ---------------------------------------------------------------------------
// Forward pass with cached activations for the hand-written backward pass.
// ---------------------------------------------------------------------------

namespace nn {

template <typename Real>
Real gelu(Real x) {
  return Real(0.5) * x * (Real(1) + std::erf(x / Real(M_SQRT2)));
}

template <typename Real>
Real gelu_grad(Real x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343;
  return Real(0.5) * (Real(1) + std::erf(x / Real(M_SQRT2))) +
         x * Real(inv_sqrt_2pi) * std::exp(Real(-0.5) * x * x);
}

/// Row-wise RMS normalization with gain; returns normalized rows and the
/// reciprocal RMS per row (needed by the backward pass).
template <typename Real>
void rmsnorm_rows(const typename TinyLM<Real>::Mat& x, const typename TinyLM<Real>::Vec& gain,
                  typename TinyLM<Real>::Mat& out, typename TinyLM<Real>::Vec& inv_rms) {
  const Eigen::Index n = x.rows(), d = x.cols();
  out.resize(n, d);
  inv_rms.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    double ss = 0;
    for (Eigen::Index c = 0; c < d; ++c) ss += double(x(r, c)) * double(x(r, c));
    const Real ir = Real(1.0 / std::sqrt(ss / double(d) + kNormEps));
    inv_rms(r) = ir;
    out.row(r) = x.row(r).cwiseProduct(gain.transpose()) * ir;
  }
}

/// d(loss)/dx for rmsnorm_rows, also accumulating the gain gradient.
template <typename Real>
void rmsnorm_backward(const typename TinyLM<Real>::Mat& x, const typename TinyLM<Real>::Vec& gain,
                      const typename TinyLM<Real>::Vec& inv_rms,
                      const typename TinyLM<Real>::Mat& dout,
                      typename TinyLM<Real>::Mat& dx, typename TinyLM<Real>::Vec& dgain) {
  const Eigen::Index n = x.rows(), d = x.cols();
  dx.resize(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Real ir = inv_rms(r);
    double dot = 0;  // sum_k dout_k * gain_k * x_k
    for (Eigen::Index c = 0; c < d; ++c) dot += double(dout(r, c)) * double(gain(c)) * double(x(r, c));
    const Real coef = Real(dot / double(d)) * ir * ir * ir;
    for (Eigen::Index c = 0; c < d; ++c) {
      dx(r, c) = dout(r, c) * gain(c) * ir - x(r, c) * coef;
      dgain(c) += dout(r, c) * x(r, c) * ir;
    }
  }
}

/// Row softmax with double accumulation so each row sums to 1 within 1e-6
/// even in single precision.
template <typename Real>
void softmax_rows(const typename TinyLM<Real>::Mat& logits, typename TinyLM<Real>::Mat& probs) {
  const Eigen::Index n = logits.rows(), v = logits.cols();
  probs.resize(n, v);
  for (Eigen::Index r = 0; r < n; ++r) {
    Real mx = logits.row(r).maxCoeff();
    double z = 0;
    for (Eigen::Index c = 0; c < v; ++c) {
      const double e = std::exp(double(logits(r, c) - mx));
      probs(r, c) = Real(e);
      z += e;
    }
    const Real inv = Real(1.0 / z);
    probs.row(r) *= inv;
  }
}

template <typename Real>
struct LayerTrace {
  using Mat = typename TinyLM<Real>::Mat;
  using Vec = typename TinyLM<Real>::Vec;
  Mat x_in;                  // n x d, block input
  Mat n1;                    // rmsnorm(x_in)
  Vec inv_rms1;
  Mat q, k, v;               // n x d
  std::vector<Mat> att;      // per head, n x n softmax weights
  Mat ctx;                   // n x d, heads concatenated
  Mat x_mid;                 // x_in + attn_out
  Mat n2;
  Vec inv_rms2;
  Mat ff_pre;                // n x 4d
  Mat ff_act;                // gelu(ff_pre)
};

template <typename Real>
struct ForwardTrace {
  using Mat = typename TinyLM<Real>::Mat;
  using Vec = typename TinyLM<Real>::Vec;
  std::vector<int> ids;
  Mat x0;
  std::vector<LayerTrace<Real>> layers;
  Mat x_final;       // residual stream after last block
  Mat nf;
  Vec inv_rmsf;
  Mat logits;        // n x V
  Mat probs;         // n x V
};

}  // namespace nn

/// Full forward pass; keeps every intermediate needed by backward().
template <typename Real>
nn::ForwardTrace<Real> forward_trace(const TinyLM<Real>& m, const std::vector<int>& ids) {
  using Mat = typename TinyLM<Real>::Mat;
  const std::size_t n = ids.size();
  if (n == 0) throw FormatError("forward: empty sequence");
  if (n > m.config.context_length) {
    throw FormatError("forward: sequence length " + std::to_string(n) +
                      " exceeds context_length " + std::to_string(m.config.context_length));
  }
  const auto d = static_cast<Eigen::Index>(m.config.embed_dim);
  const auto nh = m.config.n_heads;
  const auto dh = static_cast<Eigen::Index>(m.head_dim());
  const Real scale = Real(1.0 / std::sqrt(double(dh)));

  nn::ForwardTrace<Real> t;
  t.ids = ids;
  t.x0.resize(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    t.x0.row(static_cast<Eigen::Index>(i)) =
        m.tok_embed.row(ids[i]) + m.pos_embed.row(static_cast<Eigen::Index>(i));
  }

  Mat x = t.x0;
  t.layers.resize(m.config.n_layers);
  for (std::size_t l = 0; l < m.config.n_layers; ++l) {
    auto& lt = t.layers[l];
    const auto& lw = m.layers[l];
    lt.x_in = x;
    nn::rmsnorm_rows<Real>(lt.x_in, lw.norm1_gain, lt.n1, lt.inv_rms1);
    lt.q.noalias() = lt.n1 * lw.wq;
    lt.k.noalias() = lt.n1 * lw.wk;
    lt.v.noalias() = lt.n1 * lw.wv;
    lt.att.resize(nh);
    lt.ctx.resize(static_cast<Eigen::Index>(n), d);
    for (std::size_t h = 0; h < nh; ++h) {
      const auto col = static_cast<Eigen::Index>(h) * dh;
      Mat scores = lt.q.middleCols(col, dh) * lt.k.middleCols(col, dh).transpose() * scale;
      // causal mask: position r attends to c <= r
      auto& att = lt.att[h];
      att.resize(scores.rows(), scores.cols());
      for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        const Real mx = scores.row(r).head(r + 1).maxCoeff();
        double z = 0;
        for (Eigen::Index c = 0; c <= r; ++c) {
          const double e = std::exp(double(scores(r, c) - mx));
          att(r, c) = Real(e);
          z += e;
        }
        const Real inv = Real(1.0 / z);
        for (Eigen::Index c = 0; c <= r; ++c) att(r, c) *= inv;
        for (Eigen::Index c = r + 1; c < scores.cols(); ++c) att(r, c) = Real(0);
      }
      lt.ctx.middleCols(col, dh).noalias() = att * lt.v.middleCols(col, dh);
    }
    lt.x_mid = lt.x_in + lt.ctx * lw.wo;
    nn::rmsnorm_rows<Real>(lt.x_mid, lw.norm2_gain, lt.n2, lt.inv_rms2);
    lt.ff_pre.noalias() = lt.n2 * lw.w1;
    lt.ff_act = lt.ff_pre.unaryExpr([](Real v) { return nn::gelu(v); });
    x = lt.x_mid + lt.ff_act * lw.w2;
  }
  t.x_final = x;
  nn::rmsnorm_rows<Real>(t.x_final, m.normf_gain, t.nf, t.inv_rmsf);
  t.logits.noalias() = t.nf * m.w_out;
  nn::softmax_rows<Real>(t.logits, t.probs);
  return t;
}

/// Spec-level forward: one probability distribution per position.
template <typename Real>
typename TinyLM<Real>::Mat forward(const TinyLM<Real>& m, const std::vector<int>& ids) {
  return forward_trace(m, ids).probs;
}

/// Reverse-mode pass from d(loss)/d(logits); accumulates into `grads`.
template <typename Real>
void backward(const TinyLM<Real>& m, const nn::ForwardTrace<Real>& t,
              const typename TinyLM<Real>::Mat& dlogits, TinyLM<Real>& grads) {
  using Mat = typename TinyLM<Real>::Mat;
  using Vec = typename TinyLM<Real>::Vec;
  const auto n = t.x0.rows();
  const auto d = static_cast<Eigen::Index>(m.config.embed_dim);
  const auto nh = m.config.n_heads;
  const auto dh = static_cast<Eigen::Index>(m.head_dim());
  const Real scale = Real(1.0 / std::sqrt(double(dh)));

  grads.w_out.noalias() += t.nf.transpose() * dlogits;
  Mat dnf = dlogits * m.w_out.transpose();
  Mat dx;
  nn::rmsnorm_backward<Real>(t.x_final, m.normf_gain, t.inv_rmsf, dnf, dx, grads.normf_gain);

  for (std::size_t l = m.config.n_layers; l-- > 0;) {
    const auto& lt = t.layers[l];
    const auto& lw = m.layers[l];
    auto& lg = grads.layers[l];

    // x_out = x_mid + gelu(n2 w1) w2
    Mat dff_act = dx * lw.w2.transpose();
    lg.w2.noalias() += lt.ff_act.transpose() * dx;
    Mat dff_pre =
        dff_act.binaryExpr(lt.ff_pre, [](Real g, Real x) { return g * nn::gelu_grad(x); });
    lg.w1.noalias() += lt.n2.transpose() * dff_pre;
    Mat dn2 = dff_pre * lw.w1.transpose();
    Mat dx_mid;
    nn::rmsnorm_backward<Real>(lt.x_mid, lw.norm2_gain, lt.inv_rms2, dn2, dx_mid,
                               lg.norm2_gain);
    dx_mid += dx;  // residual branch

    // x_mid = x_in + ctx wo
    Mat dctx = dx_mid * lw.wo.transpose();
    lg.wo.noalias() += lt.ctx.transpose() * dx_mid;

    Mat dq(n, d), dk(n, d), dv(n, d);
    for (std::size_t h = 0; h < nh; ++h) {
      const auto col = static_cast<Eigen::Index>(h) * dh;
      const auto& att = lt.att[h];
      const auto vh = lt.v.middleCols(col, dh);
      const auto dctx_h = dctx.middleCols(col, dh);
      dv.middleCols(col, dh).noalias() = att.transpose() * dctx_h;
      Mat datt = dctx_h * vh.transpose();
      // softmax over masked rows: ds = att .* (datt - rowdot(datt, att))
      Mat dscores(att.rows(), att.cols());
      for (Eigen::Index r = 0; r < att.rows(); ++r) {
        double dot = 0;
        for (Eigen::Index c = 0; c <= r; ++c) dot += double(datt(r, c)) * double(att(r, c));
        for (Eigen::Index c = 0; c <= r; ++c) {
          dscores(r, c) = att(r, c) * (datt(r, c) - Real(dot));
        }
        for (Eigen::Index c = r + 1; c < att.cols(); ++c) dscores(r, c) = Real(0);
      }
      dq.middleCols(col, dh).noalias() = dscores * lt.k.middleCols(col, dh) * scale;
      dk.middleCols(col, dh).noalias() = dscores.transpose() * lt.q.middleCols(col, dh) * scale;
    }

    lg.wq.noalias() += lt.n1.transpose() * dq;
    lg.wk.noalias() += lt.n1.transpose() * dk;
    lg.wv.noalias() += lt.n1.transpose() * dv;
    Mat dn1 = dq * lw.wq.transpose();
    dn1.noalias() += dk * lw.wk.transpose();
    dn1.noalias() += dv * lw.wv.transpose();
    Mat dx_in;
    nn::rmsnorm_backward<Real>(lt.x_in, lw.norm1_gain, lt.inv_rms1, dn1, dx_in, lg.norm1_gain);
    dx = dx_in + dx_mid;  // residual branch
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    grads.tok_embed.row(t.ids[static_cast<std::size_t>(i)]) += dx.row(i);
    grads.pos_embed.row(i) += dx.row(i);
  }
}

// ---------------------------------------------------------------------------
// Greedy decoding with a per-layer key/value cache.
// ---------------------------------------------------------------------------

template <typename Real>
class DecodeState {
 public:
  explicit DecodeState(const TinyLM<Real>& m) : m_(&m) {
    kcache_.resize(m.config.n_layers);
    vcache_.resize(m.config.n_layers);
    const auto d = static_cast<Eigen::Index>(m.config.embed_dim);
    for (std::size_t l = 0; l < m.config.n_layers; ++l) {
      kcache_[l].resize(static_cast<Eigen::Index>(m.config.context_length), d);
      vcache_[l].resize(static_cast<Eigen::Index>(m.config.context_length), d);
    }
  }

  std::size_t length() const { return len_; }

  /// Feeds one token; returns the next-token logits row.
  typename TinyLM<Real>::Vec step(int token_id) {
    using Mat = typename TinyLM<Real>::Mat;
    using Vec = typename TinyLM<Real>::Vec;
    const auto& m = *m_;
    if (len_ >= m.config.context_length) throw FormatError("decode: context overflow");
    const auto d = static_cast<Eigen::Index>(m.config.embed_dim);
    const auto nh = m.config.n_heads;
    const auto dh = static_cast<Eigen::Index>(m.head_dim());
    const Real scale = Real(1.0 / std::sqrt(double(dh)));
    const auto pos = static_cast<Eigen::Index>(len_);

    Mat x = m.tok_embed.row(token_id) + m.pos_embed.row(pos);  // 1 x d
    Mat n1(1, d), n2(1, d);
    Vec ir(1);
    for (std::size_t l = 0; l < m.config.n_layers; ++l) {
      const auto& lw = m.layers[l];
      nn::rmsnorm_rows<Real>(x, lw.norm1_gain, n1, ir);
      Mat q = n1 * lw.wq;
      kcache_[l].row(pos) = n1 * lw.wk;
      vcache_[l].row(pos) = n1 * lw.wv;
      Mat ctx(1, d);
      for (std::size_t h = 0; h < nh; ++h) {
        const auto col = static_cast<Eigen::Index>(h) * dh;
        Eigen::Matrix<Real, 1, Eigen::Dynamic> scores =
            q.middleCols(col, dh) * kcache_[l].middleCols(col, dh).topRows(pos + 1).transpose() *
            scale;
        const Real mx = scores.maxCoeff();
        double z = 0;
        for (Eigen::Index c = 0; c <= pos; ++c) {
          const double e = std::exp(double(scores(0, c) - mx));
          scores(0, c) = Real(e);
          z += e;
        }
        scores *= Real(1.0 / z);
        ctx.middleCols(col, dh).noalias() =
            scores * vcache_[l].middleCols(col, dh).topRows(pos + 1);
      }
      x += ctx * lw.wo;
      nn::rmsnorm_rows<Real>(x, lw.norm2_gain, n2, ir);
      Mat act = (n2 * lw.w1).unaryExpr([](Real v) { return nn::gelu(v); });
      x += act * lw.w2;
    }
    Mat nf(1, d);
    nn::rmsnorm_rows<Real>(x, m.normf_gain, nf, ir);
    ++len_;
    return (nf * m.w_out).transpose();
  }

 private:
  const TinyLM<Real>* m_;
  std::vector<typename TinyLM<Real>::Mat> kcache_, vcache_;
  std::size_t len_ = 0;
};

/// Greedy continuation of `prompt_ids`; stops at eos or after
/// max_new_tokens (or when the context fills). Ties pick the lowest id.
template <typename Real>
std::vector<int> greedy_decode(const TinyLM<Real>& m, const std::vector<int>& prompt_ids,
                               std::size_t max_new_tokens, int eos_id) {
  if (prompt_ids.empty()) throw FormatError("greedy_decode: empty prompt");
  if (prompt_ids.size() >= m.config.context_length) {
    throw FormatError("greedy_decode: prompt exceeds context");
  }
  DecodeState<Real> state(m);
  typename TinyLM<Real>::Vec logits;
  for (const int id : prompt_ids) logits = state.step(id);

  std::vector<int> out;
  for (std::size_t step = 0; step < max_new_tokens; ++step) {
    int best = 0;
    Real best_v = logits(0);
    for (Eigen::Index i = 1; i < logits.size(); ++i) {
      if (logits(i) > best_v) {
        best_v = logits(i);
        best = static_cast<int>(i);
      }
    }
    if (best == eos_id) break;
    out.push_back(best);
    if (state.length() >= m.config.context_length) break;
    logits = state.step(best);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O: magic "PPCL", version, config record, then parameters as
// little-endian 32-bit floats in visit_params order (row-major each).
// ---------------------------------------------------------------------------

namespace nn {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
inline std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace nn

template <typename Real>
void save_checkpoint(const TinyLM<Real>& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint: " + path);
  out.write("PPCL", 4);
  nn::write_u32(out, nn::kCheckpointVersion);
  nn::write_u32(out, static_cast<std::uint32_t>(m.config.vocab_size));
  nn::write_u32(out, static_cast<std::uint32_t>(m.config.context_length));
  nn::write_u32(out, static_cast<std::uint32_t>(m.config.embed_dim));
  nn::write_u32(out, static_cast<std::uint32_t>(m.config.n_layers));
  nn::write_u32(out, static_cast<std::uint32_t>(m.config.n_heads));
  nn::write_u64(out, m.config.seed);
  auto& mm = const_cast<TinyLM<Real>&>(m);
  nn::visit_params(mm, [&](auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const float f = static_cast<float>(t.data()[i]);
      out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
  });
  if (!out) throw FormatError("short write on checkpoint: " + path);
}

template <typename Real>
TinyLM<Real> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (std::string_view(magic, 4) != "PPCL") {
    throw FormatError("not a checkpoint file (bad magic): " + path);
  }
  const auto version = nn::read_u32(in);
  if (version != nn::kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig c;
  c.vocab_size = nn::read_u32(in);
  c.context_length = nn::read_u32(in);
  c.embed_dim = nn::read_u32(in);
  c.n_layers = nn::read_u32(in);
  c.n_heads = nn::read_u32(in);
  c.seed = nn::read_u64(in);
  c.validate();
  TinyLM<Real> m;
  m.config = c;
  nn::shape_like_config(m);
  nn::visit_params(m, [&](auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      float f = 0;
      in.read(reinterpret_cast<char*>(&f), sizeof(f));
      t.data()[i] = static_cast<Real>(f);
    }
  });
  if (!in) throw FormatError("truncated checkpoint: " + path);
  return m;
}

// ---------------------------------------------------------------------------
// Adam with linear warm-up to a constant rate.
// ---------------------------------------------------------------------------

template <typename Real>
struct AdamState {
  TinyLM<Real> m1, m2;
  std::size_t step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  explicit AdamState(const TinyLM<Real>& model)
      : m1(zero_like(model)), m2(zero_like(model)) {}
};

inline double warmup_lr(double base_lr, std::size_t step, std::size_t warmup_steps) {
  if (warmup_steps == 0) return base_lr;
  return base_lr * std::min(1.0, static_cast<double>(step) / static_cast<double>(warmup_steps));
}

template <typename Real>
void adam_step(TinyLM<Real>& model, const TinyLM<Real>& grads, AdamState<Real>& st,
               double lr) {
  ++st.step;
  const double b1 = st.beta1, b2 = st.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(st.step));

  std::vector<std::pair<const Real*, std::size_t>> gs;
  nn::visit_params(const_cast<TinyLM<Real>&>(grads), [&](auto& t) {
    gs.emplace_back(t.data(), static_cast<std::size_t>(t.size()));
  });
  std::vector<std::pair<Real*, Real*>> moments;
  nn::visit_params2(st.m1, st.m2,
                    [&](auto& a, auto& b) { moments.emplace_back(a.data(), b.data()); });
  std::size_t ti = 0;
  nn::visit_params(model, [&](auto& t) {
    Real* p = t.data();
    const auto [gd, n] = gs[ti];
    const auto [mo1, mo2] = moments[ti];
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = double(gd[i]);
      const double m1 = b1 * double(mo1[i]) + (1 - b1) * gi;
      const double m2 = b2 * double(mo2[i]) + (1 - b2) * gi * gi;
      mo1[i] = Real(m1);
      mo2[i] = Real(m2);
      p[i] -= Real(lr * (m1 / bc1) / (std::sqrt(m2 / bc2) + st.eps));
    }
    ++ti;
  });
}

}  // namespace ppcl
