#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ppcl/common.hpp"
#include "ppcl/nnkit/model.hpp"

namespace ppcl {

/// Weight coefficients of the combined objective; not all may be zero.
struct LossWeights {
  double lambda_clean = 1.0;
  double lambda_perturb = 1.0;
  double lambda_js = 1.0;

  void validate() const {
    if (lambda_clean < 0 || lambda_perturb < 0 || lambda_js < 0) {
      throw FormatError("LossWeights: weights must be non-negative");
    }
    if (lambda_clean == 0 && lambda_perturb == 0 && lambda_js == 0) {
      throw FormatError("LossWeights: at least one weight must be non-zero");
    }
  }
};

inline double combined_loss(double l_clean, double l_perturb, double l_js,
                            const LossWeights& w) {
  return w.lambda_clean * l_clean + w.lambda_perturb * l_perturb + w.lambda_js * l_js;
}

// ---------------------------------------------------------------------------
// Distribution-level losses (natural log throughout).
// ---------------------------------------------------------------------------

namespace detail {

template <typename Derived>
void check_distribution(const Eigen::MatrixBase<Derived>& row, const char* who) {
  double sum = 0;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    const double v = double(row(i));
    if (v < 0) throw FormatError(std::string(who) + ": negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw FormatError(std::string(who) + ": probabilities sum to " + std::to_string(sum));
  }
}

}  // namespace detail

/// Jensen-Shannon divergence between two distributions of equal length;
/// symmetric, in [0, ln 2]. Zero-probability terms contribute nothing.
template <typename VecA, typename VecB>
double js_divergence(const VecA& p, const VecB& q) {
  if (p.size() != q.size()) throw FormatError("js_divergence: length mismatch");
  detail::check_distribution(p, "js_divergence");
  detail::check_distribution(q, "js_divergence");
  double acc = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = double(p(i));
    const double qi = double(q(i));
    const double mi = 0.5 * (pi + qi);
    if (pi > 0) acc += 0.5 * pi * std::log(pi / mi);
    if (qi > 0) acc += 0.5 * qi * std::log(qi / mi);
  }
  return acc;
}

/// Mean over masked positions of -ln p(target). `mask` marks the
/// target-output positions; it may not be empty.
template <typename Real>
double cross_entropy(const typename TinyLM<Real>::Mat& dists, const std::vector<int>& targets,
                     const std::vector<char>& mask) {
  if (static_cast<std::size_t>(dists.rows()) != targets.size() || targets.size() != mask.size()) {
    throw FormatError("cross_entropy: misaligned inputs");
  }
  double total = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double p = double(dists(static_cast<Eigen::Index>(i), targets[i]));
    total += -std::log(std::max(p, 1e-300));
    ++count;
  }
  if (count == 0) throw FormatError("cross_entropy: empty mask");
  return total / static_cast<double>(count);
}

/// Token-level consistency loss for length-preserving perturbations:
/// the mean Jensen-Shannon divergence over paired masked positions.
template <typename Real>
double token_js_loss(const typename TinyLM<Real>::Mat& clean_dists,
                     const typename TinyLM<Real>::Mat& pert_dists,
                     const std::vector<char>& mask) {
  if (clean_dists.rows() != pert_dists.rows()) {
    throw FormatError("token_js_loss: length mismatch (use the averaged-distribution "
                      "loss for paraphrase pairs)");
  }
  if (static_cast<std::size_t>(clean_dists.rows()) != mask.size()) {
    throw FormatError("token_js_loss: mask misaligned");
  }
  double acc = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const auto r = static_cast<Eigen::Index>(i);
    acc += js_divergence(clean_dists.row(r), pert_dists.row(r));
    ++count;
  }
  if (count == 0) throw FormatError("token_js_loss: empty mask");
  return acc / static_cast<double>(count);
}

/// Consistency loss for paraphrase pairs of differing lengths: each side's
/// masked distributions are averaged position-wise (and renormalized to
/// absorb rounding) before a single divergence.
template <typename Real>
double mean_dist_js_loss(const typename TinyLM<Real>::Mat& clean_dists,
                         const std::vector<char>& clean_mask,
                         const typename TinyLM<Real>::Mat& pert_dists,
                         const std::vector<char>& pert_mask) {
  const auto mean_of = [](const typename TinyLM<Real>::Mat& dists,
                          const std::vector<char>& mask) {
    if (static_cast<std::size_t>(dists.rows()) != mask.size()) {
      throw FormatError("mean_dist_js_loss: mask misaligned");
    }
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(dists.cols());
    std::size_t count = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!mask[i]) continue;
      acc += dists.row(static_cast<Eigen::Index>(i)).transpose().template cast<double>();
      ++count;
    }
    if (count == 0) throw FormatError("mean_dist_js_loss: empty mask");
    acc /= static_cast<double>(count);
    acc /= acc.sum();
    return acc;
  };
  const Eigen::VectorXd p = mean_of(clean_dists, clean_mask);
  const Eigen::VectorXd q = mean_of(pert_dists, pert_mask);
  return js_divergence(p, q);
}

// ---------------------------------------------------------------------------
// Gradient-level pieces shared by training and the finite-difference checks.
// All act on one sequence's trace; dlogits accumulates scaled contributions.
// ---------------------------------------------------------------------------

namespace lossgrad {

/// Sum over masked positions of -ln p(target), computed from logits for
/// numerical stability. Adds scale * (softmax - onehot) per masked row to
/// dlogits. Returns the unnormalized sum; the caller handles 1/M pooling.
template <typename Real>
double ce_sum_and_grad(const nn::ForwardTrace<Real>& t, const std::vector<int>& targets,
                       const std::vector<char>& mask, double scale,
                       typename TinyLM<Real>::Mat* dlogits) {
  double total = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const auto r = static_cast<Eigen::Index>(i);
    double lse = 0;
    const Real mx = t.logits.row(r).maxCoeff();
    for (Eigen::Index c = 0; c < t.logits.cols(); ++c) {
      lse += std::exp(double(t.logits(r, c) - mx));
    }
    lse = std::log(lse) + double(mx);
    total += lse - double(t.logits(r, targets[i]));
    if (dlogits != nullptr) {
      dlogits->row(r) += t.probs.row(r) * Real(scale);
      (*dlogits)(r, targets[i]) -= Real(scale);
    }
  }
  return total;
}

/// d JS / d p_k = 0.5 ln(p_k / m_k); probabilities clamped away from zero
/// inside the log only.
inline void js_prob_grads(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                          Eigen::VectorXd& gp, Eigen::VectorXd& gq) {
  constexpr double tiny = 1e-30;
  gp.resize(p.size());
  gq.resize(q.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p(i) + q(i));
    gp(i) = 0.5 * std::log(std::max(p(i), tiny) / std::max(m, tiny));
    gq(i) = 0.5 * std::log(std::max(q(i), tiny) / std::max(m, tiny));
  }
}

/// Chain rule through a softmax row: dz = p .* (g - <g, p>).
template <typename Real>
void softmax_row_backward(const typename TinyLM<Real>::Mat& probs, Eigen::Index row,
                          const Eigen::VectorXd& dprob, double scale,
                          typename TinyLM<Real>::Mat& dlogits) {
  double dot = 0;
  for (Eigen::Index c = 0; c < probs.cols(); ++c) dot += dprob(c) * double(probs(row, c));
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    dlogits(row, c) += Real(scale * double(probs(row, c)) * (dprob(c) - dot));
  }
}

/// Token-level JS between two traces sharing one mask; returns the loss and
/// adds scale * d(loss)/d(logits) into both gradient buffers.
template <typename Real>
double token_js_and_grad(const nn::ForwardTrace<Real>& tc, const nn::ForwardTrace<Real>& tp,
                         const std::vector<char>& mask, double scale,
                         typename TinyLM<Real>::Mat& dlogits_c,
                         typename TinyLM<Real>::Mat& dlogits_p) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) rows.push_back(static_cast<Eigen::Index>(i));
  }
  if (rows.empty()) throw FormatError("token_js_and_grad: empty mask");
  if (tc.probs.rows() != tp.probs.rows()) {
    throw FormatError("token_js_and_grad: length mismatch");
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  double loss = 0;
  Eigen::VectorXd gp, gq;
  for (const auto r : rows) {
    const Eigen::VectorXd p = tc.probs.row(r).template cast<double>();
    const Eigen::VectorXd q = tp.probs.row(r).template cast<double>();
    loss += js_divergence(p, q);
    js_prob_grads(p, q, gp, gq);
    softmax_row_backward<Real>(tc.probs, r, gp, scale * inv, dlogits_c);
    softmax_row_backward<Real>(tp.probs, r, gq, scale * inv, dlogits_p);
  }
  return loss * inv;
}

/// Averaged-distribution JS between two traces with their own masks.
template <typename Real>
double mean_dist_js_and_grad(const nn::ForwardTrace<Real>& tc, const std::vector<char>& mask_c,
                             const nn::ForwardTrace<Real>& tp, const std::vector<char>& mask_p,
                             double scale, typename TinyLM<Real>::Mat& dlogits_c,
                             typename TinyLM<Real>::Mat& dlogits_p) {
  struct Side {
    std::vector<Eigen::Index> rows;
    Eigen::VectorXd raw_mean;  // before renormalization
    double sum = 0;
    Eigen::VectorXd dist;      // renormalized
  };
  const auto build = [](const nn::ForwardTrace<Real>& t, const std::vector<char>& mask) {
    Side s;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) s.rows.push_back(static_cast<Eigen::Index>(i));
    }
    if (s.rows.empty()) throw FormatError("mean_dist_js_and_grad: empty mask");
    s.raw_mean = Eigen::VectorXd::Zero(t.probs.cols());
    for (const auto r : s.rows) s.raw_mean += t.probs.row(r).template cast<double>();
    s.raw_mean /= static_cast<double>(s.rows.size());
    s.sum = s.raw_mean.sum();
    s.dist = s.raw_mean / s.sum;
    return s;
  };
  Side sc = build(tc, mask_c);
  Side sp = build(tp, mask_p);

  const double loss = js_divergence(sc.dist, sp.dist);
  Eigen::VectorXd gp, gq;
  js_prob_grads(sc.dist, sp.dist, gp, gq);

  const auto backprop = [&](const Side& s, const Eigen::VectorXd& g,
                            const nn::ForwardTrace<Real>& t,
                            typename TinyLM<Real>::Mat& dlogits) {
    // through renormalization r = s/sum(s), then the 1/L mean, then softmax
    const double dot = g.dot(s.dist);
    const Eigen::VectorXd draw = (g.array() - dot).matrix() / s.sum;
    const double inv_l = 1.0 / static_cast<double>(s.rows.size());
    for (const auto r : s.rows) {
      softmax_row_backward<Real>(t.probs, r, draw, scale * inv_l, dlogits);
    }
  };
  backprop(sc, gp, tc, dlogits_c);
  backprop(sp, gq, tp, dlogits_p);
  return loss;
}

}  // namespace lossgrad

}  // namespace ppcl
