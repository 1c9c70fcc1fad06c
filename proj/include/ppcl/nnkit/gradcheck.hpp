#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ppcl/common.hpp"
#include "ppcl/nnkit/model.hpp"

namespace ppcl {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
};

/// Compares reverse-mode gradients against central finite differences on a
/// seeded random subsample of parameter coordinates. Runs in double; the
/// loss must be deterministic. Coordinates where both gradients sit below
/// 1e-8 fall back to an absolute comparison and count as exact.
inline GradCheckReport grad_check(
    TinyLM<double>& model, const std::function<double(const TinyLM<double>&)>& loss_fn,
    const std::function<TinyLM<double>(const TinyLM<double>&)>& analytic_grads,
    double eps = 1e-3, std::size_t n_coords = 200, std::uint64_t seed = 17) {
  TinyLM<double> grads = analytic_grads(model);
  if (!std::isfinite(loss_fn(model))) throw FormatError("grad_check: non-finite loss");

  std::vector<double*> param_ptr;
  std::vector<double*> grad_ptr;
  std::vector<std::size_t> sizes;
  nn::visit_params(model, [&](auto& t) {
    param_ptr.push_back(t.data());
    sizes.push_back(static_cast<std::size_t>(t.size()));
  });
  nn::visit_params(grads, [&](auto& t) { grad_ptr.push_back(t.data()); });

  std::size_t total = 0;
  for (const auto s : sizes) total += s;

  Rng rng(SeedMixer(seed).mix("grad-check").seed());
  GradCheckReport report;
  for (std::size_t k = 0; k < n_coords; ++k) {
    std::size_t flat = rng.uniform(total);
    std::size_t tensor = 0;
    while (flat >= sizes[tensor]) {
      flat -= sizes[tensor];
      ++tensor;
    }
    double& coord = param_ptr[tensor][flat];
    const double saved = coord;
    coord = saved + eps;
    const double up = loss_fn(model);
    coord = saved - eps;
    const double down = loss_fn(model);
    coord = saved;

    const double numeric = (up - down) / (2 * eps);
    const double analytic = grad_ptr[tensor][flat];
    const double denom = std::max(std::abs(numeric), std::abs(analytic));
    const double rel = denom < 1e-8 ? 0.0 : std::abs(numeric - analytic) / denom;
    report.max_rel_error = std::max(report.max_rel_error, rel);
    ++report.coords_checked;
  }
  return report;
}

}  // namespace ppcl
