#include "cxrlabel/labeler/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "cxrlabel/rng.hpp"

namespace cxrlabel::labeler {

GradCheckResult grad_check(const ModelParams& params,
                           std::span<const EncodedSample> batch,
                           const GradCheckOptions& options) {
  Weights analytic = params.weights.zeros_like();
  batch_loss(params, batch, options.loss, &analytic, nullptr);
  if (options.inject_sign_flip) {
    for (auto* t : {&analytic.head_a.w, &analytic.head_a.b}) {
      for (auto& v : t->values) v = -v;
    }
  }

  ModelParams probe = params;
  auto probe_tensors = probe.weights.tensors();
  const auto grad_tensors = analytic.tensors();
  const auto& names = Weights::tensor_names();
  Rng rng(options.seed, /*stream=*/4);

  GradCheckResult result;
  for (std::size_t k = 0; k < probe_tensors.size(); ++k) {
    auto& values = probe_tensors[k]->values;
    if (values.empty()) continue;
    const std::size_t draws = std::min(options.samples_per_tensor, values.size());
    for (std::size_t s = 0; s < draws; ++s) {
      const std::size_t i = rng.below(values.size());
      const double saved = values[i];
      values[i] = saved + options.step;
      const double up = batch_loss(probe, batch, options.loss, nullptr, nullptr).total;
      values[i] = saved - options.step;
      const double down = batch_loss(probe, batch, options.loss, nullptr, nullptr).total;
      values[i] = saved;

      const double numeric = (up - down) / (2.0 * options.step);
      const double a = grad_tensors[k]->values[i];
      const double rel =
          std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-8);
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_tensor = names[k];
      }
    }
  }
  return result;
}

}  // namespace cxrlabel::labeler
