#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "cxrlabel/labeler/network.hpp"

namespace cxrlabel::labeler {

struct GradCheckOptions {
  std::size_t samples_per_tensor = 12;
  double step = 1e-4;
  std::uint64_t seed = 7;
  LossSettings loss;
  bool inject_sign_flip = false;  // negate head-A analytic gradients
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::string worst_tensor;
};

/// Compares analytic gradients of the total loss with central differences
/// on a random subsample of entries of every tensor. Dropout is off so the
/// loss is a deterministic function of the parameters. Relative error is
/// |a - n| / max(|a| + |n|, 1e-8).
GradCheckResult grad_check(const ModelParams& params,
                           std::span<const EncodedSample> batch,
                           const GradCheckOptions& options = {});

}  // namespace cxrlabel::labeler
