#pragma once

#include <span>

namespace cxrlabel::labeler {

inline constexpr double kProbEpsilon = 1e-7;

/// Mean over labels of  -a_t (1 - p_t)^gamma log(p_t),  where p_t = p and
/// a_t = alpha for positive targets, p_t = 1 - p and a_t = 1 - alpha for
/// negatives. Probabilities are clamped to [1e-7, 1 - 1e-7].
double focal_loss(std::span<const double> probs, std::span<const bool> targets,
                  double gamma, double alpha);

/// Gradient of focal_loss with respect to the logits z (p = sigmoid(z)),
/// written into `grad` and scaled by `scale`. Entries whose probability was
/// clamped receive zero gradient.
void focal_loss_grad(std::span<const double> logits,
                     std::span<const bool> targets, double gamma, double alpha,
                     double scale, std::span<double> grad);

/// Mean binary cross-entropy with the same clamping.
double binary_cross_entropy(std::span<const double> probs,
                            std::span<const bool> targets);

}  // namespace cxrlabel::labeler
