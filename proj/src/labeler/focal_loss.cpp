#include "cxrlabel/labeler/focal_loss.hpp"

#include <algorithm>
#include <cmath>

#include "cxrlabel/labeler/network.hpp"

namespace cxrlabel::labeler {
namespace {

double clamp_prob(double p) {
  return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
}

}  // namespace

double focal_loss(std::span<const double> probs, std::span<const bool> targets,
                  double gamma, double alpha) {
  if (probs.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = clamp_prob(probs[i]);
    const double pt = targets[i] ? p : 1.0 - p;
    const double at = targets[i] ? alpha : 1.0 - alpha;
    sum += -at * std::pow(1.0 - pt, gamma) * std::log(pt);
  }
  return sum / static_cast<double>(probs.size());
}

void focal_loss_grad(std::span<const double> logits,
                     std::span<const bool> targets, double gamma, double alpha,
                     double scale, std::span<double> grad) {
  const double n = static_cast<double>(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double raw = sigmoid(logits[i]);
    if (raw <= kProbEpsilon || raw >= 1.0 - kProbEpsilon) {
      grad[i] = 0.0;
      continue;
    }
    const double p = raw;
    const double q = 1.0 - p;
    double g;
    if (targets[i]) {
      // d/dz [-a q^g log p] = -a (q^(g+1) - g p q^g log p)
      g = -alpha * (std::pow(q, gamma + 1.0) -
                    gamma * p * std::pow(q, gamma) * std::log(p));
    } else {
      // d/dz [-(1-a) p^g log q] = (1-a) (p^(g+1) - g q p^g log q)
      g = (1.0 - alpha) * (std::pow(p, gamma + 1.0) -
                           gamma * q * std::pow(p, gamma) * std::log(q));
    }
    grad[i] = scale * g / n;
  }
}

double binary_cross_entropy(std::span<const double> probs,
                            std::span<const bool> targets) {
  if (probs.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = clamp_prob(probs[i]);
    sum += targets[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return sum / static_cast<double>(probs.size());
}

}  // namespace cxrlabel::labeler
