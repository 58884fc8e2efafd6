#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "saod/error.hpp"

namespace saod {

struct LossWeights {
  double lambda_reg = 1.0;  // regression weight inside each supervised term
  double det_weight = 0.5;  // shared weight of the two detection-head terms
};

struct LossWithGrad {
  double value = 0.0;
  std::vector<double> grad;
};

namespace detail {

inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw DomainError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
}

}  // namespace detail

inline constexpr double kProbabilityClamp = 1e-7;

/// Mean binary cross-entropy over probabilities. Predictions are clamped to
/// [1e-7, 1 - 1e-7]; clamped entries get zero gradient.
inline LossWithGrad bce_loss(std::span<const double> pred, std::span<const double> target) {
  detail::require_same_length(pred.size(), target.size(), "bce_loss");
  LossWithGrad out{0.0, std::vector<double>(pred.size(), 0.0)};
  if (pred.empty()) return out;
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double t = target[i];
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("bce_loss: target outside [0, 1]");
    const double p = std::clamp(pred[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    out.value -= t * std::log(p) + (1.0 - t) * std::log1p(-p);
    if (p == pred[i]) out.grad[i] = (-t / p + (1.0 - t) / (1.0 - p)) / n;
  }
  out.value /= n;
  return out;
}

/// Softmax cross-entropy with max-shift stabilization; gradient w.r.t. the
/// unnormalized scores is softmax - onehot.
inline LossWithGrad ce_loss(std::span<const double> scores, std::size_t target_class) {
  if (target_class >= scores.size())
    throw DomainError("ce_loss: target class " + std::to_string(target_class) + " out of range for " +
                      std::to_string(scores.size()) + " scores");
  for (double s : scores)
    if (!std::isfinite(s)) throw DomainError("ce_loss: non-finite score");
  const double shift = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - shift);
  const double log_sum = std::log(sum);
  LossWithGrad out{log_sum - (scores[target_class] - shift), std::vector<double>(scores.size())};
  for (std::size_t i = 0; i < scores.size(); ++i) out.grad[i] = std::exp(scores[i] - shift - log_sum);
  out.grad[target_class] -= 1.0;
  return out;
}

// Elementwise smooth L1, mean over elements:
//   0.5 d^2 / beta  if |d| < beta,  |d| - 0.5 beta  otherwise.
inline LossWithGrad smooth_l1(std::span<const double> pred, std::span<const double> target, double beta = 1.0) {
  detail::require_same_length(pred.size(), target.size(), "smooth_l1");
  if (!(beta > 0.0)) throw DomainError("smooth_l1: beta must be positive");
  LossWithGrad out{0.0, std::vector<double>(pred.size(), 0.0)};
  if (pred.empty()) return out;
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    const double ad = std::abs(d);
    if (ad < beta) {
      out.value += 0.5 * d * d / beta;
      out.grad[i] = d / beta / n;
    } else {
      out.value += ad - 0.5 * beta;
      out.grad[i] = (d > 0.0 ? 1.0 : -1.0) / n;
    }
  }
  out.value /= n;
  return out;
}

struct FeaturePair {
  std::vector<double> augmented;  // detection-head features of the augmented view
  std::vector<double> original;   // detection-head features of the original view
};

struct ConsistencyLoss {
  double value = 0.0;
  std::vector<double> grad_augmented;
  std::vector<double> grad_original;
};

// Squared Euclidean distance between the two views' features.
inline ConsistencyLoss ssl_consistency(const FeaturePair& pair) {
  detail::require_same_length(pair.augmented.size(), pair.original.size(), "ssl_consistency");
  ConsistencyLoss out;
  out.grad_augmented.resize(pair.augmented.size());
  out.grad_original.resize(pair.original.size());
  for (std::size_t i = 0; i < pair.augmented.size(); ++i) {
    const double d = pair.augmented[i] - pair.original[i];
    if (!std::isfinite(d)) throw DomainError("ssl_consistency: non-finite feature");
    out.value += d * d;
    out.grad_augmented[i] = 2.0 * d;
    out.grad_original[i] = -2.0 * d;
  }
  return out;
}

// classification + lambda * regression, the shape of every supervised term
// (proposal stage, original-view head, augmented-view head).
inline double supervised_loss(double classification, double regression, const LossWeights& w) {
  return classification + w.lambda_reg * regression;
}

inline double total_loss(double det_original, double det_augmented, double rpn, double ssl, const LossWeights& w) {
  for (double v : {det_original, det_augmented, rpn, ssl, w.det_weight, w.lambda_reg})
    if (!std::isfinite(v)) throw DomainError("total_loss: non-finite input");
  if (!(w.lambda_reg > 0.0)) throw DomainError("lambda_reg must be positive");
  return w.det_weight * (det_original + det_augmented) + rpn + ssl;
}

// ---------------------------------------------------------------------------
// Gradient verification

using LossFunction = std::function<LossWithGrad(std::span<const double>)>;
// True for coordinates where the loss is not differentiable within +-epsilon.
using KinkPredicate = std::function<bool(std::size_t, std::span<const double>, double)>;

struct FiniteDiffResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::vector<std::size_t> skipped;
};

inline constexpr double kGradientErrorFloor = 1e-4;

/// Central-difference check of an analytic gradient. The per-coordinate error
/// is |analytic - numeric| / max(|analytic|, |numeric|, 1e-4); the floor keeps
/// round-off on vanishing components from reading as large relative error.
inline FiniteDiffResult finite_diff_check(const LossFunction& loss, std::span<const double> point, double epsilon,
                                          const KinkPredicate& is_kink = {}) {
  if (!(epsilon > 0.0)) throw DomainError("finite_diff_check: epsilon must be positive");
  const LossWithGrad base = loss(point);
  detail::require_same_length(base.grad.size(), point.size(), "finite_diff_check");
  FiniteDiffResult r;
  std::vector<double> probe(point.begin(), point.end());
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (is_kink && is_kink(i, point, epsilon)) {
      r.skipped.push_back(i);
      continue;
    }
    probe[i] = point[i] + epsilon;
    const double up = loss(probe).value;
    probe[i] = point[i] - epsilon;
    const double down = loss(probe).value;
    probe[i] = point[i];
    const double numeric = (up - down) / (2.0 * epsilon);
    const double analytic = base.grad[i];
    const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradientErrorFloor});
    r.max_rel_error = std::max(r.max_rel_error, std::abs(analytic - numeric) / scale);
    ++r.checked;
  }
  return r;
}

// Kinks of smooth_l1 w.r.t. its prediction: |pred - target| == beta.
inline KinkPredicate smooth_l1_kinks(std::vector<double> target, double beta) {
  return [target = std::move(target), beta](std::size_t i, std::span<const double> point, double eps) {
    return std::abs(std::abs(point[i] - target[i]) - beta) <= eps;
  };
}

}  // namespace saod
