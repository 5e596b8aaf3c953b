#pragma once

// Conflict-aware aggregation of per-criterion gradients. Each gradient is
// projected onto the normal plane of every other gradient it conflicts with
// (negative inner product), then the projected gradients are summed.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "freqsamp/error.hpp"

namespace freqsamp {

enum class ProjectionFormula {
  // g <- g - (g.h / |h|^2) h : removes the component along h.
  kNormalPlane,
  // g <- g - (g.g / |h|^2) h : does not leave g orthogonal to h. For
  // side-by-side comparison only.
  kPrintedNumerator,
};

struct SurgeryConfig {
  // Permutation of gradient indices used by both loops; empty = identity.
  std::vector<std::size_t> order;
  // When set, the order is shuffled with this seed (after applying `order`).
  std::optional<std::uint64_t> shuffle_seed;
  ProjectionFormula formula = ProjectionFormula::kNormalPlane;
};

/// Targets shorter than this are never projected against.
inline constexpr double kMinProjectionNorm = 1e-15;

/// Projects `g` off `target` when they conflict. Returns whether it did.
template <typename Scalar, int N>
bool project_if_conflicting(
    Eigen::Matrix<Scalar, N, 1>& g, const Eigen::Matrix<Scalar, N, 1>& target,
    ProjectionFormula formula = ProjectionFormula::kNormalPlane) {
  const Scalar target_sq = target.squaredNorm();
  if (!(target_sq >= Scalar(kMinProjectionNorm * kMinProjectionNorm))) {
    return false;
  }
  const Scalar dot = g.dot(target);
  if (!(dot < Scalar(0))) return false;
  const Scalar numerator =
      formula == ProjectionFormula::kNormalPlane ? dot : g.squaredNorm();
  g -= (numerator / target_sq) * target;
  return true;
}

namespace detail {

inline std::vector<std::size_t> surgery_order(std::size_t n,
                                              const SurgeryConfig& cfg) {
  std::vector<std::size_t> order = cfg.order;
  if (order.empty()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  std::vector<std::size_t> check = order;
  std::sort(check.begin(), check.end());
  for (std::size_t i = 0; i < check.size(); ++i) {
    if (check.size() != n || check[i] != i) {
      throw Error(ErrorKind::kInvalidArgument,
                  "surgery order must be a permutation of the gradient set");
    }
  }
  if (cfg.shuffle_seed) {
    std::mt19937_64 rng(*cfg.shuffle_seed);
    // Fisher-Yates with explicit draws so the result does not depend on the
    // standard library's shuffle.
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(order[i - 1], order[j]);
    }
  }
  return order;
}

}  // namespace detail

template <typename Scalar, int N>
Eigen::Matrix<Scalar, N, 1> surgery(
    std::span<const Eigen::Matrix<Scalar, N, 1>> grads,
    const SurgeryConfig& cfg = {}) {
  using Vector = Eigen::Matrix<Scalar, N, 1>;
  if (grads.empty()) {
    throw Error(ErrorKind::kEmptyGradientSet, "surgery needs at least one gradient");
  }
  const auto order = detail::surgery_order(grads.size(), cfg);
  Vector total = Vector::Zero(grads.front().size());
  for (std::size_t outer : order) {
    Vector projected = grads[outer];
    for (std::size_t inner : order) {
      if (inner == outer) continue;
      project_if_conflicting(projected, grads[inner], cfg.formula);
    }
    total += projected;
  }
  return total;
}

template <typename Scalar, int N>
Eigen::Matrix<Scalar, N, 1> surgery(
    const std::vector<Eigen::Matrix<Scalar, N, 1>>& grads,
    const SurgeryConfig& cfg = {}) {
  return surgery(std::span<const Eigen::Matrix<Scalar, N, 1>>(grads), cfg);
}

}  // namespace freqsamp
