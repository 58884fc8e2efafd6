#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "saod/error.hpp"

namespace saod {

using CategoryId = std::int64_t;

// Axis-aligned box in corner form, continuous pixel coordinates.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  static Box from_xywh(double x, double y, double w, double h) noexcept {
    return Box{x, y, x + w, y + h};
  }

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }
  bool has_positive_area() const noexcept {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
           std::isfinite(y2) && x2 > x1 && y2 > y1;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

struct ScoredBox {
  Box box;
  double score = 0.0;
  std::optional<CategoryId> category;
};

enum class NmsMode { class_agnostic, class_aware };

namespace detail {

inline void require_positive_area(const Box& b) {
  if (!b.has_positive_area()) {
    std::ostringstream os;
    os << "box (" << b.x1 << ", " << b.y1 << ", " << b.x2 << ", " << b.y2
       << ") does not have positive area";
    throw DomainError(os.str());
  }
}

inline double iou_unchecked(const Box& a, const Box& b) noexcept {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace detail

/// Intersection over union with continuous areas (no +1 pixel convention).
/// Throws DomainError when either box has zero or negative area.
inline double iou(const Box& a, const Box& b) {
  detail::require_positive_area(a);
  detail::require_positive_area(b);
  return detail::iou_unchecked(a, b);
}

struct IouMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major

  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

inline IouMatrix pairwise_iou(std::span<const Box> a, std::span<const Box> b) {
  for (const auto& box : a) detail::require_positive_area(box);
  for (const auto& box : b) detail::require_positive_area(box);
  IouMatrix m{a.size(), b.size(), std::vector<double>(a.size() * b.size())};
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      m.values[i * b.size() + j] = detail::iou_unchecked(a[i], b[j]);
  return m;
}

/// Greedy non-maximum suppression.
///
/// Items are visited by descending score, ties by ascending input index. An
/// item is suppressed when its IoU with an already kept item is strictly
/// greater than `iou_thresh`; in class-aware mode only items of the same
/// category compete. Returns kept indices in visiting order.
inline std::vector<std::size_t> nms(std::span<const ScoredBox> items, double iou_thresh,
                                    NmsMode mode = NmsMode::class_agnostic) {
  if (!(iou_thresh > 0.0 && iou_thresh <= 1.0))
    throw DomainError("nms threshold must lie in (0, 1]");
  for (std::size_t i = 0; i < items.size(); ++i) {
    detail::require_positive_area(items[i].box);
    if (!(items[i].score >= 0.0 && items[i].score <= 1.0))
      throw DomainError("nms score outside [0, 1] at index " + std::to_string(i));
    if (mode == NmsMode::class_aware && !items[i].category)
      throw DomainError("class-aware nms: item " + std::to_string(i) + " has no category");
  }

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return items[a].score > items[b].score;
  });

  std::vector<std::size_t> kept;
  std::vector<bool> suppressed(items.size(), false);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const std::size_t i = order[rank];
    if (suppressed[i]) continue;
    kept.push_back(i);
    for (std::size_t later = rank + 1; later < order.size(); ++later) {
      const std::size_t j = order[later];
      if (suppressed[j]) continue;
      if (mode == NmsMode::class_aware && *items[i].category != *items[j].category) continue;
      if (detail::iou_unchecked(items[i].box, items[j].box) > iou_thresh) suppressed[j] = true;
    }
  }
  return kept;
}

}  // namespace saod
