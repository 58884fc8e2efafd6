#pragma once

#include <cstdint>
#include <span>
#include <sstream>
#include <vector>

#include "saod/dataset.hpp"
#include "saod/error.hpp"
#include "saod/geometry.hpp"

namespace saod {

// Proposal assignment thresholds. Defaults are the detector-standard values
// used for training: background IoU 0.2, foreground IoU 0.4, objectness 0.5,
// pseudo-positive objectness 0.8.
struct Thresholds {
  double tau_fg = 0.4;
  double tau_bg = 0.2;
  double tau_obj = 0.5;
  double tau_ppm = 0.8;
};

inline void validate_thresholds(const Thresholds& t) {
  auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!open_unit(t.tau_fg) || !open_unit(t.tau_bg) || !open_unit(t.tau_obj) || !open_unit(t.tau_ppm)) {
    std::ostringstream os;
    os << "thresholds must lie in (0, 1): fg=" << t.tau_fg << " bg=" << t.tau_bg << " obj=" << t.tau_obj
       << " ppm=" << t.tau_ppm;
    throw DomainError(os.str());
  }
  if (t.tau_bg > t.tau_fg) throw DomainError("tau_bg must not exceed tau_fg");
  if (t.tau_obj > t.tau_ppm) throw DomainError("tau_obj must not exceed tau_ppm");
}

struct ScoredProposal {
  Box box;
  double objectness = 0.0;
};

struct LabeledMatch {
  std::size_t proposal = 0;
  AnnotationId annotation_id = 0;
  friend bool operator==(const LabeledMatch&, const LabeledMatch&) = default;
};

// What happens to proposals whose best IoU falls in [tau_bg, tau_fg).
enum class GrayZonePolicy { background, ignore };

struct Partition {
  std::vector<LabeledMatch> labeled;
  std::vector<std::size_t> unlabeled;
  std::vector<std::size_t> background;
  std::vector<std::size_t> ignored;  // only filled under GrayZonePolicy::ignore
};

/// Three-way split of proposals into labeled, unlabeled and background.
///
/// With M the best IoU of a proposal against `gt` (0 when gt is empty):
///   labeled     objectness > tau_obj and M >= tau_fg, matched to the
///               best-IoU annotation (lowest id on ties)
///   unlabeled   ppm_active, objectness > tau_ppm and M < tau_bg
///   background  everything else
/// Index lists are ascending.
inline Partition assign_proposals(std::span<const ScoredProposal> proposals, std::span<const Annotation> gt,
                                  const Thresholds& t, bool ppm_active,
                                  GrayZonePolicy gray = GrayZonePolicy::background) {
  validate_thresholds(t);
  std::vector<Box> gt_boxes;
  gt_boxes.reserve(gt.size());
  for (const auto& a : gt) {
    gt_boxes.push_back(a.bbox.corners());
    detail::require_positive_area(gt_boxes.back());
  }

  Partition part;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const auto& p = proposals[i];
    detail::require_positive_area(p.box);
    if (!(p.objectness >= 0.0 && p.objectness <= 1.0))
      throw DomainError("objectness of proposal " + std::to_string(i) + " is outside [0, 1]");
    double best = 0.0;
    std::size_t best_gt = gt.size();
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double v = detail::iou_unchecked(p.box, gt_boxes[g]);
      if (best_gt == gt.size() || v > best || (v == best && gt[g].id < gt[best_gt].id)) {
        best = v;
        best_gt = g;
      }
    }

    if (p.objectness > t.tau_obj && best_gt < gt.size() && best >= t.tau_fg) {
      part.labeled.push_back(LabeledMatch{i, gt[best_gt].id});
    } else if (ppm_active && p.objectness > t.tau_ppm && best < t.tau_bg) {
      part.unlabeled.push_back(i);
    } else if (gray == GrayZonePolicy::ignore && best >= t.tau_bg && best < t.tau_fg) {
      part.ignored.push_back(i);
    } else {
      part.background.push_back(i);
    }
  }
  return part;
}

/// Class-agnostic NMS over the unlabeled proposals, ranked by objectness.
/// Returns surviving proposal indices in descending objectness order.
inline std::vector<std::size_t> dedupe_unlabeled_indices(std::span<const ScoredProposal> proposals,
                                                         const Partition& partition, double iou_thresh) {
  std::vector<ScoredBox> items;
  items.reserve(partition.unlabeled.size());
  for (std::size_t idx : partition.unlabeled) {
    if (idx >= proposals.size())
      throw DomainError("unlabeled index " + std::to_string(idx) + " out of range for " +
                        std::to_string(proposals.size()) + " proposals");
    items.push_back(ScoredBox{proposals[idx].box, proposals[idx].objectness, std::nullopt});
  }
  std::vector<std::size_t> out;
  for (std::size_t k : nms(items, iou_thresh, NmsMode::class_agnostic)) out.push_back(partition.unlabeled[k]);
  return out;
}

inline std::vector<Box> dedupe_unlabeled(std::span<const ScoredProposal> proposals, const Partition& partition,
                                         double iou_thresh) {
  std::vector<Box> out;
  for (std::size_t idx : dedupe_unlabeled_indices(proposals, partition, iou_thresh))
    out.push_back(proposals[idx].box);
  return out;
}

// Mining stays off for the first iterations while objectness is unreliable.
// Typical warmups are 9000 iterations for short schedules and 30000 for long.
struct PpmSchedule {
  std::uint64_t warmup_iterations = 0;
  std::uint64_t current_iteration = 0;
};

inline bool ppm_gate(const PpmSchedule& s) noexcept { return s.current_iteration >= s.warmup_iterations; }

}  // namespace saod
