#pragma once

#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "saod/dataset.hpp"
#include "saod/error.hpp"
#include "saod/geometry.hpp"

namespace saod {

struct MergeConfig {
  double tau_m = 0.9;    // detections must score strictly above this
  double nms_iou = 0.5;  // class-aware NMS threshold
};

inline void validate_merge_config(const MergeConfig& c) {
  if (!(c.tau_m > 0.0 && c.tau_m < 1.0)) throw DomainError("tau_m must lie in (0, 1)");
  if (!(c.nms_iou > 0.0 && c.nms_iou <= 1.0)) throw DomainError("merge nms_iou must lie in (0, 1]");
}

enum class Provenance { gt, pseudo };

struct MergedEntry {
  Box box;
  CategoryId category_id = 0;
  Provenance provenance = Provenance::gt;
  double score = 1.0;
  std::optional<AnnotationId> annotation_id;  // set for gt entries
};

struct MergedGT {
  std::vector<MergedEntry> entries;  // gt entries in input order, then pseudo entries by descending score
};

/// Merged supervision for the augmented view: confident detections pooled
/// with the sparse annotations, then class-aware NMS. Annotations enter the
/// pool first with score 1.0 so ties favor them, and any annotation the NMS
/// drops (an overlapping same-class annotation) is reinstated afterwards.
inline MergedGT merge_ground_truth(std::span<const ScoredBox> detections, std::span<const Annotation> gt,
                                   const MergeConfig& cfg) {
  validate_merge_config(cfg);
  for (std::size_t i = 0; i < detections.size(); ++i)
    if (!detections[i].category) throw DomainError("detection " + std::to_string(i) + " has no category");

  std::vector<ScoredBox> pool;
  pool.reserve(gt.size() + detections.size());
  for (const auto& a : gt) pool.push_back(ScoredBox{a.bbox.corners(), 1.0, a.category_id});
  for (const auto& d : detections)
    if (d.score > cfg.tau_m) pool.push_back(d);

  MergedGT out;
  for (const auto& a : gt)
    out.entries.push_back(MergedEntry{a.bbox.corners(), a.category_id, Provenance::gt, 1.0, a.id});
  for (std::size_t k : nms(pool, cfg.nms_iou, NmsMode::class_aware)) {
    if (k < gt.size()) continue;
    out.entries.push_back(MergedEntry{pool[k].box, *pool[k].category, Provenance::pseudo, pool[k].score, std::nullopt});
  }
  return out;
}

}  // namespace saod
