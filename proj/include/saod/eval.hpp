#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "saod/assignment.hpp"
#include "saod/dataset.hpp"
#include "saod/error.hpp"
#include "saod/geometry.hpp"

namespace saod {

struct Detection {
  ImageId image_id = 0;
  CategoryId category_id = 0;
  Box box;
  double score = 0.0;
};

enum class Interpolation {
  coco101,  // recall grid 0, 0.01, ..., 1.00
  voc11,    // recall grid 0, 0.1, ..., 1.0
};

// 0.50, 0.55, ..., 0.95
inline std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

struct APReport {
  double ap_coco = 0.0;  // mean over thresholds and categories
  double ap50 = 0.0;
  std::vector<double> iou_thresholds;
  std::vector<double> ap_per_threshold;                  // category mean at each threshold
  std::map<CategoryId, std::vector<double>> per_category;  // AP at each threshold
  Interpolation interpolation = Interpolation::coco101;
};

namespace detail {

inline std::vector<double> recall_grid(Interpolation mode) {
  const int steps = mode == Interpolation::coco101 ? 100 : 10;
  std::vector<double> grid;
  for (int i = 0; i <= steps; ++i) grid.push_back(static_cast<double>(i) / steps);
  return grid;
}

// Interpolated AP from a ranked hit list: precision at recall r is the best
// precision at any rank whose recall reaches r.
inline double interpolated_ap(const std::vector<bool>& ranked_hits, std::size_t gt_count, Interpolation mode) {
  if (gt_count == 0) return 0.0;
  const std::size_t n = ranked_hits.size();
  std::vector<double> precision(n);
  std::vector<double> recall(n);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (ranked_hits[k]) ++tp;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(gt_count);
  }
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  const auto grid = recall_grid(mode);
  double sum = 0.0;
  for (double r : grid) {
    auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / static_cast<double>(grid.size());
}

struct CategoryBucket {
  std::map<ImageId, std::vector<Box>> gt;                    // annotation order
  std::map<ImageId, std::vector<std::size_t>> detections;    // indices into dets
  std::size_t gt_count = 0;
};

}  // namespace detail

/// COCO-style average precision.
///
/// Per image and category, detections (descending score, ties by input
/// order) claim the unmatched annotation of highest IoU at or above the
/// threshold. Hits are then ranked across images and turned into an
/// interpolated AP. Categories without annotations are left out of the mean.
inline APReport evaluate_ap(const Dataset& gt, std::span<const Detection> dets,
                            std::vector<double> iou_thresholds = coco_iou_thresholds(),
                            Interpolation mode = Interpolation::coco101) {
  std::set<ImageId> image_ids;
  for (const auto& img : gt.images) image_ids.insert(img.id);
  std::set<CategoryId> category_ids;
  for (const auto& c : gt.categories) category_ids.insert(c.id);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const auto& d = dets[i];
    if (!image_ids.contains(d.image_id))
      throw DomainError("detection " + std::to_string(i) + " references missing image " + std::to_string(d.image_id));
    if (!category_ids.contains(d.category_id))
      throw DomainError("detection " + std::to_string(i) + " references missing category " +
                        std::to_string(d.category_id));
    detail::require_positive_area(d.box);
    if (!(d.score >= 0.0 && d.score <= 1.0)) throw DomainError("detection " + std::to_string(i) + " score outside [0, 1]");
  }
  for (double t : iou_thresholds)
    if (!(t > 0.0 && t <= 1.0)) throw DomainError("IoU thresholds must lie in (0, 1]");

  std::map<CategoryId, detail::CategoryBucket> buckets;
  for (const auto& a : gt.annotations) {
    auto& b = buckets[a.category_id];
    b.gt[a.image_id].push_back(a.bbox.corners());
    ++b.gt_count;
  }
  for (std::size_t i = 0; i < dets.size(); ++i) buckets[dets[i].category_id].detections[dets[i].image_id].push_back(i);

  auto score_order = [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return a < b;
  };

  auto ap_at = [&](const detail::CategoryBucket& bucket, double thresh) {
    std::vector<std::pair<std::size_t, bool>> scored;  // (detection index, hit)
    for (const auto& [image_id, det_indices] : bucket.detections) {
      std::vector<std::size_t> order = det_indices;
      std::sort(order.begin(), order.end(), score_order);
      static const std::vector<Box> none;
      auto git = bucket.gt.find(image_id);
      const auto& boxes = git == bucket.gt.end() ? none : git->second;
      std::vector<bool> taken(boxes.size(), false);
      for (std::size_t di : order) {
        double best = thresh;
        std::optional<std::size_t> match;
        for (std::size_t g = 0; g < boxes.size(); ++g) {
          if (taken[g]) continue;
          const double v = detail::iou_unchecked(dets[di].box, boxes[g]);
          if (v >= best && (!match || v > best)) {
            best = v;
            match = g;
          }
        }
        if (match) taken[*match] = true;
        scored.emplace_back(di, match.has_value());
      }
    }
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) { return score_order(a.first, b.first); });
    std::vector<bool> hits;
    hits.reserve(scored.size());
    for (const auto& s : scored) hits.push_back(s.second);
    return detail::interpolated_ap(hits, bucket.gt_count, mode);
  };

  APReport report;
  report.iou_thresholds = iou_thresholds;
  report.interpolation = mode;
  report.ap_per_threshold.assign(iou_thresholds.size(), 0.0);
  std::size_t evaluated = 0;
  double ap50_sum = 0.0;
  for (const auto& [cat, bucket] : buckets) {
    if (bucket.gt_count == 0) continue;
    ++evaluated;
    auto& row = report.per_category[cat];
    for (std::size_t t = 0; t < iou_thresholds.size(); ++t) {
      row.push_back(ap_at(bucket, iou_thresholds[t]));
      report.ap_per_threshold[t] += row.back();
    }
    auto it50 = std::find_if(iou_thresholds.begin(), iou_thresholds.end(),
                             [](double t) { return std::abs(t - 0.5) < 1e-12; });
    ap50_sum += it50 != iou_thresholds.end() ? row[static_cast<std::size_t>(it50 - iou_thresholds.begin())]
                                             : ap_at(bucket, 0.5);
  }
  if (evaluated > 0) {
    for (double& v : report.ap_per_threshold) v /= static_cast<double>(evaluated);
    report.ap50 = ap50_sum / static_cast<double>(evaluated);
    if (!report.ap_per_threshold.empty())
      report.ap_coco = std::accumulate(report.ap_per_threshold.begin(), report.ap_per_threshold.end(), 0.0) /
                       static_cast<double>(report.ap_per_threshold.size());
  }
  return report;
}

/// Fraction of annotations hit at IoU >= iou_thresh by at least one proposal
/// of the same image; with top_k only the k highest-objectness proposals
/// count (ties by position). An annotation-free dataset scores 1.
inline double proposal_recall(const Dataset& gt, const std::map<ImageId, std::vector<ScoredProposal>>& proposals,
                              double iou_thresh, std::optional<std::size_t> top_k = std::nullopt) {
  if (!(iou_thresh > 0.0 && iou_thresh <= 1.0)) throw DomainError("recall IoU threshold must lie in (0, 1]");
  std::set<ImageId> image_ids;
  for (const auto& img : gt.images) image_ids.insert(img.id);
  for (const auto& [id, list] : proposals)
    if (!image_ids.contains(id)) throw DomainError("proposals reference missing image " + std::to_string(id));
  if (gt.annotations.empty()) return 1.0;

  std::map<ImageId, std::vector<Box>> selected;
  for (const auto& [id, list] : proposals) {
    std::vector<std::size_t> order(list.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return list[a].objectness > list[b].objectness; });
    if (top_k && order.size() > *top_k) order.resize(*top_k);
    auto& boxes = selected[id];
    for (std::size_t i : order) {
      detail::require_positive_area(list[i].box);
      boxes.push_back(list[i].box);
    }
  }
  std::size_t covered = 0;
  for (const auto& a : gt.annotations) {
    auto it = selected.find(a.image_id);
    if (it == selected.end()) continue;
    const Box g = a.bbox.corners();
    if (std::any_of(it->second.begin(), it->second.end(),
                    [&](const Box& p) { return detail::iou_unchecked(p, g) >= iou_thresh; }))
      ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(gt.annotations.size());
}

// ---------------------------------------------------------------------------
// Results files and reports

inline std::vector<Detection> detections_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("results file must hold an array", 0);
  std::vector<Detection> out;
  try {
    for (const auto& jd : j) {
      const auto b = jd.at("bbox").get<std::array<double, 4>>();
      out.push_back(Detection{jd.at("image_id").get<ImageId>(), jd.at("category_id").get<CategoryId>(),
                              Box::from_xywh(b[0], b[1], b[2], b[3]), jd.at("score").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed detection record: ") + e.what(), 0);
  }
  return out;
}

inline std::vector<Detection> parse_detections(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  return detections_from_json(j);
}

inline nlohmann::json detections_to_json(std::span<const Detection> dets) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : dets)
    out.push_back({{"image_id", d.image_id},
                   {"category_id", d.category_id},
                   {"bbox", {d.box.x1, d.box.y1, d.box.width(), d.box.height()}},
                   {"score", d.score}});
  return out;
}

inline nlohmann::json ap_report_to_json(const APReport& r) {
  nlohmann::json per_cat = nlohmann::json::object();
  for (const auto& [cat, values] : r.per_category) per_cat[std::to_string(cat)] = values;
  return {{"ap_coco", r.ap_coco},
          {"ap50", r.ap50},
          {"iou_thresholds", r.iou_thresholds},
          {"ap_per_threshold", r.ap_per_threshold},
          {"per_category", per_cat},
          {"interpolation", r.interpolation == Interpolation::coco101 ? "coco101" : "voc11"}};
}

inline std::string format_ap_report(const APReport& r) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "AP[0.50:0.95] " << r.ap_coco << "\nAP50          " << r.ap50 << "\n";
  for (std::size_t t = 0; t < r.iou_thresholds.size(); ++t)
    os << "  AP@" << r.iou_thresholds[t] << "  " << r.ap_per_threshold[t] << "\n";
  os << "categories evaluated: " << r.per_category.size() << "\n";
  return os.str();
}

}  // namespace saod
