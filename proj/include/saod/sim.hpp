#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "saod/assignment.hpp"
#include "saod/augment.hpp"
#include "saod/dataset.hpp"
#include "saod/error.hpp"
#include "saod/geometry.hpp"
#include "saod/merge.hpp"
#include "saod/parallel.hpp"
#include "saod/random.hpp"
#include "saod/split.hpp"

namespace saod {

// ---------------------------------------------------------------------------
// Synthetic scenes

struct SceneSpec {
  std::size_t image_count = 10;
  std::int64_t width = 256;
  std::int64_t height = 256;
  std::size_t categories = 3;
  std::size_t objects_min = 1;
  std::size_t objects_max = 5;
  std::int64_t size_min = 16;
  std::int64_t size_max = 64;
  double max_overlap = 0.1;  // IoU cap between placed objects
  std::uint64_t seed = 0;
};

inline void validate_scene_spec(const SceneSpec& s) {
  if (s.width <= 0 || s.height <= 0) throw DomainError("scene dimensions must be positive");
  if (s.categories == 0) throw DomainError("scene needs at least one category");
  if (s.objects_min > s.objects_max) throw DomainError("objects_min exceeds objects_max");
  if (s.size_min < 1 || s.size_min > s.size_max) throw DomainError("object size range is invalid");
  if (s.size_max > std::min(s.width, s.height)) throw DomainError("object size exceeds the image");
  if (!(s.max_overlap >= 0.0 && s.max_overlap < 1.0)) throw DomainError("max_overlap must lie in [0, 1)");
}

struct SceneSet {
  Dataset dataset;
  std::vector<Raster> images;  // empty unless rendered
};

inline std::array<std::uint8_t, 3> category_color(CategoryId id) {
  const std::uint64_t h = splitmix64(static_cast<std::uint64_t>(id));
  return {static_cast<std::uint8_t>(128 + (h & 0x7f)), static_cast<std::uint8_t>(128 + ((h >> 8) & 0x7f)),
          static_cast<std::uint8_t>(128 + ((h >> 16) & 0x7f))};
}

namespace detail {

struct PlacedObject {
  CategoryId category;
  Box box;
};

inline std::vector<PlacedObject> place_objects(const SceneSpec& s, std::size_t index) {
  RandomStream rng(s.seed, "scene", index);
  const auto n = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(s.objects_min), static_cast<std::int64_t>(s.objects_max)));
  std::vector<PlacedObject> placed;
  constexpr int kMaxAttempts = 1000;
  for (std::size_t k = 0; k < n; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
      const auto cat = static_cast<CategoryId>(rng.uniform_int(1, static_cast<std::int64_t>(s.categories)));
      const auto w = rng.uniform_int(s.size_min, s.size_max);
      const auto h = rng.uniform_int(s.size_min, s.size_max);
      const auto x = rng.uniform_int(0, s.width - w);
      const auto y = rng.uniform_int(0, s.height - h);
      const Box b = Box::from_xywh(static_cast<double>(x), static_cast<double>(y), static_cast<double>(w),
                                   static_cast<double>(h));
      ok = std::all_of(placed.begin(), placed.end(),
                       [&](const PlacedObject& o) { return iou_unchecked(o.box, b) <= s.max_overlap; });
      if (ok) placed.push_back(PlacedObject{cat, b});
    }
    if (!ok)
      throw DomainError("scene " + std::to_string(index) + ": could not place object " + std::to_string(k) +
                        " within the overlap cap");
  }
  return placed;
}

inline Raster render_scene(const SceneSpec& s, std::size_t index, const std::vector<PlacedObject>& objects) {
  Raster r(s.width, s.height);
  RandomStream bg(s.seed, "scene-background", index);
  for (auto& v : r.pixels) v = static_cast<std::uint8_t>(bg.uniform_int(0, 63));
  for (const auto& o : objects) {
    const auto color = category_color(o.category);
    const auto px = pixel_region(o.box);
    for (std::int64_t y = px.y; y < px.y + px.h; ++y)
      for (std::int64_t x = px.x; x < px.x + px.w; ++x)
        for (int c = 0; c < 3; ++c) r.at(x, y, c) = color[static_cast<std::size_t>(c)];
  }
  return r;
}

}  // namespace detail

/// Exhaustively annotated synthetic scenes: solid rectangles per category on
/// a noise background. Image i gets id i + 1; annotation ids run from 1 in
/// image order. Scene i depends only on (seed, i).
inline SceneSet generate_scene_set(const SceneSpec& s, bool render = true, std::size_t workers = 1) {
  validate_scene_spec(s);
  std::vector<std::vector<detail::PlacedObject>> objects(s.image_count);
  SceneSet out;
  if (render) out.images.resize(s.image_count);
  parallel_for(s.image_count, workers, [&](std::size_t i) {
    objects[i] = detail::place_objects(s, i);
    if (render) out.images[i] = detail::render_scene(s, i, objects[i]);
  });

  for (std::size_t c = 1; c <= s.categories; ++c)
    out.dataset.categories.push_back(Category{static_cast<CategoryId>(c), "class_" + std::to_string(c)});
  AnnotationId next_id = 1;
  for (std::size_t i = 0; i < s.image_count; ++i) {
    const auto image_id = static_cast<ImageId>(i + 1);
    out.dataset.images.push_back(Image{image_id, s.width, s.height, ""});
    for (const auto& o : objects[i])
      out.dataset.annotations.push_back(
          Annotation{next_id++, image_id, o.category, BoxXywh{o.box.x1, o.box.y1, o.box.width(), o.box.height()}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulated proposal generator / detector

struct DetectorNoise {
  double localization_sigma = 0.0;  // pixels, per box coordinate
  double fg_objectness_mean = 0.95;
  double bg_objectness_mean = 0.05;
  double objectness_sigma = 0.0;
  double false_positive_rate = 0.0;  // expected spurious proposals per image
  double dropout_rate = 0.0;         // probability an object yields no proposal
  std::uint64_t seed = 0;
};

inline void validate_detector_noise(const DetectorNoise& n) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(n.fg_objectness_mean) || !unit(n.bg_objectness_mean))
    throw DomainError("objectness means must lie in [0, 1]");
  if (!(n.localization_sigma >= 0.0) || !(n.objectness_sigma >= 0.0)) throw DomainError("sigmas must be non-negative");
  if (!(n.false_positive_rate >= 0.0)) throw DomainError("false positive rate must be non-negative");
  if (!unit(n.dropout_rate)) throw DomainError("dropout rate must lie in [0, 1]");
}

struct DetectorOutput {
  std::map<ImageId, std::vector<ScoredProposal>> proposals;
  // Source annotation of each proposal; nullopt marks a spurious proposal.
  std::map<ImageId, std::vector<std::optional<AnnotationId>>> origins;
  std::map<ImageId, std::vector<ScoredBox>> detections;
};

namespace detail {

inline Box clamp_to_image(Box b, double w, double h) {
  b.x1 = std::clamp(b.x1, 0.0, w);
  b.x2 = std::clamp(b.x2, 0.0, w);
  b.y1 = std::clamp(b.y1, 0.0, h);
  b.y2 = std::clamp(b.y2, 0.0, h);
  if (b.x2 < b.x1) std::swap(b.x1, b.x2);
  if (b.y2 < b.y1) std::swap(b.y1, b.y2);
  // keep at least one pixel of extent
  if (b.x2 - b.x1 < 1.0) {
    b.x1 = std::clamp(b.x1, 0.0, w - 1.0);
    b.x2 = b.x1 + 1.0;
  }
  if (b.y2 - b.y1 < 1.0) {
    b.y1 = std::clamp(b.y1, 0.0, h - 1.0);
    b.y2 = b.y1 + 1.0;
  }
  return b;
}

}  // namespace detail

/// Noisy proposals for every image of an exhaustively annotated dataset.
/// Each annotation draws from its own stream (dropout first, then jitter and
/// objectness), so raising dropout_rate only removes proposals and never
/// perturbs the surviving ones. Spurious proposals come from a per-image
/// stream. Detections mirror the object proposals with the true category.
inline DetectorOutput simulate_detector(const Dataset& full_gt, const DetectorNoise& noise, std::size_t workers = 1) {
  validate_detector_noise(noise);
  const auto by_image = full_gt.annotations_by_image();
  struct PerImage {
    std::vector<ScoredProposal> proposals;
    std::vector<std::optional<AnnotationId>> origins;
    std::vector<ScoredBox> detections;
  };
  std::vector<PerImage> results(full_gt.images.size());
  parallel_for(full_gt.images.size(), workers, [&](std::size_t i) {
    const Image& img = full_gt.images[i];
    const double W = static_cast<double>(img.width);
    const double H = static_cast<double>(img.height);
    auto& out = results[i];
    auto it = by_image.find(img.id);
    if (it != by_image.end()) {
      for (std::size_t idx : it->second) {
        const Annotation& a = full_gt.annotations[idx];
        RandomStream rng(noise.seed, "detector-object", static_cast<std::uint64_t>(a.id));
        const bool dropped = rng.uniform() < noise.dropout_rate;
        const Box truth = a.bbox.corners();
        Box b{rng.normal(truth.x1, noise.localization_sigma), rng.normal(truth.y1, noise.localization_sigma),
              rng.normal(truth.x2, noise.localization_sigma), rng.normal(truth.y2, noise.localization_sigma)};
        const double objectness = std::clamp(rng.normal(noise.fg_objectness_mean, noise.objectness_sigma), 0.0, 1.0);
        if (dropped) continue;
        if (noise.localization_sigma > 0.0) b = detail::clamp_to_image(b, W, H);
        out.proposals.push_back(ScoredProposal{b, objectness});
        out.origins.push_back(a.id);
        out.detections.push_back(ScoredBox{b, objectness, a.category_id});
      }
    }
    RandomStream rng(noise.seed, "detector-spurious", static_cast<std::uint64_t>(img.id));
    const auto count = rng.poisson(noise.false_positive_rate);
    for (std::int64_t k = 0; k < count; ++k) {
      const double w = std::max(1.0, rng.uniform(0.05, 0.5) * W);
      const double h = std::max(1.0, rng.uniform(0.05, 0.5) * H);
      const double x = rng.uniform(0.0, std::max(0.0, W - w));
      const double y = rng.uniform(0.0, std::max(0.0, H - h));
      const double objectness = std::clamp(rng.normal(noise.bg_objectness_mean, noise.objectness_sigma), 0.0, 1.0);
      out.proposals.push_back(ScoredProposal{Box{x, y, std::min(W, x + w), std::min(H, y + h)}, objectness});
      out.origins.push_back(std::nullopt);
    }
  });

  DetectorOutput out;
  for (std::size_t i = 0; i < full_gt.images.size(); ++i) {
    const ImageId id = full_gt.images[i].id;
    out.proposals[id] = std::move(results[i].proposals);
    out.origins[id] = std::move(results[i].origins);
    out.detections[id] = std::move(results[i].detections);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Recovery experiment

struct ExperimentOptions {
  double unlabeled_nms_iou = 0.5;  // class-agnostic NMS over mined regions
  double match_iou = 0.5;          // a mined box recovers an annotation at this IoU
  std::size_t workers = 1;
};

struct CategoryRecovery {
  std::size_t removed = 0;
  std::size_t recovered = 0;         // by a mined region
  std::size_t pseudo_recovered = 0;  // by a same-class pseudo label
};

// Ratios with an empty denominator read 1.0; the matching *_total count is
// zero in that case.
struct RecoveryReport {
  std::size_t mined_total = 0;
  std::size_t mined_matched = 0;
  double mined_precision = 1.0;
  std::size_t removed_total = 0;
  std::size_t removed_recovered = 0;
  double mined_recall = 1.0;
  std::size_t pseudo_total = 0;
  std::size_t pseudo_correct = 0;
  double pseudo_precision = 1.0;
  std::size_t pseudo_recovered = 0;
  double pseudo_recall = 1.0;
  std::size_t labeled_proposals = 0;
  std::size_t unlabeled_proposals = 0;  // before NMS
  std::size_t background_proposals = 0;
  std::map<CategoryId, CategoryRecovery> per_category;
  nlohmann::json config;
};

struct ImageOutcome {
  ImageId image_id = 0;
  std::vector<std::size_t> unlabeled;  // proposal indices before NMS, ascending
  std::vector<std::size_t> mined;      // after NMS, descending objectness
  std::vector<Box> kept_gt;
  std::vector<Box> removed_gt;
};

struct PreparedExperiment {
  Dataset full;
  SplitResult split;
  DetectorOutput detector;
};

struct ExperimentResult {
  RecoveryReport report;
  std::vector<ImageOutcome> images;
};

inline nlohmann::json experiment_config_json(const SceneSpec& scene, const SplitSpec& split,
                                             const DetectorNoise& noise, const Thresholds& t,
                                             const MergeConfig& merge, const ExperimentOptions& opt) {
  return {{"scene",
           {{"image_count", scene.image_count}, {"width", scene.width}, {"height", scene.height},
            {"categories", scene.categories}, {"objects_min", scene.objects_min}, {"objects_max", scene.objects_max},
            {"size_min", scene.size_min}, {"size_max", scene.size_max}, {"max_overlap", scene.max_overlap},
            {"seed", scene.seed}}},
          {"split",
           {{"kind", to_string(split.kind)}, {"p", split.p},
            {"level", split.level ? nlohmann::json(to_string(*split.level)) : nlohmann::json(nullptr)},
            {"seed", split.seed}}},
          {"noise",
           {{"localization_sigma", noise.localization_sigma}, {"fg_objectness_mean", noise.fg_objectness_mean},
            {"bg_objectness_mean", noise.bg_objectness_mean}, {"objectness_sigma", noise.objectness_sigma},
            {"false_positive_rate", noise.false_positive_rate}, {"dropout_rate", noise.dropout_rate},
            {"seed", noise.seed}}},
          {"thresholds", {{"tau_fg", t.tau_fg}, {"tau_bg", t.tau_bg}, {"tau_obj", t.tau_obj}, {"tau_ppm", t.tau_ppm}}},
          {"merge", {{"tau_m", merge.tau_m}, {"nms_iou", merge.nms_iou}}},
          {"unlabeled_nms_iou", opt.unlabeled_nms_iou},
          {"match_iou", opt.match_iou}};
}

inline PreparedExperiment prepare_experiment(Dataset full, const SplitSpec& split, const DetectorNoise& noise,
                                             std::size_t workers = 1) {
  PreparedExperiment p;
  p.split = generate_split(full, split, workers);
  p.detector = simulate_detector(full, noise, workers);
  p.full = std::move(full);
  return p;
}

/// PPM on prepared inputs: partition each image's proposals against the
/// sparse annotations, dedupe the unlabeled regions, and score the survivors
/// against the annotations the split removed. Pseudo labels from the merged
/// ground truth are scored the same way, per class.
inline ExperimentResult evaluate_mining(const PreparedExperiment& prep, const Thresholds& t, const MergeConfig& merge,
                                        const ExperimentOptions& opt = {}) {
  validate_thresholds(t);
  validate_merge_config(merge);
  const auto full_by_image = prep.full.annotations_by_image();
  const auto& removed_ids = prep.split.manifest.removed_annotation_ids;

  struct Tally {
    ImageOutcome outcome;
    std::size_t mined_matched = 0, removed = 0, recovered = 0, pseudo = 0, pseudo_correct = 0, pseudo_recovered = 0;
    std::size_t labeled = 0, background = 0;
    std::map<CategoryId, CategoryRecovery> per_category;
  };
  std::vector<Tally> tallies(prep.full.images.size());

  parallel_for(prep.full.images.size(), opt.workers, [&](std::size_t i) {
    const ImageId id = prep.full.images[i].id;
    Tally& tally = tallies[i];
    tally.outcome.image_id = id;
    std::vector<Annotation> kept;
    std::vector<Annotation> removed;
    if (auto it = full_by_image.find(id); it != full_by_image.end()) {
      for (std::size_t idx : it->second) {
        const Annotation& a = prep.full.annotations[idx];
        (removed_ids.contains(a.id) ? removed : kept).push_back(a);
      }
    }
    static const std::vector<ScoredProposal> no_proposals;
    static const std::vector<ScoredBox> no_detections;
    auto pit = prep.detector.proposals.find(id);
    const auto& proposals = pit == prep.detector.proposals.end() ? no_proposals : pit->second;
    auto dit = prep.detector.detections.find(id);
    const auto& detections = dit == prep.detector.detections.end() ? no_detections : dit->second;

    const Partition part = assign_proposals(proposals, kept, t, true);
    tally.labeled = part.labeled.size();
    tally.background = part.background.size();
    tally.outcome.unlabeled = part.unlabeled;
    tally.outcome.mined = dedupe_unlabeled_indices(proposals, part, opt.unlabeled_nms_iou);
    for (const auto& a : kept) tally.outcome.kept_gt.push_back(a.bbox.corners());
    for (const auto& a : removed) tally.outcome.removed_gt.push_back(a.bbox.corners());

    std::vector<bool> covered(removed.size(), false);
    for (std::size_t m : tally.outcome.mined) {
      bool matched = false;
      for (std::size_t r = 0; r < removed.size(); ++r) {
        if (detail::iou_unchecked(proposals[m].box, tally.outcome.removed_gt[r]) >= opt.match_iou) {
          matched = true;
          covered[r] = true;
        }
      }
      if (matched) ++tally.mined_matched;
    }

    const MergedGT merged = merge_ground_truth(detections, kept, merge);
    std::vector<bool> pseudo_covered(removed.size(), false);
    for (const auto& e : merged.entries) {
      if (e.provenance != Provenance::pseudo) continue;
      ++tally.pseudo;
      bool correct = false;
      for (std::size_t r = 0; r < removed.size(); ++r) {
        if (removed[r].category_id == e.category_id &&
            detail::iou_unchecked(e.box, tally.outcome.removed_gt[r]) >= opt.match_iou) {
          correct = true;
          pseudo_covered[r] = true;
        }
      }
      if (correct) ++tally.pseudo_correct;
    }

    tally.removed = removed.size();
    for (std::size_t r = 0; r < removed.size(); ++r) {
      auto& pc = tally.per_category[removed[r].category_id];
      ++pc.removed;
      if (covered[r]) {
        ++pc.recovered;
        ++tally.recovered;
      }
      if (pseudo_covered[r]) {
        ++pc.pseudo_recovered;
        ++tally.pseudo_recovered;
      }
    }
  });

  ExperimentResult result;
  RecoveryReport& rep = result.report;
  for (const auto& c : prep.full.categories) rep.per_category[c.id];
  for (auto& tally : tallies) {
    rep.mined_total += tally.outcome.mined.size();
    rep.mined_matched += tally.mined_matched;
    rep.removed_total += tally.removed;
    rep.removed_recovered += tally.recovered;
    rep.pseudo_total += tally.pseudo;
    rep.pseudo_correct += tally.pseudo_correct;
    rep.pseudo_recovered += tally.pseudo_recovered;
    rep.labeled_proposals += tally.labeled;
    rep.unlabeled_proposals += tally.outcome.unlabeled.size();
    rep.background_proposals += tally.background;
    for (const auto& [cat, pc] : tally.per_category) {
      auto& dst = rep.per_category[cat];
      dst.removed += pc.removed;
      dst.recovered += pc.recovered;
      dst.pseudo_recovered += pc.pseudo_recovered;
    }
    result.images.push_back(std::move(tally.outcome));
  }
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  rep.mined_precision = ratio(rep.mined_matched, rep.mined_total);
  rep.mined_recall = ratio(rep.removed_recovered, rep.removed_total);
  rep.pseudo_precision = ratio(rep.pseudo_correct, rep.pseudo_total);
  rep.pseudo_recall = ratio(rep.pseudo_recovered, rep.removed_total);
  return result;
}

inline ExperimentResult run_ppm_pipeline(const SceneSpec& scene, const SplitSpec& split, const DetectorNoise& noise,
                                         const Thresholds& t, const MergeConfig& merge,
                                         const ExperimentOptions& opt = {}) {
  validate_thresholds(t);
  validate_merge_config(merge);
  auto scenes = generate_scene_set(scene, false, opt.workers);
  const auto prep = prepare_experiment(std::move(scenes.dataset), split, noise, opt.workers);
  auto result = evaluate_mining(prep, t, merge, opt);
  result.report.config = experiment_config_json(scene, split, noise, t, merge, opt);
  return result;
}

inline RecoveryReport run_ppm_experiment(const SceneSpec& scene, const SplitSpec& split, const DetectorNoise& noise,
                                         const Thresholds& t, const MergeConfig& merge,
                                         const ExperimentOptions& opt = {}) {
  return run_ppm_pipeline(scene, split, noise, t, merge, opt).report;
}

struct SweepRow {
  double tau_ppm = 0.0;
  ExperimentResult result;
};

// One prepared experiment, re-mined at each tau_ppm. Values below tau_obj
// are rejected by threshold validation.
inline std::vector<SweepRow> sweep_tau_ppm(const SceneSpec& scene, const SplitSpec& split, const DetectorNoise& noise,
                                           Thresholds t, const MergeConfig& merge, const std::vector<double>& grid,
                                           const ExperimentOptions& opt = {}) {
  auto scenes = generate_scene_set(scene, false, opt.workers);
  const auto prep = prepare_experiment(std::move(scenes.dataset), split, noise, opt.workers);
  std::vector<SweepRow> rows;
  for (double tau : grid) {
    t.tau_ppm = tau;
    SweepRow row{tau, evaluate_mining(prep, t, merge, opt)};
    row.result.report.config = experiment_config_json(scene, split, noise, t, merge, opt);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Reports and overlays

inline nlohmann::json recovery_report_to_json(const RecoveryReport& r) {
  nlohmann::json per_cat = nlohmann::json::object();
  for (const auto& [cat, c] : r.per_category)
    per_cat[std::to_string(cat)] = {
        {"removed", c.removed}, {"recovered", c.recovered}, {"pseudo_recovered", c.pseudo_recovered}};
  return {{"mined_total", r.mined_total},
          {"mined_matched", r.mined_matched},
          {"mined_precision", r.mined_precision},
          {"removed_total", r.removed_total},
          {"removed_recovered", r.removed_recovered},
          {"mined_recall", r.mined_recall},
          {"removed_count_zero", r.removed_total == 0},
          {"pseudo_total", r.pseudo_total},
          {"pseudo_correct", r.pseudo_correct},
          {"pseudo_precision", r.pseudo_precision},
          {"pseudo_recall", r.pseudo_recall},
          {"labeled_proposals", r.labeled_proposals},
          {"unlabeled_proposals", r.unlabeled_proposals},
          {"background_proposals", r.background_proposals},
          {"per_category", per_cat},
          {"config", r.config}};
}

inline std::string format_recovery_report(const RecoveryReport& r) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "mined regions       " << r.mined_total << " (" << r.mined_matched << " on removed annotations)\n"
     << "mined precision     " << r.mined_precision << (r.mined_total == 0 ? "  [no mined regions]" : "") << "\n"
     << "removed annotations " << r.removed_total << " (" << r.removed_recovered << " recovered)\n"
     << "mined recall        " << r.mined_recall << (r.removed_total == 0 ? "  [no removed annotations]" : "") << "\n"
     << "pseudo labels       " << r.pseudo_total << " (" << r.pseudo_correct << " correct)\n"
     << "pseudo precision    " << r.pseudo_precision << "\n"
     << "pseudo recall       " << r.pseudo_recall << "\n"
     << "proposals           labeled " << r.labeled_proposals << ", unlabeled " << r.unlabeled_proposals
     << ", background " << r.background_proposals << "\n"
     << "category  removed  recovered  pseudo_recovered\n";
  for (const auto& [cat, c] : r.per_category)
    os << cat << "  " << c.removed << "  " << c.recovered << "  " << c.pseudo_recovered << "\n";
  return os.str();
}

inline void draw_outline(Raster& r, const Box& b, std::array<std::uint8_t, 3> color) {
  if (r.width <= 0 || r.height <= 0) return;
  auto cx = [&](double v) { return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(v)), 0, r.width - 1); };
  auto cy = [&](double v) { return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(v)), 0, r.height - 1); };
  const auto x1 = cx(b.x1), x2 = cx(b.x2 - 1e-9), y1 = cy(b.y1), y2 = cy(b.y2 - 1e-9);
  auto put = [&](std::int64_t x, std::int64_t y) {
    for (int c = 0; c < 3; ++c) r.at(x, y, c) = color[static_cast<std::size_t>(c)];
  };
  for (std::int64_t x = x1; x <= x2; ++x) {
    put(x, y1);
    put(x, y2);
  }
  for (std::int64_t y = y1; y <= y2; ++y) {
    put(x1, y);
    put(x2, y);
  }
}

// Available annotations in red, mined regions in white.
inline Raster render_overlay(Raster base, const std::vector<Box>& kept_gt, const std::vector<Box>& mined) {
  for (const auto& b : kept_gt) draw_outline(base, b, {255, 0, 0});
  for (const auto& b : mined) draw_outline(base, b, {255, 255, 255});
  return base;
}

}  // namespace saod
