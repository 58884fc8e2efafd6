#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "saod/dataset.hpp"
#include "saod/error.hpp"
#include "saod/parallel.hpp"
#include "saod/random.hpp"

namespace saod {

enum class SplitKind { split1, split2, split3, split4, split5, siod };
enum class SplitLevel { easy, hard, extreme };

inline std::string to_string(SplitKind k) {
  switch (k) {
    case SplitKind::split1: return "split1";
    case SplitKind::split2: return "split2";
    case SplitKind::split3: return "split3";
    case SplitKind::split4: return "split4";
    case SplitKind::split5: return "split5";
    case SplitKind::siod: return "siod";
  }
  return "?";
}

inline std::string to_string(SplitLevel l) {
  switch (l) {
    case SplitLevel::easy: return "easy";
    case SplitLevel::hard: return "hard";
    case SplitLevel::extreme: return "extreme";
  }
  return "?";
}

inline SplitKind parse_split_kind(std::string_view s) {
  for (auto k : {SplitKind::split1, SplitKind::split2, SplitKind::split3, SplitKind::split4,
                 SplitKind::split5, SplitKind::siod})
    if (s == to_string(k)) return k;
  throw DomainError("unknown split kind '" + std::string(s) + "'");
}

inline SplitLevel parse_split_level(std::string_view s) {
  for (auto l : {SplitLevel::easy, SplitLevel::hard, SplitLevel::extreme})
    if (s == to_string(l)) return l;
  throw DomainError("unknown split level '" + std::string(s) + "'");
}

struct SplitSpec {
  SplitKind kind = SplitKind::split1;
  double p = 0.0;  // removal fraction; ignored by split4 and siod
  std::optional<SplitLevel> level;
  std::uint64_t seed = 0;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

inline void validate_split_spec(const SplitSpec& s) {
  if (!(s.p >= 0.0 && s.p <= 1.0)) {
    std::ostringstream os;
    os << "removal fraction p = " << s.p << " is outside [0, 1]";
    throw DomainError(os.str());
  }
  if (s.kind == SplitKind::split4 && !s.level) throw DomainError("split4 requires a level (easy, hard, extreme)");
  if (s.kind != SplitKind::split4 && s.level) throw DomainError("level is only meaningful for split4");
}

// Kinds that must leave every labeled image with at least one annotation.
inline bool keeps_at_least_one(SplitKind k) noexcept {
  return k == SplitKind::split3 || k == SplitKind::split4 || k == SplitKind::split5 || k == SplitKind::siod;
}

// Count of items selected by a fraction. Half-way cases round up; the small
// nudge absorbs binary representation error in products such as 0.35 * 10.
inline std::size_t round_half_up(double x) noexcept {
  return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9));
}

struct ClassCounts {
  std::size_t kept = 0;
  std::size_t removed = 0;
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct RemovalManifest {
  std::set<AnnotationId> kept_annotation_ids;
  std::set<AnnotationId> removed_annotation_ids;
  SplitSpec spec;
  std::map<CategoryId, ClassCounts> per_class_counts;

  friend bool operator==(const RemovalManifest&, const RemovalManifest&) = default;
};

struct SplitResult {
  Dataset dataset;
  RemovalManifest manifest;
};

namespace detail {

struct ImageGroup {
  ImageId image_id;
  std::vector<const Annotation*> annotations;  // ascending annotation id
};

inline std::vector<ImageGroup> group_by_image(const Dataset& d) {
  std::map<ImageId, std::vector<const Annotation*>> by_image;
  for (const auto& img : d.images) by_image[img.id];
  for (const auto& a : d.annotations) by_image[a.image_id].push_back(&a);
  std::vector<ImageGroup> out;
  out.reserve(by_image.size());
  for (auto& [id, anns] : by_image) {
    std::sort(anns.begin(), anns.end(), [](auto* a, auto* b) { return a->id < b->id; });
    out.push_back(ImageGroup{id, std::move(anns)});
  }
  return out;
}

// Removed ids for one image under the image-level kinds.
inline std::vector<AnnotationId> sparsify_image(const ImageGroup& g, const SplitSpec& spec) {
  std::vector<AnnotationId> removed;
  const std::size_t m = g.annotations.size();
  if (m == 0) return removed;
  RandomStream rng(spec.seed, to_string(spec.kind), static_cast<std::uint64_t>(g.image_id));

  auto remove_random = [&](std::size_t count) {
    for (std::size_t idx : rng.sample_indices(m, count)) removed.push_back(g.annotations[idx]->id);
  };

  switch (spec.kind) {
    case SplitKind::split2: {
      std::vector<CategoryId> cats;
      for (auto* a : g.annotations) cats.push_back(a->category_id);
      std::sort(cats.begin(), cats.end());
      cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
      const std::size_t k = round_half_up(spec.p * static_cast<double>(cats.size()));
      std::set<CategoryId> drop;
      for (std::size_t idx : rng.sample_indices(cats.size(), k)) drop.insert(cats[idx]);
      for (auto* a : g.annotations)
        if (drop.contains(a->category_id)) removed.push_back(a->id);
      break;
    }
    case SplitKind::split3:
      remove_random(std::min(round_half_up(spec.p * static_cast<double>(m)), m - 1));
      break;
    case SplitKind::split4:
      switch (*spec.level) {
        case SplitLevel::easy: remove_random(m >= 2 ? 1 : 0); break;
        case SplitLevel::hard: remove_random(m / 2); break;
        case SplitLevel::extreme: remove_random(m - 1); break;
      }
      break;
    case SplitKind::siod: {
      std::map<CategoryId, std::vector<const Annotation*>> by_cat;
      for (auto* a : g.annotations) by_cat[a->category_id].push_back(a);
      for (auto& [cat, anns] : by_cat) {
        const auto keep = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(anns.size()) - 1));
        for (std::size_t i = 0; i < anns.size(); ++i)
          if (i != keep) removed.push_back(anns[i]->id);
      }
      break;
    }
    default:
      break;
  }
  return removed;
}

inline std::map<CategoryId, std::vector<const Annotation*>> group_by_category(const Dataset& d) {
  std::map<CategoryId, std::vector<const Annotation*>> out;
  for (const auto& c : d.categories) out[c.id];
  for (const auto& a : d.annotations) out[a.category_id].push_back(&a);
  for (auto& [c, anns] : out)
    std::sort(anns.begin(), anns.end(), [](auto* a, auto* b) { return a->id < b->id; });
  return out;
}

inline std::vector<AnnotationId> split1_removed(const Dataset& d, const SplitSpec& spec, std::size_t workers) {
  const auto by_cat = group_by_category(d);
  std::vector<const std::pair<const CategoryId, std::vector<const Annotation*>>*> units;
  for (const auto& entry : by_cat) units.push_back(&entry);
  std::vector<std::vector<AnnotationId>> per_unit(units.size());
  parallel_for(units.size(), workers, [&](std::size_t u) {
    const auto& [cat, anns] = *units[u];
    RandomStream rng(spec.seed, "split1", static_cast<std::uint64_t>(cat));
    const std::size_t k = round_half_up(spec.p * static_cast<double>(anns.size()));
    for (std::size_t idx : rng.sample_indices(anns.size(), k)) per_unit[u].push_back(anns[idx]->id);
  });
  std::vector<AnnotationId> out;
  for (auto& v : per_unit) out.insert(out.end(), v.begin(), v.end());
  return out;
}

// Each category marks round_half_up(p * occurrences) of its (image, category)
// occurrences, drawn uniformly; a marked occurrence loses every annotation of
// that category in that image unless doing so would leave the image empty, in
// which case the mark is skipped. Categories are processed by ascending id.
inline std::vector<AnnotationId> split5_removed(const Dataset& d, const SplitSpec& spec) {
  std::map<CategoryId, std::map<ImageId, std::vector<AnnotationId>>> occ;
  for (const auto& c : d.categories) occ[c.id];
  std::unordered_map<ImageId, std::size_t> remaining;
  for (const auto& a : d.annotations) {
    occ[a.category_id][a.image_id].push_back(a.id);
    ++remaining[a.image_id];
  }
  std::vector<AnnotationId> removed;
  for (const auto& [cat, images] : occ) {
    std::vector<const std::pair<const ImageId, std::vector<AnnotationId>>*> list;
    for (const auto& entry : images) list.push_back(&entry);
    RandomStream rng(spec.seed, "split5", static_cast<std::uint64_t>(cat));
    const std::size_t k = round_half_up(spec.p * static_cast<double>(list.size()));
    for (std::size_t idx : rng.sample_indices(list.size(), k)) {
      const auto& [image_id, ids] = *list[idx];
      std::size_t& left = remaining[image_id];
      if (left <= ids.size()) continue;
      left -= ids.size();
      removed.insert(removed.end(), ids.begin(), ids.end());
    }
  }
  return removed;
}

}  // namespace detail

/// Produces a sparsified copy of `d` and the record of what was removed.
///
/// Randomness is drawn from streams keyed by (seed, kind, category or image
/// id), so the output is identical for any worker count. Images listed in
/// `unlabeled_image_ids` are exempt from the at-least-one precondition.
inline SplitResult generate_split(const Dataset& d, const SplitSpec& spec, std::size_t workers = 1) {
  validate_split_spec(spec);

  const auto groups = detail::group_by_image(d);
  if (keeps_at_least_one(spec.kind)) {
    std::vector<ImageId> empty;
    for (const auto& g : groups)
      if (g.annotations.empty() && !d.unlabeled_image_ids.contains(g.image_id)) empty.push_back(g.image_id);
    if (!empty.empty())
      throw DomainError(to_string(spec.kind) + " requires at least one annotation per image; empty images: " +
                        detail::join_ids(empty));
  }

  std::vector<AnnotationId> removed_list;
  switch (spec.kind) {
    case SplitKind::split1:
      removed_list = detail::split1_removed(d, spec, workers);
      break;
    case SplitKind::split5:
      removed_list = detail::split5_removed(d, spec);
      break;
    default: {
      std::vector<std::vector<AnnotationId>> per_image(groups.size());
      parallel_for(groups.size(), workers,
                   [&](std::size_t i) { per_image[i] = detail::sparsify_image(groups[i], spec); });
      for (auto& v : per_image) removed_list.insert(removed_list.end(), v.begin(), v.end());
    }
  }

  SplitResult out;
  out.manifest.spec = spec;
  out.manifest.removed_annotation_ids.insert(removed_list.begin(), removed_list.end());
  for (const auto& c : d.categories) out.manifest.per_class_counts[c.id];
  out.dataset.images = d.images;
  out.dataset.categories = d.categories;
  out.dataset.unlabeled_image_ids = d.unlabeled_image_ids;
  for (const auto& a : d.annotations) {
    auto& counts = out.manifest.per_class_counts[a.category_id];
    if (out.manifest.removed_annotation_ids.contains(a.id)) {
      ++counts.removed;
    } else {
      ++counts.kept;
      out.manifest.kept_annotation_ids.insert(a.id);
      out.dataset.annotations.push_back(a);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Semi-supervised composition

/// Union of a sparsely labeled set and an unlabeled image pool. Unlabeled
/// images keep their ids when those are free; otherwise every unlabeled image
/// is renumbered from max(labeled id) + 1 in input order.
inline Dataset make_ssl_saod(const Dataset& labeled_sparse, const Dataset& unlabeled) {
  std::map<CategoryId, std::string> names;
  for (const auto& c : labeled_sparse.categories) names[c.id] = c.name;
  std::vector<std::string> conflicts;
  for (const auto& c : unlabeled.categories) {
    auto it = names.find(c.id);
    if (it != names.end() && it->second != c.name)
      conflicts.push_back("id " + std::to_string(c.id) + ": '" + it->second + "' vs '" + c.name + "'");
  }
  if (!conflicts.empty()) {
    std::string msg = "category tables conflict: ";
    for (std::size_t i = 0; i < conflicts.size(); ++i) msg += (i ? "; " : "") + conflicts[i];
    throw DomainError(msg);
  }

  Dataset out = labeled_sparse;
  for (const auto& c : unlabeled.categories)
    if (!names.contains(c.id)) out.categories.push_back(c);

  std::set<ImageId> taken;
  ImageId max_id = 0;
  for (const auto& img : labeled_sparse.images) {
    taken.insert(img.id);
    max_id = std::max(max_id, img.id);
  }
  const bool collide = std::any_of(unlabeled.images.begin(), unlabeled.images.end(),
                                   [&](const Image& i) { return taken.contains(i.id); });
  ImageId next = max_id + 1;
  for (const auto& img : unlabeled.images) {
    Image copy = img;
    if (collide) copy.id = next++;
    out.images.push_back(copy);
    out.unlabeled_image_ids.insert(copy.id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sparsity report

struct ClassSparsity {
  std::size_t original = 0;
  std::size_t kept = 0;
  double removed_fraction = 0.0;
};

struct SparsityReport {
  std::size_t original_annotations = 0;
  std::size_t kept_annotations = 0;
  double removed_fraction = 0.0;
  std::map<CategoryId, ClassSparsity> per_class;
  std::size_t empty_images = 0;      // labeled images left without annotations
  std::size_t unlabeled_images = 0;  // images in unlabeled_image_ids
};

inline SparsityReport split_stats(const Dataset& original, const Dataset& sparse) {
  std::set<AnnotationId> original_ids;
  for (const auto& a : original.annotations) original_ids.insert(a.id);
  std::vector<AnnotationId> foreign;
  for (const auto& a : sparse.annotations)
    if (!original_ids.contains(a.id)) foreign.push_back(a.id);
  if (!foreign.empty())
    throw DomainError("sparse dataset has annotations absent from the original: " + detail::join_ids(foreign));

  SparsityReport r;
  r.original_annotations = original.annotations.size();
  r.kept_annotations = sparse.annotations.size();
  for (const auto& c : original.categories) r.per_class[c.id];
  for (const auto& a : original.annotations) ++r.per_class[a.category_id].original;
  for (const auto& a : sparse.annotations) ++r.per_class[a.category_id].kept;
  for (auto& [cat, s] : r.per_class)
    s.removed_fraction = s.original == 0 ? 0.0 : 1.0 - static_cast<double>(s.kept) / static_cast<double>(s.original);
  r.removed_fraction = r.original_annotations == 0
                           ? 0.0
                           : static_cast<double>(r.original_annotations - r.kept_annotations) /
                                 static_cast<double>(r.original_annotations);

  std::set<ImageId> annotated;
  for (const auto& a : sparse.annotations) annotated.insert(a.image_id);
  for (const auto& img : sparse.images) {
    if (sparse.unlabeled_image_ids.contains(img.id))
      ++r.unlabeled_images;
    else if (!annotated.contains(img.id))
      ++r.empty_images;
  }
  return r;
}

inline nlohmann::json sparsity_report_to_json(const SparsityReport& r) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [cat, s] : r.per_class)
    per_class[std::to_string(cat)] = {{"original", s.original}, {"kept", s.kept}, {"removed_fraction", s.removed_fraction}};
  return {{"original_annotations", r.original_annotations},
          {"kept_annotations", r.kept_annotations},
          {"removed_fraction", r.removed_fraction},
          {"per_class", per_class},
          {"empty_images", r.empty_images},
          {"unlabeled_images", r.unlabeled_images}};
}

inline std::string format_sparsity_report(const SparsityReport& r) {
  std::ostringstream os;
  os << "annotations: " << r.kept_annotations << " kept of " << r.original_annotations
     << " (removed fraction " << r.removed_fraction << ")\n"
     << "empty images: " << r.empty_images << ", unlabeled images: " << r.unlabeled_images << "\n"
     << "category  original  kept  removed_fraction\n";
  for (const auto& [cat, s] : r.per_class)
    os << cat << "  " << s.original << "  " << s.kept << "  " << s.removed_fraction << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Manifest persistence

inline nlohmann::json manifest_to_json(const RemovalManifest& m) {
  nlohmann::json spec = {{"kind", to_string(m.spec.kind)}, {"p", m.spec.p}, {"seed", m.spec.seed}};
  spec["level"] = m.spec.level ? nlohmann::json(to_string(*m.spec.level)) : nlohmann::json(nullptr);
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [cat, c] : m.per_class_counts)
    counts[std::to_string(cat)] = {{"kept", c.kept}, {"removed", c.removed}};
  return {{"spec", spec},
          {"kept_annotation_ids", std::vector<AnnotationId>(m.kept_annotation_ids.begin(), m.kept_annotation_ids.end())},
          {"removed_annotation_ids",
           std::vector<AnnotationId>(m.removed_annotation_ids.begin(), m.removed_annotation_ids.end())},
          {"per_class_counts", counts}};
}

inline RemovalManifest manifest_from_json(const nlohmann::json& j) {
  try {
    RemovalManifest m;
    const auto& s = j.at("spec");
    m.spec.kind = parse_split_kind(s.at("kind").get<std::string>());
    m.spec.p = s.at("p").get<double>();
    m.spec.seed = s.at("seed").get<std::uint64_t>();
    if (s.contains("level") && !s["level"].is_null()) m.spec.level = parse_split_level(s["level"].get<std::string>());
    for (auto id : j.at("kept_annotation_ids")) m.kept_annotation_ids.insert(id.get<AnnotationId>());
    for (auto id : j.at("removed_annotation_ids")) m.removed_annotation_ids.insert(id.get<AnnotationId>());
    for (const auto& [key, c] : j.at("per_class_counts").items())
      m.per_class_counts[std::stoll(key)] = ClassCounts{c.at("kept").get<std::size_t>(), c.at("removed").get<std::size_t>()};
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what(), 0);
  }
}

inline std::string dump_manifest(const RemovalManifest& m) { return manifest_to_json(m).dump(1) + "\n"; }

}  // namespace saod
