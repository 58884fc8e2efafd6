#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "saod/error.hpp"
#include "saod/geometry.hpp"

namespace saod {

using ImageId = std::int64_t;
using AnnotationId = std::int64_t;

struct Category {
  CategoryId id = 0;
  std::string name;
  friend bool operator==(const Category&, const Category&) = default;
};

struct Image {
  ImageId id = 0;
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::string file_name;
  friend bool operator==(const Image&, const Image&) = default;
};

// COCO box: top-left corner plus extent. Geometry code works on corner
// boxes; use corners() at that boundary.
struct BoxXywh {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  Box corners() const noexcept { return Box::from_xywh(x, y, w, h); }
  friend bool operator==(const BoxXywh&, const BoxXywh&) = default;
};

struct Annotation {
  AnnotationId id = 0;
  ImageId image_id = 0;
  CategoryId category_id = 0;
  BoxXywh bbox;
  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Dataset {
  std::vector<Image> images;
  std::vector<Annotation> annotations;
  std::vector<Category> categories;
  std::set<ImageId> unlabeled_image_ids;

  friend bool operator==(const Dataset&, const Dataset&) = default;

  const Image* find_image(ImageId id) const {
    auto it = std::find_if(images.begin(), images.end(), [&](const Image& i) { return i.id == id; });
    return it == images.end() ? nullptr : &*it;
  }

  // Annotation positions grouped by image, in annotation order.
  std::unordered_map<ImageId, std::vector<std::size_t>> annotations_by_image() const {
    std::unordered_map<ImageId, std::vector<std::size_t>> out;
    for (const auto& img : images) out[img.id];
    for (std::size_t i = 0; i < annotations.size(); ++i)
      out[annotations[i].image_id].push_back(i);
    return out;
  }
};

enum class ViolationKind {
  non_positive_id,
  duplicate_id,
  empty_category_name,
  non_positive_image_size,
  non_positive_box,
  box_out_of_bounds,
  dangling_image,
  dangling_category,
  dangling_unlabeled_image,
  annotated_unlabeled_image,
};

struct Violation {
  ViolationKind kind;
  std::int64_t id;  // the offending record's own id
  std::string message;
};

using ValidationReport = std::vector<Violation>;

inline ValidationReport validate_dataset(const Dataset& d) {
  ValidationReport report;
  auto add = [&](ViolationKind k, std::int64_t id, std::string msg) {
    report.push_back(Violation{k, id, std::move(msg)});
  };

  std::unordered_set<CategoryId> category_ids;
  for (const auto& c : d.categories) {
    if (c.id <= 0) add(ViolationKind::non_positive_id, c.id, "category id must be positive");
    if (!category_ids.insert(c.id).second)
      add(ViolationKind::duplicate_id, c.id, "duplicate category id " + std::to_string(c.id));
    if (c.name.empty())
      add(ViolationKind::empty_category_name, c.id, "category " + std::to_string(c.id) + " has an empty name");
  }

  std::unordered_map<ImageId, const Image*> images;
  for (const auto& img : d.images) {
    if (img.id <= 0) add(ViolationKind::non_positive_id, img.id, "image id must be positive");
    if (!images.emplace(img.id, &img).second)
      add(ViolationKind::duplicate_id, img.id, "duplicate image id " + std::to_string(img.id));
    if (img.width <= 0 || img.height <= 0)
      add(ViolationKind::non_positive_image_size, img.id,
          "image " + std::to_string(img.id) + " has non-positive size");
  }

  std::unordered_set<AnnotationId> annotation_ids;
  std::unordered_set<ImageId> annotated_images;
  for (const auto& a : d.annotations) {
    const std::string tag = "annotation " + std::to_string(a.id);
    if (a.id <= 0) add(ViolationKind::non_positive_id, a.id, "annotation id must be positive");
    if (!annotation_ids.insert(a.id).second)
      add(ViolationKind::duplicate_id, a.id, "duplicate annotation id " + std::to_string(a.id));
    if (!(a.bbox.w > 0.0 && a.bbox.h > 0.0))
      add(ViolationKind::non_positive_box, a.id, tag + " has non-positive width or height");
    if (!category_ids.contains(a.category_id))
      add(ViolationKind::dangling_category, a.id,
          tag + " references missing category " + std::to_string(a.category_id));
    auto it = images.find(a.image_id);
    if (it == images.end()) {
      add(ViolationKind::dangling_image, a.id,
          tag + " references missing image " + std::to_string(a.image_id));
      continue;
    }
    annotated_images.insert(a.image_id);
    const Image& img = *it->second;
    const Box c = a.bbox.corners();
    if (c.x1 < 0.0 || c.y1 < 0.0 || c.x2 > static_cast<double>(img.width) ||
        c.y2 > static_cast<double>(img.height))
      add(ViolationKind::box_out_of_bounds, a.id, tag + " lies outside its image");
  }

  for (ImageId id : d.unlabeled_image_ids) {
    if (!images.contains(id))
      add(ViolationKind::dangling_unlabeled_image, id,
          "unlabeled image id " + std::to_string(id) + " is not in the image list");
    else if (annotated_images.contains(id))
      add(ViolationKind::annotated_unlabeled_image, id,
          "unlabeled image " + std::to_string(id) + " carries annotations");
  }
  return report;
}

// ---------------------------------------------------------------------------
// COCO-style persistence

inline nlohmann::json dataset_to_json(const Dataset& d) {
  using nlohmann::json;
  json images = json::array();
  for (const auto& img : d.images)
    images.push_back({{"id", img.id}, {"width", img.width}, {"height", img.height}, {"file_name", img.file_name}});
  json annotations = json::array();
  for (const auto& a : d.annotations)
    annotations.push_back({{"id", a.id},
                           {"image_id", a.image_id},
                           {"category_id", a.category_id},
                           {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}}});
  json categories = json::array();
  for (const auto& c : d.categories) categories.push_back({{"id", c.id}, {"name", c.name}});

  json out = {{"images", std::move(images)},
              {"annotations", std::move(annotations)},
              {"categories", std::move(categories)}};
  if (!d.unlabeled_image_ids.empty())
    out["unlabeled_image_ids"] = std::vector<ImageId>(d.unlabeled_image_ids.begin(), d.unlabeled_image_ids.end());
  return out;
}

namespace detail {

inline std::int64_t json_int(const nlohmann::json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key))
    throw ParseError(std::string(where) + ": missing member \"" + key + "\"", 0);
  const auto& v = j.at(key);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double f = v.get<double>();
    if (std::floor(f) == f) return static_cast<std::int64_t>(f);
  }
  throw ParseError(std::string(where) + ": member \"" + key + "\" is not an integer", 0);
}

inline const nlohmann::json& json_array(const nlohmann::json& j, const char* key) {
  static const nlohmann::json empty = nlohmann::json::array();
  if (!j.contains(key)) return empty;
  const auto& v = j.at(key);
  if (!v.is_array()) throw ParseError(std::string("member \"") + key + "\" is not an array", 0);
  return v;
}

}  // namespace detail

/// Builds a Dataset from parsed COCO-style JSON. Unknown members (segmentation,
/// iscrowd, licenses, ...) are ignored. Throws IntegrityError on the first
/// dangling reference and ValidationError for non-positive box or image sizes.
inline Dataset dataset_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("top-level value is not an object", 0);
  Dataset d;
  for (const auto& ji : detail::json_array(j, "images")) {
    Image img;
    img.id = detail::json_int(ji, "id", "image");
    img.width = detail::json_int(ji, "width", "image");
    img.height = detail::json_int(ji, "height", "image");
    if (ji.contains("file_name") && ji["file_name"].is_string()) img.file_name = ji["file_name"].get<std::string>();
    d.images.push_back(std::move(img));
  }
  for (const auto& jc : detail::json_array(j, "categories")) {
    Category c;
    c.id = detail::json_int(jc, "id", "category");
    if (!jc.contains("name") || !jc["name"].is_string()) throw ParseError("category: missing string member \"name\"", 0);
    c.name = jc["name"].get<std::string>();
    d.categories.push_back(std::move(c));
  }
  for (const auto& ja : detail::json_array(j, "annotations")) {
    Annotation a;
    a.id = detail::json_int(ja, "id", "annotation");
    a.image_id = detail::json_int(ja, "image_id", "annotation");
    a.category_id = detail::json_int(ja, "category_id", "annotation");
    if (!ja.contains("bbox") || !ja["bbox"].is_array() || ja["bbox"].size() != 4)
      throw ParseError("annotation " + std::to_string(a.id) + ": \"bbox\" must be a 4-array", 0);
    const auto& b = ja["bbox"];
    for (const auto& v : b)
      if (!v.is_number()) throw ParseError("annotation " + std::to_string(a.id) + ": non-numeric bbox", 0);
    a.bbox = BoxXywh{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    d.annotations.push_back(a);
  }
  for (const auto& v : detail::json_array(j, "unlabeled_image_ids")) {
    if (!v.is_number_integer()) throw ParseError("unlabeled_image_ids must hold integers", 0);
    d.unlabeled_image_ids.insert(v.get<ImageId>());
  }

  std::vector<std::int64_t> bad_images;
  std::vector<std::int64_t> bad_boxes;
  for (const auto& v : validate_dataset(d)) {
    switch (v.kind) {
      case ViolationKind::dangling_image:
      case ViolationKind::dangling_category: {
        const auto& a = *std::find_if(d.annotations.begin(), d.annotations.end(),
                                      [&](const Annotation& x) { return x.id == v.id; });
        const std::int64_t missing =
            v.kind == ViolationKind::dangling_image ? a.image_id : a.category_id;
        throw IntegrityError(v.message, missing);
      }
      case ViolationKind::dangling_unlabeled_image:
        throw IntegrityError(v.message, v.id);
      case ViolationKind::non_positive_box:
        bad_boxes.push_back(v.id);
        break;
      case ViolationKind::non_positive_image_size:
        bad_images.push_back(v.id);
        break;
      default:
        break;
    }
  }
  if (!bad_boxes.empty())
    throw ValidationError("annotations with non-positive box size: " + detail::join_ids(bad_boxes), bad_boxes);
  if (!bad_images.empty())
    throw ValidationError("images with non-positive size: " + detail::join_ids(bad_images), bad_images);
  return d;
}

inline Dataset parse_dataset(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  return dataset_from_json(j);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_text_file(path));
}

// Deterministic serialization: member order is fixed, numbers use the
// shortest round-trip representation.
inline std::string dump_dataset(const Dataset& d) {
  return dataset_to_json(d).dump(1) + "\n";
}

inline void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  const auto report = validate_dataset(d);
  if (!report.empty()) {
    std::vector<std::int64_t> ids;
    for (const auto& v : report) ids.push_back(v.id);
    throw ValidationError("refusing to save invalid dataset: " + report.front().message, ids);
  }
  write_text_file(path, dump_dataset(d));
}

}  // namespace saod
