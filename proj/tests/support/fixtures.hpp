#pragma once

#include <cstdint>
#include <string>

#include "saod/dataset.hpp"
#include "saod/random.hpp"

namespace saod::fixtures {

// `per_class` annotations in each of `classes` categories, spread over
// `images` images round-robin; boxes are small, integer and in bounds.
inline Dataset balanced(std::size_t classes, std::size_t per_class, std::size_t images) {
  Dataset d;
  for (std::size_t c = 1; c <= classes; ++c)
    d.categories.push_back(Category{static_cast<CategoryId>(c), "c" + std::to_string(c)});
  for (std::size_t i = 1; i <= images; ++i)
    d.images.push_back(Image{static_cast<ImageId>(i), 640, 480, "img" + std::to_string(i) + ".jpg"});
  AnnotationId id = 1;
  std::size_t slot = 0;
  for (std::size_t c = 1; c <= classes; ++c) {
    for (std::size_t k = 0; k < per_class; ++k, ++slot) {
      const auto image = static_cast<ImageId>(slot % images + 1);
      const double x = static_cast<double>((k * 7) % 600);
      const double y = static_cast<double>((k * 13) % 440);
      d.annotations.push_back(Annotation{id++, image, static_cast<CategoryId>(c), BoxXywh{x, y, 20.0, 30.0}});
    }
  }
  return d;
}

// Small random valid dataset; fractional boxes allowed.
inline Dataset random_dataset(RandomStream& rng, std::size_t max_images = 5, std::size_t max_annotations = 12,
                              std::size_t max_categories = 4, bool every_image_annotated = false) {
  Dataset d;
  const auto n_cat = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_categories)));
  for (std::size_t c = 1; c <= n_cat; ++c)
    d.categories.push_back(Category{static_cast<CategoryId>(c * 3), "cat\"" + std::to_string(c) + "/\xc3\xa9"});
  const auto n_img = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_images)));
  for (std::size_t i = 1; i <= n_img; ++i)
    d.images.push_back(Image{static_cast<ImageId>(i * 10 + 1), rng.uniform_int(32, 1024), rng.uniform_int(32, 1024),
                             i % 2 ? "" : "frame_" + std::to_string(i) + ".png"});
  auto add = [&](ImageId image) {
    const Image& img = *d.find_image(image);
    const double w = rng.uniform(1.0, static_cast<double>(img.width) / 2);
    const double h = rng.uniform(1.0, static_cast<double>(img.height) / 2);
    const double x = rng.uniform(0.0, static_cast<double>(img.width) - w - 1.0);
    const double y = rng.uniform(0.0, static_cast<double>(img.height) - h - 1.0);
    const auto cat = d.categories[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n_cat) - 1))].id;
    d.annotations.push_back(
        Annotation{static_cast<AnnotationId>(d.annotations.size() * 2 + 5), image, cat, BoxXywh{x, y, w, h}});
  };
  if (every_image_annotated)
    for (const auto& img : d.images) add(img.id);
  const auto extra = rng.uniform_int(0, static_cast<std::int64_t>(max_annotations));
  for (std::int64_t k = 0; k < extra; ++k)
    add(d.images[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n_img) - 1))].id);
  return d;
}

}  // namespace saod::fixtures
