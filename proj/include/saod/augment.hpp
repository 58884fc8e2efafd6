#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "saod/dataset.hpp"
#include "saod/error.hpp"
#include "saod/geometry.hpp"
#include "saod/random.hpp"

namespace saod {

// Row-major interleaved RGB, 8 bits per channel.
struct Raster {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::uint8_t> pixels;

  Raster() = default;
  Raster(std::int64_t w, std::int64_t h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w * h * 3), fill) {}

  std::uint8_t& at(std::int64_t x, std::int64_t y, int c) {
    return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }
  std::uint8_t at(std::int64_t x, std::int64_t y, int c) const {
    return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }

  friend bool operator==(const Raster&, const Raster&) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

using ChannelBasis = std::array<double, 9>;  // row-major 3x3, rows are output channels
inline constexpr ChannelBasis kIdentityBasis{1, 0, 0, 0, 1, 0, 0, 0, 1};

struct AugmentSpec {
  Interval contrast{0.5, 1.5};
  Interval brightness{0.5, 1.5};
  Interval saturation{0.5, 1.5};
  double lighting_scale = 1.2;
  ChannelBasis lighting_basis = kIdentityBasis;
  Interval erase_area{0.4, 0.7};    // fraction of the box
  Interval erase_aspect{0.3, 3.3};  // height / width
  double erase_probability = 0.5;   // per box
  std::uint64_t seed = 0;

  // All factors pinned to 1, no lighting, no erasing.
  static AugmentSpec neutral(std::uint64_t seed = 0) {
    AugmentSpec s;
    s.contrast = s.brightness = s.saturation = Interval{1.0, 1.0};
    s.lighting_scale = 0.0;
    s.erase_probability = 0.0;
    s.seed = seed;
    return s;
  }
};

inline void validate_augment_spec(const AugmentSpec& s) {
  auto check = [](const Interval& i, const char* name, bool allow_zero) {
    const bool ok = i.lo <= i.hi && (allow_zero ? i.lo >= 0.0 : i.lo > 0.0) && std::isfinite(i.hi);
    if (!ok) throw DomainError(std::string("invalid ") + name + " interval");
  };
  check(s.contrast, "contrast", true);
  check(s.brightness, "brightness", true);
  check(s.saturation, "saturation", true);
  check(s.erase_area, "erase area", false);
  check(s.erase_aspect, "erase aspect", false);
  if (s.erase_area.hi > 1.0) throw DomainError("erase area fraction cannot exceed 1");
  if (!(s.lighting_scale >= 0.0)) throw DomainError("lighting scale must be non-negative");
  if (!(s.erase_probability >= 0.0 && s.erase_probability <= 1.0))
    throw DomainError("erase probability must lie in [0, 1]");
}

// Pixel rectangle [x, x + w) x [y, y + h).
struct PixelRect {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t w = 0;
  std::int64_t h = 0;
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

// Whole pixels lying inside a continuous box.
inline PixelRect pixel_region(const Box& b) {
  const auto x1 = static_cast<std::int64_t>(std::ceil(b.x1));
  const auto y1 = static_cast<std::int64_t>(std::ceil(b.y1));
  const auto x2 = static_cast<std::int64_t>(std::floor(b.x2));
  const auto y2 = static_cast<std::int64_t>(std::floor(b.y2));
  return PixelRect{x1, y1, std::max<std::int64_t>(0, x2 - x1), std::max<std::int64_t>(0, y2 - y1)};
}

struct EraseRecord {
  std::size_t box_index = 0;
  bool applied = false;
  double area_fraction = 0.0;  // sampled
  double aspect = 0.0;         // sampled, height / width
  PixelRect rect;              // rasterized rectangle that was filled
  std::uint64_t noise_key = 0;
  friend bool operator==(const EraseRecord&, const EraseRecord&) = default;
};

struct AppliedParams {
  std::int64_t width = 0;
  std::int64_t height = 0;
  double contrast = 1.0;
  double brightness = 1.0;
  double saturation = 1.0;
  std::array<double, 3> lighting_alpha{0, 0, 0};
  double lighting_scale = 0.0;
  ChannelBasis lighting_basis = kIdentityBasis;
  std::vector<EraseRecord> erases;
  friend bool operator==(const AppliedParams&, const AppliedParams&) = default;

  std::array<double, 3> lighting_shift() const noexcept {
    std::array<double, 3> shift{};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) shift[r] += lighting_basis[r * 3 + c] * lighting_alpha[c] * lighting_scale;
    return shift;
  }
};

struct AugmentResult {
  Raster image;
  AppliedParams params;
};

namespace detail {

inline double gray(double r, double g, double b) noexcept { return 0.299 * r + 0.587 * g + 0.114 * b; }
inline double clamp_channel(double v) noexcept { return std::clamp(v, 0.0, 255.0); }

inline Raster apply_params(const Raster& img, const AppliedParams& params) {
  const std::size_t n = static_cast<std::size_t>(img.width * img.height);
  std::vector<double> buf(img.pixels.begin(), img.pixels.end());

  // contrast, around the image's mean intensity
  double mean_gray = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean_gray += gray(buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]);
  if (n > 0) mean_gray /= static_cast<double>(n);
  for (double& v : buf) v = clamp_channel(mean_gray + params.contrast * (v - mean_gray));

  for (double& v : buf) v = clamp_channel(params.brightness * v);

  for (std::size_t i = 0; i < n; ++i) {
    const double g = gray(buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]);
    for (int c = 0; c < 3; ++c) buf[3 * i + c] = clamp_channel(g + params.saturation * (buf[3 * i + c] - g));
  }

  const auto shift = params.lighting_shift();
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) buf[3 * i + c] = clamp_channel(buf[3 * i + c] + shift[c]);

  Raster out;
  out.width = img.width;
  out.height = img.height;
  out.pixels.resize(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) out.pixels[i] = static_cast<std::uint8_t>(std::lround(buf[i]));

  for (const auto& e : params.erases) {
    if (!e.applied) continue;
    if (e.rect.x < 0 || e.rect.y < 0 || e.rect.w < 1 || e.rect.h < 1 || e.rect.x + e.rect.w > img.width ||
        e.rect.y + e.rect.h > img.height)
      throw DomainError("erase rectangle for box " + std::to_string(e.box_index) + " lies outside the image");
    RandomStream noise(e.noise_key);
    for (std::int64_t y = e.rect.y; y < e.rect.y + e.rect.h; ++y)
      for (std::int64_t x = e.rect.x; x < e.rect.x + e.rect.w; ++x)
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<std::uint8_t>(noise.uniform_int(0, 255));
  }
  return out;
}

// Erase rectangle inside `region` with the sampled area fraction and aspect.
// A shape that cannot fit after a few redraws falls back to the box's own
// aspect, which always fits.
inline EraseRecord sample_erase(std::size_t box_index, const PixelRect& region, const AugmentSpec& spec,
                                RandomStream& rng) {
  EraseRecord rec;
  rec.box_index = box_index;
  if (region.w < 1 || region.h < 1) return rec;
  const double bw = static_cast<double>(region.w);
  const double bh = static_cast<double>(region.h);
  double w = 0.0;
  double h = 0.0;
  bool fits = false;
  for (int attempt = 0; attempt < 10 && !fits; ++attempt) {
    rec.area_fraction = rng.uniform(spec.erase_area.lo, spec.erase_area.hi);
    rec.aspect = rng.uniform(spec.erase_aspect.lo, spec.erase_aspect.hi);
    const double area = rec.area_fraction * bw * bh;
    h = std::sqrt(area * rec.aspect);
    w = std::sqrt(area / rec.aspect);
    fits = std::lround(w) <= region.w && std::lround(h) <= region.h;
  }
  if (!fits) {
    rec.aspect = bh / bw;
    w = bw * std::sqrt(rec.area_fraction);
    h = bh * std::sqrt(rec.area_fraction);
  }
  rec.rect.w = std::clamp<std::int64_t>(std::lround(w), 1, region.w);
  rec.rect.h = std::clamp<std::int64_t>(std::lround(h), 1, region.h);
  rec.rect.x = rng.uniform_int(region.x, region.x + region.w - rec.rect.w);
  rec.rect.y = rng.uniform_int(region.y, region.y + region.h - rec.rect.h);
  rec.noise_key = rng.next_u64();
  rec.applied = true;
  return rec;
}

}  // namespace detail

/// Photometric cascade followed by box erase: contrast, brightness,
/// saturation, lighting, then for each box (independently, with
/// erase_probability) a noise-filled rectangle inside the box. Channels are
/// clamped to [0, 255] after every stage and rounded once at the end. Every
/// sampled value is returned so the result can be replayed.
inline AugmentResult augment_image(const Raster& img, std::span<const Box> boxes, const AugmentSpec& spec) {
  validate_augment_spec(spec);
  if (img.pixels.size() != static_cast<std::size_t>(img.width * img.height * 3))
    throw DomainError("raster pixel count does not match its dimensions");
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const Box& b = boxes[i];
    if (!b.has_positive_area() || b.x1 < 0.0 || b.y1 < 0.0 || b.x2 > static_cast<double>(img.width) ||
        b.y2 > static_cast<double>(img.height))
      throw DomainError("box " + std::to_string(i) + " lies outside the image");
  }

  RandomStream rng(spec.seed, "augment");
  AppliedParams p;
  p.width = img.width;
  p.height = img.height;
  p.contrast = rng.uniform(spec.contrast.lo, spec.contrast.hi);
  p.brightness = rng.uniform(spec.brightness.lo, spec.brightness.hi);
  p.saturation = rng.uniform(spec.saturation.lo, spec.saturation.hi);
  for (double& a : p.lighting_alpha) a = rng.normal();
  p.lighting_scale = spec.lighting_scale;
  p.lighting_basis = spec.lighting_basis;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (rng.bernoulli(spec.erase_probability))
      p.erases.push_back(detail::sample_erase(i, pixel_region(boxes[i]), spec, rng));
    else
      p.erases.push_back(EraseRecord{i, false, 0.0, 0.0, {}, 0});
  }
  return AugmentResult{detail::apply_params(img, p), std::move(p)};
}

inline Raster replay_augment(const Raster& img, const AppliedParams& params) {
  if (img.width != params.width || img.height != params.height)
    throw DomainError("replay: image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                      " but parameters were recorded for " + std::to_string(params.width) + "x" +
                      std::to_string(params.height));
  if (img.pixels.size() != static_cast<std::size_t>(img.width * img.height * 3))
    throw DomainError("raster pixel count does not match its dimensions");
  return detail::apply_params(img, params);
}

// ---------------------------------------------------------------------------
// Parameter records

inline nlohmann::json applied_params_to_json(const AppliedParams& p) {
  nlohmann::json erases = nlohmann::json::array();
  for (const auto& e : p.erases)
    erases.push_back({{"box_index", e.box_index},
                      {"applied", e.applied},
                      {"area_fraction", e.area_fraction},
                      {"aspect", e.aspect},
                      {"rect", {e.rect.x, e.rect.y, e.rect.w, e.rect.h}},
                      {"noise_key", e.noise_key}});
  return {{"width", p.width},
          {"height", p.height},
          {"contrast", p.contrast},
          {"brightness", p.brightness},
          {"saturation", p.saturation},
          {"lighting_alpha", p.lighting_alpha},
          {"lighting_scale", p.lighting_scale},
          {"lighting_basis", p.lighting_basis},
          {"erases", erases}};
}

inline AppliedParams applied_params_from_json(const nlohmann::json& j) {
  try {
    AppliedParams p;
    p.width = j.at("width").get<std::int64_t>();
    p.height = j.at("height").get<std::int64_t>();
    p.contrast = j.at("contrast").get<double>();
    p.brightness = j.at("brightness").get<double>();
    p.saturation = j.at("saturation").get<double>();
    p.lighting_alpha = j.at("lighting_alpha").get<std::array<double, 3>>();
    p.lighting_scale = j.at("lighting_scale").get<double>();
    p.lighting_basis = j.at("lighting_basis").get<ChannelBasis>();
    for (const auto& je : j.at("erases")) {
      EraseRecord e;
      e.box_index = je.at("box_index").get<std::size_t>();
      e.applied = je.at("applied").get<bool>();
      e.area_fraction = je.at("area_fraction").get<double>();
      e.aspect = je.at("aspect").get<double>();
      const auto r = je.at("rect").get<std::array<std::int64_t, 4>>();
      e.rect = PixelRect{r[0], r[1], r[2], r[3]};
      e.noise_key = je.at("noise_key").get<std::uint64_t>();
      p.erases.push_back(e);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed augmentation parameters: ") + e.what(), 0);
  }
}

inline AppliedParams parse_applied_params(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  return applied_params_from_json(j);
}

// ---------------------------------------------------------------------------
// Binary PPM (P6, maxval 255)

inline std::string encode_ppm(const Raster& r) {
  std::string out = "P6\n" + std::to_string(r.width) + " " + std::to_string(r.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(r.pixels.data()), r.pixels.size());
  return out;
}

inline Raster decode_ppm(std::string_view data) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* what) {
    skip_space();
    const std::size_t start = pos;
    std::int64_t v = 0;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos])) && pos - start < 12)
      v = v * 10 + (data[pos++] - '0');
    if (pos == start) throw ParseError(std::string("ppm: expected ") + what, start);
    return v;
  };
  if (data.substr(0, 2) != "P6") throw ParseError("ppm: missing P6 magic", 0);
  pos = 2;
  const auto w = read_int("width");
  const auto h = read_int("height");
  const auto maxval = read_int("maxval");
  if (w <= 0 || h <= 0) throw ParseError("ppm: non-positive dimensions", pos);
  if (maxval != 255) throw ParseError("ppm: only maxval 255 is supported", pos);
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos])))
    throw ParseError("ppm: expected whitespace after header", pos);
  ++pos;
  const std::size_t expected = static_cast<std::size_t>(w * h * 3);
  if (data.size() - pos < expected) throw ParseError("ppm: truncated pixel data", data.size());
  Raster r;
  r.width = w;
  r.height = h;
  r.pixels.assign(data.begin() + static_cast<std::ptrdiff_t>(pos),
                  data.begin() + static_cast<std::ptrdiff_t>(pos + expected));
  return r;
}

inline Raster load_ppm(const std::filesystem::path& path) { return decode_ppm(read_text_file(path)); }
inline void save_ppm(const Raster& r, const std::filesystem::path& path) { write_text_file(path, encode_ppm(r)); }

}  // namespace saod
