#pragma once

// Images, image sources and per-word image-set assembly.
//
// An image is a 3x32x32 RGB array in [0,1], stored channel-major (R plane,
// then G, then B). A word's image-set stacks 5 images for the word followed
// by 5 images for each of its 19 definition slots; PAD slots get the blank
// (all-zero) image.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "defvec/error.hpp"
#include "defvec/io.hpp"
#include "defvec/vocab.hpp"

namespace defvec {

inline constexpr std::size_t kImageSide = 32;
inline constexpr std::size_t kImageChannels = 3;
inline constexpr std::size_t kImagePixels = kImageChannels * kImageSide * kImageSide;
inline constexpr std::size_t kImagesPerTerm = 5;
inline constexpr std::size_t kImageSetSize = (kDefinitionLength + 1) * kImagesPerTerm;

struct Image {
  std::vector<float> pixels = std::vector<float>(kImagePixels, 0.0f);

  float& at(std::size_t c, std::size_t y, std::size_t x) { return pixels[(c * kImageSide + y) * kImageSide + x]; }
  float at(std::size_t c, std::size_t y, std::size_t x) const { return pixels[(c * kImageSide + y) * kImageSide + x]; }

  friend bool operator==(const Image&, const Image&) = default;
};

inline Image blank_image() { return Image{}; }

/// Interleaved 8-bit RGB raster as stored in a P6 file.
struct RgbRaster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bytes;  // width * height * 3
};

namespace detail {

inline void skip_ppm_whitespace(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

inline std::size_t read_ppm_number(std::istream& in, const std::string& path) {
  skip_ppm_whitespace(in);
  std::size_t value = 0;
  bool any = false;
  while (in.peek() >= '0' && in.peek() <= '9') {
    value = value * 10 + static_cast<std::size_t>(in.get() - '0');
    any = true;
    if (value > 1u << 20) throw ValidationError("corrupt PPM header in '" + path + "'");
  }
  if (!any) throw ValidationError("corrupt PPM header in '" + path + "'");
  return value;
}

}  // namespace detail

inline RgbRaster read_ppm(const std::string& path) {
  auto in = io::open_input(path, true);
  char magic[2] = {};
  if (!in.read(magic, 2) || magic[0] != 'P' || magic[1] != '6') {
    throw ValidationError("not a binary PPM (P6) file: '" + path + "'");
  }
  RgbRaster raster;
  raster.width = detail::read_ppm_number(in, path);
  raster.height = detail::read_ppm_number(in, path);
  const auto maxval = detail::read_ppm_number(in, path);
  if (raster.width == 0 || raster.height == 0) throw ValidationError("empty PPM image '" + path + "'");
  if (maxval != 255) throw ValidationError("PPM '" + path + "' is not 8-bit (maxval " + std::to_string(maxval) + ")");
  // Exactly one whitespace byte separates the header from the raster.
  const int sep = in.get();
  if (sep != ' ' && sep != '\n' && sep != '\r' && sep != '\t') {
    throw ValidationError("corrupt PPM header in '" + path + "'");
  }
  raster.bytes.resize(raster.width * raster.height * 3);
  if (!in.read(reinterpret_cast<char*>(raster.bytes.data()), static_cast<std::streamsize>(raster.bytes.size()))) {
    throw ValidationError("truncated PPM raster in '" + path + "'");
  }
  return raster;
}

inline void write_ppm(const std::string& path, const RgbRaster& raster) {
  auto out = io::open_output(path, true);
  out << "P6\n" << raster.width << ' ' << raster.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(raster.bytes.data()), static_cast<std::streamsize>(raster.bytes.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

/// Bilinear resize to 32x32 with half-pixel centers, bytes scaled by 1/255.
/// Interpolation is written as a + f*(b - a) so constant regions stay exactly
/// constant and a 32x32 input is reproduced bit for bit.
inline Image resize_to_image(const RgbRaster& raster) {
  const auto src_w = raster.width;
  const auto src_h = raster.height;
  const auto sample = [&](std::size_t c, std::size_t y, std::size_t x) {
    return static_cast<double>(static_cast<float>(raster.bytes[(y * src_w + x) * 3 + c]) / 255.0f);
  };
  const auto source_coord = [](std::size_t dst, std::size_t src_len, std::size_t& lo, std::size_t& hi, double& frac) {
    const double scale = static_cast<double>(src_len) / static_cast<double>(kImageSide);
    double s = (static_cast<double>(dst) + 0.5) * scale - 0.5;
    if (s < 0.0) s = 0.0;
    if (s > static_cast<double>(src_len - 1)) s = static_cast<double>(src_len - 1);
    lo = static_cast<std::size_t>(std::floor(s));
    hi = std::min(lo + 1, src_len - 1);
    frac = s - static_cast<double>(lo);
  };

  Image image;
  for (std::size_t y = 0; y < kImageSide; ++y) {
    std::size_t y0 = 0, y1 = 0;
    double fy = 0;
    source_coord(y, src_h, y0, y1, fy);
    for (std::size_t x = 0; x < kImageSide; ++x) {
      std::size_t x0 = 0, x1 = 0;
      double fx = 0;
      source_coord(x, src_w, x0, x1, fx);
      for (std::size_t c = 0; c < kImageChannels; ++c) {
        const double a = sample(c, y0, x0), b = sample(c, y0, x1);
        const double d = sample(c, y1, x0), e = sample(c, y1, x1);
        const double top = a + fx * (b - a);
        const double bottom = d + fx * (e - d);
        image.at(c, y, x) = static_cast<float>(top + fy * (bottom - top));
      }
    }
  }
  return image;
}

inline Image load_ppm_image(const std::string& path) { return resize_to_image(read_ppm(path)); }

/// Directory name for a term: ASCII punctuation is percent-encoded ("," -> "%2C").
inline std::string term_directory_name(std::string_view term) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string name;
  for (char c : term) {
    if (detail::is_ascii_punct(c)) {
      const auto byte = static_cast<unsigned char>(c);
      name.push_back('%');
      name.push_back(kHex[byte >> 4]);
      name.push_back(kHex[byte & 0xF]);
    } else {
      name.push_back(c);
    }
  }
  return name;
}

/// Supplies the five images for a term. Implementations must be
/// deterministic and safe to call from several threads at once.
class ImageSource {
 public:
  virtual ~ImageSource() = default;
  virtual std::vector<Image> images_for(std::string_view term) const = 0;
};

/// Reads `<root>/<term>/<k>.ppm` for k in 0..4. Missing images are replaced by
/// repeating the last one found, or by blanks when none exist; every such
/// shortfall lands in the coverage report.
class DirectorySource final : public ImageSource {
 public:
  explicit DirectorySource(std::filesystem::path root) : root_(std::move(root)) {
    if (!std::filesystem::is_directory(root_)) {
      throw ValidationError("image root '" + root_.string() + "' is not a directory");
    }
  }

  std::vector<Image> images_for(std::string_view term) const override {
    const auto dir = root_ / term_directory_name(term);
    std::vector<Image> images;
    for (std::size_t k = 0; k < kImagesPerTerm; ++k) {
      const auto file = dir / (std::to_string(k) + ".ppm");
      if (std::filesystem::is_regular_file(file)) images.push_back(load_ppm_image(file.string()));
    }
    const auto found = images.size();
    if (found < kImagesPerTerm) {
      const Image filler = images.empty() ? blank_image() : images.back();
      images.resize(kImagesPerTerm, filler);
      std::lock_guard lock(mutex_);
      shortfalls_[std::string(term)] = found;
    }
    return images;
  }

  /// term -> number of images actually found, for terms with fewer than five.
  std::map<std::string, std::size_t> coverage() const {
    std::lock_guard lock(mutex_);
    return shortfalls_;
  }

  void write_coverage_report(std::ostream& out) const {
    for (const auto& [term, found] : coverage()) out << term << '\t' << found << '\n';
  }

 private:
  std::filesystem::path root_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::size_t> shortfalls_;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// FNV-1a.
inline std::uint64_t hash64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Counter-based generator: output n is a pure function of (key, n).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next() { return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ull); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace detail

/// Procedural stand-in for photographs: a saturated background with a
/// rectangle and a disc in other saturated colors. Pixel values sit near 0 or
/// 1 so that a reconstruction loss has real structure to learn.
class SyntheticSource final : public ImageSource {
 public:
  explicit SyntheticSource(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  Image image_for(std::string_view term, std::size_t slot) const {
    const auto key = detail::mix64(seed_ ^ detail::mix64(detail::hash64(term) ^ detail::mix64(slot + 1)));
    detail::CounterRng rng(key);
    const auto color = [&rng] {
      std::array<double, 3> rgb{};
      for (auto& v : rgb) v = rng.uniform() < 0.5 ? rng.uniform(0.02, 0.15) : rng.uniform(0.85, 0.98);
      return rgb;
    };
    const auto background = color();
    const auto rect_color = color();
    const auto disc_color = color();
    const double side = static_cast<double>(kImageSide);
    const double rx0 = rng.uniform(0, side * 0.6), ry0 = rng.uniform(0, side * 0.6);
    const double rx1 = rx0 + rng.uniform(side * 0.2, side * 0.4), ry1 = ry0 + rng.uniform(side * 0.2, side * 0.4);
    const double cx = rng.uniform(side * 0.2, side * 0.8), cy = rng.uniform(side * 0.2, side * 0.8);
    const double radius = rng.uniform(side * 0.1, side * 0.3);

    Image image;
    for (std::size_t y = 0; y < kImageSide; ++y) {
      for (std::size_t x = 0; x < kImageSide; ++x) {
        const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
        const auto* rgb = &background;
        if (px >= rx0 && px < rx1 && py >= ry0 && py < ry1) rgb = &rect_color;
        if ((px - cx) * (px - cx) + (py - cy) * (py - cy) <= radius * radius) rgb = &disc_color;
        for (std::size_t c = 0; c < kImageChannels; ++c) image.at(c, y, x) = static_cast<float>((*rgb)[c]);
      }
    }
    return image;
  }

  std::vector<Image> images_for(std::string_view term) const override {
    std::vector<Image> images;
    images.reserve(kImagesPerTerm);
    for (std::size_t k = 0; k < kImagesPerTerm; ++k) images.push_back(image_for(term, k));
    return images;
  }

 private:
  std::uint64_t seed_;
};

/// Parses an image-source location: `synthetic:<seed>` or a directory path.
inline std::unique_ptr<ImageSource> make_image_source(const std::string& location) {
  constexpr std::string_view kSynthetic = "synthetic:";
  if (location.rfind(kSynthetic, 0) == 0) {
    const auto digits = location.substr(kSynthetic.size());
    std::size_t used = 0;
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(digits, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (digits.empty() || used != digits.size()) throw ValidationError("bad synthetic seed in '" + location + "'");
    return std::make_unique<SyntheticSource>(seed);
  }
  return std::make_unique<DirectorySource>(location);
}

struct ImageSet {
  std::string word;
  std::vector<Image> images;  // kImageSetSize entries
};

inline std::vector<Image> checked_images(const ImageSource& source, std::string_view term) {
  auto images = source.images_for(term);
  if (images.size() != kImagesPerTerm) {
    throw Error("image source returned " + std::to_string(images.size()) + " images for '" + std::string(term) +
                "', expected 5");
  }
  for (const auto& image : images) {
    if (image.pixels.size() != kImagePixels) throw Error("image source returned a mis-sized image");
  }
  return images;
}

/// [word x5] ++ [term_1 x5] ++ ... ++ [term_19 x5]; PAD slots are blank and
/// never reach the source.
inline ImageSet assemble_image_set(const DefinitionEntry& entry, const ImageSource& source) {
  ImageSet set;
  set.word = entry.word;
  set.images.reserve(kImageSetSize);
  for (auto& image : checked_images(source, entry.word)) set.images.push_back(std::move(image));
  for (std::size_t i = 0; i < kDefinitionLength; ++i) {
    if (entry.is_pad(i)) {
      set.images.insert(set.images.end(), kImagesPerTerm, blank_image());
    } else {
      for (auto& image : checked_images(source, entry.terms[i])) set.images.push_back(std::move(image));
    }
  }
  return set;
}

}  // namespace defvec
