#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ocular {

/// 8-bit grayscale raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int u, int v) const { return pixels[static_cast<std::size_t>(v) * width + u]; }
  std::uint8_t& at(int u, int v) { return pixels[static_cast<std::size_t>(v) * width + u]; }
  bool operator==(const GrayImage&) const = default;
};

/// Binary raster, one byte per pixel (0 or 1).
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  bool at(int u, int v) const { return bits[static_cast<std::size_t>(v) * width + u] != 0; }
  void set(int u, int v, bool on = true) {
    bits[static_cast<std::size_t>(v) * width + u] = on ? 1 : 0;
  }
  std::size_t count() const;
  bool operator==(const BinaryMask&) const = default;
};

/// Binary (P5) PGM. 16-bit files are reduced to 8 bits; other maxvals are
/// rescaled to 0..255.
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// 8-bit grayscale PNG (other PNG colour types are converted to gray).
GrayImage read_png(const std::filesystem::path& path);

/// Dispatches on the extension (.pgm or .png).
GrayImage read_image(const std::filesystem::path& path);

/// Counter-clockwise rotation by a multiple of 90 degrees followed by optional
/// flips, used to bring camera images into the reconstruction convention.
GrayImage orient(const GrayImage& image, int rotate_deg, bool flip_u, bool flip_v);

}  // namespace ocular
