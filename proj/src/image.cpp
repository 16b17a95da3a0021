#include "ocular/image.hpp"

#include "ocular/error.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

namespace ocular {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

namespace {

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  if (header_token(in) != "P5") throw Error(ErrorKind::IoFailure, path.string() + " is not a P5 PGM");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(header_token(in));
    h = std::stoi(header_token(in));
    maxval = std::stoi(header_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorKind::IoFailure, "malformed PGM header in " + path.string());
  }
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) {
    throw Error(ErrorKind::IoFailure, "bad PGM dimensions in " + path.string());
  }
  GrayImage img(w, h);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (maxval < 256) {
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n))
      throw Error(ErrorKind::IoFailure, "truncated PGM " + path.string());
    if (maxval != 255) {
      for (auto& p : img.pixels) p = static_cast<std::uint8_t>(std::min(255, p * 255 / maxval));
    }
  } else {
    std::vector<unsigned char> raw(2 * n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
      throw Error(ErrorKind::IoFailure, "truncated PGM " + path.string());
    for (std::size_t i = 0; i < n; ++i) {
      const int v = (raw[2 * i] << 8) | raw[2 * i + 1];
      img.pixels[i] = static_cast<std::uint8_t>(v * 255 / maxval);
    }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

GrayImage read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw Error(ErrorKind::IoFailure, "cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_GRAY;
  GrayImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorKind::IoFailure, "cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

GrayImage read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".png") return read_png(path);
  throw Error(ErrorKind::IoFailure, "unsupported image format: " + path.string());
}

GrayImage orient(const GrayImage& image, int rotate_deg, bool flip_u, bool flip_v) {
  const int r = ((rotate_deg % 360) + 360) % 360;
  if (r % 90 != 0) throw Error(ErrorKind::OutOfRange, "rotation must be a multiple of 90 degrees");
  const int quarter = r / 90;
  const int w = image.width, h = image.height;
  GrayImage out = (quarter % 2 == 0) ? GrayImage(w, h) : GrayImage(h, w);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      int nu = u, nv = v;
      // Counter-clockwise as displayed (v grows downwards).
      switch (quarter) {
        case 1: nu = v; nv = w - 1 - u; break;
        case 2: nu = w - 1 - u; nv = h - 1 - v; break;
        case 3: nu = h - 1 - v; nv = u; break;
        default: break;
      }
      out.at(nu, nv) = image.at(u, v);
    }
  if (flip_u || flip_v) {
    GrayImage f(out.width, out.height);
    for (int v = 0; v < out.height; ++v)
      for (int u = 0; u < out.width; ++u)
        f.at(flip_u ? out.width - 1 - u : u, flip_v ? out.height - 1 - v : v) = out.at(u, v);
    return f;
  }
  return out;
}

}  // namespace ocular
