#pragma once

// Grayscale image container, PGM/PNG file I/O and homography resampling.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <png.h>

#include "hatlsd/error.hpp"
#include "hatlsd/geometry.hpp"

namespace hatlsd {

/// Row-major intensities in [0, 255].
class GrayImage {
 public:
  GrayImage() = default;

  GrayImage(int width, int height, double fill = 0.0)
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw ParamError("negative image size");
    check_value(fill);
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  GrayImage(int width, int height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 0 || height < 0) throw ParamError("negative image size");
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw ParamError("image data length does not match width x height");
    for (double v : data_) check_value(v);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  Size size() const { return {height_, width_}; }
  bool empty() const { return data_.empty(); }

  double operator()(int x, int y) const { return data_[index(x, y)]; }

  /// Unchecked range is the caller's responsibility; the value is clamped.
  void set(int x, int y, double v) { data_[index(x, y)] = std::clamp(v, 0.0, 255.0); }

  std::span<const double> data() const { return data_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  static void check_value(double v) {
    if (!std::isfinite(v) || v < 0.0 || v > 255.0)
      throw ParamError("image intensity outside [0, 255]");
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return bytes;
}

inline void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 255.0)));
}

inline GrayImage decode_pgm(std::span<const unsigned char> bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw FormatError("malformed PGM header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > (1L << 30)) throw FormatError("PGM dimension too large");
    }
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw FormatError("not a binary PGM");
  pos = 2;
  const long w = read_int();
  const long h = read_int();
  const long maxval = read_int();
  if (maxval != 255) throw FormatError("unsupported PGM bit depth (maxval must be 255)");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("malformed PGM header");
  ++pos;
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - pos < n) throw FormatError("truncated PGM payload");
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = bytes[pos + i];
  return {static_cast<int>(w), static_cast<int>(h), std::move(data)};
}

inline std::vector<unsigned char> encode_pgm(const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.reserve(out.size() + img.data().size());
  for (double v : img.data()) out.push_back(to_byte(v));
  return out;
}

inline GrayImage decode_png(std::span<const unsigned char> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw FormatError(std::string("bad PNG: ") + image.message);
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw FormatError("unsupported PNG bit depth (16-bit)");
  }
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int channels = gray ? 1 : 3;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("bad PNG: " + msg);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<double> data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (channels == 1) {
      data[i] = buf[i];
    } else {
      // ITU-R 601 luma.
      data[i] = 0.299 * buf[3 * i] + 0.587 * buf[3 * i + 1] + 0.114 * buf[3 * i + 2];
    }
  }
  return {w, h, std::move(data)};
}

inline std::vector<unsigned char> encode_png(const GrayImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> pixels;
  pixels.reserve(img.data().size());
  for (double v : img.data()) pixels.push_back(to_byte(v));
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr))
    throw FormatError(std::string("PNG encoding failed: ") + image.message);
  std::vector<unsigned char> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr))
    throw FormatError(std::string("PNG encoding failed: ") + image.message);
  out.resize(size);
  return out;
}

inline bool has_png_signature(std::span<const unsigned char> bytes) {
  static constexpr unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::equal(sig, sig + 8, bytes.begin());
}

}  // namespace detail

/// Loads binary PGM (P5, maxval 255) or 8-bit gray/RGB PNG. The format is
/// sniffed from the file contents.
inline GrayImage load_image(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    if (detail::has_png_signature(bytes)) return detail::decode_png(bytes);
    return detail::decode_pgm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// Writes PNG when the extension is .png, PGM otherwise. Values are rounded
/// to the nearest integer.
inline void save_image(const GrayImage& img, const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png" || ext == ".PNG")
    detail::write_file(path, detail::encode_png(img));
  else
    detail::write_file(path, detail::encode_pgm(img));
}

/// Bilinear sample with border replication.
inline double sample_bilinear(const GrayImage& img, double x, double y) {
  const double cx = std::clamp(x, 0.0, img.width() - 1.0);
  const double cy = std::clamp(y, 0.0, img.height() - 1.0);
  const int x0 = static_cast<int>(std::floor(cx));
  const int y0 = static_cast<int>(std::floor(cy));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = cx - x0;
  const double fy = cy - y0;
  const double top = (1 - fx) * img(x0, y0) + fx * img(x1, y0);
  const double bottom = (1 - fx) * img(x0, y1) + fx * img(x1, y1);
  return (1 - fy) * top + fy * bottom;
}

/// Image b with b(h(p)) = a(p); out-of-frame samples replicate the border.
inline GrayImage warp_image(const GrayImage& src, const Homography& h) {
  if (h.is_identity()) return src;
  const Homography inv = h.inverse();
  std::vector<double> out(src.data().size());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      const auto& m = inv.matrix();
      const double w = m(2, 0) * x + m(2, 1) * y + m(2, 2);
      double v;
      if (std::abs(w) < 1e-12) {
        v = src(0, 0);
      } else {
        const double sx = (m(0, 0) * x + m(0, 1) * y + m(0, 2)) / w;
        const double sy = (m(1, 0) * x + m(1, 1) * y + m(1, 2)) / w;
        v = sample_bilinear(src, sx, sy);
      }
      out[static_cast<std::size_t>(y) * static_cast<std::size_t>(src.width()) +
          static_cast<std::size_t>(x)] = std::clamp(v, 0.0, 255.0);
    }
  }
  return {src.width(), src.height(), std::move(out)};
}

}  // namespace hatlsd
