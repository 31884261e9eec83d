#pragma once

// SVG overlay of detections, optionally over the image as an embedded PNG.

#include <algorithm>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hatlsd/detection.hpp"
#include "hatlsd/geometry.hpp"
#include "hatlsd/image.hpp"

namespace hatlsd {

inline std::string base64_encode(std::span<const unsigned char> bytes) {
  static constexpr char tbl[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += tbl[(v >> 18) & 63];
    out += tbl[(v >> 12) & 63];
    out += tbl[(v >> 6) & 63];
    out += tbl[v & 63];
  }
  if (i < bytes.size()) {
    const bool two = i + 1 < bytes.size();
    const unsigned v = (bytes[i] << 16) | (two ? bytes[i + 1] << 8 : 0);
    out += tbl[(v >> 18) & 63];
    out += tbl[(v >> 12) & 63];
    out += two ? tbl[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

namespace detail {

inline std::string fixed3(double v) {
  char b[48];
  std::snprintf(b, sizeof b, "%.3f", v);
  std::string s = b;
  return s == "-0.000" ? "0.000" : s;
}

}  // namespace detail

/// Canvas size covering the segments when no image is at hand.
inline Size svg_extent(const DetectionResult& det) {
  double w = 1.0, h = 1.0;
  for (const auto& s : det.segments) {
    w = std::max({w, s.p0().x + 1.0, s.p1().x + 1.0});
    h = std::max({h, s.p0().y + 1.0, s.p1().y + 1.0});
  }
  return {static_cast<int>(std::ceil(h)), static_cast<int>(std::ceil(w))};
}

/// One path per segment, stroke width 1, opacity 0.25 + 0.75 * score / max score.
inline std::string render_svg(const DetectionResult& det, Size size, const GrayImage* underlay = nullptr) {
  std::string out;
  const std::string w = std::to_string(size.width), h = std::to_string(size.height);
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + w + "\" height=\"" + h +
         "\" viewBox=\"0 0 " + w + " " + h + "\">\n";
  if (underlay) {
    const auto png = detail::encode_png(*underlay);
    out += "<image x=\"0\" y=\"0\" width=\"" + w + "\" height=\"" + h +
           "\" href=\"data:image/png;base64," + base64_encode(png) + "\"/>\n";
  }
  double top = 0.0;
  for (double c : det.confidence) top = std::max(top, c);
  // Pixel centers sit at integer coordinates; SVG puts them at +0.5.
  for (std::size_t i = 0; i < det.size(); ++i) {
    const auto& s = det.segments[i];
    const double op = top > 0.0 ? 0.25 + 0.75 * det.confidence[i] / top : 1.0;
    out += "<path d=\"M " + detail::fixed3(s.p0().x + 0.5) + " " + detail::fixed3(s.p0().y + 0.5) + " L " +
           detail::fixed3(s.p1().x + 0.5) + " " + detail::fixed3(s.p1().y + 0.5) +
           "\" fill=\"none\" stroke=\"#ff2020\" stroke-width=\"1\" stroke-opacity=\"" + detail::fixed3(op) +
           "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace hatlsd
