#pragma once

// Image gradient and level-line orientation field.

#include <cmath>
#include <numbers>
#include <vector>

#include "hatlsd/error.hpp"
#include "hatlsd/image.hpp"

namespace hatlsd {

/// 2x2 forward-difference gradient. The value stored at (x, y) describes the
/// block {x, x+1} x {y, y+1}, i.e. the point (x + 0.5, y + 0.5). The last row
/// and column have no block and are marked invalid.
struct Gradient {
  int width = 0;
  int height = 0;
  std::vector<double> gx;
  std::vector<double> gy;
  std::vector<bool> defined;

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
};

inline Gradient gradient(const GrayImage& img) {
  if (img.width() < 2 || img.height() < 2) throw ParamError("gradient needs an image of at least 2x2");
  Gradient g;
  g.width = img.width();
  g.height = img.height();
  const auto n = img.data().size();
  g.gx.assign(n, 0.0);
  g.gy.assign(n, 0.0);
  g.defined.assign(n, false);
  for (int y = 0; y + 1 < g.height; ++y) {
    for (int x = 0; x + 1 < g.width; ++x) {
      const double a = img(x, y), b = img(x + 1, y);
      const double c = img(x, y + 1), d = img(x + 1, y + 1);
      const auto i = g.index(x, y);
      g.gx[i] = 0.5 * ((b + d) - (a + c));
      g.gy[i] = 0.5 * ((c + d) - (a + b));
      g.defined[i] = true;
    }
  }
  return g;
}

/// Per-pixel direction of the level line (orthogonal to the gradient).
struct LevelLineField {
  int width = 0;
  int height = 0;
  std::vector<double> angle;
  std::vector<double> magnitude;
  std::vector<bool> valid;

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
  bool is_valid(int x, int y) const { return valid[index(x, y)]; }
  double angle_at(int x, int y) const { return angle[index(x, y)]; }
  std::size_t valid_count() const {
    std::size_t n = 0;
    for (bool v : valid) n += v ? 1 : 0;
    return n;
  }
};

/// Gradient-magnitude threshold below which the quantization error of an
/// 8-bit image can shift the orientation by more than the tolerance.
inline double default_gradient_threshold(double quantization_q = 2.0,
                                         double angle_tolerance = std::numbers::pi / 8) {
  return quantization_q / std::sin(angle_tolerance);
}

inline LevelLineField level_line_field(const GrayImage& img, double gradient_threshold) {
  if (!(gradient_threshold >= 0.0)) throw ParamError("gradient threshold must be >= 0");
  const Gradient g = gradient(img);
  LevelLineField f;
  f.width = g.width;
  f.height = g.height;
  const auto n = g.gx.size();
  f.angle.assign(n, 0.0);
  f.magnitude.assign(n, 0.0);
  f.valid.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (!g.defined[i]) continue;
    const double m = std::hypot(g.gx[i], g.gy[i]);
    f.magnitude[i] = m;
    // A zero threshold still needs a direction to be defined.
    if (m >= gradient_threshold && m > 0.0) {
      f.angle[i] = std::atan2(g.gx[i], -g.gy[i]);
      f.valid[i] = true;
    }
  }
  return f;
}

}  // namespace hatlsd
