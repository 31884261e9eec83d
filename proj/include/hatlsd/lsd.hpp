#pragma once

// Gradient-based line segment detector with a-contrario validation.
//
// Pipeline: optional Gaussian prescale, level-line field, seeds pseudo-sorted
// by gradient magnitude, region growing on the level-line orientation,
// rectangle approximation, density refinement, NFA validation and rectangle
// improvement. Orientations are compared modulo pi, so both flanks of a thin
// stroke join one region; an alignment within the tolerance tol then has
// probability p = 2 tol / pi under the noise model.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "hatlsd/detection.hpp"
#include "hatlsd/error.hpp"
#include "hatlsd/geometry.hpp"
#include "hatlsd/gradient.hpp"
#include "hatlsd/image.hpp"
#include "hatlsd/nfa.hpp"

namespace hatlsd {

struct LsdParams {
  double angle_tolerance = std::numbers::pi / 8;
  double quantization_q = 2.0;
  double log_eps = 0.0;
  /// 0 selects the smallest size that could ever be meaningful.
  int min_region_size = 0;
  double density_threshold = 0.7;
  double scale = 1.0;
  double sigma_scale = 0.6;

  void validate() const {
    if (!(angle_tolerance > 0.0 && angle_tolerance < std::numbers::pi / 2))
      throw ParamError("angle tolerance must lie in (0, pi/2)");
    if (!(quantization_q >= 0.0)) throw ParamError("quantization must be >= 0");
    if (!(log_eps >= 0.0)) throw ParamError("log_eps must be >= 0");
    if (min_region_size < 0) throw ParamError("min region size must be >= 0");
    if (!(density_threshold > 0.0 && density_threshold <= 1.0))
      throw ParamError("density threshold must lie in (0, 1]");
    if (!(scale > 0.0 && scale <= 1.0)) throw ParamError("scale must lie in (0, 1]");
    if (!(sigma_scale > 0.0)) throw ParamError("sigma scale must be positive");
  }

  double alignment_probability() const { return 2.0 * angle_tolerance / std::numbers::pi; }

  friend bool operator==(const LsdParams&, const LsdParams&) = default;
};

struct RegionRect {
  Point2 center;
  double angle = 0.0;
  double length = 0.0;
  double width = 0.0;
  std::int64_t aligned_count = 0;
  std::int64_t total_count = 0;
  double nfa_log10 = 0.0;
};

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(Pixel, Pixel) = default;
};

struct Region {
  std::vector<Pixel> pixels;
  /// Mean level-line orientation, modulo pi.
  double angle = 0.0;
};

/// Accepted region with the pixels that supported it. Coordinates of the
/// rectangle are in output image pixels.
struct LsdRegion {
  RegionRect rect;
  std::vector<Pixel> pixels;
  double density = 0.0;
};

struct LsdOutput {
  DetectionResult detections;
  std::vector<LsdRegion> regions;
  /// Size of the grid the regions live on (differs when prescaling).
  Size grid;
};

/// Grows an 8-connected region of pixels whose level-line orientation stays
/// within tol of the running mean. The mean is the doubled-angle vector
/// average. Every pixel added is marked in `used`.
inline Region region_grow(const LevelLineField& llf, Pixel seed, double tol,
                          std::vector<std::uint8_t>& used) {
  Region r;
  auto idx = [&](int x, int y) { return llf.index(x, y); };
  const double a0 = llf.angle[idx(seed.x, seed.y)];
  double sum_c = std::cos(2.0 * a0);
  double sum_s = std::sin(2.0 * a0);
  r.angle = a0;
  r.pixels.push_back(seed);
  used[idx(seed.x, seed.y)] = 1;
  for (std::size_t i = 0; i < r.pixels.size(); ++i) {
    const Pixel p = r.pixels[i];
    for (int yy = p.y - 1; yy <= p.y + 1; ++yy) {
      for (int xx = p.x - 1; xx <= p.x + 1; ++xx) {
        if (xx < 0 || yy < 0 || xx >= llf.width || yy >= llf.height) continue;
        const auto k = idx(xx, yy);
        if (used[k] || !llf.valid[k]) continue;
        if (orientation_diff(llf.angle[k], r.angle) > tol) continue;
        used[k] = 1;
        r.pixels.push_back({xx, yy});
        sum_c += std::cos(2.0 * llf.angle[k]);
        sum_s += std::sin(2.0 * llf.angle[k]);
        r.angle = 0.5 * std::atan2(sum_s, sum_c);
      }
    }
  }
  return r;
}

namespace detail {

struct Rect {
  double x1, y1, x2, y2;
  double width;
  double x, y;
  double theta;
  double dx, dy;
  double prec;
  double p;
};

inline double rect_length(const Rect& r) { return std::hypot(r.x2 - r.x1, r.y2 - r.y1); }

inline Rect region_to_rect(const std::vector<Pixel>& reg, const LevelLineField& llf,
                           double reg_angle, double prec, double p) {
  double x = 0, y = 0, sum = 0;
  for (const auto& q : reg) {
    const double w = llf.magnitude[llf.index(q.x, q.y)];
    x += q.x * w;
    y += q.y * w;
    sum += w;
  }
  x /= sum;
  y /= sum;

  double ixx = 0, iyy = 0, ixy = 0;
  for (const auto& q : reg) {
    const double w = llf.magnitude[llf.index(q.x, q.y)];
    ixx += (q.y - y) * (q.y - y) * w;
    iyy += (q.x - x) * (q.x - x) * w;
    ixy -= (q.x - x) * (q.y - y) * w;
  }
  const double lambda = 0.5 * (ixx + iyy - std::sqrt((ixx - iyy) * (ixx - iyy) + 4.0 * ixy * ixy));
  double theta = std::abs(ixx) > std::abs(iyy) ? std::atan2(lambda - ixx, ixy)
                                               : std::atan2(ixy, lambda - iyy);
  // Orientation is only defined modulo pi; keep the branch closest to the
  // region angle so the rectangle and the region agree.
  if (std::abs(wrap_angle(theta - reg_angle)) > std::numbers::pi / 2) theta = wrap_angle(theta + std::numbers::pi);

  const double dx = std::cos(theta), dy = std::sin(theta);
  double lmin = 0, lmax = 0, wmin = 0, wmax = 0;
  for (const auto& q : reg) {
    const double l = (q.x - x) * dx + (q.y - y) * dy;
    const double w = -(q.x - x) * dy + (q.y - y) * dx;
    lmin = std::min(lmin, l);
    lmax = std::max(lmax, l);
    wmin = std::min(wmin, w);
    wmax = std::max(wmax, w);
  }
  Rect r{};
  r.x1 = x + lmin * dx;
  r.y1 = y + lmin * dy;
  r.x2 = x + lmax * dx;
  r.y2 = y + lmax * dy;
  r.width = std::max(wmax - wmin, 1.0);
  r.x = x;
  r.y = y;
  r.theta = theta;
  r.dx = dx;
  r.dy = dy;
  r.prec = prec;
  r.p = p;
  return r;
}

struct RectCount {
  std::int64_t total = 0;
  std::int64_t aligned = 0;
};

// Pixels whose centers fall inside the rectangle.
inline RectCount count_rect(const Rect& r, const LevelLineField& llf) {
  const double len = rect_length(r);
  const double hw = r.width / 2.0;
  const double nx = -r.dy, ny = r.dx;
  const std::array<double, 4> cx{r.x1 + nx * hw, r.x1 - nx * hw, r.x2 + nx * hw, r.x2 - nx * hw};
  const std::array<double, 4> cy{r.y1 + ny * hw, r.y1 - ny * hw, r.y2 + ny * hw, r.y2 - ny * hw};
  const int x0 = std::max(0, static_cast<int>(std::floor(*std::min_element(cx.begin(), cx.end()))));
  const int x1 = std::min(llf.width - 1, static_cast<int>(std::ceil(*std::max_element(cx.begin(), cx.end()))));
  const int y0 = std::max(0, static_cast<int>(std::floor(*std::min_element(cy.begin(), cy.end()))));
  const int y1 = std::min(llf.height - 1, static_cast<int>(std::ceil(*std::max_element(cy.begin(), cy.end()))));
  RectCount c;
  constexpr double eps = 1e-9;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double qx = x - r.x1, qy = y - r.y1;
      const double t = qx * r.dx + qy * r.dy;
      const double w = qx * nx + qy * ny;
      if (t < -eps || t > len + eps || std::abs(w) > hw + eps) continue;
      ++c.total;
      const auto k = llf.index(x, y);
      if (llf.valid[k] && orientation_diff(llf.angle[k], r.theta) <= r.prec) ++c.aligned;
    }
  }
  return c;
}

inline double rect_nfa(const Rect& r, const LevelLineField& llf, double n_tests) {
  const RectCount c = count_rect(r, llf);
  return nfa_log10(c.total, c.aligned, r.p, n_tests);
}

inline double region_density(std::size_t reg_size, const Rect& r) {
  return static_cast<double>(reg_size) / (std::max(rect_length(r), 1.0) * r.width);
}

inline void release(const std::vector<Pixel>& reg, const LevelLineField& llf,
                    std::vector<std::uint8_t>& used) {
  for (const auto& q : reg) used[llf.index(q.x, q.y)] = 0;
}

inline constexpr int kMaxRadiusReductions = 5;

// Shrinks the region around its seed until it is dense enough. At most
// kMaxRadiusReductions attempts.
inline bool reduce_region_radius(Region& reg, Rect& rect, const LevelLineField& llf,
                                 std::vector<std::uint8_t>& used, double density_th) {
  double density = region_density(reg.pixels.size(), rect);
  if (density >= density_th) return true;
  const Pixel seed = reg.pixels.front();
  double rad = std::max(std::hypot(seed.x - rect.x1, seed.y - rect.y1),
                        std::hypot(seed.x - rect.x2, seed.y - rect.y2));
  for (int attempt = 0; attempt < kMaxRadiusReductions && density < density_th; ++attempt) {
    rad *= 0.75;
    std::vector<Pixel> kept;
    for (const auto& q : reg.pixels) {
      if (std::hypot(q.x - seed.x, q.y - seed.y) <= rad)
        kept.push_back(q);
      else
        used[llf.index(q.x, q.y)] = 0;
    }
    reg.pixels = std::move(kept);
    if (reg.pixels.size() < 2) return false;
    rect = region_to_rect(reg.pixels, llf, reg.angle, rect.prec, rect.p);
    density = region_density(reg.pixels.size(), rect);
  }
  return density >= density_th;
}

// Density refinement: regrow with a tolerance estimated from the pixels near
// the seed, then fall back on radius reduction.
inline bool refine(Region& reg, Rect& rect, const LevelLineField& llf,
                   std::vector<std::uint8_t>& used, double density_th) {
  if (region_density(reg.pixels.size(), rect) >= density_th) return true;
  const Pixel seed = reg.pixels.front();
  const double ang_c = llf.angle[llf.index(seed.x, seed.y)];
  double sum = 0, s_sum = 0;
  int n = 0;
  for (const auto& q : reg.pixels) {
    used[llf.index(q.x, q.y)] = 0;
    if (std::hypot(seed.x - q.x, seed.y - q.y) < rect.width) {
      // Signed orientation difference modulo pi.
      double d = std::remainder(llf.angle[llf.index(q.x, q.y)] - ang_c, std::numbers::pi);
      sum += d;
      s_sum += d * d;
      ++n;
    }
  }
  if (n == 0) return false;
  const double mean = sum / n;
  const double tau = 2.0 * std::sqrt(std::max(0.0, (s_sum - 2.0 * mean * sum) / n + mean * mean));
  if (!(tau > 0.0)) {
    // Regrowing with zero tolerance would only keep exact copies of the seed angle.
    for (const auto& q : reg.pixels) used[llf.index(q.x, q.y)] = 1;
    return reduce_region_radius(reg, rect, llf, used, density_th);
  }
  reg = region_grow(llf, seed, tau, used);
  if (reg.pixels.size() < 2) return false;
  rect = region_to_rect(reg.pixels, llf, reg.angle, rect.prec, rect.p);
  if (region_density(reg.pixels.size(), rect) >= density_th) return true;
  return reduce_region_radius(reg, rect, llf, used, density_th);
}

inline double rect_improve(Rect& rec, const LevelLineField& llf, double n_tests, double log_eps) {
  constexpr double delta = 0.5;
  constexpr double delta_2 = delta / 2.0;
  double log_nfa = rect_nfa(rec, llf, n_tests);
  if (log_nfa > log_eps) return log_nfa;

  auto try_finer = [&] {
    Rect r = rec;
    for (int n = 0; n < 5; ++n) {
      r.p /= 2.0;
      r.prec = r.p * std::numbers::pi / 2.0;
      const double v = rect_nfa(r, llf, n_tests);
      if (v > log_nfa) {
        log_nfa = v;
        rec = r;
      }
    }
  };
  try_finer();
  if (log_nfa > log_eps) return log_nfa;

  {
    Rect r = rec;
    for (int n = 0; n < 5; ++n) {
      if (r.width - delta >= 0.5) {
        r.width -= delta;
        const double v = rect_nfa(r, llf, n_tests);
        if (v > log_nfa) {
          rec = r;
          log_nfa = v;
        }
      }
    }
  }
  if (log_nfa > log_eps) return log_nfa;

  for (double side : {1.0, -1.0}) {
    Rect r = rec;
    for (int n = 0; n < 5; ++n) {
      if (r.width - delta >= 0.5) {
        r.x1 += -side * r.dy * delta_2;
        r.y1 += side * r.dx * delta_2;
        r.x2 += -side * r.dy * delta_2;
        r.y2 += side * r.dx * delta_2;
        r.width -= delta;
        const double v = rect_nfa(r, llf, n_tests);
        if (v > log_nfa) {
          rec = r;
          log_nfa = v;
        }
      }
    }
    if (log_nfa > log_eps) return log_nfa;
  }

  try_finer();
  return log_nfa;
}

// Separable Gaussian resampling by `scale` (< 1), sigma = sigma_scale / scale.
inline GrayImage gaussian_downsample(const GrayImage& in, double scale, double sigma_scale) {
  const double sigma = sigma_scale / scale;
  const int half = static_cast<int>(std::ceil(sigma * std::sqrt(2.0 * 3.0 * std::numbers::ln10)));
  const int ow = static_cast<int>(std::ceil(in.width() * scale));
  const int oh = static_cast<int>(std::ceil(in.height() * scale));
  auto reflect = [](int i, int n) {
    const int period = 2 * n;
    i = ((i % period) + period) % period;
    return i < n ? i : period - 1 - i;
  };
  auto weights_for = [&](double center, int& first) {
    first = static_cast<int>(std::floor(center)) - half;
    std::vector<double> w(static_cast<std::size_t>(2 * half + 2));
    double sum = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double d = first + static_cast<double>(i) - center;
      w[i] = std::exp(-0.5 * d * d / (sigma * sigma));
      sum += w[i];
    }
    for (auto& v : w) v /= sum;
    return w;
  };
  std::vector<double> tmp(static_cast<std::size_t>(ow) * static_cast<std::size_t>(in.height()));
  for (int x = 0; x < ow; ++x) {
    int first = 0;
    const auto w = weights_for((x + 0.5) / scale - 0.5, first);
    for (int y = 0; y < in.height(); ++y) {
      double acc = 0;
      for (std::size_t i = 0; i < w.size(); ++i)
        acc += w[i] * in(reflect(first + static_cast<int>(i), in.width()), y);
      tmp[static_cast<std::size_t>(y) * static_cast<std::size_t>(ow) + static_cast<std::size_t>(x)] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * static_cast<std::size_t>(oh));
  for (int y = 0; y < oh; ++y) {
    int first = 0;
    const auto w = weights_for((y + 0.5) / scale - 0.5, first);
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (std::size_t i = 0; i < w.size(); ++i)
        acc += w[i] * tmp[static_cast<std::size_t>(reflect(first + static_cast<int>(i), in.height())) *
                              static_cast<std::size_t>(ow) + static_cast<std::size_t>(x)];
      out[static_cast<std::size_t>(y) * static_cast<std::size_t>(ow) + static_cast<std::size_t>(x)] =
          std::clamp(acc, 0.0, 255.0);
    }
  }
  return {ow, oh, std::move(out)};
}

}  // namespace detail

/// Number of tests of the a-contrario model: (W H)^(5/2).
inline double lsd_number_of_tests(Size grid) {
  return std::pow(static_cast<double>(grid.width) * grid.height, 2.5);
}

inline LsdOutput lsd_detect_detailed(const GrayImage& img, const LsdParams& params) {
  params.validate();
  if (img.width() < 8 || img.height() < 8) throw ParamError("lsd needs an image of at least 8x8");
  const GrayImage work =
      params.scale < 1.0 ? detail::gaussian_downsample(img, params.scale, params.sigma_scale) : img;

  const double tol = params.angle_tolerance;
  const double p = params.alignment_probability();
  const LevelLineField llf =
      level_line_field(work, default_gradient_threshold(params.quantization_q, tol));
  LsdOutput out;
  out.grid = work.size();
  out.detections.source = "lsd";
  out.detections.score_kind = "nfa_log10";
  const double n_tests = lsd_number_of_tests(out.grid);
  const double log_nt = std::log10(n_tests);
  const std::size_t min_size =
      params.min_region_size > 0 ? static_cast<std::size_t>(params.min_region_size)
                                 : static_cast<std::size_t>(-log_nt / std::log10(p));

  // Pseudo-sort: 1024 magnitude bins, raster order within a bin.
  constexpr int kBins = 1024;
  double max_mag = 0.0;
  for (std::size_t i = 0; i < llf.valid.size(); ++i)
    if (llf.valid[i]) max_mag = std::max(max_mag, llf.magnitude[i]);
  std::vector<std::pair<int, Pixel>> seeds;
  for (int y = 0; y < llf.height; ++y)
    for (int x = 0; x < llf.width; ++x) {
      const auto k = llf.index(x, y);
      if (!llf.valid[k]) continue;
      const int bin = std::min(kBins - 1, static_cast<int>(llf.magnitude[k] * kBins / max_mag));
      seeds.push_back({bin, {x, y}});
    }
  std::stable_sort(seeds.begin(), seeds.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  std::vector<std::uint8_t> used(llf.valid.size(), 0);
  const double inv_scale = 1.0 / params.scale;
  for (const auto& [bin, seed] : seeds) {
    if (used[llf.index(seed.x, seed.y)]) continue;
    Region reg = region_grow(llf, seed, tol, used);
    if (reg.pixels.size() < min_size) continue;
    detail::Rect rect = detail::region_to_rect(reg.pixels, llf, reg.angle, tol, p);
    if (!detail::refine(reg, rect, llf, used, params.density_threshold)) continue;
    const double density = detail::region_density(reg.pixels.size(), rect);
    const double log_nfa = detail::rect_improve(rect, llf, n_tests, params.log_eps);
    if (!(log_nfa >= params.log_eps)) continue;
    const double len = detail::rect_length(rect);
    if (len < rect.width) continue;

    // Gradient samples sit at block centers, half a pixel down-right.
    auto to_image = [&](double v) { return (v + 1.0) * inv_scale - 0.5; };
    const Point2 a{to_image(rect.x1), to_image(rect.y1)};
    const Point2 b{to_image(rect.x2), to_image(rect.y2)};
    if (a == b) continue;
    const auto counts = detail::count_rect(rect, llf);
    LsdRegion region;
    region.rect = {0.5 * (a + b), rect.theta, len * inv_scale, rect.width * inv_scale,
                   counts.aligned, counts.total, log_nfa};
    region.pixels = std::move(reg.pixels);
    region.density = density;
    out.detections.add(LineSegment(a, b), log_nfa);
    out.regions.push_back(std::move(region));
  }
  return out;
}

inline DetectionResult lsd_detect(const GrayImage& img, const LsdParams& params = {}) {
  return lsd_detect_detailed(img, params).detections;
}

}  // namespace hatlsd
