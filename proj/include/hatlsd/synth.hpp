#pragma once

// Synthetic primitive renderer with exact line-segment ground truth.
//
// Meaning of PrimitiveSpec::count and ::size per kind:
//
//   kind                  count                   size (px)
//   line                  number of lines         segment length
//   polygon               vertices                circumradius (filled)
//   star                  star points             outer radius (outline)
//   cube_wireframe        cubes                   cube edge length
//   checkerboard          cells per side          cell edge (filled cells)
//   stripes               bands                   band length (filled)
//   ellipse_with_chords   chords                  semi-major axis
//   grid                  lines per direction     line spacing

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hatlsd/error.hpp"
#include "hatlsd/geometry.hpp"
#include "hatlsd/image.hpp"
#include "hatlsd/rng.hpp"

namespace hatlsd {

enum class PrimitiveKind {
  line,
  polygon,
  star,
  cube_wireframe,
  checkerboard,
  stripes,
  ellipse_with_chords,
  grid,
};

inline constexpr std::array<PrimitiveKind, 8> kAllPrimitiveKinds{
    PrimitiveKind::line,         PrimitiveKind::polygon, PrimitiveKind::star,
    PrimitiveKind::cube_wireframe, PrimitiveKind::checkerboard, PrimitiveKind::stripes,
    PrimitiveKind::ellipse_with_chords, PrimitiveKind::grid};

inline std::string_view to_string(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::line: return "line";
    case PrimitiveKind::polygon: return "polygon";
    case PrimitiveKind::star: return "star";
    case PrimitiveKind::cube_wireframe: return "cube_wireframe";
    case PrimitiveKind::checkerboard: return "checkerboard";
    case PrimitiveKind::stripes: return "stripes";
    case PrimitiveKind::ellipse_with_chords: return "ellipse_with_chords";
    case PrimitiveKind::grid: return "grid";
  }
  return "?";
}

inline PrimitiveKind parse_primitive_kind(std::string_view s) {
  for (auto k : kAllPrimitiveKinds)
    if (to_string(k) == s) return k;
  throw ParamError("unknown primitive kind '" + std::string(s) + "'");
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool valid() const { return std::isfinite(lo) && std::isfinite(hi) && lo <= hi; }
};

struct IntInterval {
  int lo = 0;
  int hi = 0;
  bool valid() const { return lo <= hi; }
};

struct PrimitiveSpec {
  PrimitiveKind kind = PrimitiveKind::line;
  int width = 256;
  int height = 256;
  IntInterval count{1, 3};
  Interval size{40.0, 160.0};
  Interval background{150.0, 230.0};
  Interval foreground{10.0, 100.0};
  /// Nominal stroke width; the antialiased footprint is one pixel wider.
  Interval stroke_width{1.0, 2.0};
  double noise_sigma = 2.0;

  static PrimitiveSpec defaults(PrimitiveKind k) {
    PrimitiveSpec s;
    s.kind = k;
    switch (k) {
      case PrimitiveKind::line: s.count = {1, 3}; s.size = {40, 160}; break;
      case PrimitiveKind::polygon: s.count = {3, 7}; s.size = {35, 100}; break;
      case PrimitiveKind::star: s.count = {4, 7}; s.size = {50, 110}; break;
      case PrimitiveKind::cube_wireframe: s.count = {1, 1}; s.size = {70, 120}; break;
      case PrimitiveKind::checkerboard: s.count = {3, 6}; s.size = {16, 30}; break;
      case PrimitiveKind::stripes: s.count = {2, 5}; s.size = {60, 170}; break;
      case PrimitiveKind::ellipse_with_chords: s.count = {2, 5}; s.size = {50, 110}; break;
      case PrimitiveKind::grid: s.count = {2, 5}; s.size = {18, 40}; break;
    }
    return s;
  }

  void validate() const {
    if (width < 64 || height < 64) throw ParamError("synthetic canvas must be at least 64x64");
    if (!count.valid() || count.lo < 1) throw ParamError("count interval invalid");
    if (!size.valid() || !(size.lo > 0.0)) throw ParamError("size interval invalid");
    if (!background.valid() || !foreground.valid()) throw ParamError("intensity interval invalid");
    if (background.lo < 0 || background.hi > 255 || foreground.lo < 0 || foreground.hi > 255)
      throw ParamError("intensity interval outside [0, 255]");
    if (!stroke_width.valid() || stroke_width.lo < 1.0 || stroke_width.hi > 3.0)
      throw ParamError("stroke width must lie in [1, 3]");
    if (!(noise_sigma >= 0.0)) throw ParamError("noise sigma must be >= 0");
  }
};

struct SyntheticSample {
  GrayImage image;
  std::vector<LineSegment> segments;
};

namespace detail {

inline constexpr double kMinContrast = 32.0;
inline constexpr double kMinSegmentLength = 10.0;
inline constexpr double kBorderMargin = 4.0;

struct Canvas {
  int width;
  int height;
  std::vector<double> v;

  Canvas(int w, int h, double fill)
      : width(w), height(h), v(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  void blend(int x, int y, double value, double alpha) {
    if (alpha <= 0.0) return;
    auto& p = v[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)];
    p = p * (1.0 - alpha) + value * std::min(alpha, 1.0);
  }

  /// Antialiased straight stroke with butt caps.
  void stroke(const LineSegment& s, double w, double value) {
    const Point2 u = s.direction();
    const double len = s.length();
    const double reach = w / 2.0 + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(s.p0().x, s.p1().x) - reach)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(s.p0().x, s.p1().x) + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(s.p0().y, s.p1().y) - reach)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(s.p0().y, s.p1().y) + reach)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Point2 q = Point2{double(x), double(y)} - s.p0();
        const double along = dot(q, u);
        const double across = std::abs(cross(u, q));
        const double ca = std::clamp(w / 2.0 + 0.5 - across, 0.0, 1.0);
        const double cl = std::clamp(std::min(along, len - along) + 0.5, 0.0, 1.0);
        blend(x, y, value, ca * cl);
      }
    }
  }

  /// Antialiased ellipse outline (first-order distance to the curve).
  void stroke_ellipse(Point2 c, double a, double b, double rot, double w, double value) {
    const double cr = std::cos(rot), sr = std::sin(rot);
    const double reach = std::max(a, b) + w + 2.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(c.x - reach)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(c.x + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(c.y - reach)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(c.y + reach)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - c.x, dy = y - c.y;
        const double pu = cr * dx + sr * dy;
        const double pv = -sr * dx + cr * dy;
        const double f = pu * pu / (a * a) + pv * pv / (b * b) - 1.0;
        const double g = 2.0 * std::hypot(pu / (a * a), pv / (b * b));
        if (g <= 0.0) continue;
        const double dist = std::abs(f) / g;
        blend(x, y, value, std::clamp(w / 2.0 + 0.5 - dist, 0.0, 1.0));
      }
    }
  }

  /// Filled polygon, 4x4 supersampled even-odd coverage.
  void fill(const std::vector<Point2>& poly, double value) {
    double minx = poly[0].x, maxx = poly[0].x, miny = poly[0].y, maxy = poly[0].y;
    for (const auto& p : poly) {
      minx = std::min(minx, p.x); maxx = std::max(maxx, p.x);
      miny = std::min(miny, p.y); maxy = std::max(maxy, p.y);
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(minx)) - 1);
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(maxx)) + 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(miny)) - 1);
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(maxy)) + 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        int inside = 0;
        for (int sy = 0; sy < 4; ++sy) {
          for (int sx = 0; sx < 4; ++sx) {
            const Point2 q{x - 0.375 + 0.25 * sx, y - 0.375 + 0.25 * sy};
            inside += contains(poly, q) ? 1 : 0;
          }
        }
        blend(x, y, value, inside / 16.0);
      }
    }
  }

  static bool contains(const std::vector<Point2>& poly, Point2 q) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
      const Point2 a = poly[i], b = poly[j];
      if ((a.y > q.y) != (b.y > q.y) && q.x < (b.x - a.x) * (q.y - a.y) / (b.y - a.y) + a.x)
        in = !in;
    }
    return in;
  }
};

struct Scene {
  std::vector<LineSegment> gt;
  // Drawing is deferred until the scene passes the placement checks.
  std::vector<std::pair<LineSegment, double>> strokes;   // segment, width
  std::vector<std::vector<Point2>> fills;
  std::vector<double> fill_values;
  struct Ellipse { Point2 c; double a, b, rot, w; };
  std::vector<Ellipse> ellipses;
  double stroke_value = 0.0;
};

inline Point2 rotate(Point2 p, double a) {
  return {std::cos(a) * p.x - std::sin(a) * p.y, std::sin(a) * p.x + std::cos(a) * p.y};
}

inline void add_polyline_gt(Scene& s, const std::vector<Point2>& pts, bool closed, double w) {
  const std::size_t n = pts.size();
  const std::size_t edges = closed ? n : n - 1;
  for (std::size_t i = 0; i < edges; ++i) {
    LineSegment seg(pts[i], pts[(i + 1) % n]);
    s.gt.push_back(seg);
    if (w > 0.0) s.strokes.emplace_back(seg, w);
  }
}

inline void add_closed_fill(Scene& s, const std::vector<Point2>& poly, double value) {
  add_polyline_gt(s, poly, true, 0.0);
  s.fills.push_back(poly);
  s.fill_values.push_back(value);
}

inline bool inside_canvas(Point2 p, int w, int h) {
  return p.x >= kBorderMargin && p.y >= kBorderMargin && p.x <= w - 1 - kBorderMargin &&
         p.y <= h - 1 - kBorderMargin;
}

inline bool same_point(Point2 a, Point2 b) { return distance(a, b) < 1e-9; }

// Ground truth must be decodable: endpoints either coincide or are clearly
// separate (never in the same or adjacent pixels), segments are long enough,
// and no two near-parallel segments overlap closely.
inline bool scene_ok(const std::vector<LineSegment>& gt, int w, int h) {
  std::vector<Point2> ends;
  for (const auto& s : gt) {
    if (s.length() < kMinSegmentLength) return false;
    if (!inside_canvas(s.p0(), w, h) || !inside_canvas(s.p1(), w, h)) return false;
    ends.push_back(s.p0());
    ends.push_back(s.p1());
  }
  for (std::size_t i = 0; i < ends.size(); ++i) {
    for (std::size_t j = i + 1; j < ends.size(); ++j) {
      if (same_point(ends[i], ends[j])) continue;
      const long dx = std::lround(ends[i].x) - std::lround(ends[j].x);
      const long dy = std::lround(ends[i].y) - std::lround(ends[j].y);
      if (std::abs(dx) <= 1 && std::abs(dy) <= 1) return false;
      if (distance(ends[i], ends[j]) < 3.0) return false;
    }
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = i + 1; j < gt.size(); ++j) {
      const double ai = std::atan2(gt[i].p1().y - gt[i].p0().y, gt[i].p1().x - gt[i].p0().x);
      const double aj = std::atan2(gt[j].p1().y - gt[j].p0().y, gt[j].p1().x - gt[j].p0().x);
      if (orientation_diff(ai, aj) > 0.2) continue;
      if (orthogonal_distance(gt[i], gt[j]) < 6.0) return false;
    }
  }
  return true;
}

inline Scene build_scene(const PrimitiveSpec& spec, Rng& rng, double fg) {
  Scene s;
  s.stroke_value = fg;
  const double W = spec.width, H = spec.height;
  const int count = rng.uniform_int(spec.count.lo, spec.count.hi);
  const double size = rng.uniform(spec.size.lo, spec.size.hi);
  const double sw = rng.uniform(spec.stroke_width.lo, spec.stroke_width.hi);
  const double rot = rng.uniform(0.0, 2.0 * std::numbers::pi);
  auto center_for = [&](double radius) {
    const double mx = std::max(0.0, W / 2.0 - radius - kBorderMargin);
    const double my = std::max(0.0, H / 2.0 - radius - kBorderMargin);
    return Point2{(W - 1) / 2.0 + rng.uniform(-mx, mx), (H - 1) / 2.0 + rng.uniform(-my, my)};
  };

  switch (spec.kind) {
    case PrimitiveKind::line: {
      for (int i = 0; i < count; ++i) {
        const double len = i == 0 ? size : rng.uniform(spec.size.lo, spec.size.hi);
        const double a = i == 0 ? rot : rng.uniform(0.0, 2.0 * std::numbers::pi);
        const Point2 c = center_for(len / 2.0);
        const Point2 half = rotate({len / 2.0, 0.0}, a);
        add_polyline_gt(s, {c - half, c + half}, false, sw);
      }
      break;
    }
    case PrimitiveKind::polygon: {
      const Point2 c = center_for(size * 1.1);
      std::vector<Point2> pts;
      for (int i = 0; i < count; ++i) {
        const double a = rot + 2.0 * std::numbers::pi * (i + rng.uniform(-0.15, 0.15)) / count;
        pts.push_back(c + rotate({size * rng.uniform(0.85, 1.1), 0.0}, a));
      }
      add_closed_fill(s, pts, fg);
      break;
    }
    case PrimitiveKind::star: {
      const Point2 c = center_for(size);
      const double inner = size * rng.uniform(0.4, 0.6);
      std::vector<Point2> pts;
      for (int i = 0; i < 2 * count; ++i) {
        const double a = rot + std::numbers::pi * i / count;
        pts.push_back(c + rotate({i % 2 == 0 ? size : inner, 0.0}, a));
      }
      add_polyline_gt(s, pts, true, sw);
      break;
    }
    case PrimitiveKind::cube_wireframe: {
      for (int n = 0; n < count; ++n) {
        const double edge = n == 0 ? size : rng.uniform(spec.size.lo, spec.size.hi);
        const double yaw = rng.uniform(0.3, 1.2), pitch = rng.uniform(0.3, 1.0);
        const Point2 c = center_for(edge * 0.9);
        std::array<Point2, 8> v{};
        for (int i = 0; i < 8; ++i) {
          double x = (i & 1 ? 0.5 : -0.5) * edge;
          double y = (i & 2 ? 0.5 : -0.5) * edge;
          double z = (i & 4 ? 0.5 : -0.5) * edge;
          const double x1 = std::cos(yaw) * x + std::sin(yaw) * z;
          const double z1 = -std::sin(yaw) * x + std::cos(yaw) * z;
          const double y1 = std::cos(pitch) * y - std::sin(pitch) * z1;
          v[static_cast<std::size_t>(i)] = c + rotate({x1, y1}, rot);
        }
        for (int i = 0; i < 8; ++i)
          for (int bit : {1, 2, 4})
            if (!(i & bit)) {
              LineSegment seg(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(i | bit)]);
              s.gt.push_back(seg);
              s.strokes.emplace_back(seg, sw);
            }
      }
      break;
    }
    case PrimitiveKind::checkerboard: {
      const double board = count * size;
      const Point2 c = center_for(board * std::numbers::sqrt2 / 2.0);
      const double a = rng.uniform(-std::numbers::pi / 4, std::numbers::pi / 4);
      auto corner = [&](int i, int j) {
        return c + rotate({(i - count / 2.0) * size, (j - count / 2.0) * size}, a);
      };
      // Light cells are brighter than the background, dark cells darker.
      const double light = 255.0;
      for (int j = 0; j < count; ++j)
        for (int i = 0; i < count; ++i) {
          s.fills.push_back({corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1)});
          s.fill_values.push_back((i + j) % 2 == 0 ? fg : light);
        }
      for (int line = 0; line <= count; ++line)
        for (int k = 0; k < count; ++k) {
          s.gt.emplace_back(corner(k, line), corner(k + 1, line));
          s.gt.emplace_back(corner(line, k), corner(line, k + 1));
        }
      break;
    }
    case PrimitiveKind::stripes: {
      const double len = size;
      std::vector<double> widths, gaps;
      double total = 0.0;
      for (int i = 0; i < count; ++i) {
        widths.push_back(rng.uniform(11.0, 16.0));
        gaps.push_back(i + 1 < count ? rng.uniform(9.0, 16.0) : 0.0);
        total += widths.back() + gaps.back();
      }
      const Point2 c = center_for(std::hypot(len, total) / 2.0);
      double off = -total / 2.0;
      for (int i = 0; i < count; ++i) {
        const double w = widths[static_cast<std::size_t>(i)];
        std::vector<Point2> band{
            c + rotate({-len / 2.0, off}, rot), c + rotate({len / 2.0, off}, rot),
            c + rotate({len / 2.0, off + w}, rot), c + rotate({-len / 2.0, off + w}, rot)};
        add_closed_fill(s, band, fg);
        off += w + gaps[static_cast<std::size_t>(i)];
      }
      break;
    }
    case PrimitiveKind::ellipse_with_chords: {
      const double a = size, b = size * rng.uniform(0.55, 1.0);
      const Point2 c = center_for(a);
      s.ellipses.push_back({c, a, b, rot, sw});
      const int npts = count + 1;
      const double span = 2.0 * std::numbers::pi / npts;
      std::vector<Point2> pts;
      for (int i = 0; i < npts; ++i) {
        const double t = span * (i + rng.uniform(0.0, 0.3));
        pts.push_back(c + rotate({a * std::cos(t), b * std::sin(t)}, rot));
      }
      // Chords skip one point so they stay clear of the outline.
      for (int i = 0; i < count; ++i) {
        const Point2 p = pts[static_cast<std::size_t>(i % npts)];
        const Point2 q = pts[static_cast<std::size_t>((i + 2) % npts)];
        LineSegment seg(p, q);
        s.gt.push_back(seg);
        s.strokes.emplace_back(seg, sw);
      }
      break;
    }
    case PrimitiveKind::grid: {
      const double extent = (count - 1) * size;
      const double over = std::max(8.0, size * 0.4);
      const Point2 c = center_for((extent / 2.0 + over) * std::numbers::sqrt2);
      for (int i = 0; i < count; ++i) {
        const double o = -extent / 2.0 + i * size;
        const double e = extent / 2.0 + over;
        for (bool vertical : {false, true}) {
          const Point2 p = vertical ? Point2{o, -e} : Point2{-e, o};
          const Point2 q = vertical ? Point2{o, e} : Point2{e, o};
          LineSegment seg(c + rotate(p, rot), c + rotate(q, rot));
          s.gt.push_back(seg);
          s.strokes.emplace_back(seg, sw);
        }
      }
      break;
    }
  }
  return s;
}

}  // namespace detail

/// Deterministic render of one primitive scene. Noise is added last; the
/// image is rounded to integer intensities so it survives PGM round trips.
inline SyntheticSample render_synthetic(const PrimitiveSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double bg = rng.uniform(spec.background.lo, spec.background.hi);
    const double fg = rng.uniform(spec.foreground.lo, spec.foreground.hi);
    if (std::abs(bg - fg) < detail::kMinContrast) continue;
    std::optional<detail::Scene> scene;
    try {
      scene = detail::build_scene(spec, rng, fg);
    } catch (const GeometryError&) {
      continue;
    }
    if (!detail::scene_ok(scene->gt, spec.width, spec.height)) continue;
    double base = bg;
    if (spec.kind == PrimitiveKind::checkerboard) base = std::clamp(bg, fg + 32.0, 223.0);

    detail::Canvas canvas(spec.width, spec.height, base);
    for (std::size_t i = 0; i < scene->fills.size(); ++i)
      canvas.fill(scene->fills[i], scene->fill_values[i]);
    for (const auto& e : scene->ellipses)
      canvas.stroke_ellipse(e.c, e.a, e.b, e.rot, e.w, scene->stroke_value);
    for (const auto& [seg, w] : scene->strokes) canvas.stroke(seg, w, scene->stroke_value);

    std::vector<double> px(canvas.v.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
      double v = canvas.v[i];
      if (spec.noise_sigma > 0.0) v += rng.normal(0.0, spec.noise_sigma);
      px[i] = std::round(std::clamp(v, 0.0, 255.0));
    }
    return {GrayImage(spec.width, spec.height, std::move(px)), std::move(scene->gt)};
  }
  throw ParamError("cannot place primitive '" + std::string(to_string(spec.kind)) +
                   "' on the canvas with the given jitter");
}

/// Noise-free single stroke of the given length and contrast at a random
/// position and orientation, on a 256x256 canvas.
inline SyntheticSample render_single_segment(std::uint64_t seed, double length = 80.0,
                                             double contrast = 128.0, int canvas = 256) {
  if (!(length > 0.0) || length > canvas / 2.0) throw ParamError("segment length must lie in (0, canvas/2]");
  if (!(contrast > 0.0) || contrast > 255.0) throw ParamError("contrast must lie in (0, 255]");
  Rng rng(seed);
  const double a = rng.uniform(0.0, std::numbers::pi);
  const double lo = length / 2.0 + detail::kBorderMargin + 2.0;
  const Point2 c{rng.uniform(lo, canvas - 1.0 - lo), rng.uniform(lo, canvas - 1.0 - lo)};
  const Point2 u{std::cos(a) * length / 2.0, std::sin(a) * length / 2.0};
  const LineSegment gt(c - u, c + u);
  const double bg = std::min(255.0, 128.0 + contrast / 2.0);
  detail::Canvas cv(canvas, canvas, bg);
  cv.stroke(gt, 1.0 + rng.uniform(), bg - contrast);
  std::vector<double> px(cv.v.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = std::round(std::clamp(cv.v[i], 0.0, 255.0));
  return {GrayImage(canvas, canvas, std::move(px)), {gt}};
}

}  // namespace hatlsd
