#pragma once

// Planar primitives, homographies and the segment distance metrics.
//
// Coordinates: origin at the center of the top-left pixel, x to the right,
// y downward. Pixel (c, r) covers [c - 0.5, c + 0.5) x [r - 0.5, r + 0.5).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "hatlsd/error.hpp"
#include "hatlsd/rng.hpp"

namespace hatlsd {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Image extent in pixels.
struct Size {
  int height = 0;
  int width = 0;
  friend bool operator==(Size, Size) = default;
};

class LineSegment {
 public:
  LineSegment(Point2 p0, Point2 p1) : p0_(p0), p1_(p1) {
    if (!p0.finite() || !p1.finite())
      throw GeometryError("line segment with non-finite endpoint");
    if (!(distance(p0, p1) > 0.0))
      throw GeometryError("zero-length line segment");
  }

  Point2 p0() const { return p0_; }
  Point2 p1() const { return p1_; }
  double length() const { return distance(p0_, p1_); }
  Point2 midpoint() const { return 0.5 * (p0_ + p1_); }
  /// Unit vector from p0 to p1.
  Point2 direction() const { return (1.0 / length()) * (p1_ - p0_); }
  LineSegment swapped() const { return {p1_, p0_}; }

  friend bool operator==(const LineSegment&, const LineSegment&) = default;

 private:
  Point2 p0_;
  Point2 p1_;
};

/// Distance from q to the infinite line supporting s.
inline double line_distance(const LineSegment& s, Point2 q) {
  return std::abs(cross(s.direction(), q - s.p0()));
}

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

/// Absolute difference of two undirected orientations, in [0, pi/2].
inline double orientation_diff(double a, double b) {
  double d = std::fmod(std::abs(a - b), std::numbers::pi);
  return d > std::numbers::pi / 2 ? std::numbers::pi - d : d;
}

class Homography {
 public:
  Homography() : m_(Eigen::Matrix3d::Identity()) {}

  explicit Homography(const Eigen::Matrix3d& m) : m_(m) {
    if (!m.allFinite()) throw GeometryError("homography with non-finite entry");
    if (std::abs(m(2, 2)) > 1e-12) {
      m_ /= m(2, 2);
    } else {
      const double f = m.norm();
      if (f == 0.0) throw GeometryError("zero homography matrix");
      m_ /= f;
    }
    const double det = m_.determinant();
    if (!(std::abs(det) > 1e-12)) throw GeometryError("singular homography");
  }

  /// Row-major construction.
  static Homography from_rows(const std::array<double, 9>& r) {
    Eigen::Matrix3d m;
    m << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
    return Homography(m);
  }

  static Homography identity() { return {}; }

  static Homography translation(double tx, double ty) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 2) = tx;
    m(1, 2) = ty;
    return Homography(m);
  }

  /// Rotation by angle (radians) about the origin.
  static Homography rotation(double angle) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 0) = std::cos(angle);
    m(0, 1) = -std::sin(angle);
    m(1, 0) = std::sin(angle);
    m(1, 1) = std::cos(angle);
    return Homography(m);
  }

  const Eigen::Matrix3d& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  std::array<double, 9> rows() const {
    std::array<double, 9> out{};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(3 * r + c)] = m_(r, c);
    return out;
  }

  Homography inverse() const { return Homography(m_.inverse()); }
  bool is_identity() const { return m_ == Eigen::Matrix3d::Identity(); }

  /// this ∘ other: apply other first.
  friend Homography operator*(const Homography& a, const Homography& b) {
    return Homography(a.m_ * b.m_);
  }

 private:
  Eigen::Matrix3d m_;
};

inline Point2 apply_homography(const Homography& h, Point2 p) {
  const auto& m = h.matrix();
  const double w = m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2);
  if (std::abs(w) < 1e-12) throw GeometryError("point maps to infinity");
  const double x = m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2);
  const double y = m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2);
  return {x / w, y / w};
}

/// Endpoint-wise warp. Throws when an endpoint goes to infinity or the
/// warped segment collapses.
inline LineSegment warp_segment(const Homography& h, const LineSegment& l) {
  if (h.is_identity()) return l;
  return {apply_homography(h, l.p0()), apply_homography(h, l.p1())};
}

/// Homography mapping four source points onto four destination points.
inline Homography homography_from_points(const std::array<Point2, 4>& src,
                                         const std::array<Point2, 4>& dst) {
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const auto [x, y] = src[static_cast<std::size_t>(i)];
    const auto [u, v] = dst[static_cast<std::size_t>(i)];
    a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    b(2 * i) = u;
    b(2 * i + 1) = v;
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
  if (!lu.isInvertible()) throw GeometryError("degenerate point correspondence");
  const Eigen::Matrix<double, 8, 1> s = lu.solve(b);
  Eigen::Matrix3d m;
  m << s(0), s(1), s(2), s(3), s(4), s(5), s(6), s(7), 1.0;
  return Homography(m);
}

struct HomographySampleParams {
  double max_rotation = 0.26;
  double scale_low = 0.85;
  double scale_high = 1.15;
  double max_translation = 0.05;
  double max_perspective = 0.1;

  void validate() const {
    if (!(scale_low > 0.0) || !(scale_high >= scale_low))
      throw ParamError("scale range must satisfy 0 < low <= high");
    if (!(max_rotation >= 0.0) || !(max_translation >= 0.0) || !(max_perspective >= 0.0))
      throw ParamError("homography sampling maxima must be >= 0");
  }

  friend bool operator==(const HomographySampleParams&, const HomographySampleParams&) = default;
};

/// Random homography about the image center: four-corner perspective
/// jitter, then uniform scale, rotation and translation. Pure function of
/// (params, seed, size).
inline Homography sample_homography(const HomographySampleParams& params, std::uint64_t seed,
                                    Size size) {
  params.validate();
  if (size.height <= 0 || size.width <= 0) throw ParamError("image size must be positive");
  const double w = size.width - 1.0;
  const double h = size.height - 1.0;
  const Point2 center{w / 2.0, h / 2.0};
  Rng rng(seed);

  for (int attempt = 0; attempt < 16; ++attempt) {
    const std::array<Point2, 4> corners{Point2{0, 0}, Point2{w, 0}, Point2{w, h}, Point2{0, h}};
    std::array<Point2, 4> moved = corners;
    for (auto& c : moved) {
      c.x += rng.uniform(-params.max_perspective, params.max_perspective) * w;
      c.y += rng.uniform(-params.max_perspective, params.max_perspective) * h;
    }
    const double angle = rng.uniform(-params.max_rotation, params.max_rotation);
    const double scale = rng.uniform(params.scale_low, params.scale_high);
    const double tx = rng.uniform(-params.max_translation, params.max_translation) * size.width;
    const double ty = rng.uniform(-params.max_translation, params.max_translation) * size.height;
    try {
      Eigen::Matrix3d sim = Eigen::Matrix3d::Identity();
      sim(0, 0) = scale * std::cos(angle);
      sim(0, 1) = -scale * std::sin(angle);
      sim(1, 0) = scale * std::sin(angle);
      sim(1, 1) = scale * std::cos(angle);
      sim(0, 2) = center.x + tx - (sim(0, 0) * center.x + sim(0, 1) * center.y);
      sim(1, 2) = center.y + ty - (sim(1, 0) * center.x + sim(1, 1) * center.y);
      Eigen::Matrix3d persp = Eigen::Matrix3d::Identity();
      if (params.max_perspective > 0.0) persp = homography_from_points(corners, moved).matrix();
      Homography out(sim * persp);
      // Corners must stay on the finite side of the horizon.
      for (const auto& c : corners) {
        const auto& m = out.matrix();
        if (m(2, 0) * c.x + m(2, 1) * c.y + m(2, 2) <= 1e-6) throw GeometryError("fold");
      }
      return out;
    } catch (const GeometryError&) {
      continue;
    }
  }
  throw GeometryError("could not sample an invertible homography in 16 attempts");
}

/// Mean endpoint distance under the better of the two endpoint pairings.
inline double structural_distance(const LineSegment& a, const LineSegment& b) {
  const double direct = 0.5 * (distance(a.p0(), b.p0()) + distance(a.p1(), b.p1()));
  const double crossed = 0.5 * (distance(a.p0(), b.p1()) + distance(a.p1(), b.p0()));
  return std::min(direct, crossed);
}

inline constexpr double kNoMatch = std::numeric_limits<double>::infinity();

/// Fraction of a's length covered by the projection of b onto a's line.
inline double projection_overlap(const LineSegment& a, const LineSegment& b) {
  const Point2 u = a.direction();
  const double len = a.length();
  const double t0 = dot(b.p0() - a.p0(), u);
  const double t1 = dot(b.p1() - a.p0(), u);
  const double lo = std::max(0.0, std::min(t0, t1));
  const double hi = std::min(len, std::max(t0, t1));
  return std::max(0.0, hi - lo) / len;
}

/// Symmetric mean perpendicular endpoint distance; kNoMatch when the mutual
/// projection overlap is below one half.
inline double orthogonal_distance(const LineSegment& a, const LineSegment& b) {
  if (std::min(projection_overlap(a, b), projection_overlap(b, a)) < 0.5) return kNoMatch;
  const double b_to_a = 0.5 * (line_distance(a, b.p0()) + line_distance(a, b.p1()));
  const double a_to_b = 0.5 * (line_distance(b, a.p0()) + line_distance(b, a.p1()));
  return 0.5 * (b_to_a + a_to_b);
}

/// Clip a segment to the closed box [0, W-1] x [0, H-1] (Liang-Barsky).
/// Returns nothing when the clipped part is empty or shorter than min_length.
inline std::optional<LineSegment> clip_to_image(const LineSegment& s, Size size,
                                                double min_length = 1e-9) {
  const Point2 p = s.p0();
  const Point2 d = s.p1() - s.p0();
  double t0 = 0.0, t1 = 1.0;
  const std::array<std::pair<double, double>, 4> planes{
      std::pair{-d.x, p.x}, std::pair{d.x, size.width - 1.0 - p.x},
      std::pair{-d.y, p.y}, std::pair{d.y, size.height - 1.0 - p.y}};
  for (const auto& [q, r] : planes) {
    if (q == 0.0) {
      if (r < 0.0) return std::nullopt;
      continue;
    }
    const double t = r / q;
    if (q < 0.0)
      t0 = std::max(t0, t);
    else
      t1 = std::min(t1, t);
  }
  if (t0 >= t1) return std::nullopt;
  const Point2 a = t0 == 0.0 ? s.p0() : p + t0 * d;
  const Point2 b = t1 == 1.0 ? s.p1() : p + t1 * d;
  if (!(distance(a, b) >= min_length) || distance(a, b) == 0.0) return std::nullopt;
  return LineSegment(a, b);
}

}  // namespace hatlsd
