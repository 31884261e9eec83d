#pragma once

// HAT field codec.
//
// Every foreground pixel p stores (d, theta, alpha, beta): the distance d to
// its perpendicularly closest segment, the direction theta of the vector from
// p to the perpendicular foot, and the angles alpha < 0 < beta of the two
// endpoints measured in the frame anchored at p with theta as x-axis:
//
//   x_alpha = p + d R(theta) (1, tan alpha)
//   x_beta  = p + d R(theta) (1, tan beta)
//
// Sparse decoding binds both endpoints of every pixel to their closest
// junction and counts how many pixels vote for each junction pair.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "hatlsd/detection.hpp"
#include "hatlsd/error.hpp"
#include "hatlsd/geometry.hpp"

namespace hatlsd {

/// Dense field; background pixels hold 0 in every channel.
struct HATField {
  int width = 0;
  int height = 0;
  std::vector<double> d;
  std::vector<double> theta;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<std::uint8_t> fg;

  HATField() = default;
  HATField(int w, int h) : width(w), height(h) {
    if (w < 0 || h < 0) throw ParamError("negative field size");
    const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    d.assign(n, 0.0);
    theta.assign(n, 0.0);
    alpha.assign(n, 0.0);
    beta.assign(n, 0.0);
    fg.assign(n, 0);
  }

  Size size() const { return {height, width}; }
  std::size_t pixel_count() const { return fg.size(); }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
  bool is_fg(int x, int y) const { return fg[index(x, y)] != 0; }
  std::size_t fg_count() const {
    return static_cast<std::size_t>(std::count(fg.begin(), fg.end(), std::uint8_t{1}));
  }

  friend bool operator==(const HATField&, const HATField&) = default;
};

/// Junction heatmap plus sub-pixel offsets in [-0.5, 0.5).
struct JunctionMap {
  int width = 0;
  int height = 0;
  std::vector<double> score;
  std::vector<double> dx;
  std::vector<double> dy;

  JunctionMap() = default;
  JunctionMap(int w, int h) : width(w), height(h) {
    if (w < 0 || h < 0) throw ParamError("negative junction map size");
    const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    score.assign(n, 0.0);
    dx.assign(n, 0.0);
    dy.assign(n, 0.0);
  }

  Size size() const { return {height, width}; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }

  friend bool operator==(const JunctionMap&, const JunctionMap&) = default;
};

struct FieldPair {
  HATField field;
  JunctionMap junctions;
};

struct Junction {
  Point2 pos;
  double score = 0.0;
};

struct DecodeParams {
  double tau_dist = 10.0;
  double tau_support = 5.0;
  double tau_j = 0.1;
  int top_k = 512;
  int nms_window = 3;

  /// Thresholds used when decoding pseudo labels.
  static DecodeParams pseudo_label() {
    DecodeParams p;
    p.tau_support = 10.0;
    p.tau_j = 0.008;
    return p;
  }

  void validate() const {
    if (!(tau_dist > 0.0) || !(tau_support > 0.0) || !(tau_j > 0.0) || top_k <= 0 ||
        nms_window <= 0)
      throw ParamError("decode parameters must be positive");
    if (nms_window % 2 == 0) throw ParamError("nms window must be odd");
  }

  friend bool operator==(const DecodeParams&, const DecodeParams&) = default;
};

inline constexpr double kMinFieldDistance = 1e-6;

/// Index of the segment each pixel is attached to, or -1 for background.
/// A pixel is attached to the segment with the smallest perpendicular
/// distance among those whose perpendicular foot falls strictly inside the
/// segment and whose distance is below fg_halfwidth; ties go to the lower
/// index.
inline std::vector<int> assign_pixels(std::span<const LineSegment> lines, Size size,
                                      double fg_halfwidth) {
  if (!(fg_halfwidth > 0.0)) throw ParamError("fg_halfwidth must be positive");
  const auto n = static_cast<std::size_t>(size.width) * static_cast<std::size_t>(size.height);
  std::vector<int> owner(n, -1);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const LineSegment& s = lines[i];
    const Point2 u = s.direction();
    const double len = s.length();
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(s.p0().x, s.p1().x) - fg_halfwidth)));
    const int x1 = std::min(size.width - 1, static_cast<int>(std::ceil(std::max(s.p0().x, s.p1().x) + fg_halfwidth)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(s.p0().y, s.p1().y) - fg_halfwidth)));
    const int y1 = std::min(size.height - 1, static_cast<int>(std::ceil(std::max(s.p0().y, s.p1().y) + fg_halfwidth)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Point2 q = Point2{double(x), double(y)} - s.p0();
        const double t = dot(q, u);
        if (!(t > 0.0 && t < len)) continue;
        const double dist = std::abs(cross(u, q));
        if (!(dist < fg_halfwidth)) continue;
        const auto k = static_cast<std::size_t>(y) * static_cast<std::size_t>(size.width) +
                       static_cast<std::size_t>(x);
        if (dist < best[k]) {
          best[k] = dist;
          owner[k] = static_cast<int>(i);
        }
      }
    }
  }
  return owner;
}

namespace detail {

// Channels of pixel p for segment s. False when the lateral coordinates do
// not straddle zero (numerically degenerate foot at an endpoint).
inline bool pixel_channels(const LineSegment& s, Point2 p, double& d, double& theta,
                           double& alpha, double& beta) {
  const Point2 u = s.direction();
  const Point2 n{-u.y, u.x};
  const double c = dot(n, p - s.p0());
  // The foot is p - c * n.
  Point2 to_foot = c > 0.0 ? Point2{-n.x, -n.y} : n;
  d = std::abs(c);
  if (d == 0.0) {
    d = kMinFieldDistance;
    to_foot = n;
  }
  theta = std::atan2(to_foot.y, to_foot.x);
  const Point2 lateral{-to_foot.y, to_foot.x};
  const double l0 = dot(s.p0() - p, lateral);
  const double l1 = dot(s.p1() - p, lateral);
  const double lneg = std::min(l0, l1);
  const double lpos = std::max(l0, l1);
  if (!(lneg < 0.0 && lpos > 0.0)) return false;
  alpha = std::atan2(lneg, d);
  beta = std::atan2(lpos, d);
  return alpha < 0.0 && beta > 0.0 && alpha > -std::numbers::pi / 2 && beta < std::numbers::pi / 2;
}

inline bool in_pixel_bounds(Point2 p, Size size) {
  return p.x >= -0.5 && p.y >= -0.5 && p.x < size.width - 0.5 && p.y < size.height - 0.5;
}

}  // namespace detail

/// Dense field and junction map of a segment set. Throws GeometryError when
/// an endpoint falls outside the image.
inline FieldPair encode(std::span<const LineSegment> lines, Size size, double fg_halfwidth) {
  if (size.width <= 0 || size.height <= 0) throw ParamError("field size must be positive");
  for (const auto& s : lines)
    if (!detail::in_pixel_bounds(s.p0(), size) || !detail::in_pixel_bounds(s.p1(), size))
      throw GeometryError("segment endpoint outside the image");

  FieldPair out{HATField(size.width, size.height), JunctionMap(size.width, size.height)};
  const std::vector<int> owner = assign_pixels(lines, size, fg_halfwidth);
  auto& f = out.field;
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      const auto k = f.index(x, y);
      if (owner[k] < 0) continue;
      double d, theta, alpha, beta;
      if (!detail::pixel_channels(lines[static_cast<std::size_t>(owner[k])], {double(x), double(y)},
                                  d, theta, alpha, beta))
        continue;
      f.d[k] = d;
      f.theta[k] = theta;
      f.alpha[k] = alpha;
      f.beta[k] = beta;
      f.fg[k] = 1;
    }
  }
  auto& jm = out.junctions;
  for (const auto& s : lines) {
    for (const Point2 e : {s.p0(), s.p1()}) {
      const int col = static_cast<int>(std::floor(e.x + 0.5));
      const int row = static_cast<int>(std::floor(e.y + 0.5));
      const auto k = jm.index(col, row);
      jm.score[k] = 1.0;
      jm.dx[k] = e.x - col;
      jm.dy[k] = e.y - row;
    }
  }
  return out;
}

inline FieldPair encode(const std::vector<LineSegment>& lines, Size size, double fg_halfwidth) {
  return encode(std::span<const LineSegment>(lines), size, fg_halfwidth);
}

/// Both endpoint predictions of a foreground pixel, before validation.
inline std::pair<Point2, Point2> decode_endpoint_pair(const HATField& f, int x, int y) {
  const auto k = f.index(x, y);
  const double d = f.d[k];
  const double c = std::cos(f.theta[k]);
  const double s = std::sin(f.theta[k]);
  const double ta = std::tan(f.alpha[k]);
  const double tb = std::tan(f.beta[k]);
  const Point2 p{double(x), double(y)};
  const Point2 xa{p.x + d * (c - s * ta), p.y + d * (s + c * ta)};
  const Point2 xb{p.x + d * (c - s * tb), p.y + d * (s + c * tb)};
  return {xa, xb};
}

/// Segment predicted by foreground pixel (x, y).
inline LineSegment decode_endpoints(const HATField& f, int x, int y) {
  if (x < 0 || y < 0 || x >= f.width || y >= f.height) throw ParamError("pixel outside field");
  if (!f.is_fg(x, y)) throw ParamError("decode_endpoints on a background pixel");
  const auto [a, b] = decode_endpoint_pair(f, x, y);
  return {a, b};
}

/// Non-maximum suppression, score threshold and top-k selection on the
/// junction heatmap. Equal scores inside one window keep the pixel that comes
/// first in raster order.
inline std::vector<Junction> extract_junctions(const JunctionMap& jm, const DecodeParams& params) {
  params.validate();
  const int half = params.nms_window / 2;
  struct Peak { double score; int y, x; };
  std::vector<Peak> peaks;
  for (int y = 0; y < jm.height; ++y) {
    for (int x = 0; x < jm.width; ++x) {
      const double s = jm.score[jm.index(x, y)];
      if (!(s >= params.tau_j)) continue;
      bool keep = true;
      for (int yy = std::max(0, y - half); keep && yy <= std::min(jm.height - 1, y + half); ++yy) {
        for (int xx = std::max(0, x - half); xx <= std::min(jm.width - 1, x + half); ++xx) {
          if (xx == x && yy == y) continue;
          const double o = jm.score[jm.index(xx, yy)];
          const bool earlier = yy < y || (yy == y && xx < x);
          if (o > s || (o == s && earlier)) {
            keep = false;
            break;
          }
        }
      }
      if (keep) peaks.push_back({s, y, x});
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.score > b.score; });
  if (peaks.size() > static_cast<std::size_t>(params.top_k))
    peaks.resize(static_cast<std::size_t>(params.top_k));
  std::vector<Junction> out;
  out.reserve(peaks.size());
  for (const auto& p : peaks) {
    const auto k = jm.index(p.x, p.y);
    out.push_back({{p.x + jm.dx[k], p.y + jm.dy[k]}, p.score});
  }
  return out;
}

/// Per-pixel junction indices (1-based, 0 = unbound) of both endpoints.
struct BoundPairs {
  int width = 0;
  int height = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
};

namespace detail {

// Uniform-grid nearest-junction lookup within a radius.
class JunctionIndex {
 public:
  JunctionIndex(std::span<const Junction> junctions, double radius)
      : junctions_(junctions), radius_(radius) {
    brute_ = !(std::isfinite(radius) && radius < 1e6) || junctions.empty();
    if (brute_) return;
    cell_ = std::max(radius, 1.0);
    for (const auto& j : junctions) {
      minx_ = std::min(minx_, j.pos.x);
      miny_ = std::min(miny_, j.pos.y);
    }
    for (std::size_t i = 0; i < junctions.size(); ++i) {
      const auto [cx, cy] = cell_of(junctions[i].pos);
      buckets_[{cx, cy}].push_back(static_cast<std::uint32_t>(i));
    }
  }

  /// 1-based index of the closest junction within the radius, or 0.
  std::uint32_t nearest(Point2 q) const {
    if (!q.finite()) return 0;
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_i = 0;
    auto consider = [&](std::uint32_t i) {
      const Point2 v = junctions_[i].pos - q;
      const double d2 = v.x * v.x + v.y * v.y;
      if (d2 < best || (d2 == best && i + 1 < best_i)) {
        best = d2;
        best_i = i + 1;
      }
    };
    if (brute_) {
      for (std::uint32_t i = 0; i < junctions_.size(); ++i) consider(i);
    } else {
      const auto [cx, cy] = cell_of(q);
      for (long yy = cy - 1; yy <= cy + 1; ++yy)
        for (long xx = cx - 1; xx <= cx + 1; ++xx) {
          const auto it = buckets_.find({xx, yy});
          if (it == buckets_.end()) continue;
          for (auto i : it->second) consider(i);
        }
    }
    if (best_i == 0 || !(std::sqrt(best) <= radius_)) return 0;
    return best_i;
  }

 private:
  std::pair<long, long> cell_of(Point2 p) const {
    return {static_cast<long>(std::floor((p.x - minx_) / cell_)),
            static_cast<long>(std::floor((p.y - miny_) / cell_))};
  }

  std::span<const Junction> junctions_;
  double radius_;
  bool brute_ = true;
  double cell_ = 1.0;
  double minx_ = std::numeric_limits<double>::infinity();
  double miny_ = std::numeric_limits<double>::infinity();
  std::map<std::pair<long, long>, std::vector<std::uint32_t>> buckets_;
};

}  // namespace detail

inline BoundPairs bind(const HATField& f, std::span<const Junction> junctions, double tau_dist) {
  BoundPairs out{f.width, f.height, {}};
  out.pairs.assign(f.pixel_count(), {0, 0});
  if (junctions.empty()) return out;
  const detail::JunctionIndex index(junctions, tau_dist);
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      if (!f.is_fg(x, y)) continue;
      const auto [a, b] = decode_endpoint_pair(f, x, y);
      out.pairs[f.index(x, y)] = {index.nearest(a), index.nearest(b)};
    }
  }
  return out;
}

/// Unordered junction pair -> number of supporting pixels. Pairs with an
/// unbound endpoint or twice the same junction are dropped.
using SupportMap = std::map<std::pair<std::uint32_t, std::uint32_t>, std::int64_t>;

inline SupportMap support_degree(const BoundPairs& bound) {
  SupportMap deg;
  for (const auto& [a, b] : bound.pairs) {
    if (a == 0 || b == 0 || a == b) continue;
    ++deg[{std::min(a, b), std::max(a, b)}];
  }
  return deg;
}

inline DetectionResult sparse_decode(const HATField& f, const JunctionMap& jm,
                                     const DecodeParams& params) {
  params.validate();
  if (f.size() != jm.size()) throw ParamError("field and junction map sizes differ");
  const auto junctions = extract_junctions(jm, params);
  const auto deg = support_degree(hatlsd::bind(f, junctions, params.tau_dist));

  struct Candidate { std::int64_t support; std::pair<std::uint32_t, std::uint32_t> key; };
  std::vector<Candidate> kept;
  for (const auto& [key, support] : deg)
    if (static_cast<double>(support) >= params.tau_support) kept.push_back({support, key});
  std::stable_sort(kept.begin(), kept.end(),
                   [](const Candidate& a, const Candidate& b) { return a.support > b.support; });

  DetectionResult out;
  out.source = "hat_decode";
  out.score_kind = "support_degree";
  for (const auto& c : kept) {
    const Point2 a = junctions[c.key.first - 1].pos;
    const Point2 b = junctions[c.key.second - 1].pos;
    if (a == b) continue;
    out.add(LineSegment(a, b), static_cast<double>(c.support));
  }
  return out;
}

inline DetectionResult sparse_decode(const FieldPair& fp, const DecodeParams& params) {
  return sparse_decode(fp.field, fp.junctions, params);
}

}  // namespace hatlsd
