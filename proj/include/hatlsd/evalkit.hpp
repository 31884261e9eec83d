#pragma once

// Repeatability evaluation over image pairs related by a known homography.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "hatlsd/detection.hpp"
#include "hatlsd/error.hpp"
#include "hatlsd/geometry.hpp"
#include "hatlsd/image.hpp"
#include "hatlsd/rng.hpp"

namespace hatlsd {

enum class DistanceKind { structural, orthogonal };

inline double segment_distance(const LineSegment& a, const LineSegment& b, DistanceKind kind) {
  return kind == DistanceKind::structural ? structural_distance(a, b) : orthogonal_distance(a, b);
}

struct EvalPair {
  GrayImage img_a;
  GrayImage img_b;
  Homography h_ab;
};

enum class PairMode { provided, random_warp };

/// One pair per image. In provided mode `homographies[i]` maps image i to
/// its partner; in random_warp mode a homography is sampled per image.
inline std::vector<EvalPair> build_pairs(const std::vector<GrayImage>& images, PairMode mode,
                                         const HomographySampleParams& params, std::uint64_t seed,
                                         const std::vector<std::optional<Homography>>& homographies = {}) {
  std::vector<EvalPair> pairs;
  pairs.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    Homography h = Homography::identity();
    if (mode == PairMode::provided) {
      if (i >= homographies.size() || !homographies[i])
        throw ParamError("missing homography for pair " + std::to_string(i));
      h = *homographies[i];
    } else {
      h = sample_homography(params, mix_seed(seed, i), images[i].size());
    }
    pairs.push_back({images[i], warp_image(images[i], h), h});
  }
  return pairs;
}

struct Match {
  std::size_t ia = 0;
  std::size_t ib = 0;
  double distance = 0.0;
  friend bool operator==(const Match&, const Match&) = default;
};

/// Greedy one-to-one matching of a (warped into b's frame) against b, in
/// ascending (distance, ia, ib) order. Segments that cannot be warped stay
/// unmatched.
inline std::vector<Match> match_segments(const DetectionResult& a, const DetectionResult& b,
                                         const Homography& h_ab, double k, DistanceKind kind) {
  if (!(k > 0.0)) throw ParamError("match threshold k must be positive");
  std::vector<Match> cand;
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::optional<LineSegment> w;
    try {
      w = warp_segment(h_ab, a.segments[i]);
    } catch (const GeometryError&) {
      continue;
    }
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = segment_distance(*w, b.segments[j], kind);
      if (d <= k) cand.push_back({i, j, d});
    }
  }
  std::sort(cand.begin(), cand.end(), [](const Match& x, const Match& y) {
    return std::tie(x.distance, x.ia, x.ib) < std::tie(y.distance, y.ia, y.ib);
  });
  std::vector<bool> used_a(a.size()), used_b(b.size());
  std::vector<Match> out;
  for (const auto& m : cand) {
    if (used_a[m.ia] || used_b[m.ib]) continue;
    used_a[m.ia] = used_b[m.ib] = true;
    out.push_back(m);
  }
  return out;
}

namespace detail {

struct TwoWay {
  std::vector<Match> ab;  // a warped into b
  std::vector<Match> ba;  // b warped into a; ia indexes b here
};

inline TwoWay match_both(const DetectionResult& a, const DetectionResult& b, const Homography& h,
                         double k, DistanceKind kind) {
  return {match_segments(a, b, h, k, kind), match_segments(b, a, h.inverse(), k, kind)};
}

inline double side_ratio(std::size_t matched, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total);
}

inline double matched_length_ratio(const DetectionResult& d, const std::vector<Match>& m) {
  // Same summation order on both sides, so a full match gives exactly 1.
  std::vector<char> matched(d.size(), 0);
  for (const auto& x : m) matched[x.ia] = 1;
  double total = 0.0, hit = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    total += d.segments[i].length();
    if (matched[i]) hit += d.segments[i].length();
  }
  return total > 0.0 ? hit / total : 0.0;
}

}  // namespace detail

/// Symmetric repeatability. Empty when both sides are empty.
inline std::optional<double> repeatability(const DetectionResult& a, const DetectionResult& b,
                                           const Homography& h_ab, double k, DistanceKind kind) {
  if (a.empty() && b.empty()) return std::nullopt;
  const auto m = detail::match_both(a, b, h_ab, k, kind);
  return 0.5 * (detail::side_ratio(m.ab.size(), a.size()) + detail::side_ratio(m.ba.size(), b.size()));
}

/// Mean match distance. Empty when there are no matches.
inline std::optional<double> localization_error(const std::vector<Match>& matches) {
  if (matches.empty()) return std::nullopt;
  double s = 0.0;
  for (const auto& m : matches) s += m.distance;
  return s / static_cast<double>(matches.size());
}

/// Symmetric matched-length fraction, lengths in each side's own frame.
inline std::optional<double> length_repeatability(const DetectionResult& a, const DetectionResult& b,
                                                  const Homography& h_ab, double k, DistanceKind kind) {
  if (a.empty() && b.empty()) return std::nullopt;
  const auto m = detail::match_both(a, b, h_ab, k, kind);
  return 0.5 * (detail::matched_length_ratio(a, m.ab) + detail::matched_length_ratio(b, m.ba));
}

struct MetricValues {
  std::optional<double> rep;
  std::optional<double> loc;
  std::optional<double> len;
  friend bool operator==(const MetricValues&, const MetricValues&) = default;
};

struct PairReport {
  MetricValues s;
  MetricValues o;
  std::size_t count_a = 0;
  std::size_t count_b = 0;
};

inline MetricValues evaluate_metric(const DetectionResult& a, const DetectionResult& b,
                                    const Homography& h, double k, DistanceKind kind) {
  MetricValues v;
  if (a.empty() && b.empty()) return v;
  const auto m = detail::match_both(a, b, h, k, kind);
  v.rep = 0.5 * (detail::side_ratio(m.ab.size(), a.size()) + detail::side_ratio(m.ba.size(), b.size()));
  v.len = 0.5 * (detail::matched_length_ratio(a, m.ab) + detail::matched_length_ratio(b, m.ba));
  std::vector<Match> all = m.ab;
  all.insert(all.end(), m.ba.begin(), m.ba.end());
  v.loc = localization_error(all);
  return v;
}

inline PairReport evaluate_pair(const DetectionResult& a, const DetectionResult& b, const Homography& h,
                                double k) {
  return {evaluate_metric(a, b, h, k, DistanceKind::structural),
          evaluate_metric(a, b, h, k, DistanceKind::orthogonal), a.size(), b.size()};
}

struct MetricsReport {
  double k = 5.0;
  std::size_t pair_count = 0;
  MetricValues s;
  MetricValues o;
  double lines_per_image = 0.0;
};

namespace detail {

inline std::optional<double> mean_of(const std::vector<std::optional<double>>& xs) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& x : xs)
    if (x) {
      s += *x;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return s / static_cast<double>(n);
}

inline MetricValues mean_values(const std::vector<PairReport>& reports, MetricValues PairReport::*which) {
  std::vector<std::optional<double>> rep, loc, len;
  for (const auto& r : reports) {
    rep.push_back((r.*which).rep);
    loc.push_back((r.*which).loc);
    len.push_back((r.*which).len);
  }
  return {mean_of(rep), mean_of(loc), mean_of(len)};
}

}  // namespace detail

/// Means over pairs, skipping sentinels.
inline MetricsReport aggregate(const std::vector<PairReport>& reports, double k) {
  MetricsReport out;
  out.k = k;
  out.pair_count = reports.size();
  out.s = detail::mean_values(reports, &PairReport::s);
  out.o = detail::mean_values(reports, &PairReport::o);
  std::size_t lines = 0;
  for (const auto& r : reports) lines += r.count_a + r.count_b;
  out.lines_per_image = reports.empty() ? 0.0 : static_cast<double>(lines) / (2.0 * reports.size());
  return out;
}

/// Runs `detect` on both images of every pair and aggregates.
template <class Detector>
MetricsReport evaluate_pairs(const std::vector<EvalPair>& pairs, Detector&& detect, double k) {
  std::vector<PairReport> reports;
  reports.reserve(pairs.size());
  for (const auto& p : pairs) {
    const DetectionResult a = detect(p.img_a);
    const DetectionResult b = detect(p.img_b);
    reports.push_back(evaluate_pair(a, b, p.h_ab, k));
  }
  return aggregate(reports, k);
}

/// Aligned text table: Rep S, Loc S, Len S, Rep O, Loc O, Len O, #Lines/Image.
inline std::string format_table(const MetricsReport& r) {
  char kbuf[32];
  std::snprintf(kbuf, sizeof kbuf, "%g", r.k);
  const std::string k = kbuf;
  const std::vector<std::string> head{"Rep-" + k + " (S)", "Loc-" + k + " (S)", "Len-" + k + " (S)",
                                      "Rep-" + k + " (O)", "Loc-" + k + " (O)", "Len-" + k + " (O)",
                                      "#Lines/Image"};
  auto fmt = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    char b[32];
    std::snprintf(b, sizeof b, "%.3f", *v);
    return std::string(b);
  };
  char lb[32];
  std::snprintf(lb, sizeof lb, "%.1f", r.lines_per_image);
  const std::vector<std::string> row{fmt(r.s.rep), fmt(r.s.loc), fmt(r.s.len), fmt(r.o.rep),
                                     fmt(r.o.loc), fmt(r.o.len), lb};
  std::string a, b;
  for (std::size_t i = 0; i < head.size(); ++i) {
    const std::size_t w = std::max(head[i].size(), row[i].size());
    const std::string sep = i + 1 < head.size() ? "  " : "";
    a += std::string(w - head[i].size(), ' ') + head[i] + sep;
    b += std::string(w - row[i].size(), ' ') + row[i] + sep;
  }
  return a + "\n" + b + "\n";
}

}  // namespace hatlsd
