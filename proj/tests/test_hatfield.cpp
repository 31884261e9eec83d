#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hatlsd/hatfield.hpp"
#include "hatlsd/rng.hpp"
#include "hatlsd/synth.hpp"

using namespace hatlsd;
using std::numbers::pi;

namespace {

HATField single_pixel_field(int x, int y, double d, double theta, double a, double b) {
  HATField f(16, 16);
  const auto k = f.index(x, y);
  f.d[k] = d;
  f.theta[k] = theta;
  f.alpha[k] = a;
  f.beta[k] = b;
  f.fg[k] = 1;
  return f;
}

void expect_point(Point2 p, double x, double y, double tol = 1e-12) {
  EXPECT_NEAR(p.x, x, tol);
  EXPECT_NEAR(p.y, y, tol);
}

// Brute-force closest-segment assignment, recomputed from scratch.
int oracle_owner(const std::vector<LineSegment>& lines, int x, int y, double hw) {
  int best = -1;
  double bd = 1e300;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& s = lines[i];
    const double len = s.length();
    const double ux = (s.p1().x - s.p0().x) / len, uy = (s.p1().y - s.p0().y) / len;
    const double qx = x - s.p0().x, qy = y - s.p0().y;
    const double t = qx * ux + qy * uy;
    if (t <= 0 || t >= len) continue;
    const double dist = std::abs(qx * uy - qy * ux);
    if (dist >= hw) continue;
    if (dist < bd) {
      bd = dist;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

TEST(Encode, PixelOnHorizontalSegment) {
  const std::vector<LineSegment> lines{LineSegment({10, 20}, {50, 20})};
  const auto fp = encode(lines, {64, 64}, 5.0);
  const auto& f = fp.field;
  ASSERT_TRUE(f.is_fg(30, 17));
  const auto k = f.index(30, 17);
  EXPECT_NEAR(f.d[k], 3.0, 1e-12);
  EXPECT_NEAR(f.theta[k], pi / 2, 1e-12);
  // Lateral axis is R(theta) (0, 1) = (-1, 0): endpoint (10,20) sits at +20,
  // (50,20) at -20.
  EXPECT_NEAR(f.alpha[k], std::atan2(-20.0, 3.0), 1e-12);
  EXPECT_NEAR(f.beta[k], std::atan2(20.0, 3.0), 1e-12);
  const auto s = decode_endpoints(f, 30, 17);
  EXPECT_LE(structural_distance(s, lines[0]), 1e-6);
}

TEST(Encode, EmptyInputIsBackground) {
  const auto fp = encode(std::vector<LineSegment>{}, {20, 30}, 5.0);
  EXPECT_EQ(fp.field.fg_count(), 0u);
  for (double s : fp.junctions.score) EXPECT_EQ(s, 0.0);
  EXPECT_EQ(fp.field.width, 30);
  EXPECT_EQ(fp.field.height, 20);
}

TEST(Encode, EquidistantPixelGoesToLowerIndex) {
  const std::vector<LineSegment> lines{LineSegment({2, 8}, {30, 8}), LineSegment({2, 12}, {30, 12})};
  const auto owner = assign_pixels(lines, {32, 32}, 5.0);
  EXPECT_EQ(owner[10 * 32 + 15], 0);
  EXPECT_EQ(owner[11 * 32 + 15], 1);
  const auto fp = encode(lines, {32, 32}, 5.0);
  EXPECT_LE(structural_distance(decode_endpoints(fp.field, 15, 10), lines[0]), 1e-9);
}

TEST(Encode, PixelOnTheLineClampsDistance) {
  const std::vector<LineSegment> lines{LineSegment({2, 5}, {20, 5})};
  const auto fp = encode(lines, {16, 24}, 3.0);
  ASSERT_TRUE(fp.field.is_fg(10, 5));
  EXPECT_EQ(fp.field.d[fp.field.index(10, 5)], kMinFieldDistance);
  EXPECT_LE(structural_distance(decode_endpoints(fp.field, 10, 5), lines[0]), 1e-5);
}

TEST(Encode, JunctionOffsets) {
  const std::vector<LineSegment> lines{LineSegment({3.3, 4.6}, {20.0, 9.2})};
  const auto fp = encode(lines, {16, 24}, 3.0);
  const auto& jm = fp.junctions;
  EXPECT_EQ(jm.score[jm.index(3, 5)], 1.0);
  EXPECT_NEAR(jm.dx[jm.index(3, 5)], 0.3, 1e-12);
  EXPECT_NEAR(jm.dy[jm.index(3, 5)], -0.4, 1e-12);
  EXPECT_EQ(jm.score[jm.index(20, 9)], 1.0);
  int ones = 0;
  for (double s : jm.score) ones += s == 1.0;
  EXPECT_EQ(ones, 2);
}

TEST(Encode, OutOfBoundsIsError) {
  const std::vector<LineSegment> lines{LineSegment({-3, 4}, {10, 4})};
  EXPECT_THROW(encode(lines, {16, 16}, 3.0), GeometryError);
  EXPECT_THROW(encode(std::vector<LineSegment>{}, {16, 16}, 0.0), ParamError);
}

TEST(Encode, AssignmentMatchesBruteForceProperty) {
  Rng r(31);
  for (int t = 0; t < 30; ++t) {
    std::vector<LineSegment> lines;
    const int n = 1 + static_cast<int>(r.uniform() * 6);
    for (int i = 0; i < n; ++i) {
      Point2 a{r.uniform(0, 47), r.uniform(0, 39)}, b{r.uniform(0, 47), r.uniform(0, 39)};
      if (distance(a, b) < 2) continue;
      lines.emplace_back(a, b);
    }
    const double hw = r.uniform(1.5, 6.0);
    const auto owner = assign_pixels(lines, {40, 48}, hw);
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 48; ++x) EXPECT_EQ(owner[y * 48 + x], oracle_owner(lines, x, y, hw));
  }
}

TEST(Encode, DecodeReproducesAssignedSegmentProperty) {
  Rng r(5);
  for (int t = 0; t < 40; ++t) {
    std::vector<LineSegment> lines;
    for (int i = 0; i < 4; ++i) {
      Point2 a{r.uniform(0, 63), r.uniform(0, 63)}, b{r.uniform(0, 63), r.uniform(0, 63)};
      if (distance(a, b) < 3) continue;
      lines.emplace_back(a, b);
    }
    const auto fp = encode(lines, {64, 64}, 5.0);
    const auto owner = assign_pixels(lines, {64, 64}, 5.0);
    const auto& f = fp.field;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        if (!f.is_fg(x, y)) continue;
        ASSERT_GE(owner[f.index(x, y)], 0);
        const auto k = f.index(x, y);
        EXPECT_LT(f.alpha[k], 0.0);
        EXPECT_GT(f.beta[k], 0.0);
        EXPECT_GT(f.d[k], 0.0);
        EXPECT_LE(structural_distance(decode_endpoints(f, x, y), lines[owner[k]]), 1e-6);
      }
  }
}

TEST(DecodeEndpoints, WorkedExamples) {
  auto s = decode_endpoints(single_pixel_field(0, 0, 1, 0, -pi / 4, pi / 4), 0, 0);
  expect_point(s.p0(), 1, -1);
  expect_point(s.p1(), 1, 1);
  s = decode_endpoints(single_pixel_field(0, 0, 2, pi / 2, -pi / 4, pi / 4), 0, 0);
  expect_point(s.p0(), 2, 2);
  expect_point(s.p1(), -2, 2);
  s = decode_endpoints(single_pixel_field(5, 5, 1, 0, -pi / 4, pi / 4), 5, 5);
  expect_point(s.p0(), 6, 4);
  expect_point(s.p1(), 6, 6);
}

TEST(DecodeEndpoints, MatrixFormProperty) {
  // Compare against an explicit rotation matrix product.
  Rng r(8);
  for (int t = 0; t < 500; ++t) {
    const int x = static_cast<int>(r.uniform() * 16), y = static_cast<int>(r.uniform() * 16);
    const double d = r.uniform(0.1, 8), th = r.uniform(-pi, pi);
    const double a = r.uniform(-1.4, -0.01), b = r.uniform(0.01, 1.4);
    const auto s = decode_endpoints(single_pixel_field(std::min(x, 15), std::min(y, 15), d, th, a, b),
                                    std::min(x, 15), std::min(y, 15));
    Eigen::Matrix2d R;
    R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const Eigen::Vector2d p(std::min(x, 15), std::min(y, 15));
    const Eigen::Vector2d ea = p + d * R * Eigen::Vector2d(1, std::tan(a));
    const Eigen::Vector2d eb = p + d * R * Eigen::Vector2d(1, std::tan(b));
    expect_point(s.p0(), ea.x(), ea.y(), 1e-9);
    expect_point(s.p1(), eb.x(), eb.y(), 1e-9);
  }
}

TEST(DecodeEndpoints, BackgroundIsError) {
  HATField f(4, 4);
  EXPECT_THROW(decode_endpoints(f, 1, 1), ParamError);
  EXPECT_THROW(decode_endpoints(f, 4, 1), ParamError);
}

TEST(ExtractJunctions, WorkedExamples) {
  DecodeParams p;
  JunctionMap jm(16, 16);
  EXPECT_TRUE(extract_junctions(jm, p).empty());

  jm.score[jm.index(8, 8)] = 1.0;
  jm.dx[jm.index(8, 8)] = 0.25;
  jm.dy[jm.index(8, 8)] = -0.25;
  auto j = extract_junctions(jm, p);
  ASSERT_EQ(j.size(), 1u);
  expect_point(j[0].pos, 8.25, 7.75);

  JunctionMap two(16, 16);
  two.score[two.index(4, 4)] = 0.9;
  two.score[two.index(5, 4)] = 0.8;
  j = extract_junctions(two, p);
  ASSERT_EQ(j.size(), 1u);
  expect_point(j[0].pos, 4, 4);
  EXPECT_EQ(j[0].score, 0.9);
}

TEST(ExtractJunctions, ThresholdTopKAndTies) {
  JunctionMap jm(20, 20);
  jm.score[jm.index(2, 2)] = 0.05;
  jm.score[jm.index(10, 2)] = 0.5;
  jm.score[jm.index(2, 10)] = 0.7;
  jm.score[jm.index(10, 10)] = 0.7;
  DecodeParams p;
  auto j = extract_junctions(jm, p);
  ASSERT_EQ(j.size(), 3u);
  // Equal scores: raster order.
  expect_point(j[0].pos, 2, 10);
  expect_point(j[1].pos, 10, 10);
  p.top_k = 1;
  j = extract_junctions(jm, p);
  ASSERT_EQ(j.size(), 1u);
  expect_point(j[0].pos, 2, 10);
  // Plateau inside one window keeps the first pixel only.
  JunctionMap flat(8, 8);
  flat.score[flat.index(3, 3)] = 1;
  flat.score[flat.index(4, 3)] = 1;
  EXPECT_EQ(extract_junctions(flat, DecodeParams{}).size(), 1u);
}

TEST(Bind, WorkedExamples) {
  // A pixel whose alpha endpoint decodes to (1.2, -1.1).
  HATField f(4, 4);
  const auto k = f.index(0, 0);
  f.fg[k] = 1;
  f.d[k] = 1.2;
  f.theta[k] = 0;
  f.alpha[k] = std::atan(-1.1 / 1.2);
  f.beta[k] = std::atan(14.0 / 1.2);
  const std::vector<Junction> js{{{1.0, -1.0}, 1.0}};
  const auto b = hatlsd::bind(f, js, 10.0);
  EXPECT_EQ(b.pairs[k].first, 1u);
  // The beta endpoint (1.2, 14) is 15 px away.
  EXPECT_EQ(b.pairs[k].second, 0u);

  const auto none = hatlsd::bind(f, std::vector<Junction>{}, 10.0);
  for (const auto& pr : none.pairs) EXPECT_EQ(pr, (std::pair<std::uint32_t, std::uint32_t>{0, 0}));
}

TEST(Bind, NearestMatchesBruteForceProperty) {
  Rng r(77);
  for (int t = 0; t < 20; ++t) {
    std::vector<Junction> js;
    for (int i = 0; i < 30; ++i) js.push_back({{r.uniform(-10, 60), r.uniform(-10, 60)}, 1.0});
    HATField f(48, 48);
    for (std::size_t i = 0; i < f.pixel_count(); ++i) {
      if (r.uniform() < 0.5) continue;
      f.fg[i] = 1;
      f.d[i] = r.uniform(0.5, 15);
      f.theta[i] = r.uniform(-pi, pi);
      f.alpha[i] = r.uniform(-1.4, -0.01);
      f.beta[i] = r.uniform(0.01, 1.4);
    }
    const double tau = r.uniform(1, 12);
    const auto b = hatlsd::bind(f, js, tau);
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 48; ++x) {
        if (!f.is_fg(x, y)) continue;
        const auto [ea, eb] = decode_endpoint_pair(f, x, y);
        auto brute = [&](Point2 q) {
          std::uint32_t best = 0;
          double bd = 1e300;
          for (std::size_t i = 0; i < js.size(); ++i) {
            const double dd = distance(js[i].pos, q);
            if (dd < bd) {
              bd = dd;
              best = static_cast<std::uint32_t>(i + 1);
            }
          }
          return bd <= tau ? best : 0u;
        };
        EXPECT_EQ(b.pairs[f.index(x, y)].first, brute(ea));
        EXPECT_EQ(b.pairs[f.index(x, y)].second, brute(eb));
      }
  }
}

TEST(SupportDegree, WorkedExamples) {
  BoundPairs b;
  for (int i = 0; i < 40; ++i) b.pairs.push_back({3, 7});
  for (int i = 0; i < 2; ++i) b.pairs.push_back({7, 3});
  b.pairs.push_back({0, 3});
  b.pairs.push_back({5, 5});
  const auto deg = support_degree(b);
  ASSERT_EQ(deg.size(), 1u);
  EXPECT_EQ(deg.at({3, 7}), 42);

  BoundPairs none;
  none.pairs.assign(10, {0, 0});
  EXPECT_TRUE(support_degree(none).empty());
}

TEST(SupportDegree, SixtyPixelSegment) {
  const std::vector<LineSegment> lines{LineSegment({20, 30}, {80, 30})};
  const auto fp = encode(lines, {64, 100}, 4.0);
  const auto js = extract_junctions(fp.junctions, DecodeParams{});
  ASSERT_EQ(js.size(), 2u);
  const auto deg = support_degree(hatlsd::bind(fp.field, js, 10.0));
  ASSERT_EQ(deg.size(), 1u);
  // 59 interior columns times 7 rows (|dy| < 4).
  EXPECT_EQ(fp.field.fg_count(), 59u * 7u);
  EXPECT_EQ(static_cast<std::size_t>(deg.begin()->second), fp.field.fg_count());
}

TEST(SparseDecode, SingleSegmentRoundTrip) {
  const LineSegment gt({12.3, 40.7}, {60.1, 15.2});
  ASSERT_GT(gt.length(), 50);
  const auto fp = encode(std::vector<LineSegment>{gt}, {64, 80}, 5.0);
  const auto det = sparse_decode(fp, DecodeParams{});
  ASSERT_EQ(det.size(), 1u);
  EXPECT_LT(structural_distance(det.segments[0], gt), 0.5);
  EXPECT_EQ(det.score_kind, "support_degree");
}

TEST(SparseDecode, InfiniteSupportThresholdIsEmpty) {
  const auto fp = encode(std::vector<LineSegment>{LineSegment({5, 5}, {50, 40})}, {64, 64}, 5.0);
  DecodeParams p;
  p.tau_support = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(sparse_decode(fp, p).empty());
}

TEST(SparseDecode, SortedBySupport) {
  const std::vector<LineSegment> lines{LineSegment({5, 5}, {20, 5}), LineSegment({5, 30}, {60, 30}),
                                       LineSegment({40, 50}, {70, 60})};
  const auto det = sparse_decode(encode(lines, {80, 80}, 5.0), DecodeParams{});
  ASSERT_EQ(det.size(), 3u);
  for (std::size_t i = 1; i < det.size(); ++i) EXPECT_GE(det.confidence[i - 1], det.confidence[i]);
  EXPECT_LT(structural_distance(det.segments[0], lines[1]), 0.5);
}

TEST(SparseDecode, SyntheticScenesRoundTripProperty) {
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    const auto s = render_synthetic(PrimitiveSpec::defaults(kAllPrimitiveKinds[seed % 8]), seed);
    const auto det = sparse_decode(encode(s.segments, s.image.size(), 5.0), DecodeParams{});
    // Every decoded segment lies on some ground-truth segment.
    for (const auto& d : det.segments) {
      double best = 1e9;
      for (const auto& g : s.segments) best = std::min(best, structural_distance(d, g));
      EXPECT_LT(best, 0.5) << "seed " << seed;
    }
  }
}

TEST(SparseDecode, UniformThetaNoiseDropsSupport) {
  Rng r(19);
  double clean = 0, noisy = 0;
  for (int t = 0; t < 200; ++t) {
    const double x0 = r.uniform(65, 95), y0 = r.uniform(65, 95), a = r.uniform(0, pi);
    const LineSegment s({x0, y0}, {x0 + 60 * std::cos(a), y0 + 60 * std::sin(a)});
    auto fp = encode({s}, {160, 160}, 5.0);
    const auto c = sparse_decode(fp, DecodeParams{});
    ASSERT_EQ(c.size(), 1u);
    clean += c.confidence[0];
    for (std::size_t i = 0; i < fp.field.pixel_count(); ++i)
      if (fp.field.fg[i]) fp.field.theta[i] = r.uniform(-pi, pi);
    const auto n = sparse_decode(fp, DecodeParams{});
    if (!n.empty()) noisy += n.confidence[0];
  }
  EXPECT_LE(noisy, 0.15 * clean);
}

// Detections themselves do not vanish at the default support threshold:
// pixels near an endpoint still bind both junctions often enough.
TEST(SparseDecode, UniformThetaNoiseNearZeroDetections) {
  Rng r(19);
  double total = 0;
  double clean = 0;
  const int n = 16;
  for (std::uint64_t seed = 0; seed < n; ++seed) {
    const auto s = render_synthetic(PrimitiveSpec::defaults(kAllPrimitiveKinds[seed % 8]), seed);
    auto fp = encode(s.segments, s.image.size(), 5.0);
    clean += static_cast<double>(sparse_decode(fp, DecodeParams{}).size());
    for (std::size_t i = 0; i < fp.field.pixel_count(); ++i)
      if (fp.field.fg[i]) fp.field.theta[i] = r.uniform(-pi, pi);
    total += static_cast<double>(sparse_decode(fp, DecodeParams{}).size());
  }
  EXPECT_GT(clean / n, 5.0);
  EXPECT_LE(total / n, 0.05 * clean / n);
}

TEST(SparseDecode, SupportMonotoneInThresholdProperty) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto s = render_synthetic(PrimitiveSpec::defaults(kAllPrimitiveKinds[seed]), seed);
    const auto fp = encode(s.segments, s.image.size(), 5.0);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double tau : {1.0, 5.0, 10.0, 40.0, 200.0}) {
      DecodeParams p;
      p.tau_support = tau;
      const auto det = sparse_decode(fp, p);
      EXPECT_LE(det.size(), prev);
      prev = det.size();
      for (double c : det.confidence) EXPECT_GE(c, tau);
    }
  }
}

TEST(DecodeParams, Validation) {
  DecodeParams p;
  EXPECT_NO_THROW(p.validate());
  p.nms_window = 4;
  EXPECT_THROW(p.validate(), ParamError);
  p = DecodeParams{};
  p.tau_dist = 0;
  EXPECT_THROW(p.validate(), ParamError);
  EXPECT_EQ(DecodeParams::pseudo_label().tau_support, 10.0);
  EXPECT_EQ(DecodeParams::pseudo_label().tau_j, 0.008);
}
