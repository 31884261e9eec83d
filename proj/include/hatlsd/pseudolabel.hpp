#pragma once

// Pseudo-label generation from a field provider: the level-line rectifier and
// the homographic adaptation baseline it replaces.

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "hatlsd/detection.hpp"
#include "hatlsd/error.hpp"
#include "hatlsd/field_io.hpp"
#include "hatlsd/geometry.hpp"
#include "hatlsd/gradient.hpp"
#include "hatlsd/hatfield.hpp"
#include "hatlsd/image.hpp"
#include "hatlsd/lsd.hpp"
#include "hatlsd/rng.hpp"

namespace hatlsd {

/// Source of a field for an image. `frame` is the homography that produced
/// the image from the original view (identity for the original itself), so
/// providers that carry ground truth can follow the warp. Implementations
/// must be const-callable from several threads.
class FieldProvider {
 public:
  virtual ~FieldProvider() = default;
  virtual FieldPair provide(const GrayImage& img, const Homography& frame) const = 0;
  FieldPair provide(const GrayImage& img) const { return provide(img, Homography::identity()); }
  virtual std::string name() const = 0;
};

/// Precomputed field read from disk. Only valid for the view it was computed on.
class FileFieldProvider final : public FieldProvider {
 public:
  using FieldProvider::provide;
  explicit FileFieldProvider(const std::filesystem::path& field_path,
                             const std::filesystem::path& junction_path = {})
      : fp_(load_field_pair(field_path, junction_path)) {}
  explicit FileFieldProvider(FieldPair fp) : fp_(std::move(fp)) {}

  FieldPair provide(const GrayImage& img, const Homography& frame) const override {
    if (!frame.is_identity())
      throw ParamError("a file-backed field cannot follow a homography");
    if (img.size() != fp_.field.size()) throw GeometryError("field dimensions do not match image");
    return fp_;
  }
  std::string name() const override { return "file"; }

 private:
  FieldPair fp_;
};

namespace detail {

inline std::uint64_t hash_homography(const Homography& h) {
  std::uint64_t x = 0xcbf29ce484222325ULL;
  for (double v : h.rows()) {
    x ^= std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v);
    x *= 0x100000001b3ULL;
  }
  return x;
}

}  // namespace detail

/// Encodes known segments, optionally with Gaussian noise on theta. This is
/// the stand-in for a seed model whose line directions are unreliable.
class GtFieldProvider final : public FieldProvider {
 public:
  using FieldProvider::provide;
  GtFieldProvider(std::vector<LineSegment> segments, double fg_halfwidth = 5.0,
                  double theta_noise_sigma = 0.0, std::uint64_t seed = 0)
      : segments_(std::move(segments)),
        halfwidth_(fg_halfwidth),
        sigma_(theta_noise_sigma),
        seed_(seed) {
    if (!(fg_halfwidth > 0.0)) throw ParamError("fg half-width must be positive");
    if (!(theta_noise_sigma >= 0.0)) throw ParamError("theta noise must be >= 0");
  }

  FieldPair provide(const GrayImage& img, const Homography& frame) const override {
    std::vector<LineSegment> segs;
    for (const auto& s : segments_) {
      const auto w = clip_to_image(warp_segment(frame, s), img.size());
      if (w) segs.push_back(*w);
    }
    FieldPair fp = encode(segs, img.size(), halfwidth_);
    if (sigma_ > 0.0) {
      Rng rng(mix_seed(seed_, detail::hash_homography(frame)));
      HATField& f = fp.field;
      for (std::size_t i = 0; i < f.pixel_count(); ++i)
        if (f.fg[i]) f.theta[i] = wrap_angle(f.theta[i] + sigma_ * rng.normal());
    }
    return fp;
  }
  std::string name() const override { return sigma_ > 0.0 ? "gt_noisy" : "gt"; }

 private:
  std::vector<LineSegment> segments_;
  double halfwidth_;
  double sigma_;
  std::uint64_t seed_;
};

/// Model-free provider: encodes the classical detections, restricted to a
/// dilation of the valid level-line mask.
class GradientFieldProvider final : public FieldProvider {
 public:
  using FieldProvider::provide;
  explicit GradientFieldProvider(LsdParams lsd = {}, double fg_halfwidth = 5.0, int dilation = 2)
      : lsd_(lsd), halfwidth_(fg_halfwidth), dilation_(dilation) {
    lsd_.validate();
    if (!(fg_halfwidth > 0.0)) throw ParamError("fg half-width must be positive");
    if (dilation < 0) throw ParamError("dilation must be >= 0");
  }

  FieldPair provide(const GrayImage& img, const Homography&) const override {
    std::vector<LineSegment> segs;
    for (const auto& s : lsd_detect(img, lsd_).segments)
      if (auto c = clip_to_image(s, img.size())) segs.push_back(*c);
    FieldPair fp = encode(segs, img.size(), halfwidth_);
    const auto llf = level_line_field(
        img, default_gradient_threshold(lsd_.quantization_q, lsd_.angle_tolerance));
    HATField& f = fp.field;
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x) {
        if (!f.is_fg(x, y)) continue;
        bool near = false;
        for (int yy = std::max(0, y - dilation_); yy <= std::min(f.height - 1, y + dilation_) && !near; ++yy)
          for (int xx = std::max(0, x - dilation_); xx <= std::min(f.width - 1, x + dilation_); ++xx)
            if (llf.is_valid(xx, yy)) {
              near = true;
              break;
            }
        if (!near) f.fg[f.index(x, y)] = 0;
      }
    return fp;
  }
  std::string name() const override { return "heuristic"; }

 private:
  LsdParams lsd_;
  double halfwidth_;
  int dilation_;
};

/// Replaces theta by the gradient orientation on fg pixels where the
/// level-line field is valid. The level line has no sign, so of the two
/// normals the one closer to the current theta is kept.
inline HATField rectify(const HATField& field, const LevelLineField& llf) {
  if (field.width != llf.width || field.height != llf.height)
    throw GeometryError("field and level-line field dimensions differ");
  HATField out = field;
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    if (!out.fg[i] || !llf.valid[i]) continue;
    const double n = wrap_angle(llf.angle[i] + std::numbers::pi / 2);
    const double flip = wrap_angle(n + std::numbers::pi);
    const double t = out.theta[i];
    out.theta[i] = std::abs(wrap_angle(n - t)) <= std::abs(wrap_angle(flip - t)) ? n : flip;
  }
  return out;
}

inline LevelLineField rectifier_level_lines(const GrayImage& img, const LsdParams& lsd) {
  return level_line_field(img, default_gradient_threshold(lsd.quantization_q, lsd.angle_tolerance));
}

inline DetectionResult generate_pseudo_labels(const FieldProvider& provider, const GrayImage& img,
                                              const DecodeParams& decode = DecodeParams::pseudo_label(),
                                              const LsdParams& lsd = {}) {
  FieldPair fp = provider.provide(img);
  if (fp.field.size() != img.size()) throw GeometryError("provider returned a field of the wrong size");
  fp.field = rectify(fp.field, rectifier_level_lines(img, lsd));
  DetectionResult out = sparse_decode(fp, decode);
  out.source = "rectifier";
  return out;
}

struct AdaptParams {
  int n_iters = 10;
  double score_threshold = 0.75;
  HomographySampleParams sample_params;

  void validate() const {
    if (n_iters < 1) throw ParamError("n_iters must be >= 1");
    if (!(score_threshold >= 0.0 && score_threshold <= 1.0))
      throw ParamError("score threshold must lie in [0, 1]");
    sample_params.validate();
  }
  friend bool operator==(const AdaptParams&, const AdaptParams&) = default;
};

inline constexpr double kVoteHalfwidth = 2.0;

/// Fraction of passes that put a segment within kVoteHalfwidth of each pixel.
struct VoteMap {
  int width = 0;
  int height = 0;
  std::vector<double> votes;

  double at(int x, int y) const {
    return votes[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
};

namespace detail {

inline double point_segment_distance(const LineSegment& s, Point2 q) {
  const Point2 d = s.p1() - s.p0();
  const double t = std::clamp(dot(q - s.p0(), d) / dot(d, d), 0.0, 1.0);
  return distance(q, s.p0() + t * d);
}

inline void rasterize_votes(const std::vector<LineSegment>& segs, Size size, double halfwidth,
                            std::vector<std::uint8_t>& mask) {
  for (const auto& s : segs) {
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(s.p0().x, s.p1().x) - halfwidth)));
    const int x1 = std::min(size.width - 1, static_cast<int>(std::ceil(std::max(s.p0().x, s.p1().x) + halfwidth)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(s.p0().y, s.p1().y) - halfwidth)));
    const int y1 = std::min(size.height - 1, static_cast<int>(std::ceil(std::max(s.p0().y, s.p1().y) + halfwidth)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if (point_segment_distance(s, {double(x), double(y)}) <= halfwidth)
          mask[static_cast<std::size_t>(y) * static_cast<std::size_t>(size.width) + static_cast<std::size_t>(x)] = 1;
  }
}

}  // namespace detail

/// Mean vote under samples spaced at most 1 px along the segment.
inline double mean_vote(const VoteMap& vm, const LineSegment& s) {
  const int n = std::max(1, static_cast<int>(std::ceil(s.length())));
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const Point2 q = s.p0() + (static_cast<double>(i) / n) * (s.p1() - s.p0());
    const int x = std::clamp(static_cast<int>(std::lround(q.x)), 0, vm.width - 1);
    const int y = std::clamp(static_cast<int>(std::lround(q.y)), 0, vm.height - 1);
    sum += vm.at(x, y);
  }
  return sum / (n + 1);
}

struct AdaptationOutput {
  DetectionResult detections;
  DetectionResult identity_pass;
  VoteMap votes;
};

inline AdaptationOutput homographic_adaptation_detailed(const FieldProvider& provider, const GrayImage& img,
                                                        const AdaptParams& params,
                                                        const DecodeParams& decode, std::uint64_t seed) {
  params.validate();
  decode.validate();
  const Size size = img.size();
  AdaptationOutput out;
  out.votes = {size.width, size.height, std::vector<double>(static_cast<std::size_t>(size.width) * size.height, 0.0)};
  std::vector<std::uint8_t> mask(out.votes.votes.size());
  for (int i = 0; i < params.n_iters; ++i) {
    const Homography h = i == 0 ? Homography::identity()
                                : sample_homography(params.sample_params, mix_seed(seed, static_cast<std::uint64_t>(i)), size);
    const GrayImage view = i == 0 ? img : warp_image(img, h);
    const DetectionResult det = sparse_decode(provider.provide(view, h), decode);
    std::vector<LineSegment> back;
    if (i == 0) {
      out.identity_pass = det;
      back = det.segments;
    } else {
      const Homography inv = h.inverse();
      for (const auto& s : det.segments) {
        try {
          if (auto c = clip_to_image(warp_segment(inv, s), size)) back.push_back(*c);
        } catch (const GeometryError&) {
        }
      }
    }
    std::fill(mask.begin(), mask.end(), 0);
    detail::rasterize_votes(back, size, kVoteHalfwidth, mask);
    for (std::size_t k = 0; k < mask.size(); ++k) out.votes.votes[k] += mask[k];
  }
  for (auto& v : out.votes.votes) v /= params.n_iters;

  out.detections.source = "homographic_adaptation";
  out.detections.score_kind = out.identity_pass.score_kind;
  for (std::size_t k = 0; k < out.identity_pass.size(); ++k)
    if (mean_vote(out.votes, out.identity_pass.segments[k]) >= params.score_threshold)
      out.detections.add(out.identity_pass.segments[k], out.identity_pass.confidence[k]);
  return out;
}

inline DetectionResult homographic_adaptation(const FieldProvider& provider, const GrayImage& img,
                                              const AdaptParams& params = {},
                                              const DecodeParams& decode = DecodeParams::pseudo_label(),
                                              std::uint64_t seed = 0) {
  return homographic_adaptation_detailed(provider, img, params, decode, seed).detections;
}

}  // namespace hatlsd
