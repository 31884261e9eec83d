// Small end-to-end tour: render a scene, run the classical detector, encode
// the ground truth into a field, decode it back, then rectify a noisy field.
//
//   hatlsd_demo [seed] [out_dir]

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <string>

#include "hatlsd/hatlsd.hpp"

using namespace hatlsd;

namespace {

double recall(const DetectionResult& det, const std::vector<LineSegment>& gt, double tol) {
  if (gt.empty()) return 1.0;
  std::size_t hit = 0;
  for (const auto& g : gt)
    for (const auto& d : det.segments)
      if (structural_distance(d, g) <= tol) {
        ++hit;
        break;
      }
  return static_cast<double>(hit) / static_cast<double>(gt.size());
}

}  // namespace

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 7;
  const std::filesystem::path out = argc > 2 ? argv[2] : "demo_out";
  std::filesystem::create_directories(out);

  const auto kind = kAllPrimitiveKinds[seed % kAllPrimitiveKinds.size()];
  const auto sample = render_synthetic(PrimitiveSpec::defaults(kind), seed);
  save_image(sample.image, out / "scene.png");
  std::printf("scene: %s, %zu ground-truth segments\n", std::string(to_string(kind)).c_str(),
              sample.segments.size());

  const auto lsd = lsd_detect(sample.image);
  std::printf("lsd: %zu detections, recall@5 %.3f\n", lsd.size(), recall(lsd, sample.segments, 5.0));
  write_text(out / "lsd.svg", render_svg(lsd, sample.image.size(), &sample.image));

  const auto fp = encode(sample.segments, sample.image.size(), 5.0);
  save_field_pair(fp, out / "scene.hatf");
  const auto dec = sparse_decode(fp, DecodeParams{});
  std::printf("field: %zu fg pixels, decode -> %zu segments, recall@0.5 %.3f\n", fp.field.fg_count(), dec.size(),
              recall(dec, sample.segments, 0.5));

  // 15 degrees of direction noise, then the rectifier.
  const GtFieldProvider noisy(sample.segments, 5.0, 15.0 * std::numbers::pi / 180.0, seed);
  const auto raw = sparse_decode(noisy.provide(sample.image), DecodeParams::pseudo_label());
  const auto rect = generate_pseudo_labels(noisy, sample.image);
  std::printf("noisy field: raw recall@5 %.3f (%zu segs), rectified %.3f (%zu segs)\n",
              recall(raw, sample.segments, 5.0), raw.size(), recall(rect, sample.segments, 5.0), rect.size());
  write_text(out / "rectified.svg", render_svg(rect, sample.image.size(), &sample.image));
  return 0;
}
