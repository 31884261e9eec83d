#pragma once

// JSON forms of detections, ground truth sidecars, homographies and reports.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hatlsd/config.hpp"
#include "hatlsd/detection.hpp"
#include "hatlsd/error.hpp"
#include "hatlsd/evalkit.hpp"
#include "hatlsd/geometry.hpp"
#include "hatlsd/image.hpp"

namespace hatlsd {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json point_json(Point2 p) { return Json::array({p.x, p.y}); }

inline Point2 point_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw FormatError("point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace detail

inline Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
}

inline Json read_json(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return parse_json_text(std::string(bytes.begin(), bytes.end()));
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  detail::write_file(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline Json segments_json(const std::vector<LineSegment>& segs) {
  Json arr = Json::array();
  for (const auto& s : segs) arr.push_back({{"p0", detail::point_json(s.p0())}, {"p1", detail::point_json(s.p1())}});
  return arr;
}

inline std::vector<LineSegment> segments_from_json(const Json& arr) {
  if (!arr.is_array()) throw FormatError("segments must be an array");
  std::vector<LineSegment> out;
  for (const auto& s : arr) {
    if (!s.is_object() || !s.contains("p0") || !s.contains("p1")) throw FormatError("segment needs p0 and p1");
    out.emplace_back(detail::point_from_json(s["p0"]), detail::point_from_json(s["p1"]));
  }
  return out;
}

inline Json detection_json(const DetectionResult& d, const std::string& image, const Json& meta) {
  Json segs = Json::array();
  for (std::size_t i = 0; i < d.size(); ++i)
    segs.push_back({{"p0", detail::point_json(d.segments[i].p0())},
                    {"p1", detail::point_json(d.segments[i].p1())},
                    {"score", d.confidence[i]}});
  return {{"image", image}, {"segments", segs}, {"meta", meta}};
}

inline DetectionResult detection_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("segments")) throw FormatError("detection JSON needs a segments array");
  DetectionResult d;
  if (j.contains("meta") && j["meta"].is_object()) {
    const auto& m = j["meta"];
    if (m.contains("score_kind") && m["score_kind"].is_string()) d.score_kind = m["score_kind"].get<std::string>();
    if (m.contains("method") && m["method"].is_string()) d.source = m["method"].get<std::string>();
  }
  const auto& arr = j["segments"];
  if (!arr.is_array()) throw FormatError("segments must be an array");
  for (const auto& s : arr) {
    if (!s.is_object() || !s.contains("p0") || !s.contains("p1")) throw FormatError("segment needs p0 and p1");
    const double score = s.contains("score") && s["score"].is_number() ? s["score"].get<double>() : 1.0;
    try {
      d.add(LineSegment(detail::point_from_json(s["p0"]), detail::point_from_json(s["p1"])), score);
    } catch (const ParamError& e) {
      throw FormatError(e.what());
    }
  }
  return d;
}

inline Json homography_json(const Homography& h) {
  const auto r = h.rows();
  return {{"h", Json::array({Json::array({r[0], r[1], r[2]}), Json::array({r[3], r[4], r[5]}),
                             Json::array({r[6], r[7], r[8]})})}};
}

/// Accepts {"h": [[...],[...],[...]]}, {"h": [9 numbers]} or a bare array.
inline Homography homography_from_json(const Json& j) {
  const Json& h = j.is_object() && j.contains("h") ? j["h"] : j;
  std::array<double, 9> v{};
  if (!h.is_array()) throw FormatError("homography must be an array");
  if (h.size() == 9) {
    for (std::size_t i = 0; i < 9; ++i) {
      if (!h[i].is_number()) throw FormatError("homography entries must be numbers");
      v[i] = h[i].get<double>();
    }
  } else if (h.size() == 3) {
    for (std::size_t r = 0; r < 3; ++r) {
      if (!h[r].is_array() || h[r].size() != 3) throw FormatError("homography rows must have 3 entries");
      for (std::size_t c = 0; c < 3; ++c) {
        if (!h[r][c].is_number()) throw FormatError("homography entries must be numbers");
        v[r * 3 + c] = h[r][c].get<double>();
      }
    }
  } else {
    throw FormatError("homography must be 3x3");
  }
  return Homography::from_rows(v);
}

inline Json values_json(const MetricValues& v) {
  return {{"rep", detail::optional_json(v.rep)}, {"loc", detail::optional_json(v.loc)},
          {"len", detail::optional_json(v.len)}};
}

inline Json report_json(const MetricsReport& r) {
  return {{"k", r.k},
          {"pair_count", r.pair_count},
          {"structural", values_json(r.s)},
          {"orthogonal", values_json(r.o)},
          {"lines_per_image", r.lines_per_image}};
}

inline Json decode_params_json(const DecodeParams& p) {
  return {{"tau_dist", p.tau_dist}, {"tau_support", p.tau_support}, {"tau_j", p.tau_j},
          {"top_k", p.top_k}, {"nms_window", p.nms_window}};
}

inline Json lsd_params_json(const LsdParams& p) {
  return {{"angle_tolerance", p.angle_tolerance}, {"quantization_q", p.quantization_q},
          {"log_eps", p.log_eps}, {"min_region_size", p.min_region_size},
          {"density_threshold", p.density_threshold}, {"scale", p.scale}, {"sigma_scale", p.sigma_scale}};
}

inline Json sample_params_json(const HomographySampleParams& p) {
  return {{"max_rotation", p.max_rotation}, {"scale_low", p.scale_low}, {"scale_high", p.scale_high},
          {"max_translation", p.max_translation}, {"max_perspective", p.max_perspective}};
}

inline Json adapt_params_json(const AdaptParams& p) {
  return {{"n_iters", p.n_iters}, {"score_threshold", p.score_threshold},
          {"sample", sample_params_json(p.sample_params)}};
}

}  // namespace hatlsd
