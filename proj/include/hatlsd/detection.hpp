#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hatlsd/error.hpp"
#include "hatlsd/geometry.hpp"

namespace hatlsd {

/// Detected segments with one confidence per segment. The meaning of the
/// confidence is carried by score_kind: "support_degree" (pixel count) or
/// "nfa_log10" (-log10 of the number of false alarms).
struct DetectionResult {
  std::vector<LineSegment> segments;
  std::vector<double> confidence;
  std::string source;
  std::string score_kind;

  std::size_t size() const { return segments.size(); }
  bool empty() const { return segments.empty(); }

  void add(const LineSegment& s, double score) {
    if (!(score >= 0.0)) throw ParamError("detection confidence must be >= 0");
    segments.push_back(s);
    confidence.push_back(score);
  }
};

}  // namespace hatlsd
