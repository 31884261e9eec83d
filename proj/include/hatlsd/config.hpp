#pragma once

// Tool configuration as "key = value" lines. '#' starts a comment.
//
//   decode.tau_dist = 10
//   lsd.angle_tolerance = 0.3927
//   seed = 7

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hatlsd/error.hpp"
#include "hatlsd/geometry.hpp"
#include "hatlsd/hatfield.hpp"
#include "hatlsd/image.hpp"
#include "hatlsd/lsd.hpp"
#include "hatlsd/pseudolabel.hpp"

namespace hatlsd {

struct Config {
  DecodeParams decode;
  /// Thresholds used when decoding pseudo-labels (rectifier and adaptation).
  DecodeParams pseudo = DecodeParams::pseudo_label();
  LsdParams lsd;
  AdaptParams adapt;
  HomographySampleParams sample;
  double fg_halfwidth = 5.0;
  std::uint64_t seed = 0;

  void validate() const {
    decode.validate();
    pseudo.validate();
    lsd.validate();
    adapt.validate();
    sample.validate();
    if (!(fg_halfwidth > 0.0)) throw ParamError("fg_halfwidth must be positive");
  }

  AdaptParams adapt_params() const {
    AdaptParams a = adapt;
    a.sample_params = sample;
    return a;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || p != end)
    throw ParamError("bad value for " + std::string(key) + ": '" + std::string(v) + "'");
  return out;
}

using Setter = std::function<void(Config&, std::string_view)>;

template <class T>
Setter set_field(T Config::*group, std::string key, auto member) {
  return [group, key, member](Config& c, std::string_view v) {
    auto& field = (c.*group).*member;
    field = parse_number<std::remove_reference_t<decltype(field)>>(key, v);
  };
}

inline const std::map<std::string, Setter, std::less<>>& config_setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    for (auto [prefix, group] : {std::pair{"decode.", &Config::decode}, std::pair{"pseudo.", &Config::pseudo}}) {
      const std::string p = prefix;
      t[p + "tau_dist"] = set_field(group, p + "tau_dist", &DecodeParams::tau_dist);
      t[p + "tau_support"] = set_field(group, p + "tau_support", &DecodeParams::tau_support);
      t[p + "tau_j"] = set_field(group, p + "tau_j", &DecodeParams::tau_j);
      t[p + "top_k"] = set_field(group, p + "top_k", &DecodeParams::top_k);
      t[p + "nms_window"] = set_field(group, p + "nms_window", &DecodeParams::nms_window);
    }
    t["lsd.angle_tolerance"] = set_field(&Config::lsd, "lsd.angle_tolerance", &LsdParams::angle_tolerance);
    t["lsd.quantization_q"] = set_field(&Config::lsd, "lsd.quantization_q", &LsdParams::quantization_q);
    t["lsd.log_eps"] = set_field(&Config::lsd, "lsd.log_eps", &LsdParams::log_eps);
    t["lsd.min_region_size"] = set_field(&Config::lsd, "lsd.min_region_size", &LsdParams::min_region_size);
    t["lsd.density_threshold"] = set_field(&Config::lsd, "lsd.density_threshold", &LsdParams::density_threshold);
    t["lsd.scale"] = set_field(&Config::lsd, "lsd.scale", &LsdParams::scale);
    t["lsd.sigma_scale"] = set_field(&Config::lsd, "lsd.sigma_scale", &LsdParams::sigma_scale);
    t["adapt.n_iters"] = set_field(&Config::adapt, "adapt.n_iters", &AdaptParams::n_iters);
    t["adapt.score_threshold"] = set_field(&Config::adapt, "adapt.score_threshold", &AdaptParams::score_threshold);
    t["sample.max_rotation"] = set_field(&Config::sample, "sample.max_rotation", &HomographySampleParams::max_rotation);
    t["sample.scale_low"] = set_field(&Config::sample, "sample.scale_low", &HomographySampleParams::scale_low);
    t["sample.scale_high"] = set_field(&Config::sample, "sample.scale_high", &HomographySampleParams::scale_high);
    t["sample.max_translation"] =
        set_field(&Config::sample, "sample.max_translation", &HomographySampleParams::max_translation);
    t["sample.max_perspective"] =
        set_field(&Config::sample, "sample.max_perspective", &HomographySampleParams::max_perspective);
    t["fg_halfwidth"] = [](Config& c, std::string_view v) { c.fg_halfwidth = parse_number<double>("fg_halfwidth", v); };
    t["seed"] = [](Config& c, std::string_view v) { c.seed = parse_number<std::uint64_t>("seed", v); };
    return t;
  }();
  return table;
}

}  // namespace detail

/// Applies one "key=value" assignment.
inline void apply_override(Config& c, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ParamError("expected key=value, got '" + std::string(assignment) + "'");
  const auto key = detail::trim(assignment.substr(0, eq));
  const auto value = detail::trim(assignment.substr(eq + 1));
  const auto& setters = detail::config_setters();
  const auto it = setters.find(key);
  if (it == setters.end()) throw ParamError("unknown config key '" + std::string(key) + "'");
  it->second(c, value);
}

inline Config parse_config(std::string_view text, Config base = {}) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    try {
      apply_override(base, line);
    } catch (const ParamError& e) {
      throw ParamError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

inline Config load_config(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace hatlsd
