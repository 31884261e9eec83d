#pragma once

// Binary interchange format for fields produced by an external model.
//
//   HATF: "HATF" | u16 version=1 | u32 H | u32 W | 5 x H*W f32 (d, theta, alpha, beta, fg)
//   JUNC: "JUNC" | u16 version=1 | u32 H | u32 W | 3 x H*W f32 (score, dx, dy)
//
// All integers and floats little-endian, channels row-major. Channels are
// stored as 32-bit floats, so a double-precision field serializes to its
// float32 rounding; deserialize(serialize(x)) == round_to_float(x) bitwise.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hatlsd/error.hpp"
#include "hatlsd/hatfield.hpp"
#include "hatlsd/image.hpp"

namespace hatlsd {

namespace detail {

inline constexpr std::uint16_t kFieldVersion = 1;
inline constexpr std::size_t kFieldHeaderBytes = 4 + 2 + 4 + 4;

class ByteWriter {
 public:
  void magic(std::string_view m) { buf_.insert(buf_.end(), m.begin(), m.end()); }
  void u16(std::uint16_t v) {
    buf_.push_back(static_cast<unsigned char>(v & 0xff));
    buf_.push_back(static_cast<unsigned char>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  std::vector<unsigned char> take() { return std::move(buf_); }

 private:
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const unsigned char> b) : b_(b) {}
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError("truncated field file");
  }
  std::string magic() {
    need(4);
    std::string m(reinterpret_cast<const char*>(b_.data() + pos_), 4);
    pos_ += 4;
    return m;
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(b_[pos_] | (b_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f32() {
    const float f = std::bit_cast<float>(u32());
    if (!std::isfinite(f)) throw FormatError("non-finite value in field payload");
    return f;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  std::span<const unsigned char> b_;
  std::size_t pos_ = 0;
};

// Reads the common header and checks that the payload holds exactly
// `channels` float planes.
inline Size read_header(ByteReader& r, std::string_view magic, int channels) {
  if (r.remaining() < kFieldHeaderBytes) throw FormatError("truncated field header");
  if (r.magic() != magic) throw FormatError("bad magic, expected " + std::string(magic));
  const auto version = r.u16();
  if (version != kFieldVersion) throw FormatError("unsupported field version " + std::to_string(version));
  const auto h = r.u32();
  const auto w = r.u32();
  if (h > (1u << 16) || w > (1u << 16)) throw FormatError("field dimensions too large");
  const auto payload = static_cast<std::size_t>(channels) * h * w * 4;
  if (r.remaining() < payload) throw FormatError("truncated field payload");
  if (r.remaining() > payload) throw FormatError("channel count mismatch (trailing payload)");
  return {static_cast<int>(h), static_cast<int>(w)};
}

}  // namespace detail

inline std::vector<unsigned char> serialize_field(const HATField& f) {
  detail::ByteWriter w;
  w.magic("HATF");
  w.u16(detail::kFieldVersion);
  w.u32(static_cast<std::uint32_t>(f.height));
  w.u32(static_cast<std::uint32_t>(f.width));
  for (const auto* ch : {&f.d, &f.theta, &f.alpha, &f.beta})
    for (double v : *ch) w.f32(v);
  for (auto v : f.fg) w.f32(v ? 1.0 : 0.0);
  return w.take();
}

inline HATField deserialize_field(std::span<const unsigned char> bytes) {
  detail::ByteReader r(bytes);
  const Size size = detail::read_header(r, "HATF", 5);
  HATField f(size.width, size.height);
  for (auto* ch : {&f.d, &f.theta, &f.alpha, &f.beta})
    for (auto& v : *ch) v = r.f32();
  for (auto& v : f.fg) {
    const double x = r.f32();
    if (x != 0.0 && x != 1.0) throw FormatError("fg channel must hold 0 or 1");
    v = x == 1.0 ? 1 : 0;
  }
  return f;
}

inline std::vector<unsigned char> serialize_junctions(const JunctionMap& jm) {
  detail::ByteWriter w;
  w.magic("JUNC");
  w.u16(detail::kFieldVersion);
  w.u32(static_cast<std::uint32_t>(jm.height));
  w.u32(static_cast<std::uint32_t>(jm.width));
  for (const auto* ch : {&jm.score, &jm.dx, &jm.dy})
    for (double v : *ch) w.f32(v);
  return w.take();
}

inline JunctionMap deserialize_junctions(std::span<const unsigned char> bytes) {
  detail::ByteReader r(bytes);
  const Size size = detail::read_header(r, "JUNC", 3);
  JunctionMap jm(size.width, size.height);
  for (auto* ch : {&jm.score, &jm.dx, &jm.dy})
    for (auto& v : *ch) v = r.f32();
  return jm;
}

/// Sibling junction file of a field file: "x.hatf" -> "x.junc", else append.
inline std::filesystem::path junction_path_for(const std::filesystem::path& field_path) {
  auto p = field_path;
  if (p.extension() == ".hatf") return p.replace_extension(".junc");
  return std::filesystem::path(p.string() + ".junc");
}

inline void save_field_pair(const FieldPair& fp, const std::filesystem::path& field_path) {
  detail::write_file(field_path, serialize_field(fp.field));
  detail::write_file(junction_path_for(field_path), serialize_junctions(fp.junctions));
}

inline FieldPair load_field_pair(const std::filesystem::path& field_path,
                                 const std::filesystem::path& junction_path = {}) {
  const auto jpath = junction_path.empty() ? junction_path_for(field_path) : junction_path;
  const auto fb = detail::read_file(field_path);
  const auto jb = detail::read_file(jpath);
  FieldPair fp{deserialize_field(fb), deserialize_junctions(jb)};
  if (fp.field.size() != fp.junctions.size())
    throw FormatError("field and junction map dimensions differ");
  return fp;
}

}  // namespace hatlsd
