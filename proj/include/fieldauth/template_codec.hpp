#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fieldauth/errors.hpp"
#include "fieldauth/minutiae.hpp"

namespace fieldauth {

// .fpt wire format, little-endian:
//   header  "FPT" 0x01 | algorithm | count | width/4 (ceil) | height/4 (ceil)
//   record  x:u16 | y:u16 | angle:u8 (256 steps per turn) | kind:u8
inline constexpr std::size_t kFptHeaderSize = 8;
inline constexpr std::size_t kFptRecordSize = 6;
inline constexpr std::uint8_t kFptVersion = 0x01;

inline constexpr std::size_t encoded_size(std::size_t minutiae) {
  return kFptHeaderSize + kFptRecordSize * minutiae;
}

inline std::uint8_t quantize_angle(double radians) {
  const long q = std::lround(wrap_angle(radians) * 256.0 / (2.0 * std::numbers::pi));
  return static_cast<std::uint8_t>(q & 0xFF);
}

inline double dequantize_angle(std::uint8_t q) {
  return q * (2.0 * std::numbers::pi) / 256.0;
}

inline std::vector<std::uint8_t> encode(const Template& t) {
  if (t.minutiae.size() > kMaxMinutiae) throw EncodeError("template holds more than 255 minutiae");
  if (t.width < 0 || t.height < 0 || t.width > 255 * 4 || t.height > 255 * 4)
    throw EncodeError("source dimensions do not fit the header");
  Template sorted = t;
  sorted.sort();

  std::vector<std::uint8_t> out{'F', 'P', 'T', kFptVersion};
  out.reserve(encoded_size(t.minutiae.size()));
  out.push_back(t.algorithm == TeVariant::high_accuracy ? 0 : 1);
  out.push_back(static_cast<std::uint8_t>(t.minutiae.size()));
  out.push_back(static_cast<std::uint8_t>((t.width + 3) / 4));
  out.push_back(static_cast<std::uint8_t>((t.height + 3) / 4));
  for (const auto& m : sorted.minutiae) {
    if (m.x < 0 || m.y < 0 || m.x > 0xFFFF || m.y > 0xFFFF)
      throw EncodeError("minutia coordinates do not fit 16 bits");
    if (m.x >= t.width || m.y >= t.height)
      throw EncodeError("minutia lies outside the source image");
    out.push_back(static_cast<std::uint8_t>(m.x & 0xFF));
    out.push_back(static_cast<std::uint8_t>(m.x >> 8));
    out.push_back(static_cast<std::uint8_t>(m.y & 0xFF));
    out.push_back(static_cast<std::uint8_t>(m.y >> 8));
    out.push_back(quantize_angle(m.angle));
    out.push_back(static_cast<std::uint8_t>(m.kind));
  }
  return out;
}

// Decoded dimensions are the stored coarse values (multiples of 4).
inline Template decode(std::span<const std::uint8_t> bytes) {
  using Kind = DecodeError::Kind;
  if (bytes.size() < kFptHeaderSize) throw DecodeError(Kind::length_mismatch, "buffer shorter than the .fpt header");
  if (bytes[0] != 'F' || bytes[1] != 'P' || bytes[2] != 'T') throw DecodeError(Kind::bad_magic, "missing FPT magic");
  if (bytes[3] != kFptVersion) throw DecodeError(Kind::bad_version, "unsupported .fpt version");
  if (bytes[4] > 1) throw DecodeError(Kind::bad_record, "unknown algorithm byte");
  const std::size_t count = bytes[5];
  if (bytes.size() != encoded_size(count))
    throw DecodeError(Kind::length_mismatch, "length does not match the minutiae count");

  Template t;
  t.algorithm = bytes[4] == 0 ? TeVariant::high_accuracy : TeVariant::lightweight;
  t.width = bytes[6] * 4;
  t.height = bytes[7] * 4;
  t.minutiae.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto* r = bytes.data() + kFptHeaderSize + i * kFptRecordSize;
    Minutia m;
    m.x = r[0] | (r[1] << 8);
    m.y = r[2] | (r[3] << 8);
    m.angle = dequantize_angle(r[4]);
    if (r[5] > 1) throw DecodeError(Kind::bad_record, "unknown minutia kind");
    m.kind = static_cast<MinutiaKind>(r[5]);
    if (m.x >= t.width || m.y >= t.height)
      throw DecodeError(Kind::bad_record, "minutia outside the source image");
    t.minutiae.push_back(m);
  }
  t.sort();
  return t;
}

inline double compression_ratio(std::uint64_t image_bytes, std::uint64_t template_bytes) {
  if (template_bytes == 0) throw DomainError("template size must be positive");
  return static_cast<double>(image_bytes) / static_cast<double>(template_bytes);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline Template load_template(const std::string& path) { return decode(read_file_bytes(path)); }

inline void save_template(const std::string& path, const Template& t) {
  write_file_bytes(path, encode(t));
}

}  // namespace fieldauth
