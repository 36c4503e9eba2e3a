#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fieldauth/errors.hpp"

namespace fieldauth {

// 8-bit grayscale, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0)
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw DomainError("image dimensions must be non-negative");
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 0 || height < 0 ||
        pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw DomainError("pixel count does not match image dimensions");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::vector<std::uint8_t>& pixels() { return pixels_; }

  std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Ridge = 1, background = 0.
class BinaryImage {
 public:
  BinaryImage() = default;
  BinaryImage(int width, int height) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw DomainError("image dimensions must be non-negative");
    bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  std::uint8_t at(int x, int y) const { return bits_[index(x, y)]; }
  // Zero outside the image.
  std::uint8_t get(int x, int y) const { return contains(x, y) ? bits_[index(x, y)] : 0; }
  void set(int x, int y, bool on) { bits_[index(x, y)] = on ? 1 : 0; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits_) n += b;
    return n;
  }

  bool operator==(const BinaryImage&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Binary PGM (P5), maxval <= 255.
inline GrayImage read_pgm(std::istream& in) {
  auto next_token = [&in]() {
    std::string tok;
    char c = 0;
    while (in.get(c)) {
      if (c == '#') {
        std::string rest;
        std::getline(in, rest);
        if (!tok.empty()) break;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) break;
        continue;
      }
      tok += c;
    }
    return tok;
  };
  if (next_token() != "P5") throw DecodeError(DecodeError::Kind::bad_magic, "not a binary PGM (P5) file");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw DecodeError(DecodeError::Kind::bad_record, "malformed PGM header");
  }
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
    throw DecodeError(DecodeError::Kind::bad_record, "unsupported PGM dimensions or maxval");
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (in.gcount() != static_cast<std::streamsize>(px.size()))
    throw DecodeError(DecodeError::Kind::length_mismatch, "truncated PGM pixel data");
  if (maxval != 255)
    for (auto& p : px) p = static_cast<std::uint8_t>((p * 255 + maxval / 2) / maxval);
  return GrayImage(width, height, std::move(px));
}

inline void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()),
            static_cast<std::streamsize>(img.pixels().size()));
}

inline std::vector<std::uint8_t> pgm_bytes(const GrayImage& img) {
  std::ostringstream os;
  write_pgm(os, img);
  const std::string s = os.str();
  return {s.begin(), s.end()};
}

inline GrayImage pgm_from_bytes(const std::vector<std::uint8_t>& bytes) {
  std::istringstream is(std::string(bytes.begin(), bytes.end()));
  return read_pgm(is);
}

inline GrayImage load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open image: " + path);
  return read_pgm(in);
}

inline void save_pgm(const std::string& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write image: " + path);
  write_pgm(out, img);
}

inline GrayImage load_raw(const std::string& path, int width, int height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open image: " + path);
  std::vector<std::uint8_t> px((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (width <= 0 || height <= 0 ||
      px.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw DomainError("raw image size does not match the given dimensions");
  return GrayImage(width, height, std::move(px));
}

}  // namespace fieldauth
