#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fieldauth/errors.hpp"

namespace fieldauth {

// 80-bit key, most significant byte first.
struct Key80 {
  std::array<std::uint8_t, 10> bytes{};

  friend bool operator==(const Key80&, const Key80&) = default;
};

namespace detail {

inline int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

inline std::vector<std::uint8_t> parse_hex(std::string_view text, std::size_t bytes, const char* what) {
  if (text.starts_with("0x") || text.starts_with("0X")) text.remove_prefix(2);
  if (text.size() != 2 * bytes) throw ConfigError(std::string(what) + " must be " + std::to_string(2 * bytes) + " hex digits");
  std::vector<std::uint8_t> out(bytes);
  for (std::size_t i = 0; i < bytes; ++i) {
    const int hi = hex_digit(text[2 * i]), lo = hex_digit(text[2 * i + 1]);
    if (hi < 0 || lo < 0) throw ConfigError(std::string(what) + " contains a non-hex digit");
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

}  // namespace detail

inline Key80 parse_key(std::string_view hex) {
  const auto b = detail::parse_hex(hex, 10, "key");
  Key80 k;
  std::copy(b.begin(), b.end(), k.bytes.begin());
  return k;
}

inline std::uint64_t parse_block(std::string_view hex) {
  std::uint64_t v = 0;
  for (auto b : detail::parse_hex(hex, 8, "block")) v = v << 8 | b;
  return v;
}

inline std::string to_hex(std::uint64_t v) {
  static constexpr char digits[] = "0123456789ABCDEF";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

// PRESENT-80: 31 rounds of round-key addition, 4-bit S-box layer and bit
// permutation, followed by a final key addition.
class Present80 {
 public:
  static constexpr int kRounds = 31;

  explicit Present80(const Key80& key) {
    unsigned __int128 k = 0;
    for (auto b : key.bytes) k = k << 8 | b;
    const unsigned __int128 mask = (static_cast<unsigned __int128>(1) << 80) - 1;
    for (int i = 0; i <= kRounds; ++i) {
      round_keys_[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(k >> 16);
      if (i == kRounds) break;
      k = ((k << 61) | (k >> 19)) & mask;
      const auto top = static_cast<unsigned>(k >> 76) & 0xF;
      k = (k & ~(static_cast<unsigned __int128>(0xF) << 76)) |
          static_cast<unsigned __int128>(tables().sbox[top]) << 76;
      k ^= static_cast<unsigned __int128>(i + 1) << 15;
    }
  }

  std::uint64_t encrypt(std::uint64_t state) const {
    const auto& t = tables();
    for (int r = 0; r < kRounds; ++r) {
      state ^= round_keys_[static_cast<std::size_t>(r)];
      std::uint64_t next = 0;
      for (int j = 0; j < 8; ++j) next |= t.sp[j][(state >> (8 * j)) & 0xFF];
      state = next;
    }
    return state ^ round_keys_[kRounds];
  }

  std::uint64_t decrypt(std::uint64_t state) const {
    const auto& t = tables();
    state ^= round_keys_[kRounds];
    for (int r = kRounds - 1; r >= 0; --r) {
      std::uint64_t next = 0;
      for (int j = 0; j < 16; ++j) next |= t.inv_p[j][(state >> (4 * j)) & 0xF];
      state = 0;
      for (int j = 0; j < 16; ++j)
        state |= static_cast<std::uint64_t>(t.inv_sbox[(next >> (4 * j)) & 0xF]) << (4 * j);
      state ^= round_keys_[static_cast<std::size_t>(r)];
    }
    return state;
  }

  const std::array<std::uint64_t, kRounds + 1>& round_keys() const { return round_keys_; }

 private:
  struct Tables {
    std::array<std::uint8_t, 16> sbox{0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD,
                                      0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2};
    std::array<std::uint8_t, 16> inv_sbox{};
    // sp[j][v]: S-box then permutation applied to byte j holding v.
    std::array<std::array<std::uint64_t, 256>, 8> sp{};
    // inv_p[j][v]: inverse permutation of nibble j holding v.
    std::array<std::array<std::uint64_t, 16>, 16> inv_p{};

    Tables() {
      for (unsigned v = 0; v < 16; ++v) inv_sbox[sbox[v]] = static_cast<std::uint8_t>(v);
      auto perm = [](int i) { return i == 63 ? 63 : (16 * i) % 63; };
      for (int j = 0; j < 8; ++j)
        for (unsigned v = 0; v < 256; ++v) {
          const unsigned sub = static_cast<unsigned>(sbox[v & 0xF]) | static_cast<unsigned>(sbox[v >> 4]) << 4;
          for (int b = 0; b < 8; ++b)
            if ((sub >> b) & 1) sp[j][v] |= std::uint64_t{1} << perm(8 * j + b);
        }
      for (int j = 0; j < 16; ++j)
        for (unsigned v = 0; v < 16; ++v)
          for (int b = 0; b < 4; ++b) {
            const int src = 4 * j + b;
            // bit perm(i) of the input moves back to bit i
            if ((v >> b) & 1) {
              int dst = 0;
              while (perm(dst) != src) ++dst;
              inv_p[j][v] |= std::uint64_t{1} << dst;
            }
          }
    }
  };

  static const Tables& tables() {
    static const Tables t;
    return t;
  }

  std::array<std::uint64_t, kRounds + 1> round_keys_{};
};

inline std::uint64_t encrypt_block(std::uint64_t pt, const Key80& key) { return Present80(key).encrypt(pt); }
inline std::uint64_t decrypt_block(std::uint64_t ct, const Key80& key) { return Present80(key).decrypt(ct); }

// Counter mode: block i of keystream is E(nonce + i), emitted big-endian.
inline std::vector<std::uint8_t> ctr_crypt(std::span<const std::uint8_t> payload, const Present80& cipher,
                                           std::uint64_t nonce) {
  std::vector<std::uint8_t> out(payload.begin(), payload.end());
  for (std::size_t off = 0; off < out.size(); off += 8) {
    const std::uint64_t ks = cipher.encrypt(nonce + off / 8);
    for (std::size_t i = 0; i < 8 && off + i < out.size(); ++i)
      out[off + i] ^= static_cast<std::uint8_t>(ks >> (56 - 8 * i));
  }
  return out;
}

inline std::vector<std::uint8_t> ctr_crypt(std::span<const std::uint8_t> payload, const Key80& key,
                                           std::uint64_t nonce) {
  return ctr_crypt(payload, Present80(key), nonce);
}

}  // namespace fieldauth
