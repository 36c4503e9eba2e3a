#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fieldauth/errors.hpp"

namespace fieldauth {

using Bits = std::vector<std::uint8_t>;     // 0/1 per element
using Symbols = std::vector<std::int8_t>;   // line symbols, +1 / -1

inline constexpr std::uint8_t kPreamble = 0xAA;
inline constexpr std::uint16_t kSyncWord = 0xF3A5;
inline constexpr std::size_t kMaxPayload = 0xFFFF;
// preamble + sync + length + crc
inline constexpr std::size_t kFrameOverheadBits = 8 + 16 + 16 + 16;

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
inline std::uint16_t crc16_ccitt(std::span<const std::uint8_t> data, std::uint16_t crc = 0xFFFF) {
  static const auto table = [] {
    std::array<std::uint16_t, 256> t{};
    for (unsigned i = 0; i < 256; ++i) {
      std::uint16_t c = static_cast<std::uint16_t>(i << 8);
      for (int b = 0; b < 8; ++b)
        c = static_cast<std::uint16_t>((c & 0x8000) ? (c << 1) ^ 0x1021 : c << 1);
      t[i] = c;
    }
    return t;
  }();
  for (auto byte : data)
    crc = static_cast<std::uint16_t>((crc << 8) ^ table[((crc >> 8) ^ byte) & 0xFF]);
  return crc;
}

namespace detail {

inline void push_bits(Bits& out, std::uint32_t value, int width) {
  for (int i = width - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>((value >> i) & 1));
}

inline std::uint32_t read_bits(const Bits& in, std::size_t pos, int width) {
  std::uint32_t v = 0;
  for (int i = 0; i < width; ++i) v = (v << 1) | in[pos + static_cast<std::size_t>(i)];
  return v;
}

}  // namespace detail

// Frame fields MSB-first: preamble 0xAA, sync 0xF3A5, length u16, payload,
// CRC-16 over length + payload.
inline Bits frame_bits(std::span<const std::uint8_t> payload) {
  if (payload.size() > kMaxPayload) throw FramingError("payload exceeds 65535 bytes");
  std::vector<std::uint8_t> covered;
  covered.reserve(payload.size() + 2);
  covered.push_back(static_cast<std::uint8_t>(payload.size() >> 8));
  covered.push_back(static_cast<std::uint8_t>(payload.size() & 0xFF));
  covered.insert(covered.end(), payload.begin(), payload.end());
  const std::uint16_t crc = crc16_ccitt(covered);

  Bits bits;
  bits.reserve(kFrameOverheadBits + 8 * payload.size());
  detail::push_bits(bits, kPreamble, 8);
  detail::push_bits(bits, kSyncWord, 16);
  for (auto b : covered) detail::push_bits(bits, b, 8);
  detail::push_bits(bits, crc, 16);
  return bits;
}

// 0 -> low,high ; 1 -> high,low
inline Symbols manchester_encode(const Bits& bits) {
  Symbols s;
  s.reserve(bits.size() * 2);
  for (auto b : bits) {
    s.push_back(b ? 1 : -1);
    s.push_back(b ? -1 : 1);
  }
  return s;
}

inline Symbols encode_frame(std::span<const std::uint8_t> payload) {
  return manchester_encode(frame_bits(payload));
}

struct Waveform {
  double sample_rate = 1e6;  // samples / s
  int bit_period = 10;       // samples per line symbol
  std::vector<double> samples;

  std::size_t symbol_count() const { return samples.size() / static_cast<std::size_t>(bit_period); }
};

struct ChannelModel {
  double attenuation = 1.0;      // linear gain
  double hum_amplitude = 0.0;    // relative to the received signal amplitude
  double hum_frequency = 60.0;   // Hz
  double noise_sigma = 0.0;      // relative to the received signal amplitude
  double highpass_cutoff = 10e3; // Hz, receiver bias network; 0 disables it

  void validate() const {
    if (!(attenuation >= 0.0) || !(hum_amplitude >= 0.0) || !(noise_sigma >= 0.0))
      throw DomainError("channel gains and amplitudes must be non-negative");
    if (!(hum_frequency >= 0.0) || !(highpass_cutoff >= 0.0))
      throw DomainError("channel frequencies must be non-negative");
  }
};

// Symbols held for bit_period samples, scaled by the attenuation, plus mains
// hum and seeded Gaussian noise (both relative to the received amplitude).
inline Waveform transmit(const Symbols& symbols, int bit_period, const ChannelModel& channel,
                         std::uint64_t seed, double sample_rate = 1e6) {
  if (bit_period < 4) throw DomainError("bit period must be at least 4 samples");
  if (!(sample_rate > 0.0)) throw DomainError("sample rate must be positive");
  channel.validate();
  Waveform w{sample_rate, bit_period, {}};
  w.samples.reserve(symbols.size() * static_cast<std::size_t>(bit_period));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double omega = 2.0 * std::numbers::pi * channel.hum_frequency / sample_rate;
  std::size_t n = 0;
  for (auto s : symbols)
    for (int k = 0; k < bit_period; ++k, ++n) {
      double v = s;
      if (channel.hum_amplitude > 0) v += channel.hum_amplitude * std::sin(omega * static_cast<double>(n));
      if (channel.noise_sigma > 0) v += channel.noise_sigma * gauss(rng);
      w.samples.push_back(channel.attenuation * v);
    }
  return w;
}

// First-order RC high-pass: y[n] = a (y[n-1] + x[n] - x[n-1]), a = RC / (RC + dt).
inline Waveform highpass_bias(const Waveform& w, double cutoff) {
  if (!(cutoff > 0.0) || !(cutoff < w.sample_rate / 2))
    throw DomainError("high-pass cutoff must lie in (0, sample_rate / 2)");
  Waveform out = w;
  if (w.samples.empty()) return out;
  const double rc = 1.0 / (2.0 * std::numbers::pi * cutoff);
  const double dt = 1.0 / w.sample_rate;
  const double a = rc / (rc + dt);
  double prev_x = w.samples[0], prev_y = w.samples[0];
  for (std::size_t i = 1; i < w.samples.size(); ++i) {
    const double x = w.samples[i];
    prev_y = a * (prev_y + x - prev_x);
    prev_x = x;
    out.samples[i] = prev_y;
  }
  return out;
}

enum class ReceiverMode { direct_sample, integrate_and_dump };

inline const char* to_string(ReceiverMode m) {
  return m == ReceiverMode::direct_sample ? "direct_sample" : "integrate_and_dump";
}

// Per-symbol decision statistic: the mid-period sample, or the sum over the
// whole period.
inline std::vector<double> decision_statistics(const Waveform& w, ReceiverMode mode) {
  const auto p = static_cast<std::size_t>(w.bit_period);
  std::vector<double> stats(w.symbol_count());
  for (std::size_t k = 0; k < stats.size(); ++k) {
    if (mode == ReceiverMode::direct_sample) {
      stats[k] = w.samples[k * p + p / 2];
    } else {
      double acc = 0.0;
      for (std::size_t i = 0; i < p; ++i) acc += w.samples[k * p + i];
      stats[k] = acc;
    }
  }
  return stats;
}

inline Symbols slice_symbols(const std::vector<double>& stats) {
  Symbols s(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) s[i] = stats[i] > 0 ? 1 : (stats[i] < 0 ? -1 : 0);
  return s;
}

// min |statistic| / max |statistic| over all symbols: 1 = fully open.
inline double eye_opening(const Waveform& w, ReceiverMode mode) {
  const auto stats = decision_statistics(w, mode);
  double lo = INFINITY, hi = 0.0;
  for (double s : stats) {
    lo = std::min(lo, std::fabs(s));
    hi = std::max(hi, std::fabs(s));
  }
  if (stats.empty() || hi == 0.0) return 0.0;
  return lo / hi;
}

template <typename T>
double ber(const std::vector<T>& tx, const std::vector<T>& rx) {
  if (tx.size() != rx.size()) throw DomainError("bit sequences differ in length");
  if (tx.empty()) return 0.0;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < tx.size(); ++i) diff += tx[i] != rx[i];
  return static_cast<double>(diff) / static_cast<double>(tx.size());
}

struct LinkStats {
  std::size_t symbols = 0;
  double eye_opening = 0.0;
  std::optional<std::size_t> symbol_errors;  // against a known reference
  std::optional<double> ber;
};

inline LinkStats measure(const Waveform& w, ReceiverMode mode,
                         const std::optional<Symbols>& reference = std::nullopt) {
  LinkStats st;
  const auto stats = decision_statistics(w, mode);
  st.symbols = stats.size();
  st.eye_opening = eye_opening(w, mode);
  if (reference) {
    const auto rx = slice_symbols(stats);
    if (reference->size() != rx.size()) throw DomainError("reference length differs from waveform");
    st.ber = ber(*reference, rx);
    st.symbol_errors = static_cast<std::size_t>(std::llround(*st.ber * static_cast<double>(rx.size())));
  }
  return st;
}

struct ReceivedFrame {
  std::vector<std::uint8_t> payload;
  LinkStats stats;
};

// Manchester pairs are resolved by comparing the two half-bit statistics, so
// a valid pair reads exactly as its hard decisions and an invalid pair follows
// the stronger half.
inline ReceivedFrame receive_decode(const Waveform& w, ReceiverMode mode,
                                    const std::optional<Symbols>& reference = std::nullopt) {
  ReceivedFrame out;
  out.stats = measure(w, mode, reference);
  const auto stats = decision_statistics(w, mode);

  bool synced = false;
  for (std::size_t phase = 0; phase < 2; ++phase) {
    if (stats.size() < phase + 2) continue;
    Bits bits;
    bits.reserve((stats.size() - phase) / 2);
    for (std::size_t k = phase; k + 1 < stats.size(); k += 2)
      bits.push_back(stats[k] > stats[k + 1] ? 1 : 0);
    for (std::size_t pos = 0; pos + 16 + 16 + 16 <= bits.size(); ++pos) {
      if (detail::read_bits(bits, pos, 16) != kSyncWord) continue;
      synced = true;
      const std::size_t len_pos = pos + 16;
      const std::size_t len = detail::read_bits(bits, len_pos, 16);
      const std::size_t crc_pos = len_pos + 16 + 8 * len;
      if (crc_pos + 16 > bits.size()) continue;
      std::vector<std::uint8_t> covered(len + 2);
      for (std::size_t i = 0; i < covered.size(); ++i)
        covered[i] = static_cast<std::uint8_t>(detail::read_bits(bits, len_pos + 8 * i, 8));
      if (crc16_ccitt(covered) != detail::read_bits(bits, crc_pos, 16)) continue;
      out.payload.assign(covered.begin() + 2, covered.end());
      return out;
    }
  }
  if (!synced) throw SyncError("sync word not found");
  throw IntegrityError("CRC check failed");
}

// Receiver front end as deployed: bias high-pass (when configured) followed by
// the chosen decision device.
inline ReceivedFrame receive_chain(const Waveform& w, const ChannelModel& channel, ReceiverMode mode,
                                   const std::optional<Symbols>& reference = std::nullopt) {
  if (channel.highpass_cutoff > 0.0)
    return receive_decode(highpass_bias(w, channel.highpass_cutoff), mode, reference);
  return receive_decode(w, mode, reference);
}

// Error-free on-body radio: the payload arrives as sent.
inline std::vector<std::uint8_t> wban_transfer(std::span<const std::uint8_t> payload) {
  return {payload.begin(), payload.end()};
}

// ---------------------------------------------------------------------------
// Hum sweeps

struct SweepConfig {
  std::vector<double> hum_amplitudes{0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
  std::vector<ReceiverMode> modes{ReceiverMode::direct_sample, ReceiverMode::integrate_and_dump};
  ChannelModel channel{1.0, 0.0, 60.0, 0.15, 10e3};
  std::size_t payload_bytes = 256;
  int bit_period = 10;
  double sample_rate = 1e6;
  std::uint64_t seed = 1;
};

struct SweepRow {
  double hum_amplitude = 0.0;
  ReceiverMode mode = ReceiverMode::direct_sample;
  double ber = 0.0;
  double eye_opening = 0.0;
  bool frame_ok = false;
};

// For each hum amplitude one waveform is generated (same seed at every point)
// and every receiver mode decodes that same waveform.
inline std::vector<SweepRow> hum_sweep(const SweepConfig& cfg) {
  std::mt19937_64 payload_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::uint8_t> payload(cfg.payload_bytes);
  for (auto& b : payload) b = static_cast<std::uint8_t>(payload_rng() & 0xFF);
  const auto symbols = encode_frame(payload);

  std::vector<SweepRow> rows;
  for (double hum : cfg.hum_amplitudes) {
    ChannelModel ch = cfg.channel;
    ch.hum_amplitude = hum;
    auto w = transmit(symbols, cfg.bit_period, ch, cfg.seed, cfg.sample_rate);
    if (ch.highpass_cutoff > 0.0) w = highpass_bias(w, ch.highpass_cutoff);
    for (auto mode : cfg.modes) {
      SweepRow row{hum, mode, 0.0, 0.0, false};
      const auto st = measure(w, mode, symbols);
      row.ber = *st.ber;
      row.eye_opening = st.eye_opening;
      try {
        row.frame_ok = receive_decode(w, mode).payload == payload;
      } catch (const SyncError&) {
      } catch (const IntegrityError&) {
      }
      rows.push_back(row);
    }
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "hum_amplitude,mode,ber,eye_opening,frame_ok\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6g,%s,%.9f,%.9f,%d\n", r.hum_amplitude, to_string(r.mode),
                  r.ber, r.eye_opening, r.frame_ok ? 1 : 0);
    out += buf;
  }
  return out;
}

// "sample_index,value" with the timing in leading comment lines.
inline void write_waveform_csv(std::ostream& out, const Waveform& w) {
  out << "# sample_rate=" << w.sample_rate << "\n# bit_period=" << w.bit_period
      << "\nsample_index,value\n";
  char buf[64];
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, w.samples[i]);
    out << buf;
  }
}

inline Waveform read_waveform_csv(std::istream& in) {
  Waveform w;
  w.samples.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# sample_rate=", 0) == 0) w.sample_rate = std::stod(line.substr(14));
      if (line.rfind("# bit_period=", 0) == 0) w.bit_period = std::stoi(line.substr(13));
      continue;
    }
    if (line.rfind("sample_index", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DomainError("malformed waveform CSV line: " + line);
    w.samples.push_back(std::stod(line.substr(comma + 1)));
  }
  return w;
}

}  // namespace fieldauth
