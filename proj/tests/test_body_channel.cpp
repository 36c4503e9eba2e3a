#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "fieldauth/body_channel.hpp"

using namespace fieldauth;

namespace {

// Bit-at-a-time CRC-16/CCITT-FALSE.
std::uint16_t crc_bitwise(const std::vector<std::uint8_t>& data) {
  std::uint16_t crc = 0xFFFF;
  for (auto byte : data)
    for (int i = 7; i >= 0; --i) {
      const bool in = (byte >> i) & 1;
      const bool top = crc & 0x8000;
      crc = static_cast<std::uint16_t>(crc << 1);
      if (in != top) crc ^= 0x1021;
    }
  return crc;
}

std::vector<std::uint8_t> random_bytes(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = static_cast<std::uint8_t>(rng() & 0xFF);
  return v;
}

ChannelModel clean_channel() {
  ChannelModel ch;
  ch.highpass_cutoff = 0.0;
  return ch;
}

double tone_amplitude(const std::vector<double>& x, double freq, double fs) {
  std::complex<double> acc = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n)
    acc += x[n] * std::polar(1.0, -2.0 * std::numbers::pi * freq * static_cast<double>(n) / fs);
  return 2.0 * std::abs(acc) / static_cast<double>(x.size());
}

double rms(const std::vector<double>& x, std::size_t from) {
  double acc = 0.0;
  for (std::size_t i = from; i < x.size(); ++i) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(x.size() - from));
}

}  // namespace

TEST(Crc, KnownCheckValue) {
  const std::string s = "123456789";
  const std::vector<std::uint8_t> v(s.begin(), s.end());
  EXPECT_EQ(crc16_ccitt(v), 0x29B1);
}

TEST(Crc, MatchesBitwiseOracle) {
  std::mt19937_64 rng(3);
  for (std::size_t n = 0; n < 300; ++n) {
    const auto v = random_bytes(n, rng);
    ASSERT_EQ(crc16_ccitt(v), crc_bitwise(v)) << n;
  }
}

TEST(Frame, EmptyPayloadLayout) {
  const auto bits = frame_bits({});
  ASSERT_EQ(bits.size(), kFrameOverheadBits);
  EXPECT_EQ(encode_frame({}).size(), 2 * kFrameOverheadBits);
  std::uint32_t pre = 0, sync = 0, len = 0;
  for (int i = 0; i < 8; ++i) pre = pre << 1 | bits[static_cast<std::size_t>(i)];
  for (int i = 8; i < 24; ++i) sync = sync << 1 | bits[static_cast<std::size_t>(i)];
  for (int i = 24; i < 40; ++i) len = len << 1 | bits[static_cast<std::size_t>(i)];
  EXPECT_EQ(pre, 0xAAu);
  EXPECT_EQ(sync, 0xF3A5u);
  EXPECT_EQ(len, 0u);
}

TEST(Frame, CrcCoversLengthAndPayload) {
  const std::vector<std::uint8_t> payload{'A', 'B'};
  const auto bits = frame_bits(payload);
  ASSERT_EQ(bits.size(), kFrameOverheadBits + 16);
  std::uint32_t crc = 0;
  for (std::size_t i = bits.size() - 16; i < bits.size(); ++i) crc = crc << 1 | bits[i];
  EXPECT_EQ(crc, crc_bitwise({0x00, 0x02, 0x41, 0x42}));
}

TEST(Frame, ManchesterIsDcBalanced) {
  std::mt19937_64 rng(5);
  for (std::size_t n : {0u, 1u, 17u, 512u}) {
    const auto sym = encode_frame(random_bytes(n, rng));
    EXPECT_EQ(std::accumulate(sym.begin(), sym.end(), 0), 0);
    for (std::size_t i = 0; i < sym.size(); i += 2) EXPECT_EQ(sym[i], -sym[i + 1]);
  }
}

TEST(Frame, ManchesterConvention) {
  EXPECT_EQ(manchester_encode({0, 1}), (Symbols{-1, 1, 1, -1}));
}

TEST(Frame, OversizePayloadRejected) {
  const std::vector<std::uint8_t> big(kMaxPayload + 1);
  EXPECT_THROW(frame_bits(big), FramingError);
  EXPECT_NO_THROW(frame_bits(std::vector<std::uint8_t>(kMaxPayload)));
}

TEST(Transmit, CleanWaveformIsRectangular) {
  const Symbols sym{1, -1, -1, 1};
  ChannelModel ch = clean_channel();
  ch.attenuation = 0.5;
  const auto w = transmit(sym, 6, ch, 1);
  ASSERT_EQ(w.samples.size(), 24u);
  EXPECT_EQ(w.symbol_count(), 4u);
  for (std::size_t i = 0; i < w.samples.size(); ++i) EXPECT_DOUBLE_EQ(w.samples[i], 0.5 * sym[i / 6]);
}

TEST(Transmit, HumAppearsAtMainsFrequency) {
  std::mt19937_64 rng(8);
  Symbols sym(10000);
  for (auto& s : sym) s = (rng() & 1) ? 1 : -1;
  ChannelModel ch = clean_channel();
  ch.attenuation = 0.1;
  ch.hum_amplitude = 5.0;
  const auto w = transmit(sym, 10, ch, 1);
  EXPECT_NEAR(tone_amplitude(w.samples, 60.0, w.sample_rate), 0.5, 0.02);
  EXPECT_LT(tone_amplitude(w.samples, 120.0, w.sample_rate), 0.02);
}

TEST(Transmit, SeedDeterminesNoise) {
  const auto sym = encode_frame(std::vector<std::uint8_t>{1, 2, 3});
  ChannelModel ch;
  ch.noise_sigma = 0.3;
  EXPECT_EQ(transmit(sym, 8, ch, 42).samples, transmit(sym, 8, ch, 42).samples);
  EXPECT_NE(transmit(sym, 8, ch, 42).samples, transmit(sym, 8, ch, 43).samples);
}

TEST(Transmit, InvalidArguments) {
  const Symbols sym{1, -1};
  EXPECT_THROW(transmit(sym, 3, {}, 1), DomainError);
  ChannelModel ch;
  ch.noise_sigma = -1;
  EXPECT_THROW(transmit(sym, 8, ch, 1), DomainError);
  EXPECT_THROW(transmit(sym, 8, {}, 1, 0.0), DomainError);
}

TEST(Highpass, RejectsMainsHum) {
  Waveform w;
  for (int n = 0; n < 200000; ++n) w.samples.push_back(std::sin(2 * std::numbers::pi * 60.0 * n / w.sample_rate));
  const auto y = highpass_bias(w, 10e3);
  EXPECT_LT(rms(y.samples, 1000) / rms(w.samples, 1000), 0.01);
}

TEST(Highpass, RemovesDcOffset) {
  Waveform w;
  w.samples.assign(400, 3.0);
  const auto y = highpass_bias(w, 10e3);
  EXPECT_DOUBLE_EQ(y.samples[0], 3.0);
  for (std::size_t i = 1; i < y.samples.size(); ++i) EXPECT_LT(y.samples[i], y.samples[i - 1]);
  EXPECT_LT(std::fabs(y.samples.back()), 1e-6);
}

TEST(Highpass, PreservesLineSymbols) {
  std::mt19937_64 rng(2);
  const auto sym = encode_frame(random_bytes(64, rng));
  const auto w = transmit(sym, 10, clean_channel(), 1);
  const auto y = highpass_bias(w, 10e3);
  double xy = 0, xx = 0, yy = 0;
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    xy += w.samples[i] * y.samples[i];
    xx += w.samples[i] * w.samples[i];
    yy += y.samples[i] * y.samples[i];
  }
  EXPECT_GE(xy / std::sqrt(xx * yy), 0.9);
}

TEST(Highpass, CutoffDomain) {
  Waveform w;
  w.samples = {1, 2, 3};
  EXPECT_THROW(highpass_bias(w, 0.0), DomainError);
  EXPECT_THROW(highpass_bias(w, w.sample_rate / 2), DomainError);
}

TEST(Receive, CleanRoundTripBothModes) {
  std::mt19937_64 rng(11);
  const auto payload = random_bytes(100, rng);
  const auto sym = encode_frame(payload);
  for (auto mode : {ReceiverMode::direct_sample, ReceiverMode::integrate_and_dump}) {
    const auto w = transmit(sym, 10, ChannelModel{}, 1);
    const auto rx = receive_chain(w, ChannelModel{}, mode, sym);
    EXPECT_EQ(rx.payload, payload);
    EXPECT_EQ(rx.stats.symbol_errors, 0u);
    EXPECT_EQ(rx.stats.ber, 0.0);
  }
}

TEST(Receive, RandomPayloadsRoundTrip) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> len(0, 600);
  for (int t = 0; t < 50; ++t) {
    const auto payload = random_bytes(len(rng), rng);
    const auto w = transmit(encode_frame(payload), 4, clean_channel(), 1);
    ASSERT_EQ(receive_decode(w, ReceiverMode::integrate_and_dump).payload, payload);
  }
}

TEST(Receive, LeadingSilenceAndHalfSymbolSkew) {
  const std::vector<std::uint8_t> payload{9, 8, 7};
  Symbols sym(7, 0);
  const auto frame = encode_frame(payload);
  sym.insert(sym.end(), frame.begin(), frame.end());
  const auto w = transmit(sym, 8, clean_channel(), 1);
  EXPECT_EQ(receive_decode(w, ReceiverMode::direct_sample).payload, payload);
}

TEST(Receive, ZeroAttenuationLosesSync) {
  ChannelModel ch;
  ch.attenuation = 0.0;
  const auto w = transmit(encode_frame(std::vector<std::uint8_t>{1, 2}), 10, ch, 1);
  EXPECT_THROW(receive_chain(w, ch, ReceiverMode::integrate_and_dump), SyncError);
}

TEST(Receive, IntegrateAndDumpSurvivesWhereDirectFails) {
  std::mt19937_64 rng(21);
  const auto payload = random_bytes(256, rng);
  const auto sym = encode_frame(payload);
  ChannelModel ch;
  ch.hum_amplitude = 2.0;
  ch.noise_sigma = 0.5;
  const auto w = transmit(sym, 10, ch, 1);
  EXPECT_EQ(receive_chain(w, ch, ReceiverMode::integrate_and_dump).payload, payload);
  EXPECT_ANY_THROW(receive_chain(w, ch, ReceiverMode::direct_sample));
  const auto direct = measure(highpass_bias(w, ch.highpass_cutoff), ReceiverMode::direct_sample, sym);
  EXPECT_GT(*direct.ber, 0.0);
}

TEST(Receive, CorruptedCrcIsIntegrityError) {
  const std::vector<std::uint8_t> payload{1, 2, 3, 4};
  auto bits = frame_bits(payload);
  bits.back() ^= 1;
  const auto w = transmit(manchester_encode(bits), 4, clean_channel(), 1);
  EXPECT_THROW(receive_decode(w, ReceiverMode::integrate_and_dump), IntegrityError);
}

TEST(Receive, EverySingleBitFlipIsCaught) {
  std::mt19937_64 rng(31);
  const auto payload = random_bytes(64, rng);
  const auto bits = frame_bits(payload);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    auto flipped = bits;
    flipped[i] ^= 1;
    const auto w = transmit(manchester_encode(flipped), 4, clean_channel(), 1);
    if (i < 8) {
      ASSERT_EQ(receive_decode(w, ReceiverMode::integrate_and_dump).payload, payload) << i;
      continue;
    }
    bool caught = false;
    try {
      receive_decode(w, ReceiverMode::integrate_and_dump);
    } catch (const SyncError&) {
      caught = true;
    } catch (const IntegrityError&) {
      caught = true;
    }
    ASSERT_TRUE(caught) << "bit " << i;
  }
}

TEST(Eye, CleanLinkIsFullyOpen) {
  const auto w = transmit(encode_frame(std::vector<std::uint8_t>{0x5A}), 10, clean_channel(), 1);
  EXPECT_DOUBLE_EQ(eye_opening(w, ReceiverMode::direct_sample), 1.0);
  EXPECT_DOUBLE_EQ(eye_opening(w, ReceiverMode::integrate_and_dump), 1.0);
}

TEST(Eye, EmptyOrSilentWaveformIsClosed) {
  Waveform w;
  EXPECT_EQ(eye_opening(w, ReceiverMode::direct_sample), 0.0);
  w.samples.assign(40, 0.0);
  EXPECT_EQ(eye_opening(w, ReceiverMode::integrate_and_dump), 0.0);
}

TEST(Ber, Examples) {
  EXPECT_DOUBLE_EQ(ber(Bits{1, 0, 1, 1}, Bits{1, 1, 1, 0}), 0.5);
  EXPECT_DOUBLE_EQ(ber(Bits{}, Bits{}), 0.0);
  EXPECT_DOUBLE_EQ(ber(Symbols{1, -1}, Symbols{1, -1}), 0.0);
  EXPECT_THROW(ber(Bits{1}, Bits{1, 0}), DomainError);
}

TEST(Sweep, IntegrateAndDumpNeverWorse) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    SweepConfig cfg;
    cfg.seed = seed;
    const auto rows = hum_sweep(cfg);
    ASSERT_EQ(rows.size(), 2 * cfg.hum_amplitudes.size());
    for (std::size_t i = 0; i < rows.size(); i += 2) {
      const auto& d = rows[i];
      const auto& m = rows[i + 1];
      ASSERT_EQ(d.mode, ReceiverMode::direct_sample);
      ASSERT_EQ(m.mode, ReceiverMode::integrate_and_dump);
      EXPECT_LE(m.ber, d.ber);
      EXPECT_GT(m.eye_opening, d.eye_opening) << "hum " << d.hum_amplitude;
      EXPECT_TRUE(m.frame_ok);
    }
  }
}

TEST(Sweep, DirectDegradesWithHum) {
  SweepConfig cfg;
  cfg.modes = {ReceiverMode::direct_sample};
  cfg.channel.highpass_cutoff = 0.0;
  cfg.hum_amplitudes = {0.0, 64.0};
  const auto rows = hum_sweep(cfg);
  EXPECT_GT(rows[1].ber, rows[0].ber);
  EXPECT_LT(rows[1].eye_opening, rows[0].eye_opening);
}

TEST(Sweep, CsvLayout) {
  SweepConfig cfg;
  cfg.hum_amplitudes = {0.0};
  cfg.payload_bytes = 8;
  const auto csv = sweep_csv(hum_sweep(cfg));
  EXPECT_EQ(csv.rfind("hum_amplitude,mode,ber,eye_opening,frame_ok\n0,direct_sample,", 0), 0u);
  EXPECT_NE(csv.find("\n0,integrate_and_dump,0.000000000,"), std::string::npos);
}

TEST(WaveformCsv, RoundTrip) {
  ChannelModel ch;
  ch.noise_sigma = 0.2;
  const auto w = transmit(encode_frame(std::vector<std::uint8_t>{1, 2, 3}), 7, ch, 9, 2e6);
  std::stringstream ss;
  write_waveform_csv(ss, w);
  const auto r = read_waveform_csv(ss);
  EXPECT_EQ(r.sample_rate, 2e6);
  EXPECT_EQ(r.bit_period, 7);
  EXPECT_EQ(r.samples, w.samples);
}

TEST(WaveformCsv, MalformedLine) {
  std::stringstream ss("sample_index,value\n12\n");
  EXPECT_THROW(read_waveform_csv(ss), DomainError);
}
