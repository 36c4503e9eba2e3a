#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "fieldauth/errors.hpp"

namespace fieldauth {

inline constexpr double kJoulesPerWattHour = 3600.0;

enum class Channel { wban = 0, hbc = 1, lora = 2 };
inline constexpr std::size_t kChannelCount = 3;

enum class SensorKind { none, capacitive, optical };
enum class TeVariant { high_accuracy, lightweight };

inline std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::wban: return "wban";
    case Channel::hbc: return "hbc";
    case Channel::lora: return "lora";
  }
  return "?";
}

inline std::string_view to_string(SensorKind s) {
  switch (s) {
    case SensorKind::none: return "none";
    case SensorKind::capacitive: return "capacitive";
    case SensorKind::optical: return "optical";
  }
  return "?";
}

inline std::string_view to_string(TeVariant v) {
  return v == TeVariant::high_accuracy ? "high_accuracy" : "lightweight";
}

// Energy constants and budgets, all in SI units (J, m, bits).
struct EnergyParams {
  double e_bit_wban = 10e-9;
  double e_bit_hbc = 79e-12;
  double e_bit_lora_ref = 68e-6;
  double d_ref = 500.0;
  double e_bit_encrypt = 100e-12;
  double e_capture_capacitive = 22.3e-9;
  double e_capture_optical = 66e-3;
  double e_te_high = 2.94;
  std::optional<double> e_te_light;
  std::uint64_t image_bits = 320256;
  std::uint64_t template_bits = 1408;
  double budget_rf_harvest = 1e-6 * kJoulesPerWattHour;  // per hour
  double budget_coin_cell = 100e-3 * kJoulesPerWattHour;  // per charge
  double budget_hub_total = 4.5 * kJoulesPerWattHour;     // per charge
  double hub_share = 0.10;

  double hub_budget() const { return budget_hub_total * hub_share; }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(std::string(name) + " must be a positive finite value");
    };
    auto non_negative = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ConfigError(std::string(name) + " must be non-negative");
    };
    positive(e_bit_wban, "e_bit_wban");
    positive(e_bit_hbc, "e_bit_hbc");
    positive(e_bit_lora_ref, "e_bit_lora_ref");
    positive(d_ref, "d_ref");
    positive(e_bit_encrypt, "e_bit_encrypt");
    positive(e_capture_capacitive, "e_capture_capacitive");
    positive(e_capture_optical, "e_capture_optical");
    positive(e_te_high, "e_te_high");
    if (e_te_light) positive(*e_te_light, "e_te_light");
    non_negative(budget_rf_harvest, "budget_rf_harvest");
    non_negative(budget_coin_cell, "budget_coin_cell");
    non_negative(budget_hub_total, "budget_hub_total");
    if (!(hub_share > 0.0 && hub_share <= 1.0))
      throw ConfigError("hub_share must lie in (0, 1]");
    if (image_bits <= template_bits)
      throw ConfigError("image_bits must exceed template_bits");
  }
};

// Flat "key = value" file, '#' starts a comment. Keys are the EnergyParams
// field names; missing keys keep their defaults.
inline EnergyParams parse_energy_params(std::istream& in, EnergyParams base = {}) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("params line " + std::to_string(line_no) + ": expected key = value");
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string text = trim(line.substr(eq + 1));
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
      throw ConfigError("params line " + std::to_string(line_no) + ": bad number '" + text + "'");
    }
    auto as_count = [&](const char* name) {
      if (value < 0 || value != std::floor(value))
        throw ConfigError(std::string(name) + " must be a non-negative integer");
      return static_cast<std::uint64_t>(value);
    };
    if (key == "e_bit_wban") base.e_bit_wban = value;
    else if (key == "e_bit_hbc") base.e_bit_hbc = value;
    else if (key == "e_bit_lora_ref") base.e_bit_lora_ref = value;
    else if (key == "d_ref") base.d_ref = value;
    else if (key == "e_bit_encrypt") base.e_bit_encrypt = value;
    else if (key == "e_capture_capacitive") base.e_capture_capacitive = value;
    else if (key == "e_capture_optical") base.e_capture_optical = value;
    else if (key == "e_te_high") base.e_te_high = value;
    else if (key == "e_te_light") base.e_te_light = value;
    else if (key == "image_bits") base.image_bits = as_count("image_bits");
    else if (key == "template_bits") base.template_bits = as_count("template_bits");
    else if (key == "budget_rf_harvest") base.budget_rf_harvest = value;
    else if (key == "budget_coin_cell") base.budget_coin_cell = value;
    else if (key == "budget_hub_total") base.budget_hub_total = value;
    else if (key == "hub_share") base.hub_share = value;
    else throw ConfigError("params line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  base.validate();
  return base;
}

inline EnergyParams load_energy_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open params file: " + path);
  return parse_energy_params(in);
}

// Energy charged to one node for a batch of work (one request, or several
// merged together).
struct NodeActivity {
  std::uint64_t captures = 0;
  std::uint64_t te_high_accuracy = 0;
  std::uint64_t te_lightweight = 0;
  std::array<std::uint64_t, kChannelCount> bits_rx{};
  std::array<std::uint64_t, kChannelCount> bits_tx{};
  std::uint64_t bits_encrypted = 0;
  std::optional<double> lora_distance;

  std::uint64_t& rx(Channel c) { return bits_rx[static_cast<std::size_t>(c)]; }
  std::uint64_t& tx(Channel c) { return bits_tx[static_cast<std::size_t>(c)]; }
  std::uint64_t rx(Channel c) const { return bits_rx[static_cast<std::size_t>(c)]; }
  std::uint64_t tx(Channel c) const { return bits_tx[static_cast<std::size_t>(c)]; }

  void add_te(TeVariant v, std::uint64_t n = 1) {
    (v == TeVariant::high_accuracy ? te_high_accuracy : te_lightweight) += n;
  }

  // Merge of two disjoint batches. Distances must agree when both use LoRa.
  NodeActivity& operator+=(const NodeActivity& o) {
    captures += o.captures;
    te_high_accuracy += o.te_high_accuracy;
    te_lightweight += o.te_lightweight;
    for (std::size_t i = 0; i < kChannelCount; ++i) {
      bits_rx[i] += o.bits_rx[i];
      bits_tx[i] += o.bits_tx[i];
    }
    bits_encrypted += o.bits_encrypted;
    if (o.lora_distance) {
      if (lora_distance && *lora_distance != *o.lora_distance)
        throw DomainError("cannot merge activities with different LoRa distances");
      lora_distance = o.lora_distance;
    }
    return *this;
  }

  friend NodeActivity operator+(NodeActivity a, const NodeActivity& b) { return a += b; }
};

struct EnergyBreakdown {
  double capture = 0.0;
  double compute = 0.0;
  double comm = 0.0;
  double encrypt = 0.0;

  double total() const { return capture + compute + comm + encrypt; }
};

inline double lora_energy_per_bit(double distance, const EnergyParams& p) {
  if (!(distance > 0.0) || !std::isfinite(distance))
    throw DomainError("LoRa distance must be positive");
  const double ratio = distance / p.d_ref;
  return p.e_bit_lora_ref * ratio * ratio;
}

inline double capture_energy(SensorKind sensor, const EnergyParams& p) {
  switch (sensor) {
    case SensorKind::capacitive: return p.e_capture_capacitive;
    case SensorKind::optical: return p.e_capture_optical;
    case SensorKind::none: return 0.0;
  }
  return 0.0;
}

inline double te_energy(TeVariant v, const EnergyParams& p) {
  if (v == TeVariant::high_accuracy) return p.e_te_high;
  if (!p.e_te_light)
    throw ConfigError("lightweight TE requested but e_te_light is not configured");
  return *p.e_te_light;
}

// Per-bit cost to send over a channel. Receiving is charged at the same rate on
// the on-body channels; LoRa reception happens at the cloud and costs nothing.
inline double tx_energy_per_bit(Channel c, const EnergyParams& p,
                                std::optional<double> lora_distance) {
  switch (c) {
    case Channel::wban: return p.e_bit_wban;
    case Channel::hbc: return p.e_bit_hbc;
    case Channel::lora:
      if (!lora_distance) throw DomainError("LoRa traffic requires a distance");
      return lora_energy_per_bit(*lora_distance, p);
  }
  return 0.0;
}

inline double rx_energy_per_bit(Channel c, const EnergyParams& p) {
  switch (c) {
    case Channel::wban: return p.e_bit_wban;
    case Channel::hbc: return p.e_bit_hbc;
    case Channel::lora: return 0.0;
  }
  return 0.0;
}

inline EnergyBreakdown energy_breakdown(const NodeActivity& a, SensorKind sensor,
                                        const EnergyParams& p) {
  EnergyBreakdown b;
  // SensorKind::none (hub, cloud) makes capture free regardless of the count.
  b.capture = static_cast<double>(a.captures) * capture_energy(sensor, p);
  if (a.te_high_accuracy > 0)
    b.compute += static_cast<double>(a.te_high_accuracy) * te_energy(TeVariant::high_accuracy, p);
  if (a.te_lightweight > 0)
    b.compute += static_cast<double>(a.te_lightweight) * te_energy(TeVariant::lightweight, p);
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    const auto c = static_cast<Channel>(i);
    if (a.bits_tx[i] > 0)
      b.comm += static_cast<double>(a.bits_tx[i]) * tx_energy_per_bit(c, p, a.lora_distance);
    if (a.bits_rx[i] > 0)
      b.comm += static_cast<double>(a.bits_rx[i]) * rx_energy_per_bit(c, p);
  }
  b.encrypt = static_cast<double>(a.bits_encrypted) * p.e_bit_encrypt;
  return b;
}

inline double node_energy(const NodeActivity& a, SensorKind sensor, const EnergyParams& p) {
  return energy_breakdown(a, sensor, p).total();
}

// Requests supported by an energy budget: per charge for batteries, per hour
// for harvesting.
inline double retries(double available, double per_request) {
  if (!(per_request > 0.0)) throw DomainError("per-request energy must be positive");
  if (!(available >= 0.0)) throw DomainError("available energy must be non-negative");
  return available / per_request;
}

}  // namespace fieldauth
