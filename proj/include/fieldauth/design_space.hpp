#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fieldauth/energy.hpp"

namespace fieldauth {

enum class TeLocation { sensor, hub, cloud };
enum class SensorPower { rf_harvest, coin_cell };

inline std::string_view to_string(TeLocation t) {
  switch (t) {
    case TeLocation::sensor: return "sensor";
    case TeLocation::hub: return "hub";
    case TeLocation::cloud: return "cloud";
  }
  return "?";
}

inline std::string_view to_string(SensorPower p) {
  return p == SensorPower::rf_harvest ? "rf_harvest" : "coin_cell";
}

inline TeLocation parse_te_location(std::string_view s) {
  if (s == "sensor") return TeLocation::sensor;
  if (s == "hub") return TeLocation::hub;
  if (s == "cloud") return TeLocation::cloud;
  throw ConfigError("unknown TE location '" + std::string(s) + "' (sensor|hub|cloud)");
}

inline Channel parse_on_body_channel(std::string_view s) {
  if (s == "wban") return Channel::wban;
  if (s == "hbc") return Channel::hbc;
  throw ConfigError("unknown on-body channel '" + std::string(s) + "' (wban|hbc)");
}

inline SensorKind parse_sensor(std::string_view s) {
  if (s == "capacitive") return SensorKind::capacitive;
  if (s == "optical") return SensorKind::optical;
  throw ConfigError("unknown sensor '" + std::string(s) + "' (capacitive|optical)");
}

inline SensorPower parse_power(std::string_view s) {
  if (s == "rf_harvest" || s == "rf") return SensorPower::rf_harvest;
  if (s == "coin_cell" || s == "coin") return SensorPower::coin_cell;
  throw ConfigError("unknown power source '" + std::string(s) + "' (rf_harvest|coin_cell)");
}

inline TeVariant parse_te_variant(std::string_view s) {
  if (s == "high_accuracy" || s == "high") return TeVariant::high_accuracy;
  if (s == "lightweight" || s == "light") return TeVariant::lightweight;
  throw ConfigError("unknown TE algorithm '" + std::string(s) + "' (high|light)");
}

// One resource allocation of the authentication chain. The six
// (te_location, on_body) pairs are the rows (a)..(f) of the allocation table.
struct SystemConfig {
  TeLocation te_location = TeLocation::hub;
  Channel on_body = Channel::hbc;
  SensorKind sensor = SensorKind::capacitive;
  SensorPower power = SensorPower::rf_harvest;
  double lora_distance = 1000.0;
  TeVariant te_variant = TeVariant::high_accuracy;

  void validate() const {
    if (on_body == Channel::lora) throw ConfigError("on-body channel must be wban or hbc");
    if (sensor == SensorKind::none) throw ConfigError("sensor type must be capacitive or optical");
    if (!(lora_distance > 0.0)) throw DomainError("LoRa distance must be positive");
  }

  // 'a'..'f' in table order: sensor/wban, sensor/hbc, hub/wban, ...
  char label() const {
    const int row = static_cast<int>(te_location) * 2 + (on_body == Channel::hbc ? 1 : 0);
    return static_cast<char>('a' + row);
  }
};

inline std::array<SystemConfig, 6> allocation_table() {
  std::array<SystemConfig, 6> out{};
  std::size_t i = 0;
  for (auto te : {TeLocation::sensor, TeLocation::hub, TeLocation::cloud})
    for (auto ch : {Channel::wban, Channel::hbc}) {
      out[i].te_location = te;
      out[i].on_body = ch;
      ++i;
    }
  return out;
}

struct NodeActivities {
  NodeActivity sensor;
  NodeActivity hub;
  NodeActivity cloud;
};

inline NodeActivities derive_activities(const SystemConfig& cfg, const EnergyParams& p) {
  cfg.validate();
  NodeActivities a;

  a.sensor.captures = 1;
  if (cfg.te_location == TeLocation::sensor) a.sensor.add_te(cfg.te_variant);
  const std::uint64_t on_body_bits =
      cfg.te_location == TeLocation::sensor ? p.template_bits : p.image_bits;
  a.sensor.tx(cfg.on_body) = on_body_bits;
  // HBC stays inside the body and is sent in the clear.
  if (cfg.on_body == Channel::wban) a.sensor.bits_encrypted = on_body_bits;

  a.hub.rx(cfg.on_body) = on_body_bits;
  if (cfg.te_location == TeLocation::hub) a.hub.add_te(cfg.te_variant);
  const std::uint64_t lora_bits =
      cfg.te_location == TeLocation::cloud ? p.image_bits : p.template_bits;
  a.hub.bits_encrypted = lora_bits;
  a.hub.tx(Channel::lora) = lora_bits;
  a.hub.lora_distance = cfg.lora_distance;

  a.cloud.rx(Channel::lora) = lora_bits;
  if (cfg.te_location == TeLocation::cloud) a.cloud.add_te(cfg.te_variant);
  return a;
}

inline double sensor_budget(SensorPower power, const EnergyParams& p) {
  return power == SensorPower::rf_harvest ? p.budget_rf_harvest : p.budget_coin_cell;
}

struct LifetimeReport {
  SystemConfig config;
  EnergyBreakdown sensor;
  EnergyBreakdown hub;
  double sensor_retries = 0.0;  // per hour on rf_harvest, per charge on coin_cell
  double hub_retries = 0.0;     // per charge
  bool feasible = false;

  double sensor_energy_per_request() const { return sensor.total(); }
  double hub_energy_per_request() const { return hub.total(); }
};

inline LifetimeReport evaluate(const SystemConfig& cfg, const EnergyParams& p) {
  const auto acts = derive_activities(cfg, p);
  LifetimeReport r;
  r.config = cfg;
  r.sensor = energy_breakdown(acts.sensor, cfg.sensor, p);
  r.hub = energy_breakdown(acts.hub, SensorKind::none, p);
  r.sensor_retries = retries(sensor_budget(cfg.power, p), r.sensor.total());
  r.hub_retries = retries(p.hub_budget(), r.hub.total());
  r.feasible = r.sensor_retries >= 1.0;
  return r;
}

// Display rules: per-charge counts are floored;
// per-hour rates use 3 decimals below 0.01, 2 below 10 and 1 otherwise.
inline int per_hour_decimals(double v) {
  const double a = std::fabs(v);
  if (a < 0.01) return 3;
  if (a < 10.0) return 2;
  return 1;
}

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::string display_per_hour(double v) { return format_fixed(v, per_hour_decimals(v)); }

inline double rounded_per_hour(double v) {
  const double scale = std::pow(10.0, per_hour_decimals(v));
  return std::round(v * scale) / scale;
}

inline std::string display_per_charge(double v) {
  return format_fixed(std::floor(v), 0);
}

inline std::string display_retries(double v, SensorPower power) {
  return power == SensorPower::rf_harvest ? display_per_hour(v) : display_per_charge(v);
}

inline std::string format_energy(double joules) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9e", joules);
  return buf;
}

// Sensor retries per hour on RF harvesting: rows optical, capacitive; columns
// TE-sensor/WBAN, TE-sensor/HBC, TE-hub/WBAN, TE-hub/HBC.
struct Table2 {
  static constexpr std::array<SensorKind, 2> rows{SensorKind::optical, SensorKind::capacitive};
  static constexpr std::array<std::string_view, 4> columns{"te_sensor_wban", "te_sensor_hbc",
                                                           "te_hub_wban", "te_hub_hbc"};
  std::array<std::array<double, 4>, 2> raw{};

  double displayed(std::size_t row, std::size_t col) const {
    return rounded_per_hour(raw[row][col]);
  }
};

inline Table2 table2(const EnergyParams& p) {
  Table2 t;
  for (std::size_t r = 0; r < Table2::rows.size(); ++r) {
    std::size_t c = 0;
    for (auto te : {TeLocation::sensor, TeLocation::hub})
      for (auto ch : {Channel::wban, Channel::hbc}) {
        SystemConfig cfg;
        cfg.te_location = te;
        cfg.on_body = ch;
        cfg.sensor = Table2::rows[r];
        cfg.power = SensorPower::rf_harvest;
        t.raw[r][c++] = evaluate(cfg, p).sensor_retries;
      }
  }
  return t;
}

inline std::string table2_csv(const Table2& t) {
  std::string out = "sensor";
  for (auto c : Table2::columns) (out += ',') += c;
  out += '\n';
  for (std::size_t r = 0; r < Table2::rows.size(); ++r) {
    out += to_string(Table2::rows[r]);
    for (double v : t.raw[r]) (out += ',') += display_per_hour(v);
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json table2_json(const Table2& t) {
  nlohmann::ordered_json j;
  j["unit"] = "retries_per_hour";
  j["power"] = "rf_harvest";
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < Table2::rows.size(); ++r) {
    nlohmann::ordered_json row;
    row["sensor"] = to_string(Table2::rows[r]);
    for (std::size_t c = 0; c < Table2::columns.size(); ++c) {
      row[std::string(Table2::columns[c])] = {{"value", t.raw[r][c]},
                                              {"display", display_per_hour(t.raw[r][c])}};
    }
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j;
}

// One row per (sensor, te_location in {sensor, hub}, channel, power source).
struct Figure4Record {
  SystemConfig config;
  EnergyBreakdown sensor;
  double retries = 0.0;

  std::string_view unit() const {
    return config.power == SensorPower::rf_harvest ? "per_hour" : "per_charge";
  }
  std::string display() const { return display_retries(retries, config.power); }
};

inline std::vector<Figure4Record> figure4_export(const EnergyParams& p) {
  std::vector<Figure4Record> out;
  for (auto sensor : {SensorKind::optical, SensorKind::capacitive})
    for (auto te : {TeLocation::sensor, TeLocation::hub})
      for (auto ch : {Channel::wban, Channel::hbc})
        for (auto power : {SensorPower::rf_harvest, SensorPower::coin_cell}) {
          SystemConfig cfg;
          cfg.sensor = sensor;
          cfg.te_location = te;
          cfg.on_body = ch;
          cfg.power = power;
          const auto rep = evaluate(cfg, p);
          out.push_back({cfg, rep.sensor, rep.sensor_retries});
        }
  return out;
}

inline constexpr std::string_view kFigure4Header =
    "sensor,te_location,channel,power,capture_j,compute_j,comm_j,encrypt_j,total_j,"
    "retries,retries_display,unit";

inline std::string figure4_csv(const std::vector<Figure4Record>& rows) {
  std::string out(kFigure4Header);
  out += '\n';
  char buf[64];
  for (const auto& r : rows) {
    out += to_string(r.config.sensor);
    (out += ',') += to_string(r.config.te_location);
    (out += ',') += to_string(r.config.on_body);
    (out += ',') += to_string(r.config.power);
    (out += ',') += format_energy(r.sensor.capture);
    (out += ',') += format_energy(r.sensor.compute);
    (out += ',') += format_energy(r.sensor.comm);
    (out += ',') += format_energy(r.sensor.encrypt);
    (out += ',') += format_energy(r.sensor.total());
    std::snprintf(buf, sizeof buf, "%.6f", r.retries);
    (out += ',') += buf;
    (out += ',') += r.display();
    (out += ',') += r.unit();
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json breakdown_json(const EnergyBreakdown& b) {
  return {{"capture_j", b.capture},
          {"compute_j", b.compute},
          {"comm_j", b.comm},
          {"encrypt_j", b.encrypt},
          {"total_j", b.total()}};
}

inline nlohmann::ordered_json config_json(const SystemConfig& c) {
  return {{"label", std::string(1, c.label())},
          {"te_location", to_string(c.te_location)},
          {"channel", to_string(c.on_body)},
          {"sensor", to_string(c.sensor)},
          {"power", to_string(c.power)},
          {"lora_distance_m", c.lora_distance},
          {"te_variant", to_string(c.te_variant)}};
}

inline nlohmann::ordered_json figure4_json(const std::vector<Figure4Record>& rows) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["config"] = config_json(r.config);
    j["sensor_energy"] = breakdown_json(r.sensor);
    j["retries"] = r.retries;
    j["retries_display"] = r.display();
    j["unit"] = r.unit();
    arr.push_back(std::move(j));
  }
  return arr;
}

inline nlohmann::ordered_json lifetime_json(const LifetimeReport& r) {
  nlohmann::ordered_json j;
  j["config"] = config_json(r.config);
  j["sensor_energy"] = breakdown_json(r.sensor);
  j["hub_energy"] = breakdown_json(r.hub);
  j["sensor_retries"] = r.sensor_retries;
  j["sensor_retries_unit"] = r.config.power == SensorPower::rf_harvest ? "per_hour" : "per_charge";
  j["sensor_retries_display"] = display_retries(r.sensor_retries, r.config.power);
  j["hub_retries"] = r.hub_retries;
  j["hub_retries_display"] = display_per_charge(r.hub_retries);
  j["feasible"] = r.feasible;
  return j;
}

}  // namespace fieldauth
