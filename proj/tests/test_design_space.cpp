#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "fieldauth/design_space.hpp"

using namespace fieldauth;

namespace {

SystemConfig make(TeLocation te, Channel ch, SensorKind s = SensorKind::capacitive,
                  SensorPower pw = SensorPower::rf_harvest) {
  SystemConfig c;
  c.te_location = te;
  c.on_body = ch;
  c.sensor = s;
  c.power = pw;
  return c;
}

// Hand-written closed form of the sensor's per-request energy.
double sensor_oracle(const SystemConfig& c) {
  const double capture = c.sensor == SensorKind::optical ? 66e-3 : 22.3e-9;
  const double te = c.te_location == TeLocation::sensor ? 2.94 : 0.0;
  const double bits = c.te_location == TeLocation::sensor ? 1408 : 320256;
  const double link = c.on_body == Channel::wban ? bits * (10e-9 + 100e-12) : bits * 79e-12;
  return capture + te + link;
}

double hub_oracle(const SystemConfig& c) {
  const double in_bits = c.te_location == TeLocation::sensor ? 1408 : 320256;
  const double out_bits = c.te_location == TeLocation::cloud ? 320256 : 1408;
  const double rx = in_bits * (c.on_body == Channel::wban ? 10e-9 : 79e-12);
  const double te = c.te_location == TeLocation::hub ? 2.94 : 0.0;
  const double lora = 68e-6 * (c.lora_distance / 500.0) * (c.lora_distance / 500.0);
  return rx + te + out_bits * (100e-12 + lora);
}

}  // namespace

TEST(AllocationTable, SixDistinctRowsLabelledAtoF) {
  const auto rows = allocation_table();
  std::set<char> labels;
  for (const auto& r : rows) labels.insert(r.label());
  EXPECT_EQ(labels, (std::set<char>{'a', 'b', 'c', 'd', 'e', 'f'}));
  EXPECT_EQ(rows[3].label(), 'd');
  EXPECT_EQ(rows[3].te_location, TeLocation::hub);
  EXPECT_EQ(rows[3].on_body, Channel::hbc);
}

TEST(DeriveActivities, HubTeOverHbc) {
  EnergyParams p;
  const auto a = derive_activities(make(TeLocation::hub, Channel::hbc), p);
  EXPECT_EQ(a.sensor.tx(Channel::hbc), 320256u);
  EXPECT_EQ(a.sensor.bits_encrypted, 0u);
  EXPECT_EQ(a.sensor.te_high_accuracy, 0u);
  EXPECT_EQ(a.hub.te_high_accuracy, 1u);
  EXPECT_EQ(a.hub.tx(Channel::lora), 1408u);
  EXPECT_EQ(a.hub.bits_encrypted, 1408u);
}

TEST(DeriveActivities, SensorTeOverHbcSendsTemplate) {
  const auto a = derive_activities(make(TeLocation::sensor, Channel::hbc), EnergyParams{});
  EXPECT_EQ(a.sensor.tx(Channel::hbc), 1408u);
  EXPECT_EQ(a.sensor.te_high_accuracy, 1u);
}

TEST(DeriveActivities, CloudTeOverWbanUplinksEncryptedImage) {
  const auto a = derive_activities(make(TeLocation::cloud, Channel::wban), EnergyParams{});
  EXPECT_EQ(a.hub.tx(Channel::lora), 320256u);
  EXPECT_EQ(a.hub.bits_encrypted, 320256u);
  EXPECT_EQ(a.sensor.bits_encrypted, 320256u);
  EXPECT_EQ(a.cloud.te_high_accuracy, 1u);
}

TEST(DeriveActivities, RejectsInvalidConfig) {
  auto c = make(TeLocation::hub, Channel::lora);
  EXPECT_THROW(derive_activities(c, EnergyParams{}), ConfigError);
  c = make(TeLocation::hub, Channel::hbc, SensorKind::none);
  EXPECT_THROW(derive_activities(c, EnergyParams{}), ConfigError);
}

TEST(Evaluate, MatchesHandWrittenClosedForm) {
  EnergyParams p;
  for (auto base : allocation_table())
    for (auto s : {SensorKind::optical, SensorKind::capacitive})
      for (double d : {250.0, 1000.0, 3000.0}) {
        auto c = base;
        c.sensor = s;
        c.lora_distance = d;
        const auto r = evaluate(c, p);
        EXPECT_NEAR(r.sensor.total(), sensor_oracle(c), 1e-12 * sensor_oracle(c));
        EXPECT_NEAR(r.hub.total(), hub_oracle(c), 1e-12 * hub_oracle(c));
        const auto& b = r.sensor;
        EXPECT_DOUBLE_EQ(b.capture + b.compute + b.comm + b.encrypt, b.total());
      }
}

TEST(Evaluate, OpticalSensorTeOnCoinCellDisplays119) {
  for (auto ch : {Channel::wban, Channel::hbc}) {
    const auto r = evaluate(make(TeLocation::sensor, ch, SensorKind::optical, SensorPower::coin_cell), EnergyParams{});
    EXPECT_EQ(display_per_charge(r.sensor_retries), "119");
  }
}

TEST(Evaluate, CapacitiveHubTeOnHarvest) {
  EnergyParams p;
  EXPECT_EQ(display_per_hour(evaluate(make(TeLocation::hub, Channel::hbc), p).sensor_retries), "142.2");
  EXPECT_EQ(display_per_hour(evaluate(make(TeLocation::hub, Channel::wban), p).sensor_retries), "1.11");
}

TEST(Evaluate, CloudTeHubLifetime) {
  const auto r = evaluate(make(TeLocation::cloud, Channel::hbc), EnergyParams{});
  EXPECT_EQ(display_per_charge(r.hub_retries), "18");
}

TEST(Evaluate, HubTeLifetimeNearExpectedValue) {
  const auto r = evaluate(make(TeLocation::hub, Channel::hbc), EnergyParams{});
  EXPECT_NEAR(r.hub_retries, 487.5, 0.1);
  EXPECT_LE(std::fabs(r.hub_retries - 483.0) / 483.0, 0.015);
}

TEST(Table2, MatchesExpectedMatrix) {
  const auto t = table2(EnergyParams{});
  const std::array<std::array<double, 4>, 2> expected{{{0.001, 0.001, 0.05, 0.05}, {0.001, 0.001, 1.11, 142.2}}};
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_DOUBLE_EQ(t.displayed(r, c), expected[r][c]) << r << "," << c;
}

TEST(Table2, CsvLayout) {
  EXPECT_EQ(table2_csv(table2(EnergyParams{})),
            "sensor,te_sensor_wban,te_sensor_hbc,te_hub_wban,te_hub_hbc\n"
            "optical,0.001,0.001,0.05,0.05\n"
            "capacitive,0.001,0.001,1.11,142.2\n");
}

TEST(Table2, LinearInHarvestBudget) {
  EnergyParams p;
  const auto base = table2(p);
  p.budget_rf_harvest *= 2;
  const auto doubled = table2(p);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_DOUBLE_EQ(doubled.raw[r][c], 2 * base.raw[r][c]);
}

TEST(Table2, ComposedFromEvaluate) {
  EnergyParams p;
  const auto t = table2(p);
  std::size_t c = 0;
  for (auto te : {TeLocation::sensor, TeLocation::hub})
    for (auto ch : {Channel::wban, Channel::hbc}) {
      EXPECT_EQ(t.raw[0][c], evaluate(make(te, ch, SensorKind::optical), p).sensor_retries);
      EXPECT_EQ(t.raw[1][c], evaluate(make(te, ch, SensorKind::capacitive), p).sensor_retries);
      ++c;
    }
}

TEST(Figure4, SixteenRowsWithExpectedCounts) {
  const auto rows = figure4_export(EnergyParams{});
  ASSERT_EQ(rows.size(), 16u);
  auto find = [&](SensorKind s, TeLocation te, Channel ch, SensorPower pw) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const Figure4Record& r) {
      return r.config.sensor == s && r.config.te_location == te && r.config.on_body == ch && r.config.power == pw;
    });
    EXPECT_NE(it, rows.end());
    return *it;
  };
  for (auto ch : {Channel::wban, Channel::hbc}) {
    EXPECT_EQ(find(SensorKind::capacitive, TeLocation::sensor, ch, SensorPower::coin_cell).display(), "122");
    EXPECT_EQ(find(SensorKind::optical, TeLocation::sensor, ch, SensorPower::coin_cell).display(), "119");
  }
  EXPECT_NEAR(find(SensorKind::optical, TeLocation::hub, Channel::wban, SensorPower::coin_cell).retries,
              360 / 0.0692346, 0.5);
  EXPECT_NEAR(find(SensorKind::optical, TeLocation::hub, Channel::hbc, SensorPower::coin_cell).retries,
              360 / 0.0660253, 0.5);
}

TEST(Figure4, ZeroBudgetsGiveZeroRetries) {
  EnergyParams p;
  p.budget_coin_cell = 0;
  p.budget_rf_harvest = 0;
  for (const auto& r : figure4_export(p)) EXPECT_EQ(r.retries, 0.0);
}

TEST(Figure4, CsvHeaderAndRowCount) {
  const auto csv = figure4_csv(figure4_export(EnergyParams{}));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kFigure4Header);
  int n = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 11);
    ++n;
  }
  EXPECT_EQ(n, 16);
}

TEST(DesignSpace, HbcNeverWorseThanWban) {
  EnergyParams p;
  for (auto te : {TeLocation::sensor, TeLocation::hub, TeLocation::cloud})
    for (auto s : {SensorKind::optical, SensorKind::capacitive})
      for (auto pw : {SensorPower::rf_harvest, SensorPower::coin_cell}) {
        const auto w = evaluate(make(te, Channel::wban, s, pw), p);
        const auto h = evaluate(make(te, Channel::hbc, s, pw), p);
        EXPECT_GT(h.sensor_retries, w.sensor_retries);
      }
}

TEST(DesignSpace, HubTeBeatsCloudTeWhereUplinkDominates) {
  EnergyParams p;
  for (double d : {300.0, 1000.0, 5000.0}) {
    const double e_lora = lora_energy_per_bit(d, p);
    if (!(p.image_bits * e_lora > p.e_te_high + p.template_bits * e_lora)) continue;
    auto hub = make(TeLocation::hub, Channel::hbc);
    auto cloud = make(TeLocation::cloud, Channel::hbc);
    hub.lora_distance = cloud.lora_distance = d;
    EXPECT_GT(evaluate(hub, p).hub_retries, evaluate(cloud, p).hub_retries) << d;
  }
}

TEST(DesignSpace, ArgmaxInvariantUnderBudgetScaling) {
  auto argmax = [](const EnergyParams& p, bool hub) {
    double best = -1;
    char label = '?';
    for (auto c : allocation_table()) {
      const auto r = evaluate(c, p);
      const double v = hub ? r.hub_retries : r.sensor_retries;
      if (v > best) best = v, label = c.label();
    }
    return label;
  };
  EnergyParams p;
  for (double k : {0.01, 0.5, 3.0, 1000.0}) {
    EnergyParams q = p;
    q.budget_rf_harvest *= k;
    q.budget_coin_cell *= k;
    q.budget_hub_total *= k;
    EXPECT_EQ(argmax(q, false), argmax(p, false));
    EXPECT_EQ(argmax(q, true), argmax(p, true));
  }
}

TEST(Display, PerHourPrecisionBands) {
  EXPECT_EQ(display_per_hour(0.0011976), "0.001");
  EXPECT_EQ(display_per_hour(0.0545), "0.05");
  EXPECT_EQ(display_per_hour(1.113), "1.11");
  EXPECT_EQ(display_per_hour(142.166), "142.2");
  EXPECT_EQ(display_per_charge(119.76), "119");
  EXPECT_EQ(display_per_charge(18.597), "18");
}

TEST(Parsing, EnumNamesRoundTrip) {
  for (auto t : {TeLocation::sensor, TeLocation::hub, TeLocation::cloud})
    EXPECT_EQ(parse_te_location(to_string(t)), t);
  for (auto s : {SensorKind::optical, SensorKind::capacitive}) EXPECT_EQ(parse_sensor(to_string(s)), s);
  for (auto p : {SensorPower::rf_harvest, SensorPower::coin_cell}) EXPECT_EQ(parse_power(to_string(p)), p);
  EXPECT_EQ(parse_te_variant("light"), TeVariant::lightweight);
  EXPECT_THROW(parse_on_body_channel("lora"), ConfigError);
  EXPECT_THROW(parse_te_location("edge"), ConfigError);
}

TEST(LifetimeJson, HasStableKeys) {
  const auto j = lifetime_json(evaluate(SystemConfig{}, EnergyParams{}));
  for (const char* key : {"config", "sensor_energy", "hub_energy", "sensor_retries", "sensor_retries_unit",
                          "sensor_retries_display", "hub_retries", "hub_retries_display", "feasible"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["sensor_retries_display"], "142.2");
}
