#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "fieldauth/matcher.hpp"

using namespace fieldauth;

namespace {

constexpr double kPi = std::numbers::pi;

Template random_template(std::size_t n, std::uint64_t seed, int size = 300) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pos(20, size - 20), kind(0, 1);
  std::uniform_real_distribution<double> ang(0.0, 2 * kPi);
  Template t;
  t.width = t.height = size;
  for (std::size_t i = 0; i < n; ++i)
    t.minutiae.push_back({pos(rng), pos(rng), wrap_angle(ang(rng)), static_cast<MinutiaKind>(kind(rng))});
  t.sort();
  return t;
}

Template transformed(const Template& t, double theta, double dx, double dy) {
  Template out = t;
  const double c = std::cos(theta), s = std::sin(theta);
  for (auto& m : out.minutiae) {
    const double x = m.x, y = m.y;
    m.x = static_cast<int>(std::lround(c * x - s * y + dx));
    m.y = static_cast<int>(std::lround(s * x + c * y + dy));
    m.angle = wrap_angle(m.angle + theta);
  }
  out.sort();
  return out;
}

Template lattice(int offset, MinutiaKind kind) {
  Template t;
  t.width = t.height = 400;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) t.minutiae.push_back({40 + offset + 90 * x, 40 + offset + 90 * y, 0.0, kind});
  return t;
}

}  // namespace

TEST(Match, SelfMatchIsPerfect) {
  const auto t = random_template(25, 1);
  const auto r = match(t, t);
  EXPECT_DOUBLE_EQ(r.score, 1.0);
  EXPECT_EQ(r.decision, Decision::accept);
  EXPECT_EQ(r.pairs.size(), t.minutiae.size());
  EXPECT_EQ(r.transform.dx, 0.0);
  EXPECT_EQ(r.transform.dy, 0.0);
  EXPECT_EQ(r.transform.dtheta, 0.0);
  for (std::size_t i = 0; i < r.pairs.size(); ++i) EXPECT_EQ(r.pairs[i], std::make_pair(i, i));
}

TEST(Match, RecoversTranslation) {
  const auto t = random_template(25, 2);
  const auto r = match(t, transformed(t, 0.0, 5.0, -3.0));
  EXPECT_DOUBLE_EQ(r.score, 1.0);
  EXPECT_DOUBLE_EQ(r.transform.dx, 5.0);
  EXPECT_DOUBLE_EQ(r.transform.dy, -3.0);
  EXPECT_DOUBLE_EQ(r.transform.dtheta, 0.0);
}

TEST(Match, RecoversRotationOnTheSearchGrid) {
  const auto t = random_template(25, 3);
  const auto r = match(t, transformed(t, 4 * kPi / 60, 10.0, 4.0));
  EXPECT_DOUBLE_EQ(r.score, 1.0);
  EXPECT_NEAR(r.transform.dtheta, 4 * kPi / 60, 1e-12);
}

TEST(Match, KindsNeverPair) {
  const auto kinds = match(lattice(0, MinutiaKind::ending), lattice(0, MinutiaKind::bifurcation));
  EXPECT_EQ(kinds.score, 0.0);
  EXPECT_EQ(kinds.decision, Decision::reject);
}

TEST(Match, FarApartTemplatesScoreZero) {
  // Gallery minutiae sit 200 px apart and point opposite to every probe
  // minutia, so no transform pairs anything.
  Template p, g;
  p.width = p.height = g.width = g.height = 1000;
  for (int i = 0; i < 4; ++i) {
    p.minutiae.push_back({100 + 200 * i, 100, 0.0, MinutiaKind::ending});
    g.minutiae.push_back({100 + 200 * i, 500, kPi, MinutiaKind::ending});
  }
  const auto r = match(p, g);
  EXPECT_EQ(r.score, 0.0);
  EXPECT_EQ(r.decision, Decision::reject);
  EXPECT_TRUE(r.pairs.empty());
}

TEST(Match, EmptyTemplatesReject) {
  Template empty;
  EXPECT_EQ(match(empty, empty).score, 0.0);
  EXPECT_EQ(match(empty, empty).decision, Decision::reject);
  EXPECT_EQ(match(random_template(5, 4), empty).score, 0.0);
}

TEST(Match, ScoreIsSymmetricAndBounded) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto a = random_template(12 + seed % 10, 100 + seed, 160);
    const auto b = random_template(8 + seed % 7, 200 + seed, 160);
    const double ab = match(a, b).score, ba = match(b, a).score;
    EXPECT_DOUBLE_EQ(ab, ba) << seed;
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(Match, ScoreShrinksWithTolerance) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = random_template(15, 300 + seed, 160);
    const auto b = transformed(random_template(15, 300 + seed, 160), 0.05, 3.0, 2.0);
    double prev = 2.0;
    for (double tol : {20.0, 12.0, 8.0, 4.0, 2.0, 1.0}) {
      MatchParams mp;
      mp.position_tolerance = tol;
      const double s = match(a, b, mp).score;
      EXPECT_LE(s, prev) << seed << " tol " << tol;
      prev = s;
    }
  }
}

TEST(Match, TranslationInvariant) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = random_template(15, 400 + seed, 200);
    const auto b = random_template(15, 500 + seed, 200);
    const double base = match(a, b).score;
    EXPECT_DOUBLE_EQ(match(transformed(a, 0, 37, 21), transformed(b, 0, 37, 21)).score, base) << seed;
  }
}

TEST(Match, ParamsValidated) {
  MatchParams mp;
  mp.threshold = 1.5;
  EXPECT_THROW(match(Template{}, Template{}, mp), ConfigError);
  mp = {};
  mp.position_tolerance = 0;
  EXPECT_THROW(match(Template{}, Template{}, mp), ConfigError);
}

TEST(Gallery, LoadsIndexAndRanksEntries) {
  const auto dir = std::filesystem::temp_directory_path() / "fieldauth_gallery_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto alice = random_template(20, 600), bob = random_template(20, 601);
  save_template((dir / "alice.fpt").string(), alice);
  save_template((dir / "bob.fpt").string(), bob);
  save_gallery_index(dir, {{"alice", "alice.fpt"}, {"bob", "bob.fpt"}});

  const auto gallery = load_gallery(dir);
  ASSERT_EQ(gallery.size(), 2u);
  const auto ranked = match_gallery(transformed(bob, 0, 2, 1), gallery);
  EXPECT_EQ(ranked.front().label, "bob");
  EXPECT_EQ(ranked.front().result.decision, Decision::accept);
  EXPECT_LT(ranked.back().result.score, ranked.front().result.score);
  std::filesystem::remove_all(dir);
}

TEST(Gallery, MissingOrMalformedIndex) {
  const auto dir = std::filesystem::temp_directory_path() / "fieldauth_gallery_bad";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  EXPECT_THROW(load_gallery(dir), ConfigError);
  std::ofstream(dir / "index.json") << "[1, 2]";
  EXPECT_THROW(load_gallery(dir), ConfigError);
  std::ofstream(dir / "index.json") << "{\"x\": 3}";
  EXPECT_THROW(load_gallery(dir), ConfigError);
  std::filesystem::remove_all(dir);
}
