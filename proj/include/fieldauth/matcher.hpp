#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fieldauth/errors.hpp"
#include "fieldauth/minutiae.hpp"
#include "fieldauth/template_codec.hpp"

namespace fieldauth {

struct MatchParams {
  double position_tolerance = 12.0;               // px
  double angle_tolerance = std::numbers::pi / 8;  // rad
  double threshold = 0.4;
  double rotation_range = std::numbers::pi / 6;  // searched over [-range, +range]
  double rotation_step = std::numbers::pi / 60;

  void validate() const {
    if (!(position_tolerance > 0) || !(angle_tolerance > 0))
      throw ConfigError("match tolerances must be positive");
    if (!(threshold > 0 && threshold < 1)) throw ConfigError("match threshold must lie in (0, 1)");
    if (!(rotation_range >= 0) || !(rotation_step > 0))
      throw ConfigError("rotation range must be non-negative and step positive");
  }
};

// Maps probe coordinates onto the gallery: g = R(dtheta) p + (dx, dy).
struct RigidTransform {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;
};

enum class Decision { accept, reject };

struct MatchResult {
  double score = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (probe, gallery), probe order
  RigidTransform transform;
  Decision decision = Decision::reject;
};

namespace detail {

inline double angle_distance(double a, double b) {
  double d = std::fabs(wrap_angle(a - b));
  return d > std::numbers::pi ? 2 * std::numbers::pi - d : d;
}

// Dense grid over the gallery's bounding box, cell size = tolerance.
class GalleryGrid {
 public:
  GalleryGrid(const std::vector<Minutia>& g, double cell) : cell_(cell) {
    int min_x = g.front().x, min_y = g.front().y, max_x = min_x, max_y = min_y;
    for (const auto& m : g) {
      min_x = std::min(min_x, m.x);
      min_y = std::min(min_y, m.y);
      max_x = std::max(max_x, m.x);
      max_y = std::max(max_y, m.y);
    }
    ox_ = min_x;
    oy_ = min_y;
    nx_ = static_cast<long>(std::floor((max_x - min_x) / cell_)) + 1;
    ny_ = static_cast<long>(std::floor((max_y - min_y) / cell_)) + 1;
    cells_.resize(static_cast<std::size_t>(nx_ * ny_));
    for (std::size_t j = 0; j < g.size(); ++j) {
      const auto [cx, cy] = key(g[j].x, g[j].y);
      cells_[static_cast<std::size_t>(cy * nx_ + cx)].push_back(j);
    }
  }

  template <typename F>
  void near(double x, double y, F&& visit) const {
    const auto [cx, cy] = key(x, y);
    for (long yy = std::max(0L, cy - 1); yy <= std::min(ny_ - 1, cy + 1); ++yy)
      for (long xx = std::max(0L, cx - 1); xx <= std::min(nx_ - 1, cx + 1); ++xx)
        for (auto j : cells_[static_cast<std::size_t>(yy * nx_ + xx)]) visit(j);
  }

 private:
  std::pair<long, long> key(double x, double y) const {
    return {static_cast<long>(std::floor((x - ox_) / cell_)),
            static_cast<long>(std::floor((y - oy_) / cell_))};
  }

  double cell_;
  double ox_ = 0, oy_ = 0;
  long nx_ = 1, ny_ = 1;
  std::vector<std::vector<std::size_t>> cells_;
};

struct Candidate {
  double distance;
  std::size_t probe;
  std::size_t gallery;
};

}  // namespace detail

// Exhaustive alignment search: each same-kind (probe, gallery) pair proposes a
// translation at every discrete rotation; minutiae are then paired greedily,
// nearest first. The transform with the most pairs wins; ties go to the
// smallest summed pair distance, then the smallest |dtheta|, then the smallest
// |dx| + |dy|, then the lexicographically smallest pairing.
inline MatchResult match(const Template& probe, const Template& gallery,
                         const MatchParams& params = {}) {
  params.validate();
  MatchResult best;
  const auto& P = probe.minutiae;
  const auto& G = gallery.minutiae;
  if (P.empty() || G.empty()) return best;

  const detail::GalleryGrid grid(G, params.position_tolerance);
  const double tol2 = params.position_tolerance * params.position_tolerance;
  const long steps = std::lround(params.rotation_range / params.rotation_step);

  bool have_best = false;
  double best_residual = 0.0;
  std::vector<std::pair<double, double>> rotated(P.size());
  std::vector<detail::Candidate> cands;
  std::vector<char> used_p(P.size()), used_g(G.size());
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  for (long k = -steps; k <= steps; ++k) {
    const double theta = static_cast<double>(k) * params.rotation_step;
    const double c = std::cos(theta), s = std::sin(theta);
    for (std::size_t i = 0; i < P.size(); ++i)
      rotated[i] = {c * P[i].x - s * P[i].y, s * P[i].x + c * P[i].y};

    for (std::size_t pi = 0; pi < P.size(); ++pi)
      for (std::size_t gi = 0; gi < G.size(); ++gi) {
        if (P[pi].kind != G[gi].kind) continue;
        const double tx = G[gi].x - rotated[pi].first;
        const double ty = G[gi].y - rotated[pi].second;

        cands.clear();
        for (std::size_t i = 0; i < P.size(); ++i) {
          const double x = rotated[i].first + tx, y = rotated[i].second + ty;
          grid.near(x, y, [&](std::size_t j) {
            if (P[i].kind != G[j].kind) return;
            const double ddx = x - G[j].x, ddy = y - G[j].y;
            const double d2 = ddx * ddx + ddy * ddy;
            if (d2 > tol2) return;
            if (detail::angle_distance(P[i].angle + theta, G[j].angle) > params.angle_tolerance)
              return;
            cands.push_back({std::sqrt(d2), i, j});
          });
        }
        if (cands.size() < best.pairs.size() && have_best) continue;
        std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
          return std::tie(a.distance, a.probe, a.gallery) < std::tie(b.distance, b.probe, b.gallery);
        });
        std::fill(used_p.begin(), used_p.end(), 0);
        std::fill(used_g.begin(), used_g.end(), 0);
        pairs.clear();
        double residual = 0.0;
        for (const auto& cd : cands) {
          if (used_p[cd.probe] || used_g[cd.gallery]) continue;
          used_p[cd.probe] = used_g[cd.gallery] = 1;
          pairs.emplace_back(cd.probe, cd.gallery);
          residual += cd.distance;
        }
        std::sort(pairs.begin(), pairs.end());

        bool better = !have_best;
        if (!better) {
          const double shift = std::fabs(tx) + std::fabs(ty);
          const double best_shift = std::fabs(best.transform.dx) + std::fabs(best.transform.dy);
          if (pairs.size() != best.pairs.size()) better = pairs.size() > best.pairs.size();
          else if (std::fabs(residual - best_residual) > 1e-9) better = residual < best_residual;
          else if (std::fabs(theta) != std::fabs(best.transform.dtheta))
            better = std::fabs(theta) < std::fabs(best.transform.dtheta);
          else if (shift != best_shift) better = shift < best_shift;
          else better = pairs < best.pairs;
        }
        if (better) {
          have_best = true;
          best_residual = residual;
          best.pairs = pairs;
          best.transform = {tx, ty, theta};
        }
      }
  }

  best.score = 2.0 * static_cast<double>(best.pairs.size()) /
               static_cast<double>(P.size() + G.size());
  best.decision = best.score >= params.threshold ? Decision::accept : Decision::reject;
  return best;
}

// A directory of .fpt files plus index.json mapping identity labels to file
// names.
struct GalleryEntry {
  std::string label;
  std::string file;
  Template templ;
};

inline constexpr const char* kGalleryIndex = "index.json";

inline std::vector<GalleryEntry> load_gallery(const std::filesystem::path& dir) {
  const auto index_path = dir / kGalleryIndex;
  std::ifstream in(index_path);
  if (!in) throw ConfigError("gallery index not found: " + index_path.string());
  nlohmann::json index;
  try {
    in >> index;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed gallery index: " + std::string(e.what()));
  }
  if (!index.is_object()) throw ConfigError("gallery index must map labels to file names");
  std::vector<GalleryEntry> out;
  for (auto it = index.begin(); it != index.end(); ++it) {
    if (!it.value().is_string()) throw ConfigError("gallery index values must be file names");
    const std::string file = it.value().get<std::string>();
    out.push_back({it.key(), file, load_template((dir / file).string())});
  }
  return out;
}

inline void save_gallery_index(const std::filesystem::path& dir,
                               const std::map<std::string, std::string>& labels) {
  nlohmann::json index = nlohmann::json::object();
  for (const auto& [label, file] : labels) index[label] = file;
  std::ofstream out(dir / kGalleryIndex);
  if (!out) throw ConfigError("cannot write gallery index in " + dir.string());
  out << index.dump(2) << '\n';
}

struct GalleryMatch {
  std::string label;
  MatchResult result;
};

// Scores the probe against every entry; the best entry comes first (ties keep
// index order).
inline std::vector<GalleryMatch> match_gallery(const Template& probe,
                                               const std::vector<GalleryEntry>& gallery,
                                               const MatchParams& params = {}) {
  std::vector<GalleryMatch> out;
  out.reserve(gallery.size());
  for (const auto& e : gallery) out.push_back({e.label, match(probe, e.templ, params)});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.result.score > b.result.score;
  });
  return out;
}

}  // namespace fieldauth
