#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "fieldauth/energy.hpp"
#include "fieldauth/errors.hpp"
#include "fieldauth/image.hpp"

namespace fieldauth {

inline constexpr int kMinPipelineSize = 16;
inline constexpr std::size_t kMaxMinutiae = 255;

enum class MinutiaKind : std::uint8_t { ending = 0, bifurcation = 1 };

struct Minutia {
  int x = 0;
  int y = 0;
  double angle = 0.0;  // ridge direction in [0, 2pi), image coordinates (y down)
  MinutiaKind kind = MinutiaKind::ending;

  bool operator==(const Minutia&) const = default;
};

struct Template {
  int width = 0;
  int height = 0;
  TeVariant algorithm = TeVariant::high_accuracy;
  std::vector<Minutia> minutiae;

  // Restores the (y, x) ordering the wire format relies on.
  void sort() {
    std::stable_sort(minutiae.begin(), minutiae.end(), [](const Minutia& a, const Minutia& b) {
      return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
  }

  bool operator==(const Template&) const = default;
};

inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a < 0) a += two_pi;
  if (a >= two_pi) a = 0.0;
  return a + 0.0;  // no negative zero
}

// ---------------------------------------------------------------------------
// Binarization

enum class BinarizeMethod { global_otsu, adaptive_mean };

// Otsu threshold over the 256-bin histogram; nullopt when the image has a
// single intensity (no ridge class exists).
inline std::optional<int> otsu_threshold(const GrayImage& img) {
  std::array<std::uint64_t, 256> hist{};
  for (auto p : img.pixels()) ++hist[p];
  const double total = static_cast<double>(img.pixels().size());
  int distinct = 0;
  for (auto h : hist) distinct += h > 0;
  if (distinct < 2) return std::nullopt;

  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += i * static_cast<double>(hist[i]);
  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int best_t = 0;
  for (int t = 0; t < 255; ++t) {
    w0 += static_cast<double>(hist[t]);
    sum0 += t * static_cast<double>(hist[t]);
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = sum0 / w0;
    const double m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

// Ridges are the darker class. adaptive_mean compares each pixel to the mean of
// a (window x window) neighbourhood clipped to the image.
inline BinaryImage binarize(const GrayImage& img, BinarizeMethod method, int window = 17) {
  BinaryImage out(img.width(), img.height());
  const int w = img.width(), h = img.height();
  if (method == BinarizeMethod::global_otsu) {
    const auto t = otsu_threshold(img);
    if (!t) return out;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.set(x, y, img.at(x, y) <= *t);
    return out;
  }

  if (window < 1) throw DomainError("adaptive window must be positive");
  std::vector<std::uint64_t> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  auto I = [&](int x, int y) -> std::uint64_t& {
    return integral[static_cast<std::size_t>(y) * (w + 1) + x];
  };
  for (int y = 0; y < h; ++y) {
    std::uint64_t row = 0;
    for (int x = 0; x < w; ++x) {
      row += img.at(x, y);
      I(x + 1, y + 1) = I(x + 1, y) + row;
    }
  }
  const int r = window / 2;
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - r), y1 = std::min(h, y + r + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - r), x1 = std::min(w, x + r + 1);
      const std::uint64_t sum = I(x1, y1) - I(x0, y1) - I(x1, y0) + I(x0, y0);
      const std::uint64_t n = static_cast<std::uint64_t>(x1 - x0) * (y1 - y0);
      // p < sum / n without rounding
      out.set(x, y, static_cast<std::uint64_t>(img.at(x, y)) * n < sum);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Enhancement: normalisation, block orientation, block frequency, Gabor

struct EnhanceOptions {
  int block = 16;
  double gabor_sigma = 4.0;
  double min_period = 3.0;
  double max_period = 25.0;
  double fallback_period = 9.0;
};

// Real-valued image used inside the enhancement chain.
struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  double at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double clamped(int x, int y) const {
    return at(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
  }
  double bilinear(double x, double y) const {
    const double fx = std::floor(x), fy = std::floor(y);
    const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
    const double ax = x - fx, ay = y - fy;
    return (1 - ax) * (1 - ay) * clamped(x0, y0) + ax * (1 - ay) * clamped(x0 + 1, y0) +
           (1 - ax) * ay * clamped(x0, y0 + 1) + ax * ay * clamped(x0 + 1, y0 + 1);
  }
};

// Zero mean, unit variance. nullopt for a constant image.
inline std::optional<FloatImage> normalize(const GrayImage& img) {
  FloatImage f{img.width(), img.height(), {}};
  f.data.reserve(img.pixels().size());
  double mean = 0.0;
  for (auto p : img.pixels()) mean += p;
  mean /= static_cast<double>(img.pixels().size());
  double var = 0.0;
  for (auto p : img.pixels()) var += (p - mean) * (p - mean);
  var /= static_cast<double>(img.pixels().size());
  if (var < 1e-12) return std::nullopt;
  const double inv_sd = 1.0 / std::sqrt(var);
  for (auto p : img.pixels()) f.data.push_back((p - mean) * inv_sd);
  return f;
}

// Block-wise ridge orientation in [0, pi) (direction along the ridges, image
// coordinates). Blocks without gradient energy have no orientation.
struct OrientationField {
  int block = 16;
  int blocks_x = 0;
  int blocks_y = 0;
  std::vector<std::optional<double>> angle;

  const std::optional<double>& at(int bx, int by) const {
    return angle[static_cast<std::size_t>(by) * blocks_x + bx];
  }
};

inline OrientationField orientation_field(const FloatImage& f, int block = 16) {
  const int w = f.width, h = f.height;
  FloatImage gx{w, h, std::vector<double>(f.data.size())};
  FloatImage gy{w, h, std::vector<double>(f.data.size())};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto v = [&](int dx, int dy) { return f.clamped(x + dx, y + dy); };
      gx.at(x, y) = (v(1, -1) + 2 * v(1, 0) + v(1, 1)) - (v(-1, -1) + 2 * v(-1, 0) + v(-1, 1));
      gy.at(x, y) = (v(-1, 1) + 2 * v(0, 1) + v(1, 1)) - (v(-1, -1) + 2 * v(0, -1) + v(1, -1));
    }

  OrientationField of;
  of.block = block;
  of.blocks_x = (w + block - 1) / block;
  of.blocks_y = (h + block - 1) / block;
  const std::size_t nb = static_cast<std::size_t>(of.blocks_x) * of.blocks_y;
  std::vector<double> vx(nb, 0.0), vy(nb, 0.0);
  std::vector<bool> valid(nb, false);
  const int margin = block / 2;
  for (int by = 0; by < of.blocks_y; ++by)
    for (int bx = 0; bx < of.blocks_x; ++bx) {
      double gxx = 0, gyy = 0, gxy = 0;
      int n = 0;
      const int y0 = std::max(0, by * block - margin), y1 = std::min(h, (by + 1) * block + margin);
      const int x0 = std::max(0, bx * block - margin), x1 = std::min(w, (bx + 1) * block + margin);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          const double a = gx.at(x, y), b = gy.at(x, y);
          gxx += a * a;
          gyy += b * b;
          gxy += a * b;
          ++n;
        }
      const std::size_t i = static_cast<std::size_t>(by) * of.blocks_x + bx;
      vx[i] = gxx - gyy;
      vy[i] = 2.0 * gxy;
      valid[i] = n > 0 && (gxx + gyy) > 1e-6 * n;
    }

  of.angle.assign(nb, std::nullopt);
  for (int by = 0; by < of.blocks_y; ++by)
    for (int bx = 0; bx < of.blocks_x; ++bx) {
      const std::size_t i = static_cast<std::size_t>(by) * of.blocks_x + bx;
      if (!valid[i]) continue;
      double sx = 0, sy = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = bx + dx, ny = by + dy;
          if (nx < 0 || ny < 0 || nx >= of.blocks_x || ny >= of.blocks_y) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * of.blocks_x + nx;
          if (!valid[j]) continue;
          const double wgt = (dx == 0 && dy == 0) ? 2.0 : 1.0;
          sx += wgt * vx[j];
          sy += wgt * vy[j];
        }
      if (std::hypot(sx, sy) < 1e-12) continue;
      const double gradient = 0.5 * std::atan2(sy, sx);
      double ridge = gradient + std::numbers::pi / 2;
      ridge = std::fmod(ridge, std::numbers::pi);
      if (ridge < 0) ridge += std::numbers::pi;
      of.angle[i] = ridge;
    }
  return of;
}

// Ridge frequency (cycles/pixel) per block from the spacing of signature peaks
// taken across the ridges. Blocks without orientation stay empty.
inline std::vector<std::optional<double>> ridge_frequency(const FloatImage& f,
                                                          const OrientationField& of,
                                                          const EnhanceOptions& opt = {}) {
  std::vector<std::optional<double>> freq(of.angle.size());
  const int length = 2 * of.block;  // across ridges
  const int breadth = of.block;     // along ridges
  std::vector<double> sig(length), smooth(length);
  for (int by = 0; by < of.blocks_y; ++by)
    for (int bx = 0; bx < of.blocks_x; ++bx) {
      const std::size_t i = static_cast<std::size_t>(by) * of.blocks_x + bx;
      if (!of.angle[i]) continue;
      const double th = *of.angle[i];
      const double rx = std::cos(th), ry = std::sin(th);  // along ridge
      const double nx = -ry, ny = rx;                     // across ridges
      const double cx = bx * of.block + of.block / 2.0 - 0.5;
      const double cy = by * of.block + of.block / 2.0 - 0.5;
      for (int k = 0; k < length; ++k) {
        const double s = k - length / 2.0 + 0.5;
        double acc = 0.0;
        for (int d = 0; d < breadth; ++d) {
          const double t = d - breadth / 2.0 + 0.5;
          acc += f.bilinear(cx + s * nx + t * rx, cy + s * ny + t * ry);
        }
        sig[k] = acc / breadth;
      }
      for (int k = 0; k < length; ++k) {
        const double l = sig[std::max(0, k - 1)], r = sig[std::min(length - 1, k + 1)];
        smooth[k] = 0.25 * l + 0.5 * sig[k] + 0.25 * r;
      }
      std::vector<int> peaks;
      for (int k = 1; k + 1 < length; ++k)
        if (smooth[k] > smooth[k - 1] && smooth[k] >= smooth[k + 1]) peaks.push_back(k);
      if (peaks.size() < 2) continue;
      const double period =
          static_cast<double>(peaks.back() - peaks.front()) / static_cast<double>(peaks.size() - 1);
      if (period >= opt.min_period && period <= opt.max_period) freq[i] = 1.0 / period;
    }
  return freq;
}

namespace detail {

inline std::vector<double> gabor_kernel(double ridge_angle, double frequency, double sigma,
                                        int radius) {
  const int size = 2 * radius + 1;
  std::vector<double> k(static_cast<std::size_t>(size) * size);
  const double c = std::cos(ridge_angle), s = std::sin(ridge_angle);
  double mean = 0.0;
  for (int v = -radius; v <= radius; ++v)
    for (int u = -radius; u <= radius; ++u) {
      const double across = -u * s + v * c;
      const double along = u * c + v * s;
      const double g = std::exp(-(across * across + along * along) / (2 * sigma * sigma)) *
                       std::cos(2 * std::numbers::pi * frequency * across);
      k[static_cast<std::size_t>(v + radius) * size + (u + radius)] = g;
      mean += g;
    }
  mean /= static_cast<double>(k.size());
  // Remove DC, then scale to unit gain on the matched cosine.
  double gain = 0.0;
  for (int v = -radius; v <= radius; ++v)
    for (int u = -radius; u <= radius; ++u) {
      auto& g = k[static_cast<std::size_t>(v + radius) * size + (u + radius)];
      g -= mean;
      const double across = -u * s + v * c;
      gain += g * std::cos(2 * std::numbers::pi * frequency * across);
    }
  if (gain > 1e-12)
    for (auto& g : k) g /= gain;
  return k;
}

inline std::uint8_t to_gray(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(128.0 + 50.0 * v), 0L, 255L));
}

}  // namespace detail

inline GrayImage enhance(const GrayImage& img, const EnhanceOptions& opt = {}) {
  if (img.width() < kMinPipelineSize || img.height() < kMinPipelineSize)
    throw DomainError("image must be at least 16x16");
  const auto norm = normalize(img);
  if (!norm) return img;

  const auto of = orientation_field(*norm, opt.block);
  auto freq = ridge_frequency(*norm, of, opt);

  std::vector<double> valid;
  for (const auto& fq : freq)
    if (fq) valid.push_back(*fq);
  double fallback = 1.0 / opt.fallback_period;
  if (!valid.empty()) {
    std::nth_element(valid.begin(), valid.begin() + valid.size() / 2, valid.end());
    fallback = valid[valid.size() / 2];
  }

  const int radius = static_cast<int>(std::ceil(3.0 * opt.gabor_sigma));
  const int size = 2 * radius + 1;
  GrayImage out(img.width(), img.height());
  for (int by = 0; by < of.blocks_y; ++by)
    for (int bx = 0; bx < of.blocks_x; ++bx) {
      const std::size_t i = static_cast<std::size_t>(by) * of.blocks_x + bx;
      const int y0 = by * of.block, y1 = std::min(img.height(), y0 + of.block);
      const int x0 = bx * of.block, x1 = std::min(img.width(), x0 + of.block);
      if (!of.angle[i]) {
        for (int y = y0; y < y1; ++y)
          for (int x = x0; x < x1; ++x) out.at(x, y) = detail::to_gray(norm->at(x, y));
        continue;
      }
      const auto kernel =
          detail::gabor_kernel(*of.angle[i], freq[i].value_or(fallback), opt.gabor_sigma, radius);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          double acc = 0.0;
          for (int v = -radius; v <= radius; ++v) {
            const double* krow = &kernel[static_cast<std::size_t>(v + radius) * size];
            const int yy = std::clamp(y + v, 0, img.height() - 1);
            for (int u = -radius; u <= radius; ++u) {
              const int xx = std::clamp(x + u, 0, img.width() - 1);
              acc += krow[u + radius] * norm->at(xx, yy);
            }
          }
          out.at(x, y) = detail::to_gray(acc);
        }
    }
  return out;
}

// ---------------------------------------------------------------------------
// Thinning

// Neighbours in cyclic order starting east and turning counter-clockwise on
// screen: E, NE, N, NW, W, SW, S, SE.
inline constexpr std::array<std::array<int, 2>, 8> kRing{{
    {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

// Two-subiteration parallel thinning (Guo-Hall). Iterates to a fixed point, so
// the result is idempotent; deletions never disconnect a component.
inline BinaryImage thin(const BinaryImage& input) {
  BinaryImage img = input;
  const int w = img.width(), h = img.height();
  std::vector<std::pair<int, int>> marked;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      marked.clear();
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (!img.at(x, y)) continue;
          // Guo-Hall labels: p2=N, p3=NE, p4=E, p5=SE, p6=S, p7=SW, p8=W, p9=NW
          const int p2 = img.get(x, y - 1), p3 = img.get(x + 1, y - 1);
          const int p4 = img.get(x + 1, y), p5 = img.get(x + 1, y + 1);
          const int p6 = img.get(x, y + 1), p7 = img.get(x - 1, y + 1);
          const int p8 = img.get(x - 1, y), p9 = img.get(x - 1, y - 1);
          const int c = (!p2 && (p3 || p4)) + (!p4 && (p5 || p6)) + (!p6 && (p7 || p8)) +
                        (!p8 && (p9 || p2));
          const int n1 = (p9 || p2) + (p3 || p4) + (p5 || p6) + (p7 || p8);
          const int n2 = (p2 || p3) + (p4 || p5) + (p6 || p7) + (p8 || p9);
          const int n = std::min(n1, n2);
          const int m = pass == 0 ? ((p6 || p7 || !p9) && p8) : ((p2 || p3 || !p5) && p4);
          if (c == 1 && n >= 2 && n <= 3 && m == 0) marked.emplace_back(x, y);
        }
      for (auto [x, y] : marked) img.set(x, y, false);
      changed = changed || !marked.empty();
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// Crossing number and minutiae

inline int crossing_number(const BinaryImage& skel, int x, int y) {
  if (x <= 0 || y <= 0 || x >= skel.width() - 1 || y >= skel.height() - 1)
    throw DomainError("crossing number is undefined on the image border");
  int sum = 0;
  for (std::size_t i = 0; i < kRing.size(); ++i) {
    const auto& a = kRing[i];
    const auto& b = kRing[(i + 1) % kRing.size()];
    sum += std::abs(skel.at(x + a[0], y + a[1]) - skel.at(x + b[0], y + b[1]));
  }
  return sum / 2;
}

namespace detail {

// Follows the skeleton from `start` for up to `steps` pixels, never revisiting
// pixels listed in `visited`. Returns the last pixel reached.
inline std::pair<int, int> trace(const BinaryImage& skel, std::pair<int, int> start,
                                 std::vector<std::pair<int, int>> visited, int steps) {
  auto seen = [&](int x, int y) {
    return std::find(visited.begin(), visited.end(), std::pair{x, y}) != visited.end();
  };
  auto cur = start;
  visited.push_back(cur);
  // 4-neighbours first so staircases are followed pixel by pixel
  static constexpr std::array<int, 8> order{0, 2, 4, 6, 1, 3, 5, 7};
  for (int s = 0; s < steps; ++s) {
    bool moved = false;
    for (int k : order) {
      const int nx = cur.first + kRing[k][0], ny = cur.second + kRing[k][1];
      if (!skel.get(nx, ny) || seen(nx, ny)) continue;
      cur = {nx, ny};
      visited.push_back(cur);
      moved = true;
      break;
    }
    if (!moved) break;
  }
  return cur;
}

// Start pixel of every run of ridge neighbours around (x, y), preferring a
// 4-neighbour inside each run.
inline std::vector<std::pair<int, int>> branch_starts(const BinaryImage& skel, int x, int y) {
  std::array<int, 8> on{};
  for (std::size_t i = 0; i < 8; ++i) on[i] = skel.get(x + kRing[i][0], y + kRing[i][1]);
  std::size_t first_gap = 8;
  for (std::size_t i = 0; i < 8; ++i)
    if (!on[i]) {
      first_gap = i;
      break;
    }
  std::vector<std::pair<int, int>> starts;
  if (first_gap == 8) return starts;
  for (std::size_t k = 1; k <= 8; ++k) {
    const std::size_t i = (first_gap + k) % 8;
    if (!on[i]) continue;
    const std::size_t prev = (i + 7) % 8;
    if (on[prev]) continue;  // not the start of a run
    std::size_t pick = i;
    for (std::size_t j = i; on[j]; j = (j + 1) % 8) {
      if (j % 2 == 0) {
        pick = j;
        break;
      }
      if ((j + 1) % 8 == i) break;
    }
    starts.emplace_back(x + kRing[pick][0], y + kRing[pick][1]);
  }
  return starts;
}

inline std::vector<std::pair<int, int>> neighbourhood(const BinaryImage& skel, int x, int y) {
  std::vector<std::pair<int, int>> v{{x, y}};
  for (const auto& d : kRing)
    if (skel.get(x + d[0], y + d[1])) v.emplace_back(x + d[0], y + d[1]);
  return v;
}

inline double minutia_angle(const BinaryImage& skel, int x, int y, MinutiaKind kind,
                            int trace_len) {
  const auto starts = branch_starts(skel, x, y);
  const auto blocked = neighbourhood(skel, x, y);
  std::vector<std::pair<double, double>> dirs;
  for (const auto& s : starts) {
    auto blk = blocked;
    blk.erase(std::remove(blk.begin(), blk.end(), s), blk.end());
    const auto end = trace(skel, s, blk, trace_len);
    dirs.emplace_back(end.first - x, end.second - y);
  }
  if (dirs.empty()) return 0.0;
  if (kind == MinutiaKind::ending || dirs.size() < 3) {
    // points from the ridge body out through the tip
    return wrap_angle(std::atan2(-dirs[0].second, -dirs[0].first));
  }
  // Bifurcation: the stem is the branch left over after taking the two
  // branches closest in angle; direction runs from the stem into the fork.
  auto ang = [](const std::pair<double, double>& v) { return std::atan2(v.second, v.first); };
  double best = 1e9;
  std::size_t stem = 0;
  for (std::size_t i = 0; i < dirs.size(); ++i)
    for (std::size_t j = i + 1; j < dirs.size(); ++j) {
      double d = std::fabs(ang(dirs[i]) - ang(dirs[j]));
      if (d > std::numbers::pi) d = 2 * std::numbers::pi - d;
      if (d < best) {
        best = d;
        for (std::size_t k = 0; k < dirs.size(); ++k)
          if (k != i && k != j) {
            stem = k;
            break;
          }
      }
    }
  return wrap_angle(std::atan2(-dirs[stem].second, -dirs[stem].first));
}

}  // namespace detail

// Raw crossing-number scan over interior skeleton pixels.
inline std::vector<Minutia> scan_minutiae(const BinaryImage& skel, int trace_len = 8) {
  std::vector<Minutia> out;
  for (int y = 1; y + 1 < skel.height(); ++y)
    for (int x = 1; x + 1 < skel.width(); ++x) {
      if (!skel.at(x, y)) continue;
      const int cn = crossing_number(skel, x, y);
      if (cn != 1 && cn != 3) continue;
      const auto kind = cn == 1 ? MinutiaKind::ending : MinutiaKind::bifurcation;
      out.push_back({x, y, detail::minutia_angle(skel, x, y, kind, trace_len), kind});
    }
  return out;
}

struct ExtractOptions {
  EnhanceOptions enhance;
  int adaptive_window = 17;
  int border_margin = 10;
  double min_distance = 8.0;
  int trace_length = 8;
};

// Drops every minutia that has a neighbour closer than min_distance, then
// every minutia inside the border margin.
inline std::vector<Minutia> filter_minutiae(const std::vector<Minutia>& in, int width, int height,
                                            int border_margin, double min_distance) {
  std::vector<bool> drop(in.size(), false);
  const double d2 = min_distance * min_distance;
  for (std::size_t i = 0; i < in.size(); ++i)
    for (std::size_t j = i + 1; j < in.size(); ++j) {
      const double dx = in[i].x - in[j].x, dy = in[i].y - in[j].y;
      if (dx * dx + dy * dy < d2) drop[i] = drop[j] = true;
    }
  std::vector<Minutia> out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto& m = in[i];
    if (drop[i]) continue;
    if (m.x < border_margin || m.y < border_margin || m.x >= width - border_margin ||
        m.y >= height - border_margin)
      continue;
    out.push_back(m);
  }
  return out;
}

inline Template extract_template(const GrayImage& img, TeVariant algorithm,
                                 const ExtractOptions& opt = {}) {
  if (img.width() < kMinPipelineSize || img.height() < kMinPipelineSize)
    throw DomainError("image must be at least 16x16 for template extraction");
  Template t;
  t.width = img.width();
  t.height = img.height();
  t.algorithm = algorithm;

  if (algorithm == TeVariant::high_accuracy) {
    const auto enhanced = enhance(img, opt.enhance);
    auto ridges = binarize(enhanced, BinarizeMethod::adaptive_mean, opt.adaptive_window);
    // The filter response is centred on mid-gray; a ridge also needs a
    // negative response, otherwise partially healed gaps read as ridge.
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        if (ridges.at(x, y) && enhanced.at(x, y) >= 128) ridges.set(x, y, false);
    const auto skel = thin(ridges);
    t.minutiae = filter_minutiae(scan_minutiae(skel, opt.trace_length), img.width(), img.height(),
                                 opt.border_margin, opt.min_distance);
  } else {
    const auto skel = thin(binarize(img, BinarizeMethod::global_otsu));
    t.minutiae = scan_minutiae(skel, opt.trace_length);
  }
  t.sort();
  // The wire format counts minutiae in one byte.
  if (t.minutiae.size() > kMaxMinutiae) t.minutiae.resize(kMaxMinutiae);
  return t;
}

}  // namespace fieldauth
