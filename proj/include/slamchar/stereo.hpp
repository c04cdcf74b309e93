#pragma once

// Dense disparity from rectified stereo pairs: SAD block matching and
// census-cost semi-global matching, with shared uniqueness and left-right checks.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "slamchar/core.hpp"
#include "slamchar/image.hpp"

namespace slamchar::stereo {

enum class Method { BM, SGM };

inline std::string_view to_string(Method m) { return m == Method::BM ? "bm" : "sgm"; }

struct StereoConfig {
  int d_max = 128;        // disparities searched: [0, d_max)
  int block = 15;         // SAD window side (BM)
  int paths = 8;          // SGM aggregation directions, 4 or 8
  int p1 = 8;             // SGM penalty for |dd| == 1
  int p2 = 32;            // SGM penalty for |dd| > 1
  int uniqueness = 10;    // percent margin the best cost must keep over non-adjacent rivals
  bool lr_check = true;
  double baseline = 0.0;  // metres, informational
  double focal = 0.0;     // pixels, informational

  void validate() const {
    if (d_max < 1) throw Error("stereo d_max must be positive");
    if (block < 3 || block % 2 == 0) throw Error("stereo block must be odd and >= 3");
    if (paths != 4 && paths != 8) throw Error("stereo paths must be 4 or 8");
    if (!(p2 > p1 && p1 > 0)) throw Error("stereo penalties need p2 > p1 > 0");
    if (uniqueness < 0 || uniqueness >= 100) throw Error("stereo uniqueness must lie in [0, 100)");
  }
};

inline constexpr std::int16_t kInvalid = -1;

struct DisparityMap {
  Plane<std::int16_t> disparity;  // kInvalid where rejected
  std::size_t valid_count = 0;
  Method method = Method::BM;

  bool valid(int x, int y) const { return disparity(x, y) != kInvalid; }
};

namespace detail {

/// Cost volume laid out [y][x][d]; only d <= x is a real candidate.
template <typename Cost>
struct CostVolume {
  int width = 0;
  int height = 0;
  int depth = 0;
  std::vector<Cost> data;

  CostVolume(int w, int h, int d) : width(w), height(h), depth(d), data(static_cast<std::size_t>(w) * h * d) {}
  Cost* at(int x, int y) { return &data[(static_cast<std::size_t>(y) * width + x) * depth]; }
  const Cost* at(int x, int y) const { return &data[(static_cast<std::size_t>(y) * width + x) * depth]; }
};

inline void check_pair(const Gray8& left, const Gray8& right, const StereoConfig& cfg) {
  cfg.validate();
  if (left.width() != right.width() || left.height() != right.height()) {
    throw Error("stereo pair dimension mismatch");
  }
  if (left.width() <= cfg.d_max + cfg.block) throw Error("stereo image too narrow for d_max + block");
}

/// Pixels whose block window in `img` has a single intensity value.
inline Plane<std::uint8_t> textureless(const Gray8& img, int block) {
  const int w = img.width();
  const int h = img.height();
  const int r = block / 2;
  std::vector<std::int64_t> s1(static_cast<std::size_t>(w + 1) * (h + 1), 0), s2(s1.size(), 0);
  auto at = [&](std::vector<std::int64_t>& v, int x, int y) -> std::int64_t& {
    return v[static_cast<std::size_t>(y) * (w + 1) + x];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::int64_t v = img(x, y);
      at(s1, x + 1, y + 1) = v + at(s1, x, y + 1) + at(s1, x + 1, y) - at(s1, x, y);
      at(s2, x + 1, y + 1) = v * v + at(s2, x, y + 1) + at(s2, x + 1, y) - at(s2, x, y);
    }
  }
  Plane<std::uint8_t> flat(w, h, 0);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - r);
    const int y1 = std::min(h - 1, y + r) + 1;
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - r);
      const int x1 = std::min(w - 1, x + r) + 1;
      const std::int64_t n = static_cast<std::int64_t>(x1 - x0) * (y1 - y0);
      const std::int64_t a = at(s1, x1, y1) - at(s1, x0, y1) - at(s1, x1, y0) + at(s1, x0, y0);
      const std::int64_t b = at(s2, x1, y1) - at(s2, x0, y1) - at(s2, x1, y0) + at(s2, x0, y0);
      flat(x, y) = n * b == a * a ? 1 : 0;
    }
  }
  return flat;
}

/// Winner-take-all with uniqueness and left-right consistency. Textureless
/// pixels and pixels whose cost is equal across all candidates stay invalid.
template <typename Cost>
DisparityMap select(const CostVolume<Cost>& vol, const Plane<std::uint8_t>& flat, const StereoConfig& cfg,
                    Method method) {
  const int w = vol.width;
  const int h = vol.height;
  DisparityMap out{Plane<std::int16_t>(w, h, kInvalid), 0, method};
  std::vector<int> right_best(static_cast<std::size_t>(w));

  for (int y = 0; y < h; ++y) {
    if (cfg.lr_check) {
      // Right-image disparities read diagonally out of the left-referenced volume.
      for (int xr = 0; xr < w; ++xr) {
        int best = 0;
        Cost best_cost = std::numeric_limits<Cost>::max();
        for (int d = 0; d < vol.depth && xr + d < w; ++d) {
          const Cost c = vol.at(xr + d, y)[d];
          if (c < best_cost) {
            best_cost = c;
            best = d;
          }
        }
        right_best[static_cast<std::size_t>(xr)] = best;
      }
    }
    for (int x = 0; x < w; ++x) {
      const Cost* c = vol.at(x, y);
      const int candidates = std::min(vol.depth, x + 1);
      if (flat(x, y) || std::all_of(c, c + candidates, [&](Cost v) { return v == c[0]; })) continue;
      int best = 0;
      for (int d = 1; d < candidates; ++d) {
        if (c[d] < c[best]) best = d;
      }
      const double best_cost = static_cast<double>(c[best]);
      bool unique = true;
      for (int d = 0; d < candidates && unique; ++d) {
        if (std::abs(d - best) <= 1) continue;
        if (static_cast<double>(c[d]) * (100 - cfg.uniqueness) <= best_cost * 100.0) unique = false;
      }
      if (!unique) continue;
      if (cfg.lr_check && std::abs(right_best[static_cast<std::size_t>(x - best)] - best) > 1) continue;
      out.disparity(x, y) = static_cast<std::int16_t>(best);
      ++out.valid_count;
    }
  }
  return out;
}

}  // namespace detail

/// Block matching: mean absolute difference over a block clipped to the image,
/// minimized over d in [0, min(d_max, x+1)).
inline DisparityMap disparity_bm(const Gray8& left, const Gray8& right, const StereoConfig& cfg) {
  detail::check_pair(left, right, cfg);
  const int w = left.width();
  const int h = left.height();
  const int r = cfg.block / 2;
  detail::CostVolume<float> vol(w, h, cfg.d_max);
  std::fill(vol.data.begin(), vol.data.end(), std::numeric_limits<float>::max());

  // Integral image of |L(x,y) - R(x-d,y)| per disparity, domain x >= d.
  std::vector<std::int64_t> integral(static_cast<std::size_t>(w + 1) * (h + 1));
  auto I = [&](int x, int y) -> std::int64_t& { return integral[static_cast<std::size_t>(y) * (w + 1) + x]; };
  for (int d = 0; d < cfg.d_max && d < w; ++d) {
    std::fill(integral.begin(), integral.end(), 0);
    for (int y = 0; y < h; ++y) {
      std::int64_t row = 0;
      for (int x = 0; x < w; ++x) {
        if (x >= d) row += std::abs(static_cast<int>(left(x, y)) - static_cast<int>(right(x - d, y)));
        I(x + 1, y + 1) = I(x + 1, y) + row;
      }
    }
    for (int y = 0; y < h; ++y) {
      const int y0 = std::max(0, y - r);
      const int y1 = std::min(h - 1, y + r);
      for (int x = d; x < w; ++x) {
        const int x0 = std::max(d, x - r);
        const int x1 = std::min(w - 1, x + r);
        const std::int64_t sad = I(x1 + 1, y1 + 1) - I(x0, y1 + 1) - I(x1 + 1, y0) + I(x0, y0);
        const int count = (x1 - x0 + 1) * (y1 - y0 + 1);
        vol.at(x, y)[d] = static_cast<float>(static_cast<double>(sad) / count);
      }
    }
  }
  return detail::select(vol, detail::textureless(left, cfg.block), cfg, Method::BM);
}

/// 5x5 census signature: bit set where the neighbour is darker than the centre.
inline Plane<std::uint32_t> census5x5(const Gray8& img) {
  const int w = img.width();
  const int h = img.height();
  Plane<std::uint32_t> out(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int c = img(x, y);
      std::uint32_t sig = 0;
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int v = img(std::clamp(x + dx, 0, w - 1), std::clamp(y + dy, 0, h - 1));
          sig = (sig << 1) | (v < c ? 1u : 0u);
        }
      }
      out(x, y) = sig;
    }
  }
  return out;
}

inline constexpr int kCensusBits = 24;

/// Semi-global matching over census Hamming costs.
inline DisparityMap disparity_sgm(const Gray8& left, const Gray8& right, const StereoConfig& cfg) {
  detail::check_pair(left, right, cfg);
  const int w = left.width();
  const int h = left.height();
  const int D = cfg.d_max;
  const auto cl = census5x5(left);
  const auto cr = census5x5(right);

  detail::CostVolume<std::uint8_t> cost(w, h, D);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t* c = cost.at(x, y);
      for (int d = 0; d < D; ++d) {
        c[d] = x >= d ? static_cast<std::uint8_t>(std::popcount(cl(x, y) ^ cr(x - d, y)))
                      : static_cast<std::uint8_t>(kCensusBits);
      }
    }
  }

  detail::CostVolume<std::int32_t> sum(w, h, D);
  static constexpr std::array<std::array<int, 2>, 8> kDirs = {{
      {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1},
  }};
  const auto row_len = static_cast<std::size_t>(w) * D;
  std::vector<std::int32_t> prev(row_len), cur(row_len);
  std::vector<std::int32_t> prev_min(static_cast<std::size_t>(w)), cur_min(static_cast<std::size_t>(w));

  for (int p = 0; p < cfg.paths; ++p) {
    const int dx = kDirs[p][0];
    const int dy = kDirs[p][1];
    const int y_begin = dy >= 0 ? 0 : h - 1;
    const int y_step = dy >= 0 ? 1 : -1;
    const int x_begin = dx >= 0 ? 0 : w - 1;
    const int x_step = dx >= 0 ? 1 : -1;
    bool have_prev_row = false;
    for (int y = y_begin; y >= 0 && y < h; y += y_step) {
      for (int x = x_begin; x >= 0 && x < w; x += x_step) {
        const int px = x - dx;
        const int py = y - dy;
        const bool inside = px >= 0 && px < w && py >= 0 && py < h && (dy == 0 || have_prev_row);
        const std::uint8_t* c = cost.at(x, y);
        std::int32_t* L = &cur[static_cast<std::size_t>(x) * D];
        std::int32_t lmin = std::numeric_limits<std::int32_t>::max();
        if (!inside) {
          for (int d = 0; d < D; ++d) {
            L[d] = c[d];
            lmin = std::min(lmin, L[d]);
          }
        } else {
          const std::int32_t* Lp =
              dy == 0 ? &cur[static_cast<std::size_t>(px) * D] : &prev[static_cast<std::size_t>(px) * D];
          const std::int32_t mp = dy == 0 ? cur_min[static_cast<std::size_t>(px)] : prev_min[static_cast<std::size_t>(px)];
          for (int d = 0; d < D; ++d) {
            std::int32_t best = std::min(Lp[d], mp + cfg.p2);
            if (d > 0) best = std::min(best, Lp[d - 1] + cfg.p1);
            if (d + 1 < D) best = std::min(best, Lp[d + 1] + cfg.p1);
            L[d] = c[d] + best - mp;
            lmin = std::min(lmin, L[d]);
          }
        }
        cur_min[static_cast<std::size_t>(x)] = lmin;
        std::int32_t* S = sum.at(x, y);
        for (int d = 0; d < D; ++d) S[d] += L[d];
      }
      std::swap(prev, cur);
      std::swap(prev_min, cur_min);
      have_prev_row = true;
    }
  }
  return detail::select(sum, detail::textureless(left, cfg.block), cfg, Method::SGM);
}

struct DisparityStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t valid = 0;
};

/// Mean and population standard deviation over valid pixels only.
inline std::optional<DisparityStats> disparity_stats(const DisparityMap& map) {
  double s = 0.0;
  std::size_t n = 0;
  for (auto d : map.disparity.data()) {
    if (d == kInvalid) continue;
    s += d;
    ++n;
  }
  if (n == 0) return std::nullopt;
  const double mean = s / static_cast<double>(n);
  double v = 0.0;
  for (auto d : map.disparity.data()) {
    if (d == kInvalid) continue;
    v += (d - mean) * (d - mean);
  }
  return DisparityStats{mean, std::sqrt(v / static_cast<double>(n)), n};
}

}  // namespace slamchar::stereo
