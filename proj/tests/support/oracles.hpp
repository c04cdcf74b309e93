#pragma once

// Brute-force reference implementations. Deliberately naive: each one recomputes
// its quantity straight from the definition with no shared helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "slamchar/features.hpp"
#include "slamchar/image.hpp"
#include "slamchar/similarity.hpp"
#include "slamchar/stereo.hpp"
#include "support/fixtures.hpp"

namespace slamchar::testing {

// ---------------------------------------------------------------------------
// FAST
// ---------------------------------------------------------------------------

inline int oracle_segment_score(const Gray8& g, int x, int y, int t, int arc) {
  static const int cx[16] = {0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3, -3, -3, -2, -1};
  static const int cy[16] = {-3, -3, -2, -1, 0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3};
  const int p = g(x, y);
  int best = 0;
  for (int sign = -1; sign <= 1; sign += 2) {
    for (int start = 0; start < 16; ++start) {
      for (int len = arc; len <= 16; ++len) {
        bool ok = true;
        int sum = 0;
        for (int k = 0; k < len && ok; ++k) {
          const int v = g(x + cx[(start + k) % 16], y + cy[(start + k) % 16]);
          ok = sign > 0 ? v > p + t : v < p - t;
          sum += std::abs(v - p);
        }
        if (ok) best = std::max(best, sum);
      }
    }
  }
  return best;
}

/// Segment-test corners in raster order, optionally 3x3 non-max suppressed
/// (ties resolved in favour of the earlier pixel in raster order).
inline std::vector<features::Keypoint> oracle_fast(const Gray8& g, int t, int arc, bool nonmax) {
  const int w = g.width(), h = g.height();
  std::vector<int> score(static_cast<std::size_t>(w) * h, 0);
  for (int y = 3; y < h - 3; ++y) {
    for (int x = 3; x < w - 3; ++x) score[std::size_t(y) * w + x] = oracle_segment_score(g, x, y, t, arc);
  }
  std::vector<features::Keypoint> out;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int s = score[std::size_t(y) * w + x];
      if (s == 0) continue;
      bool keep = true;
      for (int ny = y - 1; ny <= y + 1 && nonmax; ++ny) {
        for (int nx = x - 1; nx <= x + 1; ++nx) {
          if (nx < 0 || ny < 0 || nx >= w || ny >= h || (nx == x && ny == y)) continue;
          const int q = score[std::size_t(ny) * w + nx];
          const bool earlier = ny * w + nx < y * w + x;
          if (q > s || (q == s && earlier)) keep = false;
        }
      }
      if (keep) out.push_back({float(x), float(y), double(s), 0.0});
    }
  }
  return out;
}

/// Harris measure from explicit Sobel gradient images, summed over the 7x7 window.
inline double oracle_harris(const Gray8& g, int x, int y, double k) {
  const int w = g.width(), h = g.height();
  std::vector<double> gx(std::size_t(w) * h, 0.0), gy(std::size_t(w) * h, 0.0);
  std::vector<bool> defined(std::size_t(w) * h, false);
  for (int v = 1; v < h - 1; ++v) {
    for (int u = 1; u < w - 1; ++u) {
      double sx = 0, sy = 0;
      const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
      for (int j = -1; j <= 1; ++j) {
        for (int i = -1; i <= 1; ++i) {
          sx += kx[j + 1][i + 1] * double(g(u + i, v + j));
          sy += kx[i + 1][j + 1] * double(g(u + i, v + j));
        }
      }
      gx[std::size_t(v) * w + u] = sx;
      gy[std::size_t(v) * w + u] = sy;
      defined[std::size_t(v) * w + u] = true;
    }
  }
  double a = 0, b = 0, c = 0;
  for (int v = y - 3; v <= y + 3; ++v) {
    for (int u = x - 3; u <= x + 3; ++u) {
      if (u < 0 || v < 0 || u >= w || v >= h || !defined[std::size_t(v) * w + u]) continue;
      const double X = gx[std::size_t(v) * w + u], Y = gy[std::size_t(v) * w + u];
      a += X * X;
      b += Y * Y;
      c += X * Y;
    }
  }
  return a * b - c * c - k * (a + b) * (a + b);
}

// ---------------------------------------------------------------------------
// Stereo
// ---------------------------------------------------------------------------

/// Top half of the rows shifted by `near`, bottom half by `far`.
inline StereoPair piecewise_pair(const Gray8& field, int width, int near, int far) {
  StereoPair p{Gray8(width, field.height()), Gray8(width, field.height())};
  for (int y = 0; y < field.height(); ++y) {
    const int s = y < field.height() / 2 ? near : far;
    for (int x = 0; x < width; ++x) {
      p.left(x, y) = field(x, y);
      p.right(x, y) = field(x + s, y);
    }
  }
  return p;
}

/// Adjacent valid pixel pairs whose disparities differ by more than one.
inline int count_discontinuities(const stereo::DisparityMap& m) {
  const auto& d = m.disparity;
  int n = 0;
  for (int y = 0; y < d.height(); ++y) {
    for (int x = 0; x < d.width(); ++x) {
      if (d(x, y) == stereo::kInvalid) continue;
      if (x + 1 < d.width() && d(x + 1, y) != stereo::kInvalid && std::abs(d(x + 1, y) - d(x, y)) > 1) ++n;
      if (y + 1 < d.height() && d(x, y + 1) != stereo::kInvalid && std::abs(d(x, y + 1) - d(x, y)) > 1) ++n;
    }
  }
  return n;
}

// ---------------------------------------------------------------------------
// Bag of words
// ---------------------------------------------------------------------------

/// L1 score over a dense word axis.
inline double oracle_bow_score(const similarity::BowVector& a, const similarity::BowVector& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::set<similarity::WordId> words;
  for (const auto& [w, x] : a) words.insert(w);
  for (const auto& [w, x] : b) words.insert(w);
  double l1 = 0.0;
  for (auto w : words) {
    const double x = a.count(w) ? a.at(w) : 0.0;
    const double y = b.count(w) ? b.at(w) : 0.0;
    l1 += std::abs(x - y);
  }
  return 1.0 - 0.5 * l1;
}

struct OracleMatch {
  double score = 0.0;
  std::size_t distance = 0;
  bool defined = false;
};

/// Every frame scored against every admissible frame; best score, then nearest, then earliest.
inline std::vector<OracleMatch> oracle_closest_match(const std::vector<similarity::BowVector>& seq, std::size_t min_gap) {
  std::vector<OracleMatch> out(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    std::optional<std::size_t> best;
    double best_s = -1.0;
    for (std::size_t j = 0; j < seq.size(); ++j) {
      const std::size_t d = i > j ? i - j : j - i;
      if (d < min_gap || j == i) continue;
      const double s = similarity::bow_score(seq[i], seq[j]);
      const std::size_t bd = best ? (i > *best ? i - *best : *best - i) : 0;
      if (!best || s > best_s || (s == best_s && d < bd) || (s == best_s && d == bd && j < *best)) {
        best = j;
        best_s = s;
      }
    }
    if (best) out[i] = {best_s, i > *best ? i - *best : *best - i, true};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Set cover
// ---------------------------------------------------------------------------

/// Smallest number of sets whose union equals the union of all sets, by
/// enumerating every subset.
inline std::size_t oracle_min_cover(const std::vector<std::set<int>>& sets) {
  std::set<int> universe;
  for (const auto& s : sets) universe.insert(s.begin(), s.end());
  std::size_t best = sets.size();
  for (std::uint32_t mask = 0; mask < (1u << sets.size()); ++mask) {
    const auto k = static_cast<std::size_t>(__builtin_popcount(mask));
    if (k >= best) continue;
    std::set<int> u;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (mask & (1u << i)) u.insert(sets[i].begin(), sets[i].end());
    }
    if (u == universe) best = k;
  }
  return best;
}

}  // namespace slamchar::testing
