#pragma once

// Built-in FAST and ORB-style detectors, a pluggable detector interface,
// and the spatial-distribution measures computed over feature bins.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "slamchar/core.hpp"
#include "slamchar/image.hpp"
#include "slamchar/image_ops.hpp"

namespace slamchar::features {

struct Keypoint {
  float x = 0.0f;
  float y = 0.0f;
  double score = 0.0;
  double angle = 0.0;  // radians; ORB-style only

  bool operator==(const Keypoint&) const = default;
};

struct DetectorConfig {
  int threshold = 10;   // FAST intensity threshold
  int arc = 9;          // contiguous pixels required out of 16
  bool nonmax = true;
  std::optional<std::size_t> max_keypoints;  // nullopt = unlimited
  double harris_k = 0.04;

  void validate() const {
    if (threshold < 1 || threshold > 254) throw Error("FAST threshold must lie in [1, 254]");
    if (arc < 9 || arc > 12) throw Error("FAST arc length must lie in [9, 12]");
  }
};

/// The 16-pixel Bresenham circle of radius 3, clockwise from the top.
inline constexpr std::array<std::array<int, 2>, 16> kCircle = {{
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
    {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
}};

/// Segment-test score of one pixel: the largest sum of |I - p| over a contiguous
/// arc of at least `arc` pixels that are all brighter than p+t or all darker
/// than p-t. Zero when the pixel is not a corner.
inline int segment_score(const Gray8& img, int x, int y, int threshold, int arc) {
  const int p = img(x, y);
  std::array<int, 16> v{};
  for (int i = 0; i < 16; ++i) v[i] = img(x + kCircle[i][0], y + kCircle[i][1]);

  // Any qualifying arc of length >= 9 spans at least arc/4 of the compass pixels.
  const int need = arc / 4;
  int bright_compass = 0;
  int dark_compass = 0;
  for (int i = 0; i < 16; i += 4) {
    bright_compass += v[i] > p + threshold;
    dark_compass += v[i] < p - threshold;
  }
  if (bright_compass < need && dark_compass < need) return 0;

  int best = 0;
  for (int sign : {+1, -1}) {
    std::array<bool, 16> on{};
    int count = 0;
    for (int i = 0; i < 16; ++i) {
      on[i] = sign > 0 ? v[i] > p + threshold : v[i] < p - threshold;
      count += on[i];
    }
    if (count < arc) continue;
    if (count == 16) {
      int s = 0;
      for (int i = 0; i < 16; ++i) s += std::abs(v[i] - p);
      best = std::max(best, s);
      continue;
    }
    int start = 0;
    while (on[start]) ++start;
    int run = 0;
    int sum = 0;
    for (int k = 1; k <= 16; ++k) {
      const int i = (start + k) % 16;
      if (on[i]) {
        ++run;
        sum += std::abs(v[i] - p);
      } else {
        if (run >= arc) best = std::max(best, sum);
        run = 0;
        sum = 0;
      }
    }
  }
  return best;
}

/// Dense segment-test score map; zero on the 3-pixel border and on non-corners.
inline Plane<int> fast_score_map(const Gray8& img, int threshold, int arc) {
  Plane<int> scores(img.width(), img.height(), 0);
  for (int y = 3; y < img.height() - 3; ++y) {
    for (int x = 3; x < img.width() - 3; ++x) scores(x, y) = segment_score(img, x, y, threshold, arc);
  }
  return scores;
}

/// 3x3 non-maximum suppression. A corner survives when its score beats every
/// neighbouring corner; equal scores go to the earlier pixel in raster order.
inline bool survives_nms(const Plane<int>& scores, int x, int y) {
  const int s = scores(x, y);
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const int nx = x + dx;
      const int ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= scores.width() || ny >= scores.height()) continue;
      const int q = scores(nx, ny);
      if (q == 0) continue;
      const bool neighbour_earlier = dy < 0 || (dy == 0 && dx < 0);
      if (q > s || (q == s && neighbour_earlier)) return false;
    }
  }
  return true;
}

inline std::vector<Keypoint> detect_fast(const Gray8& img, const DetectorConfig& cfg) {
  cfg.validate();
  std::vector<Keypoint> out;
  if (img.width() < 7 || img.height() < 7) return out;
  const Plane<int> scores = fast_score_map(img, cfg.threshold, cfg.arc);
  for (int y = 3; y < img.height() - 3; ++y) {
    for (int x = 3; x < img.width() - 3; ++x) {
      if (scores(x, y) == 0) continue;
      if (cfg.nonmax && !survives_nms(scores, x, y)) continue;
      out.push_back({static_cast<float>(x), static_cast<float>(y), static_cast<double>(scores(x, y)), 0.0});
    }
  }
  return out;
}

/// Harris corner measure over a 7x7 window of Sobel gradients.
inline double harris_response(const Gray8& img, int x, int y, double k) {
  double a = 0.0, b = 0.0, c = 0.0;
  for (int dy = -3; dy <= 3; ++dy) {
    for (int dx = -3; dx <= 3; ++dx) {
      const int px = x + dx;
      const int py = y + dy;
      if (px < 1 || py < 1 || px > img.width() - 2 || py > img.height() - 2) continue;
      auto I = [&](int u, int v) { return static_cast<double>(img(u, v)); };
      const double gx = (I(px + 1, py - 1) + 2 * I(px + 1, py) + I(px + 1, py + 1)) -
                        (I(px - 1, py - 1) + 2 * I(px - 1, py) + I(px - 1, py + 1));
      const double gy = (I(px - 1, py + 1) + 2 * I(px, py + 1) + I(px + 1, py + 1)) -
                        (I(px - 1, py - 1) + 2 * I(px, py - 1) + I(px + 1, py - 1));
      a += gx * gx;
      b += gy * gy;
      c += gx * gy;
    }
  }
  return a * b - c * c - k * (a + b) * (a + b);
}

inline constexpr int kOrientationRadius = 15;

/// Intensity-centroid orientation: angle of the (m10, m01) moment vector over a
/// disc of radius 15, clipped to the image.
inline double centroid_angle(const Gray8& img, int x, int y) {
  double m10 = 0.0, m01 = 0.0;
  const int r = kOrientationRadius;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy > r * r) continue;
      const int px = x + dx;
      const int py = y + dy;
      if (px < 0 || py < 0 || px >= img.width() || py >= img.height()) continue;
      const double v = img(px, py);
      m10 += dx * v;
      m01 += dy * v;
    }
  }
  return std::atan2(m01, m10);
}

/// FAST detections ranked by Harris response, oriented by intensity centroid,
/// optionally truncated to the strongest max_keypoints.
inline std::vector<Keypoint> detect_orb_style(const Gray8& img, const DetectorConfig& cfg) {
  std::vector<Keypoint> kps = detect_fast(img, cfg);
  for (auto& kp : kps) {
    const int x = static_cast<int>(kp.x);
    const int y = static_cast<int>(kp.y);
    kp.score = harris_response(img, x, y, cfg.harris_k);
    kp.angle = centroid_angle(img, x, y);
  }
  std::stable_sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) { return a.score > b.score; });
  if (cfg.max_keypoints && kps.size() > *cfg.max_keypoints) kps.resize(*cfg.max_keypoints);
  return kps;
}

/// Image to keypoints. External detectors (e.g. SIFT) plug in by implementing this.
class FeatureDetector {
 public:
  virtual ~FeatureDetector() = default;
  virtual std::string id() const = 0;
  virtual std::vector<Keypoint> detect(const Gray8& img) const = 0;
};

class FastDetector final : public FeatureDetector {
 public:
  explicit FastDetector(DetectorConfig cfg) : cfg_(cfg) {}
  std::string id() const override { return "fast"; }
  std::vector<Keypoint> detect(const Gray8& img) const override { return detect_fast(img, cfg_); }

 private:
  DetectorConfig cfg_;
};

class OrbDetector final : public FeatureDetector {
 public:
  explicit OrbDetector(DetectorConfig cfg) : cfg_(cfg) {}
  std::string id() const override { return "orb"; }
  std::vector<Keypoint> detect(const Gray8& img) const override { return detect_orb_style(img, cfg_); }

 private:
  DetectorConfig cfg_;
};

struct FeatureDistribution {
  std::string detector;
  std::size_t total = 0;
  double avg_per_bin = 0.0;
  double dist_avg_pct = 0.0;  // bins holding at least the average count
  double dist_abs_pct = 0.0;  // bins holding at least one feature
  int bin_dim = 0;
  std::size_t bins = 0;
  std::vector<std::size_t> counts;
};

/// Bins keypoints by the tile containing their integer pixel coordinate.
inline FeatureDistribution spatial_distribution(const std::vector<Keypoint>& kps, int width, int height,
                                                int bin_dim, std::string detector = {}) {
  const TileGrid grid = tile(width, height, bin_dim);
  FeatureDistribution d;
  d.detector = std::move(detector);
  d.bin_dim = bin_dim;
  d.bins = grid.total();
  d.counts.assign(d.bins, 0);
  for (const auto& kp : kps) {
    const int x = std::clamp(static_cast<int>(std::floor(kp.x)), 0, width - 1);
    const int y = std::clamp(static_cast<int>(std::floor(kp.y)), 0, height - 1);
    ++d.counts[grid.index_of(x, y)];
  }
  d.total = kps.size();
  d.avg_per_bin = static_cast<double>(d.total) / static_cast<double>(d.bins);
  std::size_t at_avg = 0;
  std::size_t nonempty = 0;
  for (std::size_t c : d.counts) {
    at_avg += static_cast<double>(c) >= d.avg_per_bin ? 1 : 0;
    nonempty += c >= 1 ? 1 : 0;
  }
  // With no features at all every bin trivially "meets" the zero average; report 0.
  d.dist_avg_pct = d.total == 0 ? 0.0 : 100.0 * static_cast<double>(at_avg) / static_cast<double>(d.bins);
  d.dist_abs_pct = 100.0 * static_cast<double>(nonempty) / static_cast<double>(d.bins);
  return d;
}

}  // namespace slamchar::features
