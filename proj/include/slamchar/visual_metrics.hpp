#pragma once

// Brightness, exposure, contrast and blur characterization of camera frames.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "slamchar/core.hpp"
#include "slamchar/image_ops.hpp"

namespace slamchar::visual {

// ---------------------------------------------------------------------------
// Brightness
// ---------------------------------------------------------------------------

/// Average luma of a frame.
inline double frame_brightness(const Image8& frame) {
  const GrayImage l = luma(frame);
  return stats::mean(l.data());
}

struct BrightnessSeries {
  std::vector<double> brightness;
  std::vector<double> derivative;          // dBr/dt
  std::vector<double> centered;            // dBr/dt minus its mean
  double sigma = 0.0;                      // population std of the derivative
  std::array<double, 3> exceed_pct{};      // |centered| > k * sigma, k = 1, 2, 3
  bool has_derivative = false;
};

/// Exceedance of the zero-mean derivative beyond 1, 2 and 3 standard deviations.
inline void fill_exceedance(BrightnessSeries& s) {
  const double mu = stats::mean(s.derivative);
  s.centered.resize(s.derivative.size());
  for (std::size_t i = 0; i < s.derivative.size(); ++i) s.centered[i] = s.derivative[i] - mu;
  s.sigma = stats::stddev(s.centered, 0);
  for (int k = 0; k < 3; ++k) {
    const double thr = (k + 1) * s.sigma;
    std::size_t hits = 0;
    for (double b : s.centered) hits += std::abs(b) > thr ? 1 : 0;
    s.exceed_pct[k] = s.centered.empty() ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(s.centered.size());
  }
  s.has_derivative = true;
}

inline BrightnessSeries brightness_series(std::span<const double> brightness, std::span<const Seconds> t) {
  if (brightness.size() != t.size()) throw Error("brightness/timestamp length mismatch");
  BrightnessSeries s;
  s.brightness.assign(brightness.begin(), brightness.end());
  if (brightness.size() < 2) return s;
  s.derivative = finite_difference(brightness, t).values;
  fill_exceedance(s);
  return s;
}

// ---------------------------------------------------------------------------
// Exposure
// ---------------------------------------------------------------------------

enum class Exposure { Black, Under, Proper, Over, White };

inline constexpr std::array<std::string_view, 5> kExposureNames = {"BL", "UE", "PE", "OE", "WL"};

inline std::string_view to_string(Exposure e) { return kExposureNames[static_cast<std::size_t>(e)]; }

struct ExposureResult {
  int zone = 0;
  Exposure status = Exposure::Proper;
  TrimmedStats stats;
};

/// Zone index of a trimmed mean over equal-width intensity bands.
inline int exposure_zone(double trimmed_mean, int zones = 7) {
  const double width = 255.0 / zones;
  const int z = static_cast<int>(std::floor(trimmed_mean / width));
  return std::clamp(z, 0, zones - 1);
}

inline Exposure exposure_status(int zone, double skewness, int zones = 7) {
  if (zone == 0) return Exposure::Black;
  if (zone == zones - 1) return Exposure::White;
  if (zone == 1 && skewness > 0.0) return Exposure::Under;
  if (zone == zones - 2 && skewness < 0.0) return Exposure::Over;
  return Exposure::Proper;
}

inline ExposureResult classify_exposure(const GrayImage& img, double alpha, int zones = 7) {
  if (img.empty()) throw Error("empty image");
  if (zones < 4) throw Error("exposure needs at least 4 zones");
  auto ts = trimmed_stats(img, alpha);
  if (!ts) {
    // a single pixel: the plain value is its own trimmed mean
    ts = TrimmedStats{alpha, img.size(), stats::mean(img.data()), 0.0, 0.0};
  }
  ExposureResult r;
  r.stats = *ts;
  r.zone = exposure_zone(ts->mean, zones);
  r.status = exposure_status(r.zone, ts->skewness, zones);
  return r;
}

/// Share of frames per exposure class, in percent; sums to 100.
inline std::array<double, 5> exposure_percentages(std::span<const Exposure> statuses) {
  std::array<double, 5> pct{};
  if (statuses.empty()) return pct;
  for (Exposure e : statuses) pct[static_cast<std::size_t>(e)] += 1.0;
  for (double& p : pct) p = 100.0 * p / static_cast<double>(statuses.size());
  return pct;
}

// ---------------------------------------------------------------------------
// Contrast
// ---------------------------------------------------------------------------

struct ContrastReport {
  std::optional<double> ratio;  // C_CR = 100 * L_target / L_background
  std::optional<double> weber;  // C_W = C_CR - 100
  double michelson = 0.0;       // 100 * (L_max - L_min) / (L_max + L_min)
  double rms = 0.0;             // population std of L
  double target = 0.0;          // trimmed mean of L
  double background = 0.0;      // arithmetic mean of L
  double max = 0.0;
  double min = 0.0;
};

/// Four classical contrast scores over a luminance plane (LAB lightness by default).
inline ContrastReport contrast(const GrayImage& lum, double alpha) {
  if (lum.empty()) throw Error("empty image");
  ContrastReport r;
  const auto& v = lum.data();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  r.min = *lo;
  r.max = *hi;
  r.background = stats::mean(v);
  const auto ts = trimmed_stats(v, alpha);
  r.target = ts ? ts->mean : r.background;
  if (r.background > 0.0) {
    r.ratio = 100.0 * r.target / r.background;
    r.weber = *r.ratio - 100.0;
  }
  r.michelson = (r.max + r.min) > 0.0 ? 100.0 * (r.max - r.min) / (r.max + r.min) : 0.0;
  r.rms = stats::stddev(v, 0);
  return r;
}

// ---------------------------------------------------------------------------
// Blur
// ---------------------------------------------------------------------------

struct BlurFrame {
  double score = 0.0;                    // whole-image Laplacian variance
  std::vector<std::optional<double>> tile_scores;
  std::size_t evaluated_tiles = 0;       // tiles of at least 3x3 pixels
  std::size_t blurred_tiles = 0;
  double blurred_pct = 0.0;
};

/// Whole-image and per-tile blur scores. A tile is blurred when its score falls
/// strictly below the threshold; tiles smaller than 3x3 are not evaluated.
inline BlurFrame blur_report(const GrayImage& img, int tile_dim, double threshold) {
  const auto whole = laplacian_variance(img);
  if (!whole) throw Error("blur scoring needs an image of at least 3x3");
  BlurFrame b;
  b.score = *whole;
  const TileGrid grid = tile(img, tile_dim);
  b.tile_scores.reserve(grid.total());
  for (const Tile& t : grid.tiles) {
    const auto s = laplacian_variance(img, t);
    b.tile_scores.push_back(s);
    if (!s) continue;
    ++b.evaluated_tiles;
    if (*s < threshold) ++b.blurred_tiles;
  }
  b.blurred_pct = b.evaluated_tiles == 0
                      ? 0.0
                      : 100.0 * static_cast<double>(b.blurred_tiles) / static_cast<double>(b.evaluated_tiles);
  return b;
}

struct BlurSequenceRatios {
  double gt0 = 0.0;
  double gt50 = 0.0;
  double gt90 = 0.0;
};

/// Share of images whose blurred-tile percentage exceeds 0, 50 and 90 percent.
inline BlurSequenceRatios blur_sequence_ratios(std::span<const double> blurred_pct) {
  BlurSequenceRatios r;
  if (blurred_pct.empty()) return r;
  std::size_t a = 0, b = 0, c = 0;
  for (double p : blurred_pct) {
    a += p > 0.0 ? 1 : 0;
    b += p > 50.0 ? 1 : 0;
    c += p > 90.0 ? 1 : 0;
  }
  const double n = static_cast<double>(blurred_pct.size());
  r.gt0 = 100.0 * a / n;
  r.gt50 = 100.0 * b / n;
  r.gt90 = 100.0 * c / n;
  return r;
}

}  // namespace slamchar::visual
