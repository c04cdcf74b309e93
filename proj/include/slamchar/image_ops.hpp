#pragma once

// Pixel-level primitives shared by the visual engines.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "slamchar/core.hpp"
#include "slamchar/image.hpp"

namespace slamchar {

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

inline GrayImage luma(const Image8& frame) {
  if (frame.channels != 1 && frame.channels != 3) throw Error("luma expects 1 or 3 channels");
  GrayImage out(frame.width, frame.height);
  auto& dst = out.data();
  if (frame.channels == 1) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = frame.data[i];
    return out;
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const auto* p = &frame.data[i * 3];
    dst[i] = kLumaR * p[0] + kLumaG * p[1] + kLumaB * p[2];
  }
  return out;
}

/// Rounded luma, the 8-bit input of detectors and stereo matchers.
inline Gray8 to_gray8(const Image8& frame) {
  if (frame.channels == 1) {
    Gray8 g(frame.width, frame.height);
    g.data() = frame.data;
    return g;
  }
  const GrayImage l = luma(frame);
  Gray8 g(frame.width, frame.height);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.data()[i] = static_cast<std::uint8_t>(std::clamp(std::lround(l.data()[i]), 0L, 255L));
  }
  return g;
}

template <typename T>
GrayImage to_real(const Plane<T>& in) {
  GrayImage out(in.width(), in.height());
  for (std::size_t i = 0; i < in.size(); ++i) out.data()[i] = static_cast<double>(in.data()[i]);
  return out;
}

/// CIELAB L* rescaled to [0,255] (the 8-bit convention), assuming sRGB input.
inline GrayImage lab_lightness(const Image8& frame) {
  std::array<double, 256> lin{};
  for (int v = 0; v < 256; ++v) {
    const double c = v / 255.0;
    lin[v] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  }
  constexpr double delta = 6.0 / 29.0;
  auto f = [&](double t) {
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
  };
  GrayImage out(frame.width, frame.height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double y;
    if (frame.channels == 3) {
      const auto* p = &frame.data[i * 3];
      y = 0.2126 * lin[p[0]] + 0.7152 * lin[p[1]] + 0.0722 * lin[p[2]];
    } else {
      y = lin[frame.data[i]];
    }
    const double l_star = 116.0 * f(y) - 16.0;
    out.data()[i] = std::clamp(l_star, 0.0, 100.0) * 255.0 / 100.0;
  }
  return out;
}

/// Axis-aligned pixel rectangle.
struct Tile {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;

  int area() const { return width * height; }
};

/// Row-major partition of an image into dim x dim tiles; edge tiles may be smaller.
struct TileGrid {
  int dim = 0;
  int rows = 0;
  int cols = 0;
  std::vector<Tile> tiles;

  std::size_t total() const { return tiles.size(); }

  /// Index of the tile containing integer pixel (x, y).
  std::size_t index_of(int x, int y) const {
    return static_cast<std::size_t>(y / dim) * cols + static_cast<std::size_t>(x / dim);
  }
};

inline TileGrid tile(int width, int height, int dim) {
  if (dim < 8) throw Error("tile dimension must be >= 8");
  if (width < 1 || height < 1) throw Error("cannot tile an empty image");
  TileGrid grid;
  grid.dim = dim;
  grid.rows = (height + dim - 1) / dim;
  grid.cols = (width + dim - 1) / dim;
  grid.tiles.reserve(static_cast<std::size_t>(grid.rows) * grid.cols);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const int x0 = c * dim;
      const int y0 = r * dim;
      grid.tiles.push_back({x0, y0, std::min(dim, width - x0), std::min(dim, height - y0)});
    }
  }
  return grid;
}

template <typename T>
TileGrid tile(const Plane<T>& image, int dim) {
  return tile(image.width(), image.height(), dim);
}

/// Population variance of the 4-connected Laplacian over the region's interior.
/// No padding: only pixels whose full 3x3 neighbourhood lies inside the region respond.
inline std::optional<double> laplacian_variance(const GrayImage& img, const Tile& roi) {
  if (roi.width < 3 || roi.height < 3) return std::nullopt;
  const std::size_t n = static_cast<std::size_t>(roi.width - 2) * (roi.height - 2);
  std::vector<double> resp;
  resp.reserve(n);
  for (int y = roi.y0 + 1; y < roi.y0 + roi.height - 1; ++y) {
    for (int x = roi.x0 + 1; x < roi.x0 + roi.width - 1; ++x) {
      resp.push_back(img(x - 1, y) + img(x + 1, y) + img(x, y - 1) + img(x, y + 1) - 4.0 * img(x, y));
    }
  }
  const double m = stats::mean(resp);
  double v = 0.0;
  for (double r : resp) v += (r - m) * (r - m);
  return v / static_cast<double>(resp.size());
}

inline std::optional<double> laplacian_variance(const GrayImage& img) {
  return laplacian_variance(img, Tile{0, 0, img.width(), img.height()});
}

struct TrimmedStats {
  double alpha = 0.0;
  std::size_t kept = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double skewness = 0.0;
};

/// Trimmed mean, standard deviation (divisor n-1) and skewness.
/// Drops floor(n*alpha) values from each end of the sorted sample; needs >= 2 survivors.
inline std::optional<TrimmedStats> trimmed_stats(std::span<const double> values, double alpha) {
  if (alpha < 0.0 || alpha >= 0.5) throw Error("trim fraction must lie in [0, 0.5)");
  const std::size_t n = values.size();
  const auto cut = static_cast<std::size_t>(std::floor(static_cast<double>(n) * alpha));
  if (n < 2 * cut + 2) return std::nullopt;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::span<const double> kept(sorted.data() + cut, n - 2 * cut);

  TrimmedStats out;
  out.alpha = alpha;
  out.kept = kept.size();
  out.mean = stats::mean(kept);
  double m2 = 0.0;
  double m3 = 0.0;
  for (double x : kept) {
    const double d = x - out.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double dof = static_cast<double>(kept.size() - 1);
  out.stddev = std::sqrt(m2 / dof);
  out.skewness = out.stddev > 0.0 ? m3 / (dof * out.stddev * out.stddev * out.stddev) : 0.0;
  return out;
}

inline std::optional<TrimmedStats> trimmed_stats(const GrayImage& img, double alpha) {
  return trimmed_stats(std::span<const double>(img.data()), alpha);
}

/// Separable Gaussian smoothing with clamp-to-edge borders; sigma <= 0 returns a copy.
inline GrayImage gaussian_blur(const GrayImage& in, double sigma) {
  if (sigma <= 0.0) return in;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double ksum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    ksum += k[i + radius];
  }
  for (double& w : k) w /= ksum;

  const int w = in.width();
  const int h = in.height();
  GrayImage tmp(w, h);
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * in(std::clamp(x + i, 0, w - 1), y);
      tmp(x, y) = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp(x, std::clamp(y + i, 0, h - 1));
      out(x, y) = acc;
    }
  }
  return out;
}

inline Gray8 quantize(const GrayImage& in) {
  Gray8 out(in.width(), in.height());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out.data()[i] = static_cast<std::uint8_t>(std::clamp(std::lround(in.data()[i]), 0L, 255L));
  }
  return out;
}

}  // namespace slamchar
