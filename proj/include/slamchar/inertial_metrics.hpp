#pragma once

// Motion-profile characterization of IMU streams.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "slamchar/core.hpp"

namespace slamchar::inertial {

inline constexpr double kStandardGravity = 9.80665;  // m/s^2

/// Per-axis derivative series. Index 0..2 = x, y, z.
struct AxisSeries {
  std::array<std::vector<double>, 3> axis;
  std::vector<Seconds> t;

  std::size_t size() const { return t.size(); }
};

struct InertialDerivatives {
  std::optional<AxisSeries> jerk;         // m/s^3, N-1 samples
  std::optional<AxisSeries> snap;         // m/s^4, N-2 samples
  std::optional<AxisSeries> angular_acc;  // deg/s^2, N-1 samples
  std::optional<AxisSeries> angular_jerk; // deg/s^3, N-2 samples
};

namespace detail {

inline AxisSeries differentiate(const std::array<std::vector<double>, 3>& channels, std::span<const Seconds> t) {
  AxisSeries out;
  for (std::size_t a = 0; a < 3; ++a) {
    auto d = finite_difference(channels[a], t);
    out.axis[a] = std::move(d.values);
    if (a == 0) out.t = std::move(d.timestamps);
  }
  return out;
}

}  // namespace detail

inline InertialDerivatives derivatives(std::span<const ImuSample> imu) {
  InertialDerivatives out;
  if (imu.size() < 2) return out;
  std::array<std::vector<double>, 3> acc;
  std::array<std::vector<double>, 3> gyr;
  std::vector<Seconds> t;
  t.reserve(imu.size());
  for (const auto& s : imu) {
    t.push_back(s.t);
    for (std::size_t a = 0; a < 3; ++a) {
      acc[a].push_back(s.accel[a]);
      gyr[a].push_back(s.gyro[a]);
    }
  }
  out.jerk = detail::differentiate(acc, t);
  out.angular_acc = detail::differentiate(gyr, t);
  if (imu.size() >= 3) {
    out.snap = detail::differentiate(out.jerk->axis, out.jerk->t);
    out.angular_jerk = detail::differentiate(out.angular_acc->axis, out.angular_acc->t);
  }
  return out;
}

/// Percentage of the dynamic range (2 * limit) spanned by the series.
inline double dr_coverage(std::span<const double> series, double limit) {
  if (series.empty()) throw Error("empty series");
  if (!(limit > 0.0)) throw Error("sensor limit must be positive");
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  return 100.0 * (*hi - *lo) / (2.0 * limit);
}

/// Percentage of samples within ratio * limit of either rail.
inline double dr_crossing(std::span<const double> series, double limit, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error("crossing ratio must lie in (0, 1)");
  if (!(limit > 0.0)) throw Error("sensor limit must be positive");
  if (series.empty()) return 0.0;
  const double edge = (1.0 - ratio) * limit;
  std::size_t hits = 0;
  for (double x : series) hits += std::abs(x) >= edge ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(series.size());
}

struct RotationOnlyReport {
  std::vector<double> magnitude;      // m/s^2
  std::vector<std::uint8_t> flags;    // 1 when the magnitude lies in the gravity band
  double percentage = 0.0;
  double gravity = kStandardGravity;
  double band = 0.10;
};

/// Flags samples whose specific-force magnitude stays within band * g of gravity,
/// i.e. no linear acceleration beyond noise and Coriolis terms.
inline RotationOnlyReport rotation_only(std::span<const ImuSample> imu, double gravity = kStandardGravity,
                                        double band = 0.10) {
  if (imu.empty()) throw Error("empty IMU series");
  RotationOnlyReport r;
  r.gravity = gravity;
  r.band = band;
  r.magnitude.reserve(imu.size());
  r.flags.reserve(imu.size());
  std::size_t hits = 0;
  for (const auto& s : imu) {
    const double m = s.accel.norm();
    const bool still = std::abs(m - gravity) <= band * gravity;
    r.magnitude.push_back(m);
    r.flags.push_back(still ? 1 : 0);
    hits += still ? 1 : 0;
  }
  r.percentage = 100.0 * static_cast<double>(hits) / static_cast<double>(imu.size());
  return r;
}

}  // namespace slamchar::inertial
