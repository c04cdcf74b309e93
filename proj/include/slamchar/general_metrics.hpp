#pragma once

// Non-sensory characterization: sample counts, durations, sampling periods
// and camera/IMU timestamp mismatch.

#include <optional>
#include <span>
#include <vector>

#include "slamchar/core.hpp"

namespace slamchar::general {

/// Sum of inter-sample intervals, i.e. last minus first timestamp.
inline std::optional<Seconds> total_duration(std::span<const Seconds> t) {
  if (t.size() < 2) return std::nullopt;
  return t.back() - t.front();
}

/// Mean inter-sample interval. Divides by the N-1 intervals, not the N samples,
/// so a perfect 10 Hz stream reports exactly 0.1 s.
inline std::optional<Seconds> mean_sample_time(std::span<const Seconds> t) {
  const auto total = total_duration(t);
  if (!total) return std::nullopt;
  return *total / static_cast<double>(t.size() - 1);
}

/// Signed offset from every camera timestamp to its nearest IMU timestamp.
inline std::optional<std::vector<Seconds>> timestamp_mismatch(std::span<const Seconds> cam,
                                                              std::span<const Seconds> imu) {
  if (cam.empty() || imu.empty()) return std::nullopt;
  std::vector<Seconds> out;
  out.reserve(cam.size());
  for (Seconds t : cam) out.push_back(nearest_timestamp(t, imu).offset);
  return out;
}

}  // namespace slamchar::general
