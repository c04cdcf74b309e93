#pragma once

// Shared vocabulary for every characterization engine: sensor samples,
// metric records, timestamp arithmetic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace slamchar {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// Base error for every failure surfaced by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data fails a structural check (count mismatch, malformed row...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Seconds since the sequence epoch.
using Seconds = double;

/// Integer nanoseconds; the lossless on-disk timestamp representation.
using Nanos = std::int64_t;

inline Seconds to_seconds(Nanos ns) { return static_cast<double>(ns) * 1e-9; }
inline Nanos to_nanos(Seconds s) { return static_cast<Nanos>(std::llround(s * 1e9)); }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](std::size_t axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

/// Body-frame IMU sample. Accelerometer in m/s^2, gyroscope in deg/s.
struct ImuSample {
  Seconds t = 0.0;
  Vec3 accel;
  Vec3 gyro;
};

enum class SensorKind { CamLeft, CamRight, Imu };

inline std::string_view to_string(SensorKind kind) {
  switch (kind) {
    case SensorKind::CamLeft: return "cam_left";
    case SensorKind::CamRight: return "cam_right";
    case SensorKind::Imu: return "imu";
  }
  return "?";
}

/// Per-axis rail limits; the dynamic range of an axis is twice its limit.
struct SensorLimits {
  double accel = 0.0;  // m/s^2
  double gyro = 0.0;   // deg/s

  double accel_range() const { return 2.0 * accel; }
  double gyro_range() const { return 2.0 * gyro; }
  bool valid() const { return accel > 0.0 && gyro > 0.0; }
};

enum class Level { Sample, Sequence, Dataset };

inline std::string_view to_string(Level level) {
  switch (level) {
    case Level::Sample: return "SAMPLE";
    case Level::Sequence: return "SEQUENCE";
    case Level::Dataset: return "DATASET";
  }
  return "?";
}

inline std::optional<Level> parse_level(std::string_view s) {
  if (s == "SAMPLE") return Level::Sample;
  if (s == "SEQUENCE") return Level::Sequence;
  if (s == "DATASET") return Level::Dataset;
  return std::nullopt;
}

enum class Applicability { Present, Absent };

struct MetricValue {
  std::string key;  // sample index, or an aggregate key such as "value"
  double value = 0.0;

  bool operator==(const MetricValue&) const = default;
};

/// One metric emitted by a processing element for one sequence.
struct MetricRecord {
  std::string metric_id;
  Level level = Level::Sequence;
  std::string unit;
  std::vector<MetricValue> values;
  Applicability applicability = Applicability::Present;

  bool present() const { return applicability == Applicability::Present; }

  std::vector<double> numbers() const {
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& v : values) out.push_back(v.value);
    return out;
  }

  bool operator==(const MetricRecord&) const = default;
};

inline MetricRecord absent_record(std::string id, Level level, std::string unit) {
  return MetricRecord{std::move(id), level, std::move(unit), {}, Applicability::Absent};
}

inline MetricRecord scalar_record(std::string id, std::string unit, double value) {
  return MetricRecord{std::move(id), Level::Sequence, std::move(unit), {{"value", value}},
                      Applicability::Present};
}

/// Sequence-level record from an optional value (nullopt becomes ABSENT).
inline MetricRecord scalar_record(std::string id, std::string unit, std::optional<double> value) {
  if (!value || !std::isfinite(*value)) return absent_record(std::move(id), Level::Sequence, std::move(unit));
  return scalar_record(std::move(id), std::move(unit), *value);
}

/// Sample-level record; non-finite entries are dropped so values stay finite.
inline MetricRecord series_record(std::string id, std::string unit, std::span<const double> series,
                                  std::size_t first_index = 0) {
  MetricRecord rec{std::move(id), Level::Sample, std::move(unit), {}, Applicability::Present};
  rec.values.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (std::isfinite(series[i])) rec.values.push_back({std::to_string(first_index + i), series[i]});
  }
  if (rec.values.empty()) rec.applicability = Applicability::Absent;
  return rec;
}

struct NearestMatch {
  std::size_t index = 0;
  Seconds offset = 0.0;  // t_stream - query
};

// Distances closer than this count as ties; timestamps carry nanosecond resolution.
inline constexpr Seconds kTieTolerance = 1e-12;

/// Nearest sample in a sorted timestamp list; equidistant ties go to the earlier sample.
inline NearestMatch nearest_timestamp(Seconds query, std::span<const Seconds> stream) {
  if (stream.empty()) throw Error("empty stream");
  auto it = std::lower_bound(stream.begin(), stream.end(), query);
  std::size_t hi = static_cast<std::size_t>(it - stream.begin());
  if (hi == 0) return {0, stream[0] - query};
  if (hi == stream.size()) return {hi - 1, stream[hi - 1] - query};
  const double d_lo = query - stream[hi - 1];
  const double d_hi = stream[hi] - query;
  if (d_hi < d_lo - kTieTolerance) return {hi, d_hi};
  return {hi - 1, -d_lo};
}

struct Derivative {
  std::vector<double> values;
  std::vector<Seconds> timestamps;  // interval midpoints
};

/// Forward difference at the exact sample spacing, attributed to interval midpoints.
inline Derivative finite_difference(std::span<const double> values, std::span<const Seconds> timestamps) {
  if (values.size() != timestamps.size()) throw Error("value/timestamp length mismatch");
  if (values.size() < 2) throw Error("too short");
  Derivative out;
  out.values.reserve(values.size() - 1);
  out.timestamps.reserve(values.size() - 1);
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double dt = timestamps[i + 1] - timestamps[i];
    if (!(dt > 0.0)) throw Error("zero dt");
    out.values.push_back((values[i + 1] - values[i]) / dt);
    out.timestamps.push_back(0.5 * (timestamps[i] + timestamps[i + 1]));
  }
  return out;
}

namespace stats {

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Population (ddof = 0) or sample (ddof = 1) standard deviation.
inline double stddev(std::span<const double> v, int ddof = 0) {
  if (v.size() <= static_cast<std::size_t>(ddof)) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - static_cast<std::size_t>(ddof)));
}

}  // namespace stats

}  // namespace slamchar
