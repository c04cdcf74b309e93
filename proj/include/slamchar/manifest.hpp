#pragma once

// Unified dataset description and the adaptors that produce it from
// KITTI-odometry and ASL (EuroC, TUM-VI) directory layouts.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slamchar/core.hpp"

namespace slamchar {

namespace fs = std::filesystem;

inline constexpr int kManifestVersion = 1;
inline constexpr double kDegPerRad = 180.0 / 3.14159265358979323846;

/// Camera stream: one payload file per timestamp. Timestamps are nanoseconds
/// relative to the sequence epoch.
struct CameraStream {
  std::vector<Nanos> timestamps;
  std::vector<std::string> files;  // relative to the manifest root

  std::vector<Seconds> seconds() const {
    std::vector<Seconds> out;
    out.reserve(timestamps.size());
    for (Nanos t : timestamps) out.push_back(to_seconds(t));
    return out;
  }
  bool operator==(const CameraStream&) const = default;
};

/// IMU stream stored in an ASL-style CSV: t[ns], gyro xyz, accel xyz.
struct ImuStream {
  std::string csv;                  // relative to the manifest root
  std::string gyro_unit = "rad/s";  // "rad/s" or "deg/s"
  std::size_t count = 0;

  bool operator==(const ImuStream&) const = default;
};

struct SequenceEntry {
  std::string name;
  Nanos epoch = 0;  // absolute first timestamp of the earliest stream
  std::optional<CameraStream> cam_left;
  std::optional<CameraStream> cam_right;
  std::optional<ImuStream> imu;

  bool has(SensorKind kind) const {
    switch (kind) {
      case SensorKind::CamLeft: return cam_left.has_value();
      case SensorKind::CamRight: return cam_right.has_value();
      case SensorKind::Imu: return imu.has_value();
    }
    return false;
  }
  bool operator==(const SequenceEntry&) const = default;
};

struct DatasetManifest {
  std::string dataset_name;
  int format_version = kManifestVersion;
  std::string root;
  std::optional<SensorLimits> sensor_limits;
  std::vector<SequenceEntry> sequences;

  fs::path resolve(const std::string& rel) const { return fs::path(root) / rel; }

  const SequenceEntry& sequence(const std::string& name) const {
    for (const auto& s : sequences) {
      if (s.name == name) return s;
    }
    throw Error("no sequence named " + name);
  }
  bool operator==(const DatasetManifest& o) const {
    return dataset_name == o.dataset_name && format_version == o.format_version && root == o.root &&
           sequences == o.sequences && sensor_limits.has_value() == o.sensor_limits.has_value() &&
           (!sensor_limits || (sensor_limits->accel == o.sensor_limits->accel &&
                               sensor_limits->gyro == o.sensor_limits->gyro));
  }
};

/// Built-in rail limits per dataset. EuroC: ADIS16448 (+-18 g, +-1000 deg/s);
/// TUM-VI: BMI160 at its widest ranges (+-16 g, +-2000 deg/s).
inline std::optional<SensorLimits> default_sensor_limits(const std::string& dataset) {
  constexpr double g = 9.80665;
  if (dataset == "euroc") return SensorLimits{18.0 * g, 1000.0};
  if (dataset == "tumvi") return SensorLimits{16.0 * g, 2000.0};
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Timestamp text form: decimal seconds with exactly 9 fractional digits.
// ---------------------------------------------------------------------------

inline std::string format_nanos(Nanos ns) {
  const bool neg = ns < 0;
  const auto mag = static_cast<unsigned long long>(neg ? -ns : ns);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%s%llu.%09llu", neg ? "-" : "", mag / 1000000000ULL, mag % 1000000000ULL);
  return buf;
}

inline Nanos parse_nanos(const std::string& s) {
  std::string_view v(s);
  bool neg = false;
  if (!v.empty() && v.front() == '-') {
    neg = true;
    v.remove_prefix(1);
  }
  const auto dot = v.find('.');
  const std::string_view whole = v.substr(0, dot);
  std::string frac = dot == std::string_view::npos ? std::string() : std::string(v.substr(dot + 1));
  if (frac.size() > 9) throw Error("timestamp has more than 9 fractional digits: " + s);
  frac.resize(9, '0');
  long long w = 0, f = 0;
  auto r1 = std::from_chars(whole.data(), whole.data() + whole.size(), w);
  auto r2 = std::from_chars(frac.data(), frac.data() + frac.size(), f);
  if (r1.ec != std::errc{} || r1.ptr != whole.data() + whole.size() || r2.ec != std::errc{} ||
      r2.ptr != frac.data() + frac.size()) {
    throw Error("malformed timestamp: " + s);
  }
  const Nanos ns = w * 1000000000LL + f;
  return neg ? -ns : ns;
}

// ---------------------------------------------------------------------------
// JSON schema v1
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const CameraStream& c) {
  nlohmann::json ts = nlohmann::json::array();
  for (Nanos t : c.timestamps) ts.push_back(format_nanos(t));
  return {{"timestamps", ts}, {"files", c.files}};
}

inline CameraStream camera_from_json(const nlohmann::json& j) {
  CameraStream c;
  for (const auto& t : j.at("timestamps")) c.timestamps.push_back(parse_nanos(t.get<std::string>()));
  c.files = j.at("files").get<std::vector<std::string>>();
  return c;
}

inline nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json seqs = nlohmann::json::array();
  for (const auto& s : m.sequences) {
    nlohmann::json streams = nlohmann::json::object();
    if (s.cam_left) streams["cam_left"] = to_json(*s.cam_left);
    if (s.cam_right) streams["cam_right"] = to_json(*s.cam_right);
    if (s.imu) streams["imu"] = {{"csv", s.imu->csv}, {"gyro_unit", s.imu->gyro_unit}, {"count", s.imu->count}};
    seqs.push_back({{"name", s.name}, {"epoch", format_nanos(s.epoch)}, {"streams", streams}});
  }
  nlohmann::json j = {
      {"dataset_name", m.dataset_name},
      {"format_version", m.format_version},
      {"root", m.root},
      {"sequences", seqs},
  };
  if (m.sensor_limits) j["sensor_limits"] = {{"accel", m.sensor_limits->accel}, {"gyro", m.sensor_limits->gyro}};
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.format_version = j.at("format_version").get<int>();
  if (m.format_version != kManifestVersion) {
    throw Error("unsupported manifest format_version " + std::to_string(m.format_version));
  }
  m.dataset_name = j.at("dataset_name").get<std::string>();
  m.root = j.value("root", std::string("."));
  if (j.contains("sensor_limits") && !j["sensor_limits"].is_null()) {
    m.sensor_limits = SensorLimits{j["sensor_limits"].at("accel").get<double>(),
                                   j["sensor_limits"].at("gyro").get<double>()};
  }
  for (const auto& js : j.at("sequences")) {
    SequenceEntry s;
    s.name = js.at("name").get<std::string>();
    s.epoch = parse_nanos(js.value("epoch", std::string("0")));
    const auto& st = js.at("streams");
    if (st.contains("cam_left")) s.cam_left = camera_from_json(st["cam_left"]);
    if (st.contains("cam_right")) s.cam_right = camera_from_json(st["cam_right"]);
    if (st.contains("imu")) {
      const auto& ji = st["imu"];
      s.imu = ImuStream{ji.at("csv").get<std::string>(), ji.value("gyro_unit", std::string("rad/s")),
                        ji.value("count", std::size_t{0})};
    }
    m.sequences.push_back(std::move(s));
  }
  return m;
}

inline void save_manifest(const DatasetManifest& m, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << to_json(m).dump(2) << '\n';
  if (!out) throw Error("cannot write manifest " + path.string());
}

inline DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read manifest " + path.string());
  try {
    return manifest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid manifest " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// IMU CSV
// ---------------------------------------------------------------------------

struct ImuRow {
  Nanos t = 0;
  Vec3 gyro;
  Vec3 accel;
};

/// Parses an ASL IMU CSV (t[ns], w_x, w_y, w_z, a_x, a_y, a_z); '#' lines are comments.
inline std::vector<ImuRow> read_imu_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read IMU file " + path.string());
  std::vector<ImuRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() != 7) {
      throw ValidationError("malformed row at " + path.string() + ":" + std::to_string(lineno) + " (expected 7 columns, got " +
                            std::to_string(cols.size()) + ")");
    }
    ImuRow r;
    double v[6];
    try {
      r.t = std::stoll(cols[0]);
      for (int i = 0; i < 6; ++i) v[i] = std::stod(cols[i + 1]);
    } catch (const std::exception&) {
      throw ValidationError("malformed row at " + path.string() + ":" + std::to_string(lineno));
    }
    r.gyro = {v[0], v[1], v[2]};
    r.accel = {v[3], v[4], v[5]};
    rows.push_back(r);
  }
  return rows;
}

/// IMU samples for a sequence in canonical units (m/s^2, deg/s), seconds from the epoch.
inline std::vector<ImuSample> load_imu(const DatasetManifest& m, const SequenceEntry& seq) {
  if (!seq.imu) return {};
  const auto rows = read_imu_csv(m.resolve(seq.imu->csv));
  const double gyro_scale = seq.imu->gyro_unit == "rad/s" ? kDegPerRad : 1.0;
  if (seq.imu->gyro_unit != "rad/s" && seq.imu->gyro_unit != "deg/s") {
    throw Error("unknown gyro unit " + seq.imu->gyro_unit);
  }
  std::vector<ImuSample> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    out.push_back({to_seconds(r.t - seq.epoch), r.accel,
                   Vec3{r.gyro.x * gyro_scale, r.gyro.y * gyro_scale, r.gyro.z * gyro_scale}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adaptors
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> sorted_images(const fs::path& dir) {
  std::vector<std::string> names;
  if (!fs::is_directory(dir)) return names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

inline std::string rel(const fs::path& p, const fs::path& root) { return p.lexically_relative(root).generic_string(); }

inline fs::path canonical_root(const fs::path& root) {
  if (!fs::exists(root)) throw Error("dataset root does not exist: " + root.string());
  return fs::weakly_canonical(fs::absolute(root));
}

/// ASL camera CSV: t[ns],filename
inline std::vector<std::pair<Nanos, std::string>> read_cam_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<std::pair<Nanos, std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ValidationError("malformed row at " + path.string() + ":" + std::to_string(lineno));
    }
    Nanos t = 0;
    const std::string ts = line.substr(0, comma);
    auto [p, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), t);
    std::string file = line.substr(comma + 1);
    file.erase(0, file.find_first_not_of(' '));
    if (ec != std::errc{} || p != ts.data() + ts.size() || file.empty()) {
      throw ValidationError("malformed row at " + path.string() + ":" + std::to_string(lineno));
    }
    rows.emplace_back(t, file);
  }
  return rows;
}

}  // namespace detail

/// KITTI odometry: root/sequences/<NN>/{times.txt, image_0/, image_1/}.
inline DatasetManifest adapt_kitti(const fs::path& root_in) {
  const fs::path root = detail::canonical_root(root_in);
  const fs::path seq_dir = root / "sequences";
  if (!fs::is_directory(seq_dir)) throw Error("missing directory " + seq_dir.string());
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(seq_dir)) {
    if (e.is_directory()) names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());

  DatasetManifest m;
  m.dataset_name = "kitti";
  m.root = root.generic_string();
  for (const auto& name : names) {
    const fs::path dir = seq_dir / name;
    const fs::path times = dir / "times.txt";
    std::ifstream in(times);
    if (!in) throw Error("sequence " + name + ": missing times.txt");
    std::vector<Nanos> abs_ns;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        abs_ns.push_back(to_nanos(std::stod(line)));
      } catch (const std::exception&) {
        throw ValidationError("sequence " + name + ": malformed row at times.txt:" + std::to_string(lineno));
      }
    }
    if (abs_ns.empty()) throw ValidationError("sequence " + name + ": empty times.txt");

    SequenceEntry s;
    s.name = name;
    s.epoch = abs_ns.front();
    std::vector<Nanos> rel_ns;
    for (Nanos t : abs_ns) rel_ns.push_back(t - s.epoch);

    const std::pair<const char*, std::optional<CameraStream>*> cams[] = {{"image_0", &s.cam_left},
                                                                          {"image_1", &s.cam_right}};
    for (const auto& [sub, slot] : cams) {
      const fs::path cam_dir = dir / sub;
      if (!fs::is_directory(cam_dir)) continue;
      const auto images = detail::sorted_images(cam_dir);
      if (images.size() != rel_ns.size()) {
        throw ValidationError("sequence " + name + ": count mismatch in " + sub + " (" + std::to_string(images.size()) +
                              " images, " + std::to_string(rel_ns.size()) + " timestamps)");
      }
      CameraStream c;
      c.timestamps = rel_ns;
      for (const auto& f : images) c.files.push_back(detail::rel(cam_dir / f, root));
      *slot = std::move(c);
    }
    if (!s.cam_left) throw Error("sequence " + name + ": missing image_0");
    m.sequences.push_back(std::move(s));
  }
  if (m.sequences.empty()) throw Error("no sequences under " + seq_dir.string());
  return m;
}

/// ASL layout (EuroC, TUM-VI): <seq>/mav0/{cam0,cam1}/data.csv + data/, imu0/data.csv.
/// A root that itself contains mav0 is treated as a single sequence.
inline DatasetManifest adapt_asl(const fs::path& root_in, const std::string& dataset_name) {
  const fs::path root = detail::canonical_root(root_in);
  std::vector<fs::path> seq_dirs;
  if (fs::is_directory(root / "mav0")) {
    seq_dirs.push_back(root);
  } else {
    for (const auto& e : fs::directory_iterator(root)) {
      if (e.is_directory() && fs::is_directory(e.path() / "mav0")) seq_dirs.push_back(e.path());
    }
    std::sort(seq_dirs.begin(), seq_dirs.end());
  }
  if (seq_dirs.empty()) throw Error("no ASL sequences (mav0/) under " + root.string());

  DatasetManifest m;
  m.dataset_name = dataset_name;
  m.root = root.generic_string();
  m.sensor_limits = default_sensor_limits(dataset_name);

  for (const auto& dir : seq_dirs) {
    const std::string name = dir.filename().string();
    const fs::path mav = dir / "mav0";
    if (!fs::exists(mav / "cam0" / "data.csv")) throw Error("sequence " + name + ": missing cam0");

    struct RawCam {
      std::vector<Nanos> t;
      std::vector<std::string> files;
    };
    auto read_cam = [&](const char* cam) -> std::optional<RawCam> {
      const fs::path cdir = mav / cam;
      if (!fs::exists(cdir / "data.csv")) return std::nullopt;
      RawCam rc;
      for (auto& [t, f] : detail::read_cam_csv(cdir / "data.csv")) {
        rc.t.push_back(t);
        rc.files.push_back(detail::rel(cdir / "data" / f, root));
      }
      const auto on_disk = detail::sorted_images(cdir / "data");
      if (on_disk.size() != rc.t.size()) {
        throw ValidationError("sequence " + name + ": count mismatch in " + cam + " (" + std::to_string(on_disk.size()) +
                              " images, " + std::to_string(rc.t.size()) + " timestamps)");
      }
      return rc;
    };
    const auto left = read_cam("cam0");
    const auto right = read_cam("cam1");

    std::optional<ImuStream> imu;
    Nanos imu_first = 0;
    const fs::path imu_csv = mav / "imu0" / "data.csv";
    if (fs::exists(imu_csv)) {
      const auto rows = read_imu_csv(imu_csv);
      imu = ImuStream{detail::rel(imu_csv, root), "rad/s", rows.size()};
      if (!rows.empty()) imu_first = rows.front().t;
    }

    SequenceEntry s;
    s.name = name;
    bool have_epoch = false;
    auto consider = [&](Nanos t) {
      if (!have_epoch || t < s.epoch) s.epoch = t;
      have_epoch = true;
    };
    if (!left->t.empty()) consider(left->t.front());
    if (right && !right->t.empty()) consider(right->t.front());
    if (imu && imu->count > 0) consider(imu_first);

    auto finish = [&](const RawCam& rc) {
      CameraStream c;
      for (Nanos t : rc.t) c.timestamps.push_back(t - s.epoch);
      c.files = rc.files;
      return c;
    };
    s.cam_left = finish(*left);
    if (right) s.cam_right = finish(*right);
    s.imu = imu;
    m.sequences.push_back(std::move(s));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Finding {
  std::string kind;  // "missing file", "non-monotonic", "duplicate timestamp", "count mismatch", ...
  std::string sequence;
  std::string detail;

  std::string str() const { return sequence + ": " + kind + ": " + detail; }
};

inline std::vector<Finding> validate_manifest(const DatasetManifest& m) {
  std::vector<Finding> out;
  std::map<std::string, int> seen;
  for (const auto& s : m.sequences) {
    if (++seen[s.name] == 2) out.push_back({"duplicate sequence", s.name, "sequence name used twice"});
    if (!s.cam_left) out.push_back({"missing stream", s.name, "no cam_left stream"});

    auto check_times = [&](const std::vector<Nanos>& t, std::string_view stream) {
      for (std::size_t i = 1; i < t.size(); ++i) {
        if (t[i] < t[i - 1]) {
          out.push_back({"non-monotonic", s.name, std::string(stream) + " timestamp " + std::to_string(i)});
        } else if (t[i] == t[i - 1]) {
          out.push_back({"duplicate timestamp", s.name, std::string(stream) + " timestamp " + std::to_string(i)});
        }
      }
    };
    auto check_cam = [&](const std::optional<CameraStream>& c, std::string_view stream) {
      if (!c) return;
      if (c->files.size() != c->timestamps.size()) {
        out.push_back({"count mismatch", s.name,
                       std::string(stream) + ": " + std::to_string(c->files.size()) + " files, " +
                           std::to_string(c->timestamps.size()) + " timestamps"});
      }
      check_times(c->timestamps, stream);
      for (const auto& f : c->files) {
        if (!fs::exists(m.resolve(f))) out.push_back({"missing file", s.name, m.resolve(f).string()});
      }
    };
    check_cam(s.cam_left, "cam_left");
    check_cam(s.cam_right, "cam_right");

    if (s.imu) {
      const fs::path csv = m.resolve(s.imu->csv);
      if (!fs::exists(csv)) {
        out.push_back({"missing file", s.name, csv.string()});
      } else {
        try {
          const auto rows = read_imu_csv(csv);
          if (rows.size() != s.imu->count) {
            out.push_back({"count mismatch", s.name,
                           "imu: " + std::to_string(rows.size()) + " rows, manifest says " + std::to_string(s.imu->count)});
          }
          std::vector<Nanos> t;
          t.reserve(rows.size());
          for (const auto& r : rows) t.push_back(r.t);
          check_times(t, "imu");
        } catch (const Error& e) {
          out.push_back({"malformed row", s.name, e.what()});
        }
      }
    }
  }
  return out;
}

}  // namespace slamchar
