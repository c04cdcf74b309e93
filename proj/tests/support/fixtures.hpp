#pragma once

// Deterministic synthetic datasets and images for tests.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "slamchar/core.hpp"
#include "slamchar/image.hpp"
#include "slamchar/image_ops.hpp"

namespace slamchar::testing {

namespace fs = std::filesystem;

inline Gray8 noise_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  Gray8 g(w, h);
  for (auto& p : g.data()) p = static_cast<std::uint8_t>(u(rng));
  return g;
}

inline Image8 noise_rgb(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  Image8 img{w, h, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)};
  for (auto& p : img.data) p = static_cast<std::uint8_t>(u(rng));
  return img;
}

/// Rectified pair with right(x) = left(x + shift): every left pixel x >= shift
/// has its match at x - shift.
struct StereoPair {
  Gray8 left;
  Gray8 right;
};

inline StereoPair shifted_pair(const Gray8& field, int width, int shift) {
  StereoPair p{Gray8(width, field.height()), Gray8(width, field.height())};
  for (int y = 0; y < field.height(); ++y) {
    for (int x = 0; x < width; ++x) {
      p.left(x, y) = field(x, y);
      p.right(x, y) = field(x + shift, y);
    }
  }
  return p;
}

struct FixtureSpec {
  int frames = 30;
  int imu_samples = 300;
  int width = 192;
  int height = 128;
  int shift = 8;
  Nanos frame_period = 50'000'000;
  Nanos imu_period = 5'000'000;
  bool right = true;
  bool imu = true;
  bool rgb = false;
};

/// Frame i of a sequence: a blurred noise field panned over time with a slow
/// brightness swing. The right view is the same field offset by `shift`.
struct SceneGenerator {
  FixtureSpec spec;
  GrayImage field;

  SceneGenerator(const FixtureSpec& s, std::uint64_t seed) : spec(s) {
    const int fw = s.width + s.shift + 2 * s.frames + 8;
    field = gaussian_blur(to_real(noise_image(fw, s.height, seed)), 0.8);
    // stretch the contrast the blur removed
    const double m = stats::mean(field.data());
    for (auto& v : field.data()) v = std::clamp(m + 3.0 * (v - m), 0.0, 255.0);
  }

  Gray8 view(int frame, bool right) const {
    const int pan = 2 * frame;
    const double gain = 0.75 + 0.25 * std::sin(0.4 * frame);
    Gray8 g(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const double v = field(x + pan + (right ? spec.shift : 0), y) * gain;
        g(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
    return g;
  }

  Image8 image(int frame, bool right) const {
    const Gray8 g = view(frame, right);
    if (!spec.rgb) return Image8::from_gray(g);
    Image8 img{g.width(), g.height(), 3, std::vector<std::uint8_t>(g.size() * 3)};
    for (std::size_t i = 0; i < g.size(); ++i) {
      img.data[3 * i] = g.data()[i];
      img.data[3 * i + 1] = static_cast<std::uint8_t>(255 - g.data()[i] / 2);
      img.data[3 * i + 2] = static_cast<std::uint8_t>(g.data()[i] / 3);
    }
    return img;
  }
};

struct ImuGenerator {
  double phase = 0.0;

  /// gyro in rad/s, accel in m/s^2
  void sample(double t, double out[6]) const {
    out[0] = 0.3 * std::sin(2.0 * t + phase);
    out[1] = 0.2 * std::cos(3.0 * t + phase);
    out[2] = 0.1 * std::sin(5.0 * t);
    out[3] = 0.8 * std::sin(4.0 * t + phase);
    out[4] = 0.5 * std::cos(2.5 * t);
    out[5] = 9.80665 + 1.5 * std::sin(6.0 * t + phase);
  }
};

inline void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// <dir>/mav0/{cam0,cam1,imu0} in the ASL layout.
inline void write_asl_sequence(const fs::path& dir, const FixtureSpec& spec, std::uint64_t seed,
                               Nanos start = 1'403'636'579'763'555'584LL) {
  const SceneGenerator scene(spec, seed);
  const fs::path mav = dir / "mav0";
  for (int cam = 0; cam < (spec.right ? 2 : 1); ++cam) {
    const fs::path cdir = mav / ("cam" + std::to_string(cam));
    fs::create_directories(cdir / "data");
    std::string csv = "#timestamp [ns],filename\n";
    for (int i = 0; i < spec.frames; ++i) {
      const std::string t = std::to_string(start + i * spec.frame_period);
      csv += t + "," + t + ".png\n";
      write_png(cdir / "data" / (t + ".png"), scene.image(i, cam == 1));
    }
    write_text(cdir / "data.csv", csv);
  }
  if (spec.imu) {
    const ImuGenerator gen{static_cast<double>(seed % 7)};
    std::string csv =
        "#timestamp [ns],w_RS_S_x [rad s^-1],w_RS_S_y [rad s^-1],w_RS_S_z [rad s^-1],"
        "a_RS_S_x [m s^-2],a_RS_S_y [m s^-2],a_RS_S_z [m s^-2]\n";
    for (int i = 0; i < spec.imu_samples; ++i) {
      const Nanos t = start + i * spec.imu_period;
      double v[6];
      gen.sample(to_seconds(t - start), v);
      csv += std::to_string(t);
      for (double x : v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), ",%.17g", x);
        csv += buf;
      }
      csv += '\n';
    }
    write_text(mav / "imu0" / "data.csv", csv);
  }
}

inline void write_asl_dataset(const fs::path& root, const std::vector<std::string>& names, const FixtureSpec& spec,
                              std::uint64_t seed = 1) {
  for (std::size_t i = 0; i < names.size(); ++i) write_asl_sequence(root / names[i], spec, seed + i);
}

/// root/sequences/<name>/{times.txt, image_0/, image_1/} in the KITTI odometry layout.
inline void write_kitti_dataset(const fs::path& root, const std::vector<std::string>& names, const FixtureSpec& spec,
                                std::uint64_t seed = 1) {
  for (std::size_t s = 0; s < names.size(); ++s) {
    const SceneGenerator scene(spec, seed + s);
    const fs::path dir = root / "sequences" / names[s];
    fs::create_directories(dir / "image_0");
    if (spec.right) fs::create_directories(dir / "image_1");
    std::string times;
    for (int i = 0; i < spec.frames; ++i) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%e\n", to_seconds(i * spec.frame_period));
      times += buf;
      char name[16];
      std::snprintf(name, sizeof(name), "%06d.png", i);
      write_png(dir / "image_0" / name, scene.image(i, false));
      if (spec.right) write_png(dir / "image_1" / name, scene.image(i, true));
    }
    write_text(dir / "times.txt", times);
  }
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh empty directory under the system temp dir.
inline fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("slamchar_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace slamchar::testing
