#pragma once

// Run configuration: every tunable key with its default, INI-style loading
// ([section] key=value), command-line overrides and a canonical dump.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <type_traits>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "slamchar/core.hpp"
#include "slamchar/features.hpp"
#include "slamchar/stereo.hpp"

namespace slamchar {

struct RunConfig {
  // inertial
  double gravity = 9.80665;
  double rotation_band = 0.10;
  double crossing_ratio = 0.01;
  // image
  double trim_alpha = 0.01;
  int blur_tile = 64;
  int feature_bin = 50;
  // visual
  double blur_threshold = 100.0;
  int exposure_zones = 7;
  bool contrast_luma = false;  // use luma instead of LAB lightness for contrast
  // features
  int fast_threshold = 10;
  int fast_arc = 9;
  bool fast_nonmax = true;
  long long max_keypoints = -1;  // -1 = unlimited
  double harris_k = 0.04;
  // stereo
  stereo::StereoConfig stereo;
  // similarity
  int vocab_k = 10;
  int vocab_depth = 3;
  std::uint64_t seed = 20220101;
  int min_gap = 1;
  std::string vocab_path;
  int similarity_features = 500;
  int vocab_frames = 10;  // frames sampled per sequence to train the vocabulary
  // analysis
  int precision = 6;
  int coverage_bins = 100;
  int coverage_min_count = 1;
  int coverage_exact_limit = 20;

  features::DetectorConfig detector() const {
    features::DetectorConfig d;
    d.threshold = fast_threshold;
    d.arc = fast_arc;
    d.nonmax = fast_nonmax;
    if (max_keypoints >= 0) d.max_keypoints = static_cast<std::size_t>(max_keypoints);
    d.harris_k = harris_k;
    return d;
  }

  void validate() const {
    if (!(gravity > 0)) throw Error("inertial.gravity must be positive");
    if (!(rotation_band > 0 && rotation_band < 1)) throw Error("inertial.rotation_band must lie in (0, 1)");
    if (!(crossing_ratio > 0 && crossing_ratio < 1)) throw Error("inertial.crossing_ratio must lie in (0, 1)");
    if (!(trim_alpha >= 0 && trim_alpha < 0.5)) throw Error("image.trim_alpha must lie in [0, 0.5)");
    if (blur_tile < 8) throw Error("image.blur_tile must be >= 8");
    if (feature_bin < 8) throw Error("image.feature_bin must be >= 8");
    if (exposure_zones < 4) throw Error("visual.exposure_zones must be >= 4");
    detector().validate();
    stereo.validate();
    if (vocab_k < 1 || vocab_depth < 1) throw Error("similarity.k and similarity.depth must be >= 1");
    if (min_gap < 1) throw Error("similarity.min_gap must be >= 1");
    if (similarity_features < 1) throw Error("similarity.max_features must be >= 1");
    if (vocab_frames < 1) throw Error("similarity.vocab_frames must be >= 1");
    if (precision < 0 || precision > 15) throw Error("analysis.precision must lie in [0, 15]");
    if (coverage_bins < 1 || coverage_min_count < 1) throw Error("coverage.bins and coverage.min_count must be >= 1");
  }
};

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size()) throw Error("bad value for " + key + ": '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "off" || text == "no") return false;
  throw Error("bad value for " + key + ": '" + text + "'");
}

inline std::string show(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

struct KeyBinding {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
KeyBinding bind_key(T RunConfig::*field) {
  return {[field](RunConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, bool>) {
              c.*field = parse_bool("", v);
            } else if constexpr (std::is_same_v<T, std::string>) {
              c.*field = v;
            } else {
              c.*field = parse_number<T>("", v);
            }
          },
          [field](const RunConfig& c) {
            if constexpr (std::is_same_v<T, bool>) {
              return std::string(c.*field ? "true" : "false");
            } else if constexpr (std::is_same_v<T, std::string>) {
              return c.*field;
            } else if constexpr (std::is_floating_point_v<T>) {
              return show(c.*field);
            } else {
              return std::to_string(c.*field);
            }
          }};
}

template <typename T>
KeyBinding bind_stereo(T stereo::StereoConfig::*field) {
  return {[field](RunConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, bool>) {
              c.stereo.*field = parse_bool("", v);
            } else {
              c.stereo.*field = parse_number<T>("", v);
            }
          },
          [field](const RunConfig& c) {
            if constexpr (std::is_same_v<T, bool>) {
              return std::string(c.stereo.*field ? "true" : "false");
            } else if constexpr (std::is_floating_point_v<T>) {
              return show(c.stereo.*field);
            } else {
              return std::to_string(c.stereo.*field);
            }
          }};
}

inline const std::map<std::string, KeyBinding>& bindings() {
  static const std::map<std::string, KeyBinding> table = {
      {"inertial.gravity", bind_key(&RunConfig::gravity)},
      {"inertial.rotation_band", bind_key(&RunConfig::rotation_band)},
      {"inertial.crossing_ratio", bind_key(&RunConfig::crossing_ratio)},
      {"image.trim_alpha", bind_key(&RunConfig::trim_alpha)},
      {"image.blur_tile", bind_key(&RunConfig::blur_tile)},
      {"image.feature_bin", bind_key(&RunConfig::feature_bin)},
      {"visual.blur_threshold", bind_key(&RunConfig::blur_threshold)},
      {"visual.exposure_zones", bind_key(&RunConfig::exposure_zones)},
      {"visual.contrast_luma", bind_key(&RunConfig::contrast_luma)},
      {"features.fast_threshold", bind_key(&RunConfig::fast_threshold)},
      {"features.fast_arc", bind_key(&RunConfig::fast_arc)},
      {"features.nonmax", bind_key(&RunConfig::fast_nonmax)},
      {"features.max_keypoints", bind_key(&RunConfig::max_keypoints)},
      {"features.harris_k", bind_key(&RunConfig::harris_k)},
      {"stereo.d_max", bind_stereo(&stereo::StereoConfig::d_max)},
      {"stereo.block", bind_stereo(&stereo::StereoConfig::block)},
      {"stereo.paths", bind_stereo(&stereo::StereoConfig::paths)},
      {"stereo.p1", bind_stereo(&stereo::StereoConfig::p1)},
      {"stereo.p2", bind_stereo(&stereo::StereoConfig::p2)},
      {"stereo.uniqueness", bind_stereo(&stereo::StereoConfig::uniqueness)},
      {"stereo.lr_check", bind_stereo(&stereo::StereoConfig::lr_check)},
      {"stereo.baseline", bind_stereo(&stereo::StereoConfig::baseline)},
      {"stereo.focal", bind_stereo(&stereo::StereoConfig::focal)},
      {"similarity.k", bind_key(&RunConfig::vocab_k)},
      {"similarity.depth", bind_key(&RunConfig::vocab_depth)},
      {"similarity.seed", bind_key(&RunConfig::seed)},
      {"similarity.min_gap", bind_key(&RunConfig::min_gap)},
      {"similarity.vocab_path", bind_key(&RunConfig::vocab_path)},
      {"similarity.max_features", bind_key(&RunConfig::similarity_features)},
      {"similarity.vocab_frames", bind_key(&RunConfig::vocab_frames)},
      {"analysis.precision", bind_key(&RunConfig::precision)},
      {"coverage.bins", bind_key(&RunConfig::coverage_bins)},
      {"coverage.min_count", bind_key(&RunConfig::coverage_min_count)},
      {"coverage.exact_limit", bind_key(&RunConfig::coverage_exact_limit)},
  };
  return table;
}

// Alternative spellings accepted on input; the canonical key is reported.
inline const std::map<std::string, std::string>& aliases() {
  static const std::map<std::string, std::string> table = {{"features.bin_dim", "image.feature_bin"}};
  return table;
}

}  // namespace detail

/// Sets one dotted key. Unknown keys and unparsable values are rejected.
inline void set_config_value(RunConfig& cfg, std::string key, const std::string& value) {
  if (auto a = detail::aliases().find(key); a != detail::aliases().end()) key = a->second;
  const auto it = detail::bindings().find(key);
  if (it == detail::bindings().end()) throw Error("unknown config key: " + key);
  try {
    it->second.set(cfg, value);
  } catch (const Error&) {
    throw Error("bad value for " + key + ": '" + value + "'");
  }
}

/// "section.key=value"
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw Error("override must look like key=value: " + assignment);
  set_config_value(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

inline void apply_config_text(RunConfig& cfg, const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(std::string("config parse error: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw Error("config key outside a section: " + section);
    for (const auto& [key, value] : body) set_config_value(cfg, section + "." + key, value.data());
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg;
  apply_config_text(cfg, ss.str());
  return cfg;
}

/// Sorted key=value lines for every key; the effective configuration.
inline std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, b] : detail::bindings()) out.emplace_back(key, b.get(cfg));
  return out;
}

/// FNV-1a over the canonical dump.
inline std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& [k, v] : config_entries(cfg)) {
    for (char c : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace slamchar
