#pragma once

// Dataset handler: streams decoded frames and IMU samples from a manifest into
// processing elements and assembles their results into a scoreboard.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "slamchar/config.hpp"
#include "slamchar/core.hpp"
#include "slamchar/features.hpp"
#include "slamchar/general_metrics.hpp"
#include "slamchar/image.hpp"
#include "slamchar/image_ops.hpp"
#include "slamchar/inertial_metrics.hpp"
#include "slamchar/manifest.hpp"
#include "slamchar/scoreboard.hpp"
#include "slamchar/similarity.hpp"
#include "slamchar/stereo.hpp"
#include "slamchar/visual_metrics.hpp"

namespace slamchar {

struct Frame {
  std::size_t index = 0;
  Seconds t = 0.0;
  std::string path;
  Image8 image;
};

/// Lazily decoding, timestamp-ordered frame stream over one camera of a sequence.
class FrameStream {
 public:
  FrameStream(const DatasetManifest& m, const SequenceEntry& seq, SensorKind kind) : manifest_(&m) {
    const auto& cam = kind == SensorKind::CamLeft ? seq.cam_left : seq.cam_right;
    if (kind == SensorKind::Imu || !cam) {
      throw Error("sequence " + seq.name + " has no " + std::string(to_string(kind)) + " stream");
    }
    stream_ = &*cam;
  }

  std::size_t size() const { return stream_->timestamps.size(); }

  /// Decodes frame i (manifest order).
  Frame at(std::size_t i) const {
    Frame f;
    f.index = i;
    f.t = to_seconds(stream_->timestamps.at(i));
    f.path = manifest_->resolve(stream_->files.at(i)).string();
    f.image = read_png(f.path);
    return f;
  }

  std::optional<Frame> next() {
    if (pos_ >= size()) return std::nullopt;
    return at(pos_++);
  }

 private:
  const DatasetManifest* manifest_;
  const CameraStream* stream_ = nullptr;
  std::size_t pos_ = 0;
};

inline FrameStream frames(const DatasetManifest& m, const SequenceEntry& seq, SensorKind kind) {
  return FrameStream(m, seq, kind);
}

struct SequenceContext {
  const DatasetManifest* manifest = nullptr;
  const SequenceEntry* sequence = nullptr;
  const RunConfig* config = nullptr;
  const std::vector<ImuSample>* imu = nullptr;
  const similarity::Vocabulary* vocabulary = nullptr;
};

struct FrameView {
  std::size_t index = 0;
  Seconds t = 0.0;
  const Image8* left = nullptr;
  const Image8* right = nullptr;  // set only for elements that asked for it
};

/// One characterization engine applied to one sequence. Instances are per-sequence.
class ProcessingElement {
 public:
  virtual ~ProcessingElement() = default;
  virtual std::string id() const = 0;
  virtual std::vector<SensorKind> required() const = 0;
  virtual std::vector<Level> levels() const = 0;
  virtual bool wants_frames() const { return false; }
  virtual bool wants_right_frames() const { return false; }
  virtual void begin(const SequenceContext&) {}
  virtual void on_frame(const FrameView&) {}
  virtual std::vector<MetricRecord> finish(const SequenceContext& ctx) = 0;
  /// Every metric this element emits, marked ABSENT.
  virtual std::vector<MetricRecord> absent() const = 0;
};

namespace elements {

inline std::string exceed_key(int k) { return "brightness_deriv_ratio." + std::to_string(k) + "s"; }

class General final : public ProcessingElement {
 public:
  std::string id() const override { return "general"; }
  std::vector<SensorKind> required() const override { return {SensorKind::CamLeft}; }
  std::vector<Level> levels() const override { return {Level::Sample, Level::Sequence}; }

  std::vector<MetricRecord> finish(const SequenceContext& ctx) override {
    const auto& seq = *ctx.sequence;
    std::vector<MetricRecord> out;
    std::vector<Seconds> left, right, imu;
    if (seq.cam_left) left = seq.cam_left->seconds();
    if (seq.cam_right) right = seq.cam_right->seconds();
    if (ctx.imu) {
      for (const auto& s : *ctx.imu) imu.push_back(s.t);
    }
    const std::pair<std::string, const std::vector<Seconds>*> streams[] = {
        {"cam_left", seq.cam_left ? &left : nullptr},
        {"cam_right", seq.cam_right ? &right : nullptr},
        {"imu", seq.imu ? &imu : nullptr},
    };
    for (const auto& [name, t] : streams) {
      if (!t) {
        out.push_back(absent_record("samples." + name, Level::Sequence, "samples"));
        out.push_back(absent_record("duration." + name, Level::Sequence, "s"));
        out.push_back(absent_record("sample_time." + name, Level::Sequence, "s"));
        continue;
      }
      out.push_back(scalar_record("samples." + name, "samples", static_cast<double>(t->size())));
      out.push_back(scalar_record("duration." + name, "s", general::total_duration(*t)));
      out.push_back(scalar_record("sample_time." + name, "s", general::mean_sample_time(*t)));
    }
    auto mismatch = [&](const std::string& id, const std::vector<Seconds>& cam, bool have) {
      const auto mm = have ? general::timestamp_mismatch(cam, imu) : std::nullopt;
      out.push_back(mm ? series_record(id, "s", *mm) : absent_record(id, Level::Sample, "s"));
    };
    mismatch("ts_mismatch.vi", left, seq.cam_left && seq.imu);
    mismatch("ts_mismatch.vi_right", right, seq.cam_right && seq.imu);
    return out;
  }

  std::vector<MetricRecord> absent() const override {
    std::vector<MetricRecord> out;
    for (std::string name : {"cam_left", "cam_right", "imu"}) {
      out.push_back(absent_record("samples." + name, Level::Sequence, "samples"));
      out.push_back(absent_record("duration." + name, Level::Sequence, "s"));
      out.push_back(absent_record("sample_time." + name, Level::Sequence, "s"));
    }
    out.push_back(absent_record("ts_mismatch.vi", Level::Sample, "s"));
    out.push_back(absent_record("ts_mismatch.vi_right", Level::Sample, "s"));
    return out;
  }
};

class Inertial final : public ProcessingElement {
 public:
  std::string id() const override { return "inertial"; }
  std::vector<SensorKind> required() const override { return {SensorKind::Imu}; }
  std::vector<Level> levels() const override { return {Level::Sample, Level::Sequence}; }

  std::vector<MetricRecord> finish(const SequenceContext& ctx) override {
    const auto& imu = *ctx.imu;
    const auto& cfg = *ctx.config;
    std::vector<MetricRecord> out;
    const char* axes[] = {"x", "y", "z"};

    std::array<std::vector<double>, 6> raw;  // ax ay az gx gy gz
    for (const auto& s : imu) {
      for (std::size_t a = 0; a < 3; ++a) {
        raw[a].push_back(s.accel[a]);
        raw[3 + a].push_back(s.gyro[a]);
      }
    }
    const char* raw_ids[] = {"accel.x", "accel.y", "accel.z", "gyro.x", "gyro.y", "gyro.z"};
    for (std::size_t c = 0; c < 6; ++c) out.push_back(series_record(raw_ids[c], c < 3 ? "m/s^2" : "deg/s", raw[c]));

    const auto d = inertial::derivatives(imu);
    auto emit = [&](const std::string& base, const std::optional<inertial::AxisSeries>& s, const char* unit) {
      for (std::size_t a = 0; a < 3; ++a) {
        const std::string id = base + "." + axes[a];
        out.push_back(s ? series_record(id, unit, s->axis[a]) : absent_record(id, Level::Sample, unit));
      }
    };
    emit("jerk", d.jerk, "m/s^3");
    emit("snap", d.snap, "m/s^4");
    emit("alpha", d.angular_acc, "deg/s^2");
    emit("phi", d.angular_jerk, "deg/s^3");

    const char* dr_ids[] = {"ax", "ay", "az", "gx", "gy", "gz"};
    const auto& limits = ctx.manifest->sensor_limits;
    for (std::size_t c = 0; c < 6; ++c) {
      const std::string cov = std::string("dr_coverage.") + dr_ids[c];
      const std::string crs = std::string("dr_crossing.") + dr_ids[c];
      if (!limits || !limits->valid() || raw[c].empty()) {
        out.push_back(absent_record(cov, Level::Sequence, "%"));
        out.push_back(absent_record(crs, Level::Sequence, "%"));
        continue;
      }
      const double L = c < 3 ? limits->accel : limits->gyro;
      out.push_back(scalar_record(cov, "%", inertial::dr_coverage(raw[c], L)));
      out.push_back(scalar_record(crs, "%", inertial::dr_crossing(raw[c], L, cfg.crossing_ratio)));
    }

    if (imu.empty()) {
      out.push_back(absent_record("accel_magnitude", Level::Sample, "m/s^2"));
      out.push_back(absent_record("rotation_only_pct", Level::Sequence, "%"));
    } else {
      const auto rot = inertial::rotation_only(imu, cfg.gravity, cfg.rotation_band);
      out.push_back(series_record("accel_magnitude", "m/s^2", rot.magnitude));
      out.push_back(scalar_record("rotation_only_pct", "%", rot.percentage));
    }
    return out;
  }

  std::vector<MetricRecord> absent() const override {
    std::vector<MetricRecord> out;
    for (const char* id : {"accel.x", "accel.y", "accel.z"}) out.push_back(absent_record(id, Level::Sample, "m/s^2"));
    for (const char* id : {"gyro.x", "gyro.y", "gyro.z"}) out.push_back(absent_record(id, Level::Sample, "deg/s"));
    const std::pair<const char*, const char*> derivs[] = {
        {"jerk", "m/s^3"}, {"snap", "m/s^4"}, {"alpha", "deg/s^2"}, {"phi", "deg/s^3"}};
    for (const auto& [base, unit] : derivs) {
      for (const char* a : {"x", "y", "z"}) out.push_back(absent_record(std::string(base) + "." + a, Level::Sample, unit));
    }
    for (const char* a : {"ax", "ay", "az", "gx", "gy", "gz"}) {
      out.push_back(absent_record(std::string("dr_coverage.") + a, Level::Sequence, "%"));
      out.push_back(absent_record(std::string("dr_crossing.") + a, Level::Sequence, "%"));
    }
    out.push_back(absent_record("accel_magnitude", Level::Sample, "m/s^2"));
    out.push_back(absent_record("rotation_only_pct", Level::Sequence, "%"));
    return out;
  }
};

class Brightness final : public ProcessingElement {
 public:
  std::string id() const override { return "brightness"; }
  std::vector<SensorKind> required() const override { return {SensorKind::CamLeft}; }
  std::vector<Level> levels() const override { return {Level::Sample, Level::Sequence}; }
  bool wants_frames() const override { return true; }

  void on_frame(const FrameView& f) override {
    br_.push_back(visual::frame_brightness(*f.left));
    t_.push_back(f.t);
  }

  std::vector<MetricRecord> finish(const SequenceContext&) override {
    std::vector<MetricRecord> out;
    out.push_back(series_record("brightness", "DL", br_));
    const auto s = visual::brightness_series(br_, t_);
    if (s.has_derivative) {
      out.push_back(series_record("brightness_deriv", "1/s", s.derivative));
      for (int k = 0; k < 3; ++k) out.push_back(scalar_record(exceed_key(k + 1), "%", s.exceed_pct[k]));
    } else {
      out.push_back(absent_record("brightness_deriv", Level::Sample, "1/s"));
      for (int k = 0; k < 3; ++k) out.push_back(absent_record(exceed_key(k + 1), Level::Sequence, "%"));
    }
    return out;
  }

  std::vector<MetricRecord> absent() const override {
    std::vector<MetricRecord> out{absent_record("brightness", Level::Sample, "DL"),
                                  absent_record("brightness_deriv", Level::Sample, "1/s")};
    for (int k = 0; k < 3; ++k) out.push_back(absent_record(exceed_key(k + 1), Level::Sequence, "%"));
    return out;
  }

 private:
  std::vector<double> br_;
  std::vector<Seconds> t_;
};

class Exposure final : public ProcessingElement {
 public:
  std::string id() const override { return "exposure"; }
  std::vector<SensorKind> required() const override { return {SensorKind::CamLeft}; }
  std::vector<Level> levels() const override { return {Level::Sample, Level::Sequence}; }
  bool wants_frames() const override { return true; }

  void begin(const SequenceContext& ctx) override {
    alpha_ = ctx.config->trim_alpha;
    zones_ = ctx.config->exposure_zones;
  }

  void on_frame(const FrameView& f) override {
    const auto r = visual::classify_exposure(luma(*f.left), alpha_, zones_);
    zone_.push_back(r.zone);
    mean_.push_back(r.stats.mean);
    skew_.push_back(r.stats.skewness);
    status_.push_back(r.status);
  }

  std::vector<MetricRecord> finish(const SequenceContext&) override {
    std::vector<MetricRecord> out;
    out.push_back(series_record("exposure.zone", "DL", zone_));
    out.push_back(series_record("exposure.trimmed_mean", "DL", mean_));
    out.push_back(series_record("exposure.trimmed_skewness", "DL", skew_));
    const auto pct = visual::exposure_percentages(status_);
    for (std::size_t c = 0; c < pct.size(); ++c) {
      const std::string id = "exposure.class_pct." + std::string(visual::kExposureNames[c]);
      out.push_back(status_.empty() ? absent_record(id, Level::Sequence, "%") : scalar_record(id, "%", pct[c]));
    }
    return out;
  }

  std::vector<MetricRecord> absent() const override {
    std::vector<MetricRecord> out{absent_record("exposure.zone", Level::Sample, "DL"),
                                  absent_record("exposure.trimmed_mean", Level::Sample, "DL"),
                                  absent_record("exposure.trimmed_skewness", Level::Sample, "DL")};
    for (auto name : visual::kExposureNames) {
      out.push_back(absent_record("exposure.class_pct." + std::string(name), Level::Sequence, "%"));
    }
    return out;
  }

 private:
  double alpha_ = 0.01;
  int zones_ = 7;
  std::vector<double> zone_, mean_, skew_;
  std::vector<visual::Exposure> status_;
};

class Contrast final : public ProcessingElement {
 public:
  std::string id() const override { return "contrast"; }
  std::vector<SensorKind> required() const override { return {SensorKind::CamLeft}; }
  std::vector<Level> levels() const override { return {Level::Sample, Level::Sequence}; }
  bool wants_frames() const override { return true; }

  void begin(const SequenceContext& ctx) override {
    alpha_ = ctx.config->trim_alpha;
    use_luma_ = ctx.config->contrast_luma;
  }

  void on_frame(const FrameView& f) override {
    const GrayImage L = use_luma_ ? luma(*f.left) : lab_lightness(*f.left);
    const auto r = visual::contrast(L, alpha_);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    cr_.push_back(r.ratio.value_or(nan));
    weber_.push_back(r.weber.value_or(nan));
    michelson_.push_back(r.michelson);
    rms_.push_back(r.rms);
  }

  std::vector<MetricRecord> finish(const SequenceContext&) override {
    return {series_record("contrast.cr", "DL", cr_), series_record("contrast.weber", "DL", weber_),
            series_record("contrast.michelson", "DL", michelson_), series_record("contrast.rms", "DL", rms_)};
  }

  std::vector<MetricRecord> absent() const override {
    return {absent_record("contrast.cr", Level::Sample, "DL"), absent_record("contrast.weber", Level::Sample, "DL"),
            absent_record("contrast.michelson", Level::Sample, "DL"), absent_record("contrast.rms", Level::Sample, "DL")};
  }

 private:
  double alpha_ = 0.01;
  bool use_luma_ = false;
  std::vector<double> cr_, weber_, michelson_, rms_;
};

class Blur final : public ProcessingElement {
 public:
  std::string id() const override { return "blur"; }
  std::vector<SensorKind> required() const override { return {SensorKind::CamLeft}; }
  std::vector<Level> levels() const override { return {Level::Sample, Level::Sequence}; }
  bool wants_frames() const override { return true; }

  void begin(const SequenceContext& ctx) override {
    tile_ = ctx.config->blur_tile;
    threshold_ = ctx.config->blur_threshold;
  }

  void on_frame(const FrameView& f) override {
    const auto b = visual::blur_report(luma(*f.left), tile_, threshold_);
    score_.push_back(b.score);
    pct_.push_back(b.blurred_pct);
  }

  std::vector<MetricRecord> finish(const SequenceContext&) override {
    std::vector<MetricRecord> out{series_record("blur.score", "DL", score_), series_record("blur.tile_pct", "%", pct_)};
    if (pct_.empty()) {
      for (const char* id : {"blur.images_gt0_pct", "blur.images_gt50_pct", "blur.images_gt90_pct"}) {
        out.push_back(absent_record(id, Level::Sequence, "%"));
      }
      return out;
    }
    const auto r = visual::blur_sequence_ratios(pct_);
    out.push_back(scalar_record("blur.images_gt0_pct", "%", r.gt0));
    out.push_back(scalar_record("blur.images_gt50_pct", "%", r.gt50));
    out.push_back(scalar_record("blur.images_gt90_pct", "%", r.gt90));
    return out;
  }

  std::vector<MetricRecord> absent() const override {
    return {absent_record("blur.score", Level::Sample, "DL"), absent_record("blur.tile_pct", Level::Sample, "%"),
            absent_record("blur.images_gt0_pct", Level::Sequence, "%"),
            absent_record("blur.images_gt50_pct", Level::Sequence, "%"),
            absent_record("blur.images_gt90_pct", Level::Sequence, "%")};
  }

 private:
  int tile_ = 64;
  double threshold_ = 100.0;
  std::vector<double> score_, pct_;
};

class Features final : public ProcessingElement {
 public:
  std::string id() const override { return "features"; }
  std::vector<SensorKind> required() const override { return {SensorKind::CamLeft}; }
  std::vector<Level> levels() const override { return {Level::Sample, Level::Sequence}; }
  bool wants_frames() const override { return true; }

  void begin(const SequenceContext& ctx) override {
    const auto cfg = ctx.config->detector();
    detectors_.clear();
    detectors_.push_back(std::make_unique<features::FastDetector>(cfg));
    detectors_.push_back(std::make_unique<features::OrbDetector>(cfg));
    bin_ = ctx.config->feature_bin;
    series_.assign(detectors_.size(), {});
  }

  void on_frame(const FrameView& f) override {
    const Gray8 g = to_gray8(*f.left);
    for (std::size_t i = 0; i < detectors_.size(); ++i) {
      const auto kps = detectors_[i]->detect(g);
      const auto d = features::spatial_distribution(kps, g.width(), g.height(), bin_, detectors_[i]->id());
      series_[i].count.push_back(static_cast<double>(d.total));
      series_[i].dist_abs.push_back(d.dist_abs_pct);
      series_[i].dist_avg.push_back(d.dist_avg_pct);
    }
  }

  std::vector<MetricRecord> finish(const SequenceContext&) override {
    std::vector<MetricRecord> out;
    for (std::size_t i = 0; i < detectors_.size(); ++i) {
      const std::string det = detectors_[i]->id();
      out.push_back(series_record("features.count." + det, "features", series_[i].count));
      out.push_back(series_record("features.dist_abs." + det, "%", series_[i].dist_abs));
      out.push_back(series_record("features.dist_avg." + det, "%", series_[i].dist_avg));
    }
    return out;
  }

  std::vector<MetricRecord> absent() const override {
    std::vector<MetricRecord> out;
    for (std::string det : {"fast", "orb"}) {
      out.push_back(absent_record("features.count." + det, Level::Sample, "features"));
      out.push_back(absent_record("features.dist_abs." + det, Level::Sample, "%"));
      out.push_back(absent_record("features.dist_avg." + det, Level::Sample, "%"));
    }
    return out;
  }

 private:
  struct Series {
    std::vector<double> count, dist_abs, dist_avg;
  };
  std::vector<std::unique_ptr<features::FeatureDetector>> detectors_;
  std::vector<Series> series_;
  int bin_ = 50;
};

class Disparity final : public ProcessingElement {
 public:
  std::string id() const override { return "disparity"; }
  std::vector<SensorKind> required() const override { return {SensorKind::CamLeft, SensorKind::CamRight}; }
  std::vector<Level> levels() const override { return {Level::Sample, Level::Sequence}; }
  bool wants_frames() const override { return true; }
  bool wants_right_frames() const override { return true; }

  void begin(const SequenceContext& ctx) override { cfg_ = ctx.config->stereo; }

  void on_frame(const FrameView& f) override {
    const Gray8 l = to_gray8(*f.left);
    const Gray8 r = to_gray8(*f.right);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto record = [&](const stereo::DisparityMap& map, std::size_t m) {
      const auto s = stereo::disparity_stats(map);
      mean_[m].push_back(s ? s->mean : nan);
      std_[m].push_back(s ? s->stddev : nan);
      valid_[m].push_back(100.0 * static_cast<double>(map.valid_count) / static_cast<double>(l.size()));
    };
    record(stereo::disparity_bm(l, r, cfg_), 0);
    record(stereo::disparity_sgm(l, r, cfg_), 1);
  }

  std::vector<MetricRecord> finish(const SequenceContext&) override {
    std::vector<MetricRecord> out;
    for (std::size_t m = 0; m < 2; ++m) {
      const std::string tag = m == 0 ? "bm" : "sgm";
      out.push_back(series_record("disparity.mean." + tag, "px", mean_[m]));
      out.push_back(series_record("disparity.std." + tag, "px", std_[m]));
      out.push_back(series_record("disparity.valid_pct." + tag, "%", valid_[m]));
    }
    return out;
  }

  std::vector<MetricRecord> absent() const override {
    std::vector<MetricRecord> out;
    for (std::string tag : {"bm", "sgm"}) {
      out.push_back(absent_record("disparity.mean." + tag, Level::Sample, "px"));
      out.push_back(absent_record("disparity.std." + tag, Level::Sample, "px"));
      out.push_back(absent_record("disparity.valid_pct." + tag, Level::Sample, "%"));
    }
    return out;
  }

 private:
  stereo::StereoConfig cfg_;
  std::array<std::vector<double>, 2> mean_, std_, valid_;
};

class Similarity final : public ProcessingElement {
 public:
  std::string id() const override { return "similarity"; }
  std::vector<SensorKind> required() const override { return {SensorKind::CamLeft}; }
  std::vector<Level> levels() const override { return {Level::Sample, Level::Sequence}; }
  bool wants_frames() const override { return true; }

  void begin(const SequenceContext& ctx) override {
    if (!ctx.vocabulary) throw Error("no vocabulary available");
    vocab_ = ctx.vocabulary;
    extractor_ = make_extractor(*ctx.config);
  }

  void on_frame(const FrameView& f) override { bows_.push_back(vocab_->transform(extractor_.extract(to_gray8(*f.left)))); }

  std::vector<MetricRecord> finish(const SequenceContext& ctx) override {
    const auto rep = similarity::closest_match(bows_, static_cast<std::size_t>(ctx.config->min_gap));
    if (!rep) return absent();
    std::vector<double> dist;
    for (std::size_t i = 0; i < rep->distance.size(); ++i) {
      dist.push_back(std::isnan(rep->score[i]) ? std::numeric_limits<double>::quiet_NaN()
                                               : static_cast<double>(rep->distance[i]));
    }
    return {series_record("similarity.score", "DL", rep->score),
            series_record("similarity.distance", "frames", dist),
            scalar_record("similarity.count_ge_1_0", "frames", static_cast<double>(rep->count_ge_100)),
            scalar_record("similarity.count_ge_0_9", "frames", static_cast<double>(rep->count_ge_090)),
            scalar_record("similarity.count_ge_0_5", "frames", static_cast<double>(rep->count_ge_050)),
            scalar_record("similarity.loop_opportunity_pct", "%", rep->loop_opportunity_pct)};
  }

  std::vector<MetricRecord> absent() const override {
    return {absent_record("similarity.score", Level::Sample, "DL"),
            absent_record("similarity.distance", Level::Sample, "frames"),
            absent_record("similarity.count_ge_1_0", Level::Sequence, "frames"),
            absent_record("similarity.count_ge_0_9", Level::Sequence, "frames"),
            absent_record("similarity.count_ge_0_5", Level::Sequence, "frames"),
            absent_record("similarity.loop_opportunity_pct", Level::Sequence, "%")};
  }

  static similarity::DescriptorExtractor make_extractor(const RunConfig& cfg) {
    similarity::DescriptorExtractor ex;
    ex.detector = cfg.detector();
    ex.detector.max_keypoints = static_cast<std::size_t>(cfg.similarity_features);
    ex.pattern = similarity::BriefPattern::make(cfg.seed);
    return ex;
  }

 private:
  const similarity::Vocabulary* vocab_ = nullptr;
  similarity::DescriptorExtractor extractor_;
  std::vector<similarity::BowVector> bows_;
};

}  // namespace elements

inline const std::vector<std::string>& element_ids() {
  static const std::vector<std::string> ids = {"general",  "inertial", "brightness", "exposure",  "contrast",
                                               "blur",     "features", "disparity",  "similarity"};
  return ids;
}

inline std::unique_ptr<ProcessingElement> make_element(const std::string& id) {
  if (id == "general") return std::make_unique<elements::General>();
  if (id == "inertial") return std::make_unique<elements::Inertial>();
  if (id == "brightness") return std::make_unique<elements::Brightness>();
  if (id == "exposure") return std::make_unique<elements::Exposure>();
  if (id == "contrast") return std::make_unique<elements::Contrast>();
  if (id == "blur") return std::make_unique<elements::Blur>();
  if (id == "features") return std::make_unique<elements::Features>();
  if (id == "disparity") return std::make_unique<elements::Disparity>();
  if (id == "similarity") return std::make_unique<elements::Similarity>();
  throw Error("unknown processing element: " + id);
}

/// Trains the similarity vocabulary from frames sampled evenly across every sequence.
/// Frames that fail to decode are skipped.
inline similarity::Vocabulary train_vocabulary(const DatasetManifest& m, const RunConfig& cfg) {
  const auto extractor = elements::Similarity::make_extractor(cfg);
  std::vector<std::vector<similarity::Descriptor>> images;
  for (const auto& seq : m.sequences) {
    if (!seq.cam_left || seq.cam_left->files.empty()) continue;
    FrameStream stream(m, seq, SensorKind::CamLeft);
    const std::size_t n = stream.size();
    const std::size_t take = std::min<std::size_t>(n, static_cast<std::size_t>(cfg.vocab_frames));
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t i = take == 1 ? 0 : k * (n - 1) / (take - 1);
      try {
        images.push_back(extractor.extract(to_gray8(stream.at(i).image)));
      } catch (const Error&) {
        // undecodable frames are reported by the sequence that owns them
      }
    }
  }
  return similarity::Vocabulary::build(images, cfg.vocab_k, cfg.vocab_depth, cfg.seed);
}

struct RunOptions {
  std::vector<std::string> elements = element_ids();
  unsigned threads = 1;
  std::function<void(const std::string& sequence, const std::string& element, CellStatus)> progress;
};

namespace detail {

inline std::string creation_stamp() {
  // Fixed by SOURCE_DATE_EPOCH so that exports stay byte-reproducible.
  const char* env = std::getenv("SOURCE_DATE_EPOCH");
  if (!env) return "";
  const std::time_t t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::vector<Cell> characterize_sequence(const DatasetManifest& m, const SequenceEntry& seq,
                                               const RunConfig& cfg, const std::vector<std::string>& ids,
                                               const similarity::Vocabulary* vocab, const std::string& vocab_error) {
  struct Slot {
    std::unique_ptr<ProcessingElement> element;
    Cell cell;
    bool active = false;
  };
  std::vector<Slot> slots;
  for (const auto& id : ids) {
    Slot s;
    s.element = make_element(id);
    s.cell.sequence = seq.name;
    s.cell.element = id;
    slots.push_back(std::move(s));
  }

  std::vector<ImuSample> imu;
  bool imu_ok = true;
  std::string imu_error;
  if (seq.imu) {
    try {
      imu = load_imu(m, seq);
    } catch (const std::exception& e) {
      imu_ok = false;
      imu_error = e.what();
    }
  }

  SequenceContext ctx{&m, &seq, &cfg, seq.imu ? &imu : nullptr, vocab};
  auto fail = [](Slot& s, const std::string& what) {
    s.cell.status = CellStatus::Failed;
    s.cell.error = what;
    s.cell.records.clear();
    s.active = false;
  };

  for (auto& s : slots) {
    const auto req = s.element->required();
    const bool missing = std::any_of(req.begin(), req.end(), [&](SensorKind k) { return !seq.has(k); });
    if (missing) {
      s.cell.status = CellStatus::Absent;
      s.cell.records = s.element->absent();
      continue;
    }
    if (seq.imu && !imu_ok) {
      fail(s, imu_error);
      continue;
    }
    if (s.element->id() == "similarity" && !vocab) {
      fail(s, vocab_error.empty() ? "no vocabulary available" : vocab_error);
      continue;
    }
    try {
      s.element->begin(ctx);
      s.active = true;
    } catch (const std::exception& e) {
      fail(s, e.what());
    }
  }

  const bool any_frames = std::any_of(slots.begin(), slots.end(), [](const Slot& s) { return s.active && s.element->wants_frames(); });
  const bool any_right = std::any_of(slots.begin(), slots.end(), [](const Slot& s) { return s.active && s.element->wants_right_frames(); });
  if (any_frames) {
    FrameStream left(m, seq, SensorKind::CamLeft);
    std::optional<FrameStream> right;
    std::vector<Seconds> right_t;
    if (any_right && seq.cam_right) {
      right.emplace(m, seq, SensorKind::CamRight);
      right_t = seq.cam_right->seconds();
    }
    for (std::size_t i = 0; i < left.size(); ++i) {
      Frame lf;
      std::optional<Frame> rf;
      try {
        lf = left.at(i);
        if (right && !right_t.empty()) rf = right->at(nearest_timestamp(lf.t, right_t).index);
      } catch (const std::exception& e) {
        for (auto& s : slots) {
          if (s.active && s.element->wants_frames()) fail(s, e.what());
        }
        break;
      }
      for (auto& s : slots) {
        if (!s.active || !s.element->wants_frames()) continue;
        FrameView view{i, lf.t, &lf.image, s.element->wants_right_frames() && rf ? &rf->image : nullptr};
        try {
          s.element->on_frame(view);
        } catch (const std::exception& e) {
          fail(s, e.what());
        }
      }
    }
  }

  std::vector<Cell> out;
  for (auto& s : slots) {
    if (s.active) {
      try {
        s.cell.records = s.element->finish(ctx);
        s.cell.status = CellStatus::Ok;
      } catch (const std::exception& e) {
        fail(s, e.what());
      }
    }
    out.push_back(std::move(s.cell));
  }
  return out;
}

}  // namespace detail

/// Runs every requested element over every sequence. Sequences are processed in
/// parallel; the merge is keyed by names, so output does not depend on scheduling.
inline Scoreboard run_characterization(const DatasetManifest& m, const RunConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  for (const auto& id : opts.elements) make_element(id);

  std::optional<similarity::Vocabulary> vocab;
  std::string vocab_error;
  if (std::find(opts.elements.begin(), opts.elements.end(), "similarity") != opts.elements.end()) {
    try {
      vocab = cfg.vocab_path.empty() ? train_vocabulary(m, cfg) : similarity::Vocabulary::load(cfg.vocab_path);
    } catch (const std::exception& e) {
      vocab_error = std::string("vocabulary: ") + e.what();
    }
  }

  Scoreboard sb;
  sb.dataset_name = m.dataset_name;
  sb.provenance.config_hash = config_hash(cfg);
  sb.provenance.created = detail::creation_stamp();
  sb.provenance.config = config_entries(cfg);

  std::vector<std::vector<Cell>> results(m.sequences.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < m.sequences.size(); i = next++) {
      results[i] = detail::characterize_sequence(m, m.sequences[i], cfg, opts.elements, vocab ? &*vocab : nullptr,
                                                 vocab_error);
      if (opts.progress) {
        std::lock_guard lock(progress_mutex);
        for (const auto& c : results[i]) opts.progress(c.sequence, c.element, c.status);
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(m.sequences.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (auto& cells : results) {
    for (auto& c : cells) sb.put(std::move(c));
  }
  return sb;
}

}  // namespace slamchar
