#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "slamchar/config.hpp"
#include "slamchar/scoreboard.hpp"
#include "support/fixtures.hpp"

using namespace slamchar;
namespace st = slamchar::testing;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, DefaultsValidate) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.fast_threshold, 10);
  EXPECT_EQ(cfg.vocab_k, 10);
  EXPECT_EQ(cfg.min_gap, 1);
}

TEST(Config, OverrideSetsTypedFields) {
  RunConfig cfg;
  apply_override(cfg, "features.fast_threshold=25");
  apply_override(cfg, "features.nonmax=off");
  apply_override(cfg, "inertial.gravity=9.81");
  apply_override(cfg, "stereo.d_max=48");
  apply_override(cfg, "similarity.vocab_path=/tmp/v.json");
  EXPECT_EQ(cfg.fast_threshold, 25);
  EXPECT_FALSE(cfg.fast_nonmax);
  EXPECT_DOUBLE_EQ(cfg.gravity, 9.81);
  EXPECT_EQ(cfg.stereo.d_max, 48);
  EXPECT_EQ(cfg.vocab_path, "/tmp/v.json");
}

TEST(Config, AliasMapsToCanonicalKey) {
  RunConfig cfg;
  set_config_value(cfg, "features.bin_dim", "32");
  EXPECT_EQ(cfg.feature_bin, 32);
  bool seen = false;
  for (const auto& [k, v] : config_entries(cfg)) {
    EXPECT_NE(k, "features.bin_dim");
    if (k == "image.feature_bin") {
      EXPECT_EQ(v, "32");
      seen = true;
    }
  }
  EXPECT_TRUE(seen);
}

TEST(Config, UnknownKeyRejected) {
  RunConfig cfg;
  EXPECT_EQ(error_of([&] { set_config_value(cfg, "features.threshold", "3"); }),
            "unknown config key: features.threshold");
  EXPECT_THROW(apply_override(cfg, "nonsense"), Error);
}

TEST(Config, BadValueRejected) {
  RunConfig cfg;
  EXPECT_EQ(error_of([&] { set_config_value(cfg, "features.fast_threshold", "12x"); }),
            "bad value for features.fast_threshold: '12x'");
  EXPECT_THROW(set_config_value(cfg, "features.nonmax", "maybe"), Error);
  EXPECT_THROW(set_config_value(cfg, "inertial.gravity", ""), Error);
  EXPECT_EQ(cfg.fast_threshold, 10);
}

TEST(Config, ValidateCatchesOutOfRange) {
  RunConfig cfg;
  cfg.min_gap = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = RunConfig{};
  cfg.rotation_band = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = RunConfig{};
  cfg.fast_threshold = 300;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = RunConfig{};
  cfg.blur_tile = 2;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Config, IniText) {
  RunConfig cfg;
  apply_config_text(cfg,
                    "; comment\n"
                    "[features]\n"
                    "fast_threshold = 20\n"
                    "bin_dim = 40\n"
                    "[stereo]\n"
                    "lr_check = false\n"
                    "[coverage]\n"
                    "bins = 25\n");
  EXPECT_EQ(cfg.fast_threshold, 20);
  EXPECT_EQ(cfg.feature_bin, 40);
  EXPECT_FALSE(cfg.stereo.lr_check);
  EXPECT_EQ(cfg.coverage_bins, 25);
}

TEST(Config, IniKeyOutsideSectionRejected) {
  RunConfig cfg;
  EXPECT_THROW(apply_config_text(cfg, "fast_threshold = 20\n"), Error);
  EXPECT_THROW(apply_config_text(cfg, "[features]\nfoo = 1\n"), Error);
  EXPECT_THROW(apply_config_text(cfg, "[features\n"), Error);
}

TEST(Config, LoadFromFile) {
  const fs::path dir = st::temp_dir("config");
  st::write_text(dir / "run.ini", "[similarity]\nk = 6\ndepth = 2\n");
  const auto cfg = load_config((dir / "run.ini").string());
  EXPECT_EQ(cfg.vocab_k, 6);
  EXPECT_EQ(cfg.vocab_depth, 2);
  EXPECT_THROW(load_config((dir / "missing.ini").string()), Error);
  fs::remove_all(dir);
}

TEST(Config, EntriesSortedAndComplete) {
  const auto e = config_entries(RunConfig{});
  ASSERT_FALSE(e.empty());
  for (std::size_t i = 1; i < e.size(); ++i) EXPECT_LT(e[i - 1].first, e[i].first);
  RunConfig round;
  for (const auto& [k, v] : e) set_config_value(round, k, v);
  EXPECT_EQ(config_entries(round), e);
}

TEST(Config, HashTracksEffectiveValues) {
  RunConfig a, b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  apply_override(b, "features.fast_threshold=11");
  EXPECT_NE(config_hash(a), config_hash(b));
  apply_override(b, "features.fast_threshold=10");
  EXPECT_EQ(config_hash(a), config_hash(b));
  apply_override(b, "features.bin_dim=50");
  EXPECT_EQ(config_hash(a), config_hash(b));
}

TEST(ScoreboardFormat, ShortestRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(parse_double(format_double(std::numeric_limits<double>::min())), std::numeric_limits<double>::min());
  EXPECT_THROW(parse_double("1.5x"), Error);
  EXPECT_THROW(parse_double(""), Error);
}

TEST(ScoreboardFormat, CellCsvRoundTrip) {
  Cell c{"seq", "inertial", CellStatus::Ok, {}, {}};
  c.records.push_back(series_record("inertial.accel_norm", "m/s^2", std::vector<double>{9.8, 9.81, 1.0 / 3.0}));
  c.records.push_back(absent_record("inertial.gyro_norm", Level::Sample, "deg/s"));
  c.records.push_back(scalar_record("inertial.rotation_only", "%", 12.5));
  std::stringstream ss;
  write_cell_csv(ss, c);
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), kCellCsvHeader);
  EXPECT_NE(text.find("inertial.gyro_norm,SAMPLE,deg/s,ABSENT,\n"), std::string::npos);
  EXPECT_NE(text.find("inertial.rotation_only,SEQUENCE,%,value,12.5\n"), std::string::npos);
  std::stringstream in(text);
  EXPECT_EQ(read_cell_csv(in, "mem"), c.records);
}

TEST(ScoreboardFormat, CellCsvRejectsMalformed) {
  std::stringstream bad_header("metric,level\n");
  EXPECT_THROW(read_cell_csv(bad_header, "mem"), Error);
  std::stringstream bad_cols("metric_id,level,unit,key,value\nm,SAMPLE,u,0\n");
  EXPECT_THROW(read_cell_csv(bad_cols, "mem"), Error);
  std::stringstream bad_level("metric_id,level,unit,key,value\nm,FRAME,u,0,1\n");
  EXPECT_THROW(read_cell_csv(bad_level, "mem"), Error);
  std::stringstream bad_value("metric_id,level,unit,key,value\nm,SAMPLE,u,0,abc\n");
  EXPECT_THROW(read_cell_csv(bad_value, "mem"), Error);
}

TEST(ScoreboardFormat, PutReplacesAndOrders) {
  Scoreboard sb;
  sb.put({"b", "blur", CellStatus::Ok, {scalar_record("blur.score", "", 1.0)}, {}});
  sb.put({"a", "general", CellStatus::Ok, {}, {}});
  sb.put({"a", "blur", CellStatus::Failed, {}, "boom"});
  sb.put({"b", "blur", CellStatus::Ok, {scalar_record("blur.score", "", 2.0)}, {}});
  EXPECT_EQ(sb.size(), 3u);
  EXPECT_EQ(sb.sequences(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(sb.elements(), (std::vector<std::string>{"blur", "general"}));
  EXPECT_EQ(sb.cell("b", "blur")->records[0].values[0].value, 2.0);
  ASSERT_EQ(sb.failures().size(), 1u);
  EXPECT_EQ(sb.failures()[0]->error, "boom");
  EXPECT_EQ(sb.records("blur.score").size(), 1u);
  EXPECT_EQ(sb.cell("c", "blur"), nullptr);
}

TEST(ScoreboardFormat, SaveLoadRoundTrip) {
  const fs::path dir = st::temp_dir("scoreboard");
  Scoreboard sb;
  sb.dataset_name = "euroc";
  sb.provenance.config_hash = config_hash(RunConfig{});
  sb.provenance.created = "2024-01-01T00:00:00Z";
  sb.provenance.config = config_entries(RunConfig{});
  sb.put({"MH_01", "general", CellStatus::Ok,
          {scalar_record("general.duration", "s", 182.5), series_record("general.t", "s", std::vector<double>{0, 0.05})},
          {}});
  sb.put({"MH_01", "inertial", CellStatus::Absent, {absent_record("inertial.accel_norm", Level::Sample, "m/s^2")}, {}});
  sb.put({"MH_02", "blur", CellStatus::Failed, {}, "decode error"});
  save_scoreboard(sb, dir);
  EXPECT_TRUE(fs::exists(dir / "MH_01" / "general.csv"));
  EXPECT_FALSE(fs::exists(dir / "MH_02" / "blur.csv"));

  const auto back = load_scoreboard(dir);
  EXPECT_EQ(back.dataset_name, "euroc");
  EXPECT_EQ(back.provenance.config_hash, sb.provenance.config_hash);
  EXPECT_EQ(back.provenance.created, sb.provenance.created);
  EXPECT_EQ(back.provenance.config, sb.provenance.config);
  ASSERT_EQ(back.size(), sb.size());
  for (const auto& [key, c] : sb.cells()) {
    const Cell* b = back.cell(key.first, key.second);
    ASSERT_NE(b, nullptr);
    EXPECT_EQ(b->status, c.status);
    EXPECT_EQ(b->records, c.records);
    EXPECT_EQ(b->error, c.error);
  }

  const fs::path again = dir / "again";
  save_scoreboard(back, again);
  EXPECT_EQ(st::read_file(dir / "scoreboard.json"), st::read_file(again / "scoreboard.json"));
  fs::remove_all(dir);
}

TEST(ScoreboardFormat, LoadErrors) {
  const fs::path dir = st::temp_dir("scoreboard_bad");
  EXPECT_THROW(load_scoreboard(dir), Error);
  st::write_text(dir / "scoreboard.json", "{not json");
  EXPECT_THROW(load_scoreboard(dir), Error);
  fs::remove_all(dir);
}
