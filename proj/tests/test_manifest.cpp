#include <gtest/gtest.h>

#include <fstream>

#include "slamchar/handler.hpp"
#include "slamchar/manifest.hpp"
#include "support/fixtures.hpp"

using namespace slamchar;
namespace st = slamchar::testing;
namespace fs = std::filesystem;

namespace {

st::FixtureSpec small_spec(int frames, int imu) {
  st::FixtureSpec s;
  s.frames = frames;
  s.imu_samples = imu;
  s.width = 48;
  s.height = 32;
  s.shift = 2;
  return s;
}

class ManifestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = st::temp_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST_F(ManifestTest, KittiSingleSequence) {
  st::write_kitti_dataset(dir_, {"00"}, small_spec(5, 0));
  const auto m = adapt_kitti(dir_);
  ASSERT_EQ(m.sequences.size(), 1u);
  const auto& s = m.sequences[0];
  EXPECT_EQ(s.name, "00");
  ASSERT_TRUE(s.cam_left);
  EXPECT_EQ(s.cam_left->timestamps.size(), 5u);
  EXPECT_TRUE(s.cam_right);
  EXPECT_FALSE(s.imu);
  EXPECT_EQ(s.cam_left->timestamps[1], 50'000'000);
  EXPECT_FALSE(m.sensor_limits);
  EXPECT_TRUE(validate_manifest(m).empty());
}

TEST_F(ManifestTest, KittiCountMismatch) {
  st::write_kitti_dataset(dir_, {"03"}, small_spec(5, 0));
  const fs::path times = dir_ / "sequences" / "03" / "times.txt";
  std::ifstream in(times);
  std::string line, kept;
  for (int i = 0; i < 4 && std::getline(in, line); ++i) kept += line + "\n";
  in.close();
  st::write_text(times, kept);
  try {
    adapt_kitti(dir_);
    FAIL() << "expected a count mismatch";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("count mismatch"), std::string::npos) << msg;
    EXPECT_NE(msg.find("03"), std::string::npos) << msg;
    EXPECT_NE(msg.find("5 images"), std::string::npos) << msg;
    EXPECT_NE(msg.find("4 timestamps"), std::string::npos) << msg;
  }
}

TEST_F(ManifestTest, KittiMissingTimes) {
  st::write_kitti_dataset(dir_, {"00"}, small_spec(3, 0));
  fs::remove(dir_ / "sequences" / "00" / "times.txt");
  EXPECT_THROW(adapt_kitti(dir_), Error);
}

TEST_F(ManifestTest, MissingRoot) { EXPECT_THROW(adapt_kitti(dir_ / "nope"), Error); }

TEST_F(ManifestTest, AslCountsAndUnits) {
  st::write_asl_dataset(dir_, {"MH_01"}, small_spec(10, 100));
  const auto m = adapt_asl(dir_, "euroc");
  ASSERT_EQ(m.sequences.size(), 1u);
  const auto& s = m.sequences[0];
  EXPECT_EQ(s.cam_left->timestamps.size(), 10u);
  EXPECT_EQ(s.cam_right->timestamps.size(), 10u);
  ASSERT_TRUE(s.imu);
  EXPECT_EQ(s.imu->count, 100u);
  EXPECT_EQ(s.cam_left->timestamps.front(), 0);
  EXPECT_EQ(s.cam_left->timestamps[1], 50'000'000);
  ASSERT_TRUE(m.sensor_limits);
  EXPECT_DOUBLE_EQ(m.sensor_limits->gyro, 1000.0);

  const auto imu = load_imu(m, s);
  ASSERT_EQ(imu.size(), 100u);
  EXPECT_DOUBLE_EQ(imu[1].t, 0.005);
  // gyro converted rad/s -> deg/s, accel unchanged
  st::ImuGenerator gen{1.0};
  double v[6];
  gen.sample(0.005, v);
  EXPECT_NEAR(imu[1].gyro.x, v[0] * 180.0 / M_PI, 1e-9);
  EXPECT_NEAR(imu[1].accel.z, v[5], 1e-12);
  EXPECT_TRUE(validate_manifest(m).empty());
}

TEST_F(ManifestTest, AslSingleSequenceRoot) {
  st::write_asl_sequence(dir_ / "V1_01", small_spec(4, 20), 5);
  const auto m = adapt_asl(dir_ / "V1_01", "euroc");
  ASSERT_EQ(m.sequences.size(), 1u);
  EXPECT_EQ(m.sequences[0].name, "V1_01");
}

TEST_F(ManifestTest, AslMalformedImuRow) {
  st::write_asl_dataset(dir_, {"seq"}, small_spec(3, 10));
  const fs::path csv = dir_ / "seq" / "mav0" / "imu0" / "data.csv";
  std::ofstream(csv, std::ios::app) << "1403636579900000000,0.1,0.2,0.3,0.4,0.5\n";
  try {
    adapt_asl(dir_, "euroc");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("malformed row"), std::string::npos);
    EXPECT_NE(msg.find(":12"), std::string::npos) << msg;  // header + 10 rows + bad row
  }
}

TEST_F(ManifestTest, AslMissingCam0) {
  st::write_asl_dataset(dir_, {"seq"}, small_spec(3, 10));
  fs::remove_all(dir_ / "seq" / "mav0" / "cam0");
  try {
    adapt_asl(dir_, "tumvi");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("missing cam0"), std::string::npos);
  }
}

TEST_F(ManifestTest, ValidateMissingFile) {
  st::write_kitti_dataset(dir_, {"00"}, small_spec(5, 0));
  const auto m = adapt_kitti(dir_);
  fs::remove(m.resolve(m.sequences[0].cam_left->files[2]));
  const auto f = validate_manifest(m);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].kind, "missing file");
}

TEST_F(ManifestTest, ValidateNonMonotonic) {
  st::write_kitti_dataset(dir_, {"00"}, small_spec(5, 0));
  auto m = adapt_kitti(dir_);
  auto& t = m.sequences[0].cam_left->timestamps;
  std::swap(t[2], t[3]);
  const auto f = validate_manifest(m);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].kind, "non-monotonic");
}

TEST_F(ManifestTest, ValidateDuplicatesAndCounts) {
  st::write_asl_dataset(dir_, {"a"}, small_spec(4, 10));
  auto m = adapt_asl(dir_, "euroc");
  m.sequences.push_back(m.sequences[0]);
  m.sequences[0].imu->count = 9;
  const auto f = validate_manifest(m);
  std::set<std::string> kinds;
  for (const auto& x : f) kinds.insert(x.kind);
  EXPECT_TRUE(kinds.count("duplicate sequence"));
  EXPECT_TRUE(kinds.count("count mismatch"));
}

TEST_F(ManifestTest, SaveLoadRoundTrip) {
  st::write_asl_dataset(dir_ / "asl", {"a", "b"}, small_spec(4, 17));
  st::write_kitti_dataset(dir_ / "kitti", {"00", "01"}, small_spec(3, 0));
  for (const auto& m : {adapt_asl(dir_ / "asl", "tumvi"), adapt_kitti(dir_ / "kitti")}) {
    const fs::path p = dir_ / (m.dataset_name + ".manifest.json");
    save_manifest(m, p);
    const auto back = load_manifest(p);
    EXPECT_EQ(back, m);
    EXPECT_TRUE(validate_manifest(back).empty());
    // serialization is stable
    save_manifest(back, dir_ / "again.json");
    std::ifstream a(p), b(dir_ / "again.json");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    EXPECT_EQ(sa.str(), sb.str());
  }
}

TEST_F(ManifestTest, TimestampsStoredAsNineDigitStrings) {
  st::write_kitti_dataset(dir_, {"00"}, small_spec(3, 0));
  const auto j = to_json(adapt_kitti(dir_));
  const auto& ts = j["sequences"][0]["streams"]["cam_left"]["timestamps"];
  EXPECT_EQ(ts[1].get<std::string>(), "0.050000000");
}

TEST_F(ManifestTest, AdaptationDoesNotDecodePixels) {
  st::write_kitti_dataset(dir_, {"00"}, small_spec(3, 0));
  // corrupt every image: adaptation still succeeds, decoding does not
  for (const auto& e : fs::recursive_directory_iterator(dir_)) {
    if (e.path().extension() == ".png") st::write_text(e.path(), "not a png");
  }
  const auto m = adapt_kitti(dir_);
  auto frames = slamchar::frames(m, m.sequences[0], SensorKind::CamLeft);
  try {
    frames.next();
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("000000.png"), std::string::npos) << e.what();
  }
}

TEST_F(ManifestTest, FrameStreamOrderAndChannels) {
  st::write_kitti_dataset(dir_, {"00"}, small_spec(5, 0));
  const auto m = adapt_kitti(dir_);
  auto stream = slamchar::frames(m, m.sequences[0], SensorKind::CamLeft);
  std::size_t expect = 0;
  double last_t = -1.0;
  while (auto f = stream.next()) {
    EXPECT_EQ(f->index, expect++);
    EXPECT_GT(f->t, last_t);
    last_t = f->t;
    EXPECT_EQ(f->image.channels, 1);
    EXPECT_EQ(f->image.width, 48);
  }
  EXPECT_EQ(expect, 5u);
  EXPECT_THROW(slamchar::frames(m, m.sequences[0], SensorKind::Imu), Error);
}

TEST_F(ManifestTest, TruncatedPngFailsToDecode) {
  st::write_kitti_dataset(dir_, {"00"}, small_spec(2, 0));
  const fs::path p = dir_ / "sequences" / "00" / "image_0" / "000001.png";
  const auto size = fs::file_size(p);
  fs::resize_file(p, size / 2);
  const auto m = adapt_kitti(dir_);
  auto stream = slamchar::frames(m, m.sequences[0], SensorKind::CamLeft);
  EXPECT_NO_THROW(stream.next());
  EXPECT_THROW(stream.next(), Error);
}

TEST_F(ManifestTest, RgbFramesKeepThreeChannels) {
  auto spec = small_spec(2, 0);
  spec.rgb = true;
  st::write_kitti_dataset(dir_, {"00"}, spec);
  const auto m = adapt_kitti(dir_);
  auto stream = slamchar::frames(m, m.sequences[0], SensorKind::CamLeft);
  EXPECT_EQ(stream.next()->image.channels, 3);
}
