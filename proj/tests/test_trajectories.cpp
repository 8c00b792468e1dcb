#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "uam/trajectories.hpp"

namespace uam {
namespace {

TrajectorySpec spec_of(TrajectoryKind kind) {
  TrajectorySpec s;
  s.kind = kind;
  return s;
}

TEST(Trajectory, ParseRoundTrip) {
  for (auto k : {TrajectoryKind::kSetpoint, TrajectoryKind::kEllipse, TrajectoryKind::kFigure8,
                 TrajectoryKind::kFile}) {
    EXPECT_EQ(parse_trajectory_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_trajectory_kind("circle"), std::invalid_argument);
}

TEST(Trajectory, SetpointIsFixed) {
  const auto s = spec_of(TrajectoryKind::kSetpoint);
  for (double t : {0.0, 13.7, 60.0}) {
    const EeTarget e = sample(s, t);
    EXPECT_EQ(e.p_ref, Vec3(0.0, 0.0, 1.3));
    EXPECT_EQ(e.R_ref, Mat3::Identity());
    EXPECT_EQ(e.v_ref, Vec6::Zero());
  }
}

TEST(Trajectory, EllipseFormula) {
  const auto s = spec_of(TrajectoryKind::kEllipse);
  const EeTarget e0 = sample(s, 0.0);
  EXPECT_NEAR(e0.p_ref.x(), 0.0, 1e-15);
  EXPECT_NEAR(e0.p_ref.z(), 1.5363277520, 1e-9);
  const EeTarget e = sample(s, 7.0);
  EXPECT_NEAR(e.p_ref.x(), 0.5 * std::sin(2.1), 1e-15);
  EXPECT_NEAR(e.p_ref.z(), 1.4 + 0.2 * std::sin(2.85), 1e-15);
  EXPECT_EQ(e.p_ref.y(), 0.0);
  EXPECT_EQ(e.R_ref, Mat3::Identity());
}

TEST(Trajectory, Figure8PeakX) {
  const auto s = spec_of(TrajectoryKind::kFigure8);
  const double t_peak = M_PI / 2.0 / 0.3;
  EXPECT_NEAR(sample(s, t_peak).p_ref.x(), 0.7, 1e-12);
  double peak = 0.0;
  for (int i = 0; i <= 60000; ++i) peak = std::max(peak, std::abs(sample(s, 0.001 * i).p_ref.x()));
  EXPECT_NEAR(peak, 0.7, 1e-6);
}

TEST(Trajectory, VelocityMatchesFiniteDifference) {
  for (auto k : {TrajectoryKind::kEllipse, TrajectoryKind::kFigure8}) {
    const auto s = spec_of(k);
    for (double t = 0.5; t < 59.5; t += 1.3) {
      const double h = 1e-6;
      const Vec3 fd = (sample(s, t + h).p_ref - sample(s, t - h).p_ref) / (2.0 * h);
      EXPECT_LT((sample(s, t).v_ref.head<3>() - fd).norm(), 1e-8) << to_string(k) << " t=" << t;
    }
  }
}

// Peak speed of |(a cos(w1 t), b cos(w2 t + phi))| over a dense grid.
double peak_speed(const TrajectorySpec& s) {
  double peak = 0.0;
  for (int i = 0; i <= 600000; ++i) peak = std::max(peak, sample(s, 1e-4 * i).v_ref.head<3>().norm());
  return peak;
}

TEST(Trajectory, PeakSpeedAboutPointTwo) {
  const double ellipse = peak_speed(spec_of(TrajectoryKind::kEllipse));
  const double figure8 = peak_speed(spec_of(TrajectoryKind::kFigure8));
  // Same-frequency components: the peak is the larger semi-axis of the
  // velocity ellipse, sqrt of the top eigenvalue of the 2x2 Gram matrix.
  const double a = 0.15, b = 0.06, phi = 0.75;
  const double p = a * a + b * b;
  const double q = a * a - b * b;
  const double r = 2.0 * a * b * std::cos(phi);
  const double ellipse_closed = std::sqrt(0.5 * (p + std::sqrt(q * q + r * r)));
  EXPECT_NEAR(ellipse, ellipse_closed, 1e-4);
  // Figure-8 peaks at t = 0 where both cosines are 1.
  EXPECT_NEAR(figure8, std::hypot(0.18, 0.15), 1e-9);
  for (double v : {ellipse, figure8}) {
    EXPECT_GE(v, 0.15);
    EXPECT_LE(v, 0.25);
  }
}

TEST(Trajectory, OutOfRangeIsClampedAndFlagged) {
  const auto s = spec_of(TrajectoryKind::kEllipse);
  bool clamped = false;
  const EeTarget late = sample(s, 75.0, &clamped);
  EXPECT_TRUE(clamped);
  EXPECT_EQ(late.p_ref, sample(s, 60.0).p_ref);
  EXPECT_EQ(late.v_ref, Vec6::Zero());
  sample(s, -1.0, &clamped);
  EXPECT_TRUE(clamped);
  sample(s, 30.0, &clamped);
  EXPECT_FALSE(clamped);
}

TEST(Trajectory, Deterministic) {
  const auto s = spec_of(TrajectoryKind::kFigure8);
  EXPECT_EQ(sample(s, 12.345).p_ref, sample(s, 12.345).p_ref);
}

TEST(Trajectory, SpecValidation) {
  TrajectorySpec s;
  s.duration = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = TrajectorySpec{};
  s.kind = TrajectoryKind::kFile;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.samples = {TimedPose{1.0}, TimedPose{1.0}};
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

class TrajectoryFile : public ::testing::Test {
 protected:
  void SetUp() override {
    path_ = std::filesystem::temp_directory_path() /
            ("uam_traj_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name() + ".csv");
  }
  void TearDown() override { std::filesystem::remove(path_); }
  std::filesystem::path path_;
};

TEST_F(TrajectoryFile, CsvRoundTripAndInterpolation) {
  std::vector<TimedPose> poses(3);
  poses[0] = {0.0, Vec3(0.0, 0.0, 1.0), Mat3::Identity()};
  poses[1] = {1.0, Vec3(0.2, 0.0, 1.2), rot_z(0.4)};
  poses[2] = {2.5, Vec3(0.2, 0.3, 1.2), rot_z(0.4) * rot_y(0.2)};
  save_trajectory_csv(path_.string(), poses);
  const TrajectorySpec s = load_trajectory_csv(path_.string());
  ASSERT_EQ(s.samples.size(), 3u);
  EXPECT_NO_THROW(s.validate());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(s.samples[i].t, poses[i].t, 1e-12);
    EXPECT_LT((s.samples[i].p - poses[i].p).norm(), 1e-12);
    EXPECT_LT((s.samples[i].R - poses[i].R).norm(), 1e-12);
  }
  EXPECT_DOUBLE_EQ(s.duration, 2.5);

  const EeTarget mid = sample(s, 0.5);
  EXPECT_LT((mid.p_ref - Vec3(0.1, 0.0, 1.1)).norm(), 1e-12);
  EXPECT_LT((mid.R_ref - rot_z(0.2)).norm(), 1e-12);
  EXPECT_LT((mid.v_ref.head<3>() - Vec3(0.2, 0.0, 0.2)).norm(), 1e-12);
  EXPECT_LT((sample(s, 2.5).p_ref - poses[2].p).norm(), 1e-12);
}

TEST_F(TrajectoryFile, MalformedRowsAreRejected) {
  {
    std::ofstream out(path_);
    out << "t,px,py,pz,qw,qx,qy,qz\n0,0,0,1,1,0,0\n";
  }
  EXPECT_THROW(load_trajectory_csv(path_.string()), std::runtime_error);
  EXPECT_THROW(load_trajectory_csv((path_.parent_path() / "no_such_dir" / "x.csv").string()),
               std::runtime_error);
}

std::vector<TimedPoint> line(double t0, double t1, double dt, const Vec3& offset) {
  std::vector<TimedPoint> out;
  for (double t = t0; t <= t1 + 1e-12; t += dt) out.push_back({t, Vec3(t, 0.0, 1.0) + offset});
  return out;
}

TEST(Rmse, IdenticalStreamsAreZero) {
  const auto ref = line(0.0, 10.0, 0.01, Vec3::Zero());
  EXPECT_NEAR(rmse(ref, ref).rmse_cm, 0.0, 1e-12);
}

TEST(Rmse, ConstantOffset) {
  const auto ref = line(0.0, 10.0, 0.01, Vec3::Zero());
  const auto meas = line(0.0, 10.0, 0.01, Vec3(0.01, 0.0, 0.0));
  const RmseResult r = rmse(ref, meas);
  EXPECT_NEAR(r.rmse_cm, 1.0, 1e-9);
  ASSERT_EQ(r.error.size(), meas.size());
  EXPECT_NEAR(r.error[5].x(), 0.01, 1e-12);
}

TEST(Rmse, SinusoidErrorIsAmplitudeOverRootTwo) {
  const double amp = 0.03;
  std::vector<TimedPoint> ref, meas;
  for (int i = 0; i < 10000; ++i) {
    const double t = 0.001 * i;  // exactly 10 periods of 1 Hz
    ref.push_back({t, Vec3(0.0, 0.0, 1.0)});
    meas.push_back({t, Vec3(amp * std::sin(2.0 * M_PI * t), 0.0, 1.0)});
  }
  EXPECT_NEAR(rmse(ref, meas).rmse_cm, 100.0 * amp / std::sqrt(2.0), 1e-9);
}

TEST(Rmse, InterpolatesReferenceOntoMeasuredTimes) {
  const auto ref = line(0.0, 10.0, 0.1, Vec3::Zero());
  const auto meas = line(0.05, 9.95, 0.1, Vec3::Zero());
  EXPECT_NEAR(rmse(ref, meas).rmse_cm, 0.0, 1e-9);
}

TEST(Rmse, EmptyOverlapThrows) {
  EXPECT_THROW(rmse(line(0.0, 1.0, 0.1, Vec3::Zero()), line(2.0, 3.0, 0.1, Vec3::Zero())),
               std::invalid_argument);
  EXPECT_THROW(rmse({}, line(0.0, 1.0, 0.1, Vec3::Zero())), std::invalid_argument);
}

TEST(MeanStd, SampleStatistics) {
  const MeanStd m = mean_std({3.98, 4.1, 3.86});
  EXPECT_NEAR(m.mean, 3.98, 1e-12);
  EXPECT_NEAR(m.std, 0.12, 1e-12);
  EXPECT_EQ(mean_std({2.0}).std, 0.0);
}

}  // namespace
}  // namespace uam
