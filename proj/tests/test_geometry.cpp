#include <random>

#include <gtest/gtest.h>

#include "uam/geometry.hpp"

namespace uam {
namespace {

Vec3 random_vector(std::mt19937& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Vec3(u(rng), u(rng), u(rng));
}

Mat3 random_rotation(std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

TEST(Hat, ZeroVectorGivesZeroMatrix) {
  EXPECT_TRUE(hat(Vec3::Zero()).isZero(0.0));
}

TEST(Hat, UnitZExpandsCrossProduct) {
  Mat3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  EXPECT_TRUE(hat(Vec3::UnitZ()).isApprox(expected));
}

TEST(Hat, MatchesCrossProductAndIsSkew) {
  std::mt19937 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 w = random_vector(rng, 5.0);
    const Vec3 u = random_vector(rng, 5.0);
    EXPECT_LT((hat(w) * u - w.cross(u)).norm(), 1e-12);
    EXPECT_TRUE((hat(w).transpose() + hat(w)).isZero(0.0));
  }
}

TEST(Vee, InvertsHat) {
  EXPECT_TRUE(vee(Mat3::Zero()).isZero(0.0));
  EXPECT_TRUE(vee(hat(Vec3(1, 2, 3))).isApprox(Vec3(1, 2, 3)));
  std::mt19937 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 w = random_vector(rng, 10.0);
    EXPECT_LT((vee(hat(w)) - w).norm(), 1e-14);
  }
}

TEST(Vee, RejectsSymmetricPart) {
  Mat3 s = hat(Vec3(1, 2, 3));
  s(0, 1) += 1e-3;
  s(1, 0) += 1e-3;
  EXPECT_THROW(vee(s), NotSkewSymmetricError);
}

TEST(RotationError, IdentityCaseIsZero) {
  std::mt19937 rng(3);
  const Mat3 r = random_rotation(rng);
  EXPECT_LT(rotation_error(r, r).norm(), 1e-15);
}

TEST(RotationError, YawAgainstIdentity) {
  // 1/2 (Rz(a) - Rz(a)^T) has (1,0) entry sin(a).
  for (double a : {0.1, 0.7, M_PI / 2.0, 2.5}) {
    const Vec3 e = rotation_error(rot_z(a), Mat3::Identity());
    EXPECT_NEAR(e.x(), 0.0, 1e-15);
    EXPECT_NEAR(e.y(), 0.0, 1e-15);
    EXPECT_NEAR(e.z(), std::sin(a), 1e-15);
  }
  EXPECT_TRUE(rotation_error(rot_z(M_PI / 2.0), Mat3::Identity()).isApprox(Vec3::UnitZ()));
}

TEST(RotationError, SmallAngleMatchesTangent) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> radius(1e-6, 0.05);
  for (int i = 0; i < 1000; ++i) {
    Vec3 delta = random_vector(rng, 1.0).normalized() * radius(rng);
    const Vec3 e = rotation_error(Eigen::AngleAxisd(delta.norm(), delta.normalized())
                                      .toRotationMatrix(),
                                  Mat3::Identity());
    EXPECT_LE((e - delta).norm(), 0.01 * delta.norm());
  }
}

TEST(RotationError, AntisymmetricAndLeftInvariant) {
  std::mt19937 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 a = random_rotation(rng);
    const Mat3 b = random_rotation(rng);
    const Mat3 g = random_rotation(rng);
    EXPECT_LT((rotation_error(a, b) + rotation_error(b, a)).norm(), 1e-14);
    // (G B)^T (G A) = B^T A, so the error only sees the relative rotation.
    const Mat3 rel = b.transpose() * a;
    const Vec3 direct = vee(0.5 * (rel - rel.transpose()), 1e-12);
    EXPECT_LT((rotation_error(Mat3(g * a), Mat3(g * b)) - direct).norm(), 1e-13);
  }
}

TEST(RotationError, ZeroOnlyAtCoincidence) {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> angle(1e-3, M_PI - 1e-2);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 axis = random_vector(rng, 1.0).normalized();
    const Mat3 r = Eigen::AngleAxisd(angle(rng), axis).toRotationMatrix();
    EXPECT_GT(rotation_error(r, Mat3::Identity()).norm(), 1e-9);
  }
}

TEST(ExpLog, Identity) {
  EXPECT_TRUE(exp_so3(Vec3::Zero()).isApprox(Mat3::Identity()));
  EXPECT_TRUE(log_so3(Mat3::Identity()).isZero(0.0));
}

TEST(ExpLog, ExpMatchesAxisAngle) {
  EXPECT_LT((exp_so3(Vec3(0, 0, M_PI / 2.0)) - rot_z(M_PI / 2.0)).norm(), 1e-15);
  std::mt19937 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 w = random_vector(rng, 3.0);
    const Mat3 oracle = Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix();
    const Mat3 r = exp_so3(w);
    EXPECT_LT((r - oracle).norm(), 1e-13);
    EXPECT_TRUE(is_rotation(r));
  }
}

TEST(ExpLog, RoundTrip) {
  std::mt19937 rng(8);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 w = random_vector(rng, 0.5);
    EXPECT_LT((log_so3(exp_so3(w)) - w).norm(), 1e-10);
  }
  for (int i = 0; i < 1000; ++i) {
    const Vec3 w = random_vector(rng, 1.0).normalized() * 3.0;
    EXPECT_LT((log_so3(exp_so3(w)) - w).norm(), 1e-10);
  }
  for (int i = 0; i < 1000; ++i) {
    const Vec3 w = random_vector(rng, 1e-6);
    EXPECT_LT((log_so3(exp_so3(w)) - w).norm(), 1e-15);
  }
}

TEST(ExpLog, LogRejectsAngleNearPi) {
  EXPECT_THROW(log_so3(rot_x(M_PI)), LogSingularityError);
  EXPECT_THROW(log_so3(exp_so3(Vec3(0, M_PI - 1e-8, 0))), LogSingularityError);
  EXPECT_NO_THROW(log_so3(exp_so3(Vec3(0, M_PI - 1e-3, 0))));
}

TEST(Orthonormalize, RestoresRotation) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1e-4, 1e-4);
  for (int i = 0; i < 100; ++i) {
    Mat3 r = random_rotation(rng);
    const Mat3 clean = r;
    for (int k = 0; k < 9; ++k) r(k) += u(rng);
    const Mat3 fixed = orthonormalize(r);
    EXPECT_TRUE(is_rotation(fixed, 1e-13));
    EXPECT_LT((fixed - clean).norm(), 1e-3);
  }
}

TEST(Transform, AssociativeWithInverse) {
  std::mt19937 rng(10);
  for (int i = 0; i < 200; ++i) {
    const Transform a{random_rotation(rng), random_vector(rng, 2.0)};
    const Transform b{random_rotation(rng), random_vector(rng, 2.0)};
    const Transform c{random_rotation(rng), random_vector(rng, 2.0)};
    const Transform ab_c = (a * b) * c;
    const Transform a_bc = a * (b * c);
    EXPECT_LT((ab_c.matrix() - a_bc.matrix()).norm(), 1e-12);
    EXPECT_LT(((a * a.inverse()).matrix() - Eigen::Matrix4d::Identity()).norm(), 1e-12);
    EXPECT_LT((a.matrix() * b.matrix() - (a * b).matrix()).norm(), 1e-12);
  }
}

TEST(Quaternion, RoundTripKeepsRotation) {
  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Mat3 r = random_rotation(rng);
    const Vec4 q = to_wxyz(r);
    EXPECT_NEAR(q.norm(), 1.0, 1e-12);
    EXPECT_GE(q(0), 0.0);
    EXPECT_LT((from_wxyz(q) - r).norm(), 1e-12);
  }
}

}  // namespace
}  // namespace uam
