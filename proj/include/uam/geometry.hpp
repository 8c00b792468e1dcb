#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace uam {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vector4 = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar>
using Vector6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3 = Vector3<double>;
using Vec4 = Vector4<double>;
using Vec6 = Vector6<double>;
using Mat3 = Matrix3<double>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised by vee() when the input is not skew-symmetric within tolerance.
class NotSkewSymmetricError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

/// Raised by log_so3() when the rotation angle is too close to pi for a
/// unique logarithm.
class LogSingularityError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

template <typename Derived>
Matrix3<typename Derived::Scalar> hat(const Eigen::MatrixBase<Derived>& w) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using Scalar = typename Derived::Scalar;
  Matrix3<Scalar> m;
  m << Scalar(0), -w(2), w(1),
       w(2), Scalar(0), -w(0),
       -w(1), w(0), Scalar(0);
  return m;
}

/// Extracts the axial vector of the skew part of S without checking symmetry.
template <typename Derived>
Vector3<typename Derived::Scalar> vee_unchecked(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  return Vector3<Scalar>(s(2, 1) - s(1, 2), s(0, 2) - s(2, 0), s(1, 0) - s(0, 1)) *
         Scalar(0.5);
}

inline Vec3 vee(const Mat3& s, double tolerance = 1e-8) {
  if (!s.allFinite() || (s + s.transpose()).norm() >= tolerance) {
    throw NotSkewSymmetricError("vee: matrix is not skew-symmetric");
  }
  return vee_unchecked(s);
}

/// Attitude error 1/2 (R_ref^T R - R^T R_ref)^vee. Zero iff R == R_ref for
/// rotation distances below pi.
template <typename DerivedA, typename DerivedB>
Vector3<typename DerivedA::Scalar> rotation_error(const Eigen::MatrixBase<DerivedA>& r,
                                                  const Eigen::MatrixBase<DerivedB>& r_ref) {
  using Scalar = typename DerivedA::Scalar;
  const Matrix3<Scalar> rr = r_ref.template cast<Scalar>();
  const Matrix3<Scalar> m = rr.transpose() * r - r.transpose() * rr;
  return vee_unchecked(m) * Scalar(0.5);
}

template <typename Derived>
Matrix3<typename Derived::Scalar> exp_so3(const Eigen::MatrixBase<Derived>& w) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  using Scalar = typename Derived::Scalar;
  const Scalar theta_sq = w.squaredNorm();
  const Matrix3<Scalar> k = hat(w);
  Scalar a, b;
  if (theta_sq < Scalar(1e-10)) {
    a = Scalar(1) - theta_sq / Scalar(6);
    b = Scalar(0.5) - theta_sq / Scalar(24);
  } else {
    const Scalar theta = sqrt(theta_sq);
    a = sin(theta) / theta;
    b = (Scalar(1) - cos(theta)) / theta_sq;
  }
  return Matrix3<Scalar>::Identity() + a * k + b * k * k;
}

/// Principal logarithm. Rejects rotations whose angle is within 1e-6 of pi.
inline Vec3 log_so3(const Mat3& r) {
  const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::acos(c);
  if (theta > M_PI - 1e-6) {
    throw LogSingularityError("log_so3: rotation angle too close to pi");
  }
  const Vec3 axial = vee_unchecked(r);
  if (theta < 1e-5) {
    // theta / sin(theta) ~ 1 + theta^2 / 6
    return axial * (1.0 + theta * theta / 6.0);
  }
  return axial * (theta / std::sin(theta));
}

/// Projects a near-orthonormal matrix onto SO(3) with Newton-Schulz steps
/// toward the polar factor. Valid for ||R^T R - I|| well below 1.
template <typename Derived>
Matrix3<typename Derived::Scalar> orthonormalize(const Eigen::MatrixBase<Derived>& r,
                                                 int iterations = 3) {
  using Scalar = typename Derived::Scalar;
  Matrix3<Scalar> x = r;
  const Matrix3<Scalar> three = Matrix3<Scalar>::Identity() * Scalar(3);
  for (int i = 0; i < iterations; ++i) {
    x = x * (three - x.transpose() * x) * Scalar(0.5);
  }
  return x;
}

inline bool is_rotation(const Mat3& r, double tolerance = 1e-9) {
  return r.allFinite() && (r.transpose() * r - Mat3::Identity()).norm() < tolerance &&
         std::abs(r.determinant() - 1.0) < tolerance;
}

template <typename Scalar>
Matrix3<Scalar> rot_x(Scalar angle) {
  using std::cos;
  using std::sin;
  Matrix3<Scalar> m;
  m << Scalar(1), Scalar(0), Scalar(0),
       Scalar(0), cos(angle), -sin(angle),
       Scalar(0), sin(angle), cos(angle);
  return m;
}

template <typename Scalar>
Matrix3<Scalar> rot_y(Scalar angle) {
  using std::cos;
  using std::sin;
  Matrix3<Scalar> m;
  m << cos(angle), Scalar(0), sin(angle),
       Scalar(0), Scalar(1), Scalar(0),
       -sin(angle), Scalar(0), cos(angle);
  return m;
}

template <typename Scalar>
Matrix3<Scalar> rot_z(Scalar angle) {
  using std::cos;
  using std::sin;
  Matrix3<Scalar> m;
  m << cos(angle), -sin(angle), Scalar(0),
       sin(angle), cos(angle), Scalar(0),
       Scalar(0), Scalar(0), Scalar(1);
  return m;
}

/// Rigid transform (rotation, translation) mapping child-frame coordinates
/// into the parent frame.
template <typename Scalar>
struct TransformT {
  Matrix3<Scalar> rotation = Matrix3<Scalar>::Identity();
  Vector3<Scalar> translation = Vector3<Scalar>::Zero();

  static TransformT Identity() { return {}; }

  TransformT operator*(const TransformT& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  Vector3<Scalar> operator*(const Vector3<Scalar>& point) const {
    return rotation * point + translation;
  }

  TransformT inverse() const {
    const Matrix3<Scalar> rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  Eigen::Matrix<Scalar, 4, 4> matrix() const {
    Eigen::Matrix<Scalar, 4, 4> m = Eigen::Matrix<Scalar, 4, 4>::Identity();
    m.template topLeftCorner<3, 3>() = rotation;
    m.template topRightCorner<3, 1>() = translation;
    return m;
  }

  template <typename Other>
  TransformT<Other> cast() const {
    return {rotation.template cast<Other>(), translation.template cast<Other>()};
  }
};

using Transform = TransformT<double>;

inline bool is_valid(const Transform& t, double tolerance = 1e-9) {
  return is_rotation(t.rotation, tolerance) && t.translation.allFinite();
}

/// Unit quaternion in (w, x, y, z) order with non-negative w.
inline Vec4 to_wxyz(const Mat3& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return Vec4(q.w(), q.x(), q.y(), q.z());
}

inline Mat3 from_wxyz(const Vec4& q) {
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).normalized().toRotationMatrix();
}

}  // namespace uam
