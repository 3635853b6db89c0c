#include "cbfnav/math_core.hpp"

namespace cbfnav {

Mat3 skew(const Vec3& v) {
    Mat3 r;
    r.m[0][0] = 0.0;  r.m[0][1] = -v.z; r.m[0][2] = v.y;
    r.m[1][0] = v.z;  r.m[1][1] = 0.0;  r.m[1][2] = -v.x;
    r.m[2][0] = -v.y; r.m[2][1] = v.x;  r.m[2][2] = 0.0;
    return r;
}

Vec3 vee(const Mat3& a) {
    return {a.m[2][1], a.m[0][2], a.m[1][0]};
}

Rot3 Rot3::rot_x(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 m = Mat3::identity();
    m.m[1][1] = c; m.m[1][2] = -s;
    m.m[2][1] = s; m.m[2][2] = c;
    return Rot3(m, unchecked{});
}

Rot3 Rot3::rot_y(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 m = Mat3::identity();
    m.m[0][0] = c;  m.m[0][2] = s;
    m.m[2][0] = -s; m.m[2][2] = c;
    return Rot3(m, unchecked{});
}

Rot3 Rot3::rot_z(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 m = Mat3::identity();
    m.m[0][0] = c; m.m[0][1] = -s;
    m.m[1][0] = s; m.m[1][1] = c;
    return Rot3(m, unchecked{});
}

Rot3 Rot3::exp(const Vec3& w) {
    const double theta2 = w.squared_norm();
    const double theta = std::sqrt(theta2);
    // series below ~1e-5 rad keeps full double precision without dividing by theta
    double a, b;
    if (theta < 1e-5) {
        a = 1.0 - theta2 / 6.0;
        b = 0.5 - theta2 / 24.0;
    } else {
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / theta2;
    }
    const Mat3 k = skew(w);
    const Mat3 r = Mat3::identity() + k * a + (k * k) * b;
    return Rot3(r, unchecked{});
}

Rot3 Rot3::from_matrix(const Mat3& m) {
    Rot3 r(m, unchecked{});
    if (r.orthonormality_error() > 1e-6) {
        throw std::invalid_argument("Rot3::from_matrix: input is not orthonormal");
    }
    if (m.det() < 0.0) {
        throw std::invalid_argument("Rot3::from_matrix: input is a reflection");
    }
    return r;
}

Rot3 Rot3::renormalized() const {
    Vec3 c0 = m_.col(0).normalized();
    Vec3 c1 = (m_.col(1) - c0 * c0.dot(m_.col(1))).normalized();
    Vec3 c2 = c0.cross(c1);
    return Rot3(Mat3::from_columns(c0, c1, c2), unchecked{});
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Vec3 vee_error(const Rot3& current, const Rot3& desired) {
    const Mat3 a = current.matrix().transposed() * desired.matrix();
    return vee(a - a.transposed()) * 0.5;
}

EulerAngles rot_to_euler(const Rot3& r) {
    const Mat3& m = r.matrix();
    // ZYX: R = Rz(yaw) Ry(pitch) Rx(roll); m[2][0] = -sin(pitch)
    if (std::fabs(m.m[2][0]) > 0.995) {
        throw GimbalLockError("rot_to_euler: pitch too close to +-pi/2");
    }
    EulerAngles e;
    e.pitch = -std::asin(m.m[2][0]);
    e.roll = std::atan2(m.m[2][1], m.m[2][2]);
    e.yaw = std::atan2(m.m[1][0], m.m[0][0]);
    return e;
}

Rot3 euler_to_rot(const EulerAngles& e) {
    return Rot3::rot_z(e.yaw) * Rot3::rot_y(e.pitch) * Rot3::rot_x(e.roll);
}

}  // namespace cbfnav
