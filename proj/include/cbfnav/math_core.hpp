#pragma once

// Frames, rotations and rigid-transform algebra shared by every other module.
//
// Conventions used throughout:
//  - right-handed frames with Z pointing toward the ground ("down-Z"), so an
//    airborne vehicle has negative z and descending means z increasing
//  - Euler angles are ZYX (yaw about Z, then pitch about Y, then roll about X)
//  - Rot3 stores the matrix that maps local coordinates into the parent frame

#include <cmath>
#include <stdexcept>
#include <string>

namespace cbfnav {

// Thrown when a rotation is queried for Euler angles too close to pitch +-90 deg.
struct GimbalLockError : std::domain_error {
    using std::domain_error::domain_error;
};

// Thrown when an invalid (gated-out) measurement is fed to navigation math.
struct GatedMeasurementError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when vehicle integration produces or receives a non-finite state.
struct IntegrationFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown on malformed scenario configuration; message names the field.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    constexpr double squared_norm() const { return dot(*this); }
    Vec3 normalized() const { return *this / norm(); }
    constexpr Vec3 cwise_mul(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }
    double max_abs() const { return std::max({std::fabs(x), std::fabs(y), std::fabs(z)}); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    void set(int i, double v) { (i == 0 ? x : (i == 1 ? y : z)) = v; }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Row-major 3x3 matrix. Only what the library needs; not a general tensor type.
struct Mat3 {
    double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};

    static constexpr Mat3 identity() {
        Mat3 r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
        return r;
    }
    static constexpr Mat3 diag(double a, double b, double c) {
        Mat3 r;
        r.m[0][0] = a; r.m[1][1] = b; r.m[2][2] = c;
        return r;
    }
    static constexpr Mat3 diag(const Vec3& d) { return diag(d.x, d.y, d.z); }
    static Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
        Mat3 r;
        r.m[0][0] = c0.x; r.m[0][1] = c1.x; r.m[0][2] = c2.x;
        r.m[1][0] = c0.y; r.m[1][1] = c1.y; r.m[1][2] = c2.y;
        r.m[2][0] = c0.z; r.m[2][1] = c1.z; r.m[2][2] = c2.z;
        return r;
    }

    Vec3 col(int j) const { return {m[0][j], m[1][j], m[2][j]}; }
    Vec3 row(int i) const { return {m[i][0], m[i][1], m[i][2]}; }

    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        return r;
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
        return r;
    }
    Vec3 operator*(const Vec3& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }
    Mat3 operator+(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] + o.m[i][j];
        return r;
    }
    Mat3 operator-(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] - o.m[i][j];
        return r;
    }
    Mat3 operator*(double s) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] * s;
        return r;
    }
    double max_abs() const {
        double a = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a = std::max(a, std::fabs(m[i][j]));
        return a;
    }
    double det() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }
};

// skew(v) * w == v x w
Mat3 skew(const Vec3& v);
// inverse of skew for the antisymmetric part: returns (m32, m13, m21)
Vec3 vee(const Mat3& a);

// Euler angles in radians, ZYX convention. Valid only away from pitch +-pi/2;
// conversion routines enforce |pitch| < pi/2 - 0.1.
struct EulerAngles {
    double roll = 0.0, pitch = 0.0, yaw = 0.0;
};

// Proper rotation. Construction is checked: from_matrix rejects input with
// ||R'R - I||_inf > 1e-6 or negative determinant; all named constructors
// produce exactly orthonormal matrices.
class Rot3 {
  public:
    Rot3() : m_(Mat3::identity()) {}

    static Rot3 identity() { return Rot3(); }
    static Rot3 rot_x(double angle);
    static Rot3 rot_y(double angle);
    static Rot3 rot_z(double angle);
    // Rodrigues exponential of a rotation vector (axis * angle).
    static Rot3 exp(const Vec3& w);
    // Checked: throws std::invalid_argument if not orthonormal within 1e-6.
    static Rot3 from_matrix(const Mat3& m);

    const Mat3& matrix() const { return m_; }
    Rot3 transposed() const { return Rot3(m_.transposed(), unchecked{}); }
    Rot3 operator*(const Rot3& o) const { return Rot3(m_ * o.m_, unchecked{}); }
    Vec3 operator*(const Vec3& v) const { return m_ * v; }
    // R^T v without forming the transpose
    Vec3 inverse_rotate(const Vec3& v) const {
        return {m_.m[0][0] * v.x + m_.m[1][0] * v.y + m_.m[2][0] * v.z,
                m_.m[0][1] * v.x + m_.m[1][1] * v.y + m_.m[2][1] * v.z,
                m_.m[0][2] * v.x + m_.m[1][2] * v.y + m_.m[2][2] * v.z};
    }

    double orthonormality_error() const {
        return (m_.transposed() * m_ - Mat3::identity()).max_abs();
    }
    // Gram-Schmidt polish; keeps long integrations on the manifold.
    Rot3 renormalized() const;

    bool finite() const {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (!std::isfinite(m_.m[i][j])) return false;
        return true;
    }

  private:
    struct unchecked {};
    Rot3(const Mat3& m, unchecked) : m_(m) {}
    Mat3 m_;
};

// Pose of a child frame in a parent frame: x_parent = R * x_child + t.
struct RigidTransform {
    Rot3 rotation;
    Vec3 translation;

    static RigidTransform identity() { return {}; }
    static RigidTransform translate(const Vec3& t) { return {Rot3::identity(), t}; }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    RigidTransform inverse() const {
        Rot3 rt = rotation.transposed();
        return {rt, -(rt * translation)};
    }
};

// compose(a, b): apply b first, then a (a is the outer frame).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

// Attitude error used by the attitude loop: the axis along which `current`
// must rotate to reach `desired`. Zero iff current^T * desired is symmetric.
Vec3 vee_error(const Rot3& current, const Rot3& desired);

// ZYX conversions. rot_to_euler throws GimbalLockError when |R31| > 0.995
// (pitch within ~0.1 rad of +-pi/2).
EulerAngles rot_to_euler(const Rot3& r);
Rot3 euler_to_rot(const EulerAngles& e);

// Position of a point seen by the camera, re-expressed at the body origin.
// p_camera_offset is the camera position in the body frame (axes parallel).
inline Vec3 camera_to_body(const Vec3& p_in_camera, const Vec3& p_camera_offset) {
    return p_camera_offset + p_in_camera;
}

}  // namespace cbfnav
