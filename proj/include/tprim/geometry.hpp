// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Small fixed-size linear algebra, quaternions and cylindrical coordinates.
// Everything is templated over the scalar so the same code serves plain
// evaluation and forward-mode differentiation.

#include "tprim/dual.hpp"
#include "tprim/errors.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace tprim {

template <class T>
struct Vec3T {
    T x{}, y{}, z{};

    T &operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    const T &operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    friend Vec3T operator+(const Vec3T &a, const Vec3T &b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3T operator-(const Vec3T &a, const Vec3T &b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3T operator*(const Vec3T &a, double s) { return {a.x * s, a.y * s, a.z * s}; }
    friend Vec3T operator*(double s, const Vec3T &a) { return {a.x * s, a.y * s, a.z * s}; }
    friend bool operator==(const Vec3T &, const Vec3T &) = default;
};

using Vec3 = Vec3T<double>;

template <class T>
T dot(const Vec3T<T> &a, const Vec3T<T> &b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline double norm(const Vec3 &a) { return std::sqrt(dot(a, a)); }

/// Row-major 3x3 matrix.
template <class T>
struct Mat3T {
    std::array<T, 9> a{};

    T &operator()(int r, int c) { return a[r * 3 + c]; }
    const T &operator()(int r, int c) const { return a[r * 3 + c]; }

    static Mat3T identity() {
        Mat3T m;
        m(0, 0) = T(1.0);
        m(1, 1) = T(1.0);
        m(2, 2) = T(1.0);
        return m;
    }
    static Mat3T diagonal(const Vec3T<T> &d) {
        Mat3T m;
        m(0, 0) = d.x;
        m(1, 1) = d.y;
        m(2, 2) = d.z;
        return m;
    }

    Mat3T transposed() const {
        Mat3T t;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) t(c, r) = (*this)(r, c);
        return t;
    }

    friend Vec3T<T> operator*(const Mat3T &m, const Vec3T<T> &v) {
        return {m(0, 0) * v.x + m(0, 1) * v.y + m(0, 2) * v.z, m(1, 0) * v.x + m(1, 1) * v.y + m(1, 2) * v.z,
                m(2, 0) * v.x + m(2, 1) * v.y + m(2, 2) * v.z};
    }
    friend Mat3T operator*(const Mat3T &l, const Mat3T &r) {
        Mat3T out;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                T acc(0.0);
                for (int k = 0; k < 3; ++k) acc = acc + l(i, k) * r(k, j);
                out(i, j) = acc;
            }
        return out;
    }
};

using Mat3 = Mat3T<double>;

/// Transpose-times-vector without materializing the transpose.
template <class T>
Vec3T<T> transpose_mul(const Mat3T<T> &m, const Vec3T<T> &v) {
    return {m(0, 0) * v.x + m(1, 0) * v.y + m(2, 0) * v.z, m(0, 1) * v.x + m(1, 1) * v.y + m(2, 1) * v.z,
            m(0, 2) * v.x + m(1, 2) * v.y + m(2, 2) * v.z};
}

inline double determinant(const Mat3 &m) {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

/// Orientation quaternion, component order (w, x, y, z).
template <class T>
struct QuaternionT {
    T w{1.0}, x{}, y{}, z{};
    friend bool operator==(const QuaternionT &, const QuaternionT &) = default;
};

using Quaternion = QuaternionT<double>;

/// Rotation matrix of q (local-to-world). Non-unit quaternions are normalized;
/// a zero quaternion carries no orientation and is rejected.
template <class T>
Mat3T<T> quat_to_rotation(const QuaternionT<T> &q) {
    using std::sqrt;
    const T n2 = q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z;
    if (!(value_of(n2) > 0.0) || !std::isfinite(value_of(n2)))
        throw InvalidInput("quat_to_rotation: quaternion has zero or non-finite norm");
    const T inv = 1.0 / sqrt(n2);
    const T w = q.w * inv, x = q.x * inv, y = q.y * inv, z = q.z * inv;

    Mat3T<T> r;
    r(0, 0) = 1.0 - 2.0 * (y * y + z * z);
    r(0, 1) = 2.0 * (x * y - w * z);
    r(0, 2) = 2.0 * (x * z + w * y);
    r(1, 0) = 2.0 * (x * y + w * z);
    r(1, 1) = 1.0 - 2.0 * (x * x + z * z);
    r(1, 2) = 2.0 * (y * z - w * x);
    r(2, 0) = 2.0 * (x * z - w * y);
    r(2, 1) = 2.0 * (y * z + w * x);
    r(2, 2) = 1.0 - 2.0 * (x * x + y * y);
    return r;
}

inline Quaternion normalized(const Quaternion &q) {
    const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
    if (!(n > 0.0)) throw InvalidInput("normalized: zero quaternion");
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

/// Quaternion for a rotation of `angle` radians about the unit axis.
inline Quaternion axis_angle(const Vec3 &axis, double angle) {
    const double n = norm(axis);
    if (!(n > 0.0)) throw InvalidInput("axis_angle: zero axis");
    const double s = std::sin(0.5 * angle) / n;
    return {std::cos(0.5 * angle), axis.x * s, axis.y * s, axis.z * s};
}

struct Cylindrical {
    double r = 0.0;
    double theta = 0.0;
    double z = 0.0;
};

/// Wraps an angle into [-pi, pi). +pi maps to -pi.
inline double wrap_angle(double theta) {
    constexpr double pi = std::numbers::pi;
    double t = std::remainder(theta, 2.0 * pi);
    if (t >= pi) t -= 2.0 * pi;
    if (t < -pi) t += 2.0 * pi;
    return t;
}

inline Vec3 cyl_to_cart(const Cylindrical &p) { return {p.r * std::cos(p.theta), p.r * std::sin(p.theta), p.z}; }

inline Cylindrical cart_to_cyl(const Vec3 &p) {
    const double r = std::hypot(p.x, p.y);
    if (r == 0.0) return {0.0, 0.0, p.z};
    return {r, wrap_angle(std::atan2(p.y, p.x)), p.z};
}

/// Lattice over (r, theta, z) with half-open bins.
struct CylindricalSpec {
    double r_min = 0.0;
    double r_max = 50.0;
    double theta_min = -std::numbers::pi;
    double theta_max = std::numbers::pi;
    double z_min = -5.0;
    double z_max = 3.0;
    int n_r = 100;
    int n_theta = 360;
    int n_z = 16;

    void validate() const {
        if (n_r < 1 || n_theta < 1 || n_z < 1) throw InvalidInput("CylindricalSpec: bin counts must be >= 1");
        if (r_min < 0.0) throw InvalidInput("CylindricalSpec: r_min must be >= 0");
        if (!(r_max > r_min)) throw InvalidInput("CylindricalSpec: r_max must exceed r_min");
        if (!(theta_max > theta_min)) throw InvalidInput("CylindricalSpec: empty angle range");
        if (!(z_max > z_min)) throw InvalidInput("CylindricalSpec: empty z range");
    }

    friend bool operator==(const CylindricalSpec &, const CylindricalSpec &) = default;
};

} // namespace tprim
