// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Student-t primitives: the general ellipsoidal primitive (TP), the
// superquadric primitive (TSQ) and the superquadric with an inverse warp built
// from 24 polynomial basis fields (TSQIW).
//
// All three share the tail profile k(f) = (1 + f/nu)^(-(nu+3)/2), where f is
// the squared Mahalanobis distance for TP and the superquadric inside-outside
// function for TSQ/TSQIW. k is 1 at the center and decays monotonically.

#include "tprim/dual.hpp"
#include "tprim/errors.hpp"
#include "tprim/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace tprim {

enum class Kind { TP, TSQ, TSQIW };

inline constexpr int kNumBasisFields = 24;
inline constexpr double kNuMin = 1.0;
inline constexpr double kEpsLo = 0.2;
inline constexpr double kEpsHi = 2.0;
inline constexpr double kKernelFlush = 1e-30;

using WarpWeights = std::array<double, kNumBasisFields>;

inline std::string_view kind_name(Kind k) {
    switch (k) {
    case Kind::TP: return "TP";
    case Kind::TSQ: return "TSQ";
    case Kind::TSQIW: return "TSQIW";
    }
    return "?";
}

inline Kind parse_kind(std::string_view s) {
    if (s == "TP") return Kind::TP;
    if (s == "TSQ") return Kind::TSQ;
    if (s == "TSQIW") return Kind::TSQIW;
    throw InvalidInput("unknown primitive kind '" + std::string(s) + "'");
}

struct Primitive {
    Kind kind = Kind::TP;
    Vec3 center{};
    Vec3 scale{1.0, 1.0, 1.0};
    Quaternion rotation{};
    double opacity = 1.0;
    std::vector<double> semantics; ///< raw logits, one per semantic class
    double eps1 = 1.0;
    double eps2 = 1.0;
    WarpWeights warp{};
    double nu = kNuMin;

    void validate() const {
        if (!(scale.x > 0.0 && scale.y > 0.0 && scale.z > 0.0))
            throw InvalidInput("primitive scales must be positive");
        if (!(opacity >= 0.0 && opacity <= 1.0)) throw InvalidInput("primitive opacity must lie in [0, 1]");
        if (!(nu >= kNuMin)) throw InvalidInput("primitive nu must be >= 1");
        const double qn = rotation.w * rotation.w + rotation.x * rotation.x + rotation.y * rotation.y +
                          rotation.z * rotation.z;
        if (!(qn > 0.0)) throw InvalidInput("primitive rotation is the zero quaternion");
        if (kind != Kind::TP && !(eps1 >= kEpsLo && eps1 <= kEpsHi && eps2 >= kEpsLo && eps2 <= kEpsHi))
            throw InvalidInput("shape exponents must lie in [0.2, 2]");
        for (double w : warp)
            if (!(w >= -1.0 && w <= 1.0)) throw InvalidInput("warp weights must lie in [-1, 1]");
        if (kind != Kind::TSQIW && std::any_of(warp.begin(), warp.end(), [](double w) { return w != 0.0; }))
            throw InvalidInput("warp weights are only meaningful for TSQIW primitives");
    }
};

/// Geometric parameters of a primitive lifted to scalar type T.
template <class T>
struct ShapeT {
    Vec3T<T> center;
    Vec3T<T> scale;
    QuaternionT<T> rotation;
    T eps1{1.0};
    T eps2{1.0};
    std::array<T, kNumBasisFields> warp{};
};

inline ShapeT<double> shape_of(const Primitive &p) {
    return {p.center, p.scale, p.rotation, p.eps1, p.eps2, p.warp};
}

/// Sigma = R diag(s^2) R^T.
inline Mat3 covariance_from(const Vec3 &s, const Quaternion &rot) {
    const Mat3 r = quat_to_rotation(rot);
    return r * Mat3::diagonal({s.x * s.x, s.y * s.y, s.z * s.z}) * r.transposed();
}

namespace detail {

template <class T>
T clamp_value(const T &x, double lo, double hi) {
    if (value_of(x) < lo) return T(lo);
    if (value_of(x) > hi) return T(hi);
    return x;
}

template <class T>
T abs_pow(const T &x, const T &p) {
    using std::abs;
    using std::pow;
    if (value_of(x) == 0.0) return T(0.0);
    return pow(abs(x), p);
}

} // namespace detail

/// World point to the primitive's local frame: R^T (x - m).
template <class T>
Vec3T<T> to_local(const Vec3 &x, const ShapeT<T> &shape) {
    const Mat3T<T> r = quat_to_rotation(shape.rotation);
    const Vec3T<T> d{x.x - shape.center.x, x.y - shape.center.y, x.z - shape.center.z};
    return transpose_mul(r, d);
}

template <class T>
T normalized_sq(const Vec3T<T> &local, const Vec3T<T> &s) {
    const T u = local.x / s.x, v = local.y / s.y, w = local.z / s.z;
    return u * u + v * v + w * w;
}

/// Superquadric inside-outside function; equals 1 on the surface. Fractional
/// exponents act on absolute values of the normalized coordinates.
template <class T>
T sq_implicit(const Vec3T<T> &local, const Vec3T<T> &s, const T &eps1, const T &eps2) {
    const T e1 = detail::clamp_value(eps1, kEpsLo, kEpsHi);
    const T e2 = detail::clamp_value(eps2, kEpsLo, kEpsHi);
    const T p2 = 2.0 / e2;
    const T p1 = 2.0 / e1;
    const T xy = detail::abs_pow(local.x / s.x, p2) + detail::abs_pow(local.y / s.y, p2);
    return detail::abs_pow(xy, e2 / e1) + detail::abs_pow(local.z / s.z, p1);
}

/// Basis field B_i(u, v, w), i in 1..24.
template <class T>
Vec3T<T> basis_field(int i, const T &u, const T &v, const T &w) {
    const T zero(0.0), one(1.0);
    switch (i) {
    case 1: return {one, zero, zero};
    case 2: return {zero, one, zero};
    case 3: return {zero, zero, one};
    case 4: return {u, zero, zero};
    case 5: return {zero, v, zero};
    case 6: return {zero, zero, w};
    case 7: return {v, zero, zero};
    case 8: return {w, zero, zero};
    case 9: return {zero, w, zero};
    case 10: return {zero, u, zero};
    case 11: return {zero, zero, u};
    case 12: return {zero, zero, v};
    case 13: return {-(w * v), w * u, zero};
    case 14: return {zero, -(u * w), u * v};
    case 15: return {v * w, zero, -(v * u)};
    case 16: return {w * w, zero, zero};
    case 17: return {zero, w * w, zero};
    case 18: return {zero, zero, u * u + v * v};
    case 19: return {u * u, zero, zero};
    case 20: return {zero, v * v, zero};
    case 21: return {zero, zero, w * w};
    case 22: {
        const T r2 = u * u + v * v;
        return {r2 * u, r2 * v, zero};
    }
    case 23: return {u * v, u * v, zero};
    case 24: return {u * v * v, u * u * v, zero};
    default: throw InvalidInput("basis_field: index " + std::to_string(i) + " outside 1..24");
    }
}

/// Inverse warp: x_local - sum_i w_i B_i(x_local / s), subtracted in metric space.
template <class T>
Vec3T<T> warp(const Vec3T<T> &local, const Vec3T<T> &s, const std::array<T, kNumBasisFields> &weights) {
    const T u = local.x / s.x, v = local.y / s.y, w = local.z / s.z;
    Vec3T<T> out = local;
    for (int i = 0; i < kNumBasisFields; ++i) {
        if (value_of(weights[i]) == 0.0 && std::is_same_v<T, double>) continue;
        const Vec3T<T> b = basis_field(i + 1, u, v, w);
        out.x = out.x - weights[i] * b.x;
        out.y = out.y - weights[i] * b.y;
        out.z = out.z - weights[i] * b.z;
    }
    return out;
}

/// Student-t tail profile (1 + f/nu)^(-(nu+3)/2), flushed to 0 below 1e-30.
template <class T>
T student_profile(const T &f, double nu) {
    using std::pow;
    const double n = std::max(nu, kNuMin);
    const T k = pow(1.0 + f / n, -(n + 3.0) / 2.0);
    if (value_of(k) < kKernelFlush) return T(0.0);
    return k;
}

/// Level value f of the profile at which the kernel equals `threshold`.
inline double profile_level(double threshold, double nu) {
    const double n = std::max(nu, kNuMin);
    return n * (std::pow(threshold, -2.0 / (n + 3.0)) - 1.0);
}

/// Scalar f fed to the profile: Mahalanobis^2 for TP, superquadric f otherwise.
template <class T>
T shape_level(Kind kind, const Vec3 &x, const ShapeT<T> &shape) {
    const Vec3T<T> local = to_local(x, shape);
    switch (kind) {
    case Kind::TP: return normalized_sq(local, shape.scale);
    case Kind::TSQ: return sq_implicit(local, shape.scale, shape.eps1, shape.eps2);
    case Kind::TSQIW:
        return sq_implicit(warp(local, shape.scale, shape.warp), shape.scale, shape.eps1, shape.eps2);
    }
    return T(0.0);
}

template <class T>
T kernel_t(Kind kind, const Vec3 &x, const ShapeT<T> &shape, double nu) {
    return student_profile(shape_level(kind, x, shape), nu);
}

/// log of Gamma((nu+3)/2) / (Gamma(nu/2) (nu pi)^{3/2}).
inline double log_t_normalizer(double nu) {
    const double n = std::max(nu, kNuMin);
    return std::lgamma(0.5 * (n + 3.0)) - std::lgamma(0.5 * n) - 1.5 * std::log(n * std::numbers::pi);
}

/// Conditional density p(x | P) used by the mixture: the normalized
/// multivariate t density for TP, the kernel itself for the superquadric families.
template <class T>
T conditional_density_t(Kind kind, const Vec3 &x, const ShapeT<T> &shape, double nu) {
    const T k = kernel_t(kind, x, shape, nu);
    if (kind != Kind::TP) return k;
    const T det_sqrt = shape.scale.x * shape.scale.y * shape.scale.z;
    return std::exp(log_t_normalizer(nu)) * k / det_sqrt;
}

// Plain-double entry points.

inline double tp_kernel(const Vec3 &x, const Primitive &p) {
    if (p.kind != Kind::TP) throw InvalidInput("tp_kernel: primitive is not TP");
    return kernel_t(Kind::TP, x, shape_of(p), p.nu);
}

inline double tp_density(const Vec3 &x, const Primitive &p) {
    if (p.kind != Kind::TP) throw InvalidInput("tp_density: primitive is not TP");
    if (!(p.nu > 0.0)) throw InvalidInput("tp_density: nu must be positive");
    return conditional_density_t(Kind::TP, x, shape_of(p), p.nu);
}

inline double sq_kernel(const Vec3 &x, const Primitive &p) {
    if (p.kind != Kind::TSQ) throw InvalidInput("sq_kernel: primitive is not TSQ");
    return kernel_t(Kind::TSQ, x, shape_of(p), p.nu);
}

inline double sqiw_kernel(const Vec3 &x, const Primitive &p) {
    if (p.kind != Kind::TSQIW) throw InvalidInput("sqiw_kernel: primitive is not TSQIW");
    return kernel_t(Kind::TSQIW, x, shape_of(p), p.nu);
}

inline double eval_kernel(const Vec3 &x, const Primitive &p) { return kernel_t(p.kind, x, shape_of(p), p.nu); }

inline double conditional_density(const Vec3 &x, const Primitive &p) {
    return conditional_density_t(p.kind, x, shape_of(p), p.nu);
}

/// Level f of x for p (see shape_level); f <= 1 is the unit support.
inline double level_at(const Vec3 &x, const Primitive &p) { return shape_level(p.kind, x, shape_of(p)); }

} // namespace tprim
