// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Forward-mode automatic differentiation with a fixed number of tangent
// directions. Kernels are written once as templates over the scalar type and
// instantiated with `double` for evaluation and `Dual<N>` for gradients.

#include <array>
#include <cmath>
#include <cstddef>

namespace tprim {

template <std::size_t N>
struct Dual {
    double v = 0.0;
    std::array<double, N> d{};

    constexpr Dual() = default;
    constexpr Dual(double value) : v(value) {} // NOLINT: implicit lift of constants

    static Dual variable(double value, std::size_t slot) {
        Dual r(value);
        r.d[slot] = 1.0;
        return r;
    }

    Dual &operator+=(const Dual &o) {
        v += o.v;
        for (std::size_t i = 0; i < N; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual &operator-=(const Dual &o) {
        v -= o.v;
        for (std::size_t i = 0; i < N; ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual &operator*=(const Dual &o) {
        for (std::size_t i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
        v *= o.v;
        return *this;
    }
    Dual &operator/=(const Dual &o) {
        const double inv = 1.0 / o.v;
        const double q = v * inv;
        for (std::size_t i = 0; i < N; ++i) d[i] = (d[i] - q * o.d[i]) * inv;
        v = q;
        return *this;
    }
};

namespace detail {
// Applies the chain rule for a unary function with value fx and slope dfx.
template <std::size_t N>
Dual<N> chain(const Dual<N> &x, double fx, double dfx) {
    Dual<N> r(fx);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = dfx * x.d[i];
    return r;
}
} // namespace detail

template <std::size_t N>
Dual<N> operator-(const Dual<N> &a) {
    return detail::chain(a, -a.v, -1.0);
}
template <std::size_t N>
Dual<N> operator+(Dual<N> a, const Dual<N> &b) {
    return a += b;
}
template <std::size_t N>
Dual<N> operator-(Dual<N> a, const Dual<N> &b) {
    return a -= b;
}
template <std::size_t N>
Dual<N> operator*(Dual<N> a, const Dual<N> &b) {
    return a *= b;
}
template <std::size_t N>
Dual<N> operator/(Dual<N> a, const Dual<N> &b) {
    return a /= b;
}
template <std::size_t N>
Dual<N> operator+(Dual<N> a, double b) {
    a.v += b;
    return a;
}
template <std::size_t N>
Dual<N> operator+(double a, Dual<N> b) {
    b.v += a;
    return b;
}
template <std::size_t N>
Dual<N> operator-(Dual<N> a, double b) {
    a.v -= b;
    return a;
}
template <std::size_t N>
Dual<N> operator-(double a, const Dual<N> &b) {
    return detail::chain(b, a - b.v, -1.0);
}
template <std::size_t N>
Dual<N> operator*(const Dual<N> &a, double b) {
    return detail::chain(a, a.v * b, b);
}
template <std::size_t N>
Dual<N> operator*(double a, const Dual<N> &b) {
    return detail::chain(b, a * b.v, a);
}
template <std::size_t N>
Dual<N> operator/(const Dual<N> &a, double b) {
    return detail::chain(a, a.v / b, 1.0 / b);
}
template <std::size_t N>
Dual<N> operator/(double a, const Dual<N> &b) {
    return detail::chain(b, a / b.v, -a / (b.v * b.v));
}

template <std::size_t N>
bool operator<(const Dual<N> &a, const Dual<N> &b) {
    return a.v < b.v;
}
template <std::size_t N>
bool operator<(const Dual<N> &a, double b) {
    return a.v < b;
}
template <std::size_t N>
bool operator>(const Dual<N> &a, double b) {
    return a.v > b;
}

template <std::size_t N>
Dual<N> sqrt(const Dual<N> &x) {
    const double s = std::sqrt(x.v);
    return detail::chain(x, s, s > 0.0 ? 0.5 / s : 0.0);
}
template <std::size_t N>
Dual<N> exp(const Dual<N> &x) {
    const double e = std::exp(x.v);
    return detail::chain(x, e, e);
}
template <std::size_t N>
Dual<N> log(const Dual<N> &x) {
    return detail::chain(x, std::log(x.v), 1.0 / x.v);
}
template <std::size_t N>
Dual<N> abs(const Dual<N> &x) {
    return x.v < 0.0 ? -x : x;
}

/// x^p for constant p. Zero base maps to zero with zero slope (p >= 1 in every
/// caller, where the one-sided derivative vanishes or is a subgradient).
template <std::size_t N>
Dual<N> pow(const Dual<N> &x, double p) {
    if (x.v == 0.0) return Dual<N>(0.0);
    const double xp = std::pow(x.v, p);
    return detail::chain(x, xp, p * xp / x.v);
}

/// x^p with both base and exponent carrying tangents; requires x >= 0.
template <std::size_t N>
Dual<N> pow(const Dual<N> &x, const Dual<N> &p) {
    if (x.v == 0.0) return Dual<N>(0.0);
    const double xp = std::pow(x.v, p.v);
    const double dx = p.v * xp / x.v;
    const double dp = xp * std::log(x.v);
    Dual<N> r(xp);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = dx * x.d[i] + dp * p.d[i];
    return r;
}

inline double value_of(double x) { return x; }
template <std::size_t N>
double value_of(const Dual<N> &x) {
    return x.v;
}

} // namespace tprim
