// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Random scene generators and small independent reference computations
// shared by the unit and acceptance tests.

#include "tprim/tprim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <set>
#include <random>
#include <vector>

namespace tprim::testing {

struct Rng {
    std::mt19937_64 eng;
    explicit Rng(std::uint64_t seed) : eng(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
    Vec3 vec(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }
    Quaternion unit_quaternion() {
        std::normal_distribution<double> n;
        Quaternion q{n(eng), n(eng), n(eng), n(eng)};
        return normalized(q);
    }
};

inline Primitive random_primitive(Rng &rng, Kind kind, int num_classes, double scale_lo = 0.5,
                                  double scale_hi = 2.0, double warp_mag = 0.1) {
    Primitive p;
    p.kind = kind;
    p.center = rng.vec(-1.0, 1.0);
    p.scale = rng.vec(scale_lo, scale_hi);
    p.rotation = rng.unit_quaternion();
    p.opacity = rng.uniform(0.3, 0.95);
    p.semantics.resize(static_cast<std::size_t>(num_classes));
    for (auto &c : p.semantics) c = rng.uniform(-2.0, 2.0);
    if (kind != Kind::TP) {
        p.eps1 = rng.uniform(0.4, 1.6);
        p.eps2 = rng.uniform(0.4, 1.6);
    }
    if (kind == Kind::TSQIW)
        for (auto &w : p.warp) w = rng.uniform(-warp_mag, warp_mag);
    p.nu = rng.uniform(1.0, 20.0);
    return p;
}

/// Row-major rotation from a (w, x, y, z) quaternion, written out directly.
inline std::array<double, 9> rotation_reference(Quaternion q) {
    const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
    const double w = q.w / n, x = q.x / n, y = q.y / n, z = q.z / n;
    return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
            2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
            2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

/// World point to the primitive's scale-free local frame, via the reference rotation.
inline std::array<double, 3> local_reference(const Vec3 &x, const Primitive &p) {
    const auto r = rotation_reference(p.rotation);
    const double d[3] = {x.x - p.center.x, x.y - p.center.y, x.z - p.center.z};
    std::array<double, 3> out{};
    for (int j = 0; j < 3; ++j) out[j] = r[0 * 3 + j] * d[0] + r[1 * 3 + j] * d[1] + r[2 * 3 + j] * d[2];
    return out;
}

/// Multivariate t density with the normalizer from tgamma and the quadratic
/// form from the explicit inverse of the covariance.
inline double t_density_reference(const Vec3 &x, const Primitive &p) {
    const auto r = rotation_reference(p.rotation);
    double cov[3][3]{};
    const double s2[3] = {p.scale.x * p.scale.x, p.scale.y * p.scale.y, p.scale.z * p.scale.z};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) cov[i][j] += r[i * 3 + k] * s2[k] * r[j * 3 + k];
    const double det = cov[0][0] * (cov[1][1] * cov[2][2] - cov[1][2] * cov[2][1]) -
                       cov[0][1] * (cov[1][0] * cov[2][2] - cov[1][2] * cov[2][0]) +
                       cov[0][2] * (cov[1][0] * cov[2][1] - cov[1][1] * cov[2][0]);
    double inv[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const int a = (j + 1) % 3, b = (j + 2) % 3, c = (i + 1) % 3, d = (i + 2) % 3;
            inv[i][j] = (cov[a][c] * cov[b][d] - cov[a][d] * cov[b][c]) / det;
        }
    const double dx[3] = {x.x - p.center.x, x.y - p.center.y, x.z - p.center.z};
    double q = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) q += dx[i] * inv[i][j] * dx[j];
    const double nu = p.nu;
    const double norm = std::tgamma((nu + 3.0) / 2.0) /
                        (std::tgamma(nu / 2.0) * std::pow(nu * 3.14159265358979323846, 1.5) * std::sqrt(det));
    return norm * std::pow(1.0 + q / nu, -(nu + 3.0) / 2.0);
}

using V = std::array<double, 3>;
using Field = std::function<V(double, double, double)>;

// Deformation table, one entry per basis field, transcribed independently.
inline const std::array<Field, 24> kTable = {
    [](double, double, double) { return V{1, 0, 0}; },
    [](double, double, double) { return V{0, 1, 0}; },
    [](double, double, double) { return V{0, 0, 1}; },
    [](double u, double, double) { return V{u, 0, 0}; },
    [](double, double v, double) { return V{0, v, 0}; },
    [](double, double, double w) { return V{0, 0, w}; },
    [](double, double v, double) { return V{v, 0, 0}; },
    [](double, double, double w) { return V{w, 0, 0}; },
    [](double, double, double w) { return V{0, w, 0}; },
    [](double u, double, double) { return V{0, u, 0}; },
    [](double u, double, double) { return V{0, 0, u}; },
    [](double, double v, double) { return V{0, 0, v}; },
    [](double u, double v, double w) { return V{-w * v, w * u, 0}; },
    [](double u, double v, double w) { return V{0, -u * w, u * v}; },
    [](double u, double v, double w) { return V{v * w, 0, -v * u}; },
    [](double, double, double w) { return V{w * w, 0, 0}; },
    [](double, double, double w) { return V{0, w * w, 0}; },
    [](double u, double v, double) { return V{0, 0, u * u + v * v}; },
    [](double u, double, double) { return V{u * u, 0, 0}; },
    [](double, double v, double) { return V{0, v * v, 0}; },
    [](double, double, double w) { return V{0, 0, w * w}; },
    [](double u, double v, double) { return V{(u * u + v * v) * u, (u * u + v * v) * v, 0}; },
    [](double u, double v, double) { return V{u * v, u * v, 0}; },
    [](double u, double v, double) { return V{u * v * v, u * u * v, 0}; },
};

/// Kernel re-derived step by step: local frame, warp, implicit, profile.
inline double sqiw_reference(const Vec3 &x, const Primitive &p) {
    auto l = local_reference(x, p);
    const double u = l[0] / p.scale.x, v = l[1] / p.scale.y, w = l[2] / p.scale.z;
    for (int i = 0; i < 24; ++i) {
        const V b = kTable[static_cast<std::size_t>(i)](u, v, w);
        for (int a = 0; a < 3; ++a) l[static_cast<std::size_t>(a)] -= p.warp[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(a)];
    }
    const double X = std::abs(l[0] / p.scale.x), Y = std::abs(l[1] / p.scale.y), Z = std::abs(l[2] / p.scale.z);
    const double e1 = p.eps1, e2 = p.eps2;
    const double f = std::pow(std::pow(X, 2 / e2) + std::pow(Y, 2 / e2), e2 / e1) + std::pow(Z, 2 / e1);
    return std::pow(1 + f / p.nu, -(p.nu + 3) / 2);
}


/// Greedy farthest point selection computed from scratch at every step.
inline std::vector<std::size_t> fps_brute_force(const std::vector<Vec3> &pts, std::size_t k, std::size_t seed) {
    std::vector<std::size_t> sel{seed};
    while (sel.size() < k) {
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (std::find(sel.begin(), sel.end(), i) != sel.end()) continue;
            double d = 1e300;
            for (std::size_t s : sel) {
                const Vec3 diff = pts[i] - pts[s];
                d = std::min(d, diff.x * diff.x + diff.y * diff.y + diff.z * diff.z);
            }
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        sel.push_back(best);
    }
    return sel;
}

/// Mean over target-present classes of 1 - |P & G| / |P | G| with P, G as index sets.
inline double jaccard_loss_by_sets(const LabelGrid &pred, const LabelGrid &gt) {
    double total = 0.0;
    int classes = 0;
    for (int c = 0; c <= gt.num_classes; ++c) {
        std::set<std::size_t> p, g;
        for (std::size_t v = 0; v < gt.labels.size(); ++v) {
            if (pred.labels[v] == c) p.insert(v);
            if (gt.labels[v] == c) g.insert(v);
        }
        if (g.empty()) continue;
        std::size_t inter = 0;
        for (auto v : p) inter += g.contains(v);
        const std::size_t uni = p.size() + g.size() - inter;
        total += 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
        ++classes;
    }
    return total / classes;
}

/// Kernel of any family through the warped reference: TP as the unit-exponent
/// superquadric without warp, TSQ with the warp ignored.
inline double kernel_reference(const Vec3 &x, Primitive p) {
    if (p.kind == Kind::TP) p.eps1 = p.eps2 = 1.0;
    if (p.kind != Kind::TSQIW) p.warp.fill(0.0);
    const double k = sqiw_reference(x, p);
    return k < 1e-30 ? 0.0 : k;
}

/// [1 - alpha; alpha * E] evaluated term by term over every primitive.
inline std::vector<double> compose_reference(const Vec3 &x, const Scene &scene) {
    const std::size_t c_count = static_cast<std::size_t>(scene.num_classes);
    double opacity_sum = 0.0;
    for (const auto &p : scene.primitives) opacity_sum += p.opacity;
    double free_prob = 1.0, den = 0.0;
    std::vector<double> num(c_count, 0.0);
    for (const auto &p : scene.primitives) {
        const double k = kernel_reference(x, p);
        free_prob *= 1.0 - p.opacity * k;
        const double w = (p.kind == Kind::TP ? t_density_reference(x, p) : k) * p.opacity / opacity_sum;
        double z = 0.0;
        for (double l : p.semantics) z += std::exp(l);
        for (std::size_t c = 0; c < c_count; ++c) num[c] += w * std::exp(p.semantics[c]) / z;
        den += w;
    }
    const double alpha = 1.0 - free_prob;
    std::vector<double> out{1.0 - alpha};
    for (std::size_t c = 0; c < c_count; ++c)
        out.push_back(den < 1e-30 ? alpha / static_cast<double>(c_count) : alpha * num[c] / den);
    return out;
}

} // namespace tprim::testing
