// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Aggregation of primitives into occupancy and semantics, and splatting onto a
// dense voxel lattice.
//
//   alpha(x) = 1 - prod_i (1 - alpha_i(x))                  geometry
//   e(x)     = sum_i p(x|P_i) a_i softmax(c_i) / sum_j p(x|P_j) a_j
//   occ(x)   = [1 - alpha(x); alpha(x) e(x)]                 index 0 = empty
//
// alpha_i(x) is opacity_i * kernel_i(x) under the default coupling; a_i are the
// opacities l1-normalized over the whole scene.

#include "tprim/errors.hpp"
#include "tprim/geometry.hpp"
#include "tprim/parallel.hpp"
#include "tprim/primitive.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace tprim {

struct Scene {
    std::vector<Primitive> primitives;
    int num_classes = 1;

    void validate() const {
        if (num_classes < 1) throw InvalidInput("scene needs at least one semantic class");
        if (num_classes > 255) throw InvalidInput("scene supports at most 255 semantic classes");
        for (const auto &p : primitives) {
            if (static_cast<int>(p.semantics.size()) != num_classes)
                throw InvalidInput("primitive semantic vector length differs from num_classes");
            p.validate();
        }
    }
};

/// Axis-aligned lattice: `origin` is the minimum corner, voxels are extent/dims.
struct GridSpec {
    Vec3 origin{-50.0, -50.0, -5.0};
    Vec3 extent{100.0, 100.0, 8.0};
    std::array<int, 3> dims{200, 200, 16};

    void validate() const {
        for (int d : dims)
            if (d < 1) throw InvalidInput("GridSpec: dims must be >= 1");
        if (!(extent.x > 0.0 && extent.y > 0.0 && extent.z > 0.0))
            throw InvalidInput("GridSpec: extent must be positive");
    }

    Vec3 voxel_size() const { return {extent.x / dims[0], extent.y / dims[1], extent.z / dims[2]}; }
    std::size_t num_voxels() const {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
               static_cast<std::size_t>(dims[2]);
    }
    /// x-fastest linear index.
    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
    }
    std::array<int, 3> unravel(std::size_t idx) const {
        const auto nx = static_cast<std::size_t>(dims[0]), ny = static_cast<std::size_t>(dims[1]);
        return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny), static_cast<int>(idx / (nx * ny))};
    }
    Vec3 center(int i, int j, int k) const {
        const Vec3 h = voxel_size();
        return {origin.x + (i + 0.5) * h.x, origin.y + (j + 0.5) * h.y, origin.z + (k + 0.5) * h.z};
    }
    Vec3 center(std::size_t idx) const {
        const auto [i, j, k] = unravel(idx);
        return center(i, j, k);
    }

    friend bool operator==(const GridSpec &, const GridSpec &) = default;
};

/// Default evaluation lattice: 200 x 200 x 16 over x, y in [-50, 50] m, z in [-5, 3] m.
inline GridSpec default_grid_spec() { return {}; }

/// Per-voxel labels in 0..C (0 = empty).
struct LabelGrid {
    GridSpec spec;
    int num_classes = 1;
    std::vector<std::uint8_t> labels;

    LabelGrid() = default;
    LabelGrid(const GridSpec &s, int c) : spec(s), num_classes(c), labels(s.num_voxels(), 0) {}

    std::uint8_t &at(int i, int j, int k) { return labels[spec.index(i, j, k)]; }
    std::uint8_t at(int i, int j, int k) const { return labels[spec.index(i, j, k)]; }
};

/// Per-voxel (C+1)-probability vectors, voxel-major with the class index inner.
struct ProbabilityGrid {
    GridSpec spec;
    int num_classes = 1;
    std::vector<double> probs;

    ProbabilityGrid() = default;
    ProbabilityGrid(const GridSpec &s, int c)
        : spec(s), num_classes(c), probs(s.num_voxels() * static_cast<std::size_t>(c + 1), 0.0) {}

    int stride() const { return num_classes + 1; }
    std::span<double> voxel(std::size_t idx) {
        return {probs.data() + idx * static_cast<std::size_t>(stride()), static_cast<std::size_t>(stride())};
    }
    std::span<const double> voxel(std::size_t idx) const {
        return {probs.data() + idx * static_cast<std::size_t>(stride()), static_cast<std::size_t>(stride())};
    }
};

/// Argmax over classes; ties go to the lowest index, empty included.
inline int argmax_class(std::span<const double> p) {
    int best = 0;
    for (int c = 1; c < static_cast<int>(p.size()); ++c)
        if (p[c] > p[best]) best = c;
    return best;
}

inline LabelGrid to_labels(const ProbabilityGrid &g) {
    LabelGrid out(g.spec, g.num_classes);
    for (std::size_t v = 0; v < out.labels.size(); ++v)
        out.labels[v] = static_cast<std::uint8_t>(argmax_class(g.voxel(v)));
    return out;
}

enum class OpacityCoupling {
    multiply, ///< alpha_i(x) = opacity_i * kernel_i(x)
    kernel_only,
};

inline std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double &v : out) v /= sum;
    return out;
}

/// Scene-wide quantities reused at every evaluation point.
struct ScenePrecompute {
    std::vector<std::vector<double>> class_probs; ///< softmax of each primitive's logits
    std::vector<double> prior;                    ///< l1-normalized opacities

    explicit ScenePrecompute(const Scene &scene) {
        class_probs.reserve(scene.primitives.size());
        double total = 0.0;
        for (const auto &p : scene.primitives) {
            class_probs.push_back(softmax(p.semantics));
            total += std::abs(p.opacity);
        }
        prior.resize(scene.primitives.size(), 0.0);
        if (total > 0.0)
            for (std::size_t i = 0; i < prior.size(); ++i) prior[i] = std::abs(scene.primitives[i].opacity) / total;
    }
};

inline constexpr double kDenominatorFloor = 1e-30;

/// alpha = 1 - prod(1 - a_i) with the terms multiplied in ascending order, so
/// the result depends only on the multiset of terms.
inline double combine_occupancy(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end());
    double free_prob = 1.0;
    for (double a : terms) free_prob *= 1.0 - std::clamp(a, 0.0, 1.0);
    return 1.0 - free_prob;
}

namespace detail {

inline double geometric_term(const Primitive &p, double kernel, OpacityCoupling coupling) {
    return coupling == OpacityCoupling::multiply ? p.opacity * kernel : kernel;
}

/// Composes occ(x) from the primitives listed in `active`.
inline void compose_from(const Vec3 &x, const Scene &scene, const ScenePrecompute &pre,
                         std::span<const std::uint32_t> active, OpacityCoupling coupling, std::span<double> out) {
    const int c_count = scene.num_classes;
    std::vector<double> terms;
    terms.reserve(active.size());
    std::vector<double> e(static_cast<std::size_t>(c_count), 0.0);
    double denom = 0.0;
    for (std::uint32_t i : active) {
        const Primitive &p = scene.primitives[i];
        const double k = eval_kernel(x, p);
        terms.push_back(geometric_term(p, k, coupling));
        const double w = (p.kind == Kind::TP ? conditional_density(x, p) : k) * pre.prior[i];
        if (w == 0.0) continue;
        denom += w;
        for (int c = 0; c < c_count; ++c) e[c] += w * pre.class_probs[i][c];
    }
    const double alpha = combine_occupancy(std::move(terms));
    out[0] = 1.0 - alpha;
    if (denom < kDenominatorFloor) {
        for (int c = 0; c < c_count; ++c) out[c + 1] = alpha / c_count;
        return;
    }
    for (int c = 0; c < c_count; ++c) out[c + 1] = alpha * (e[c] / denom);
}

inline std::vector<std::uint32_t> all_indices(const Scene &scene) {
    std::vector<std::uint32_t> idx(scene.primitives.size());
    std::iota(idx.begin(), idx.end(), 0u);
    return idx;
}

} // namespace detail

inline double occupancy_probability(const Vec3 &x, const Scene &scene,
                                    OpacityCoupling coupling = OpacityCoupling::multiply) {
    std::vector<double> terms;
    terms.reserve(scene.primitives.size());
    for (const auto &p : scene.primitives) terms.push_back(detail::geometric_term(p, eval_kernel(x, p), coupling));
    return combine_occupancy(std::move(terms));
}

/// Mixture expectation of the semantic distribution at x. Falls back to the
/// uniform distribution when the mixture denominator underflows.
inline std::vector<double> semantic_expectation(const Vec3 &x, const Scene &scene) {
    if (scene.primitives.empty()) throw InvalidInput("semantic_expectation: empty scene");
    const ScenePrecompute pre(scene);
    const auto c_count = static_cast<std::size_t>(scene.num_classes);
    std::vector<double> e(c_count, 0.0);
    double denom = 0.0;
    for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
        const double w = conditional_density(x, scene.primitives[i]) * pre.prior[i];
        denom += w;
        for (std::size_t c = 0; c < c_count; ++c) e[c] += w * pre.class_probs[i][c];
    }
    if (denom < kDenominatorFloor) return std::vector<double>(c_count, 1.0 / static_cast<double>(c_count));
    for (double &v : e) v /= denom;
    return e;
}

/// [1 - alpha; alpha * e] of length C+1.
inline std::vector<double> compose_occ(const Vec3 &x, const Scene &scene,
                                       OpacityCoupling coupling = OpacityCoupling::multiply) {
    std::vector<double> out(static_cast<std::size_t>(scene.num_classes) + 1, 0.0);
    const ScenePrecompute pre(scene);
    const auto idx = detail::all_indices(scene);
    detail::compose_from(x, scene, pre, idx, coupling, out);
    return out;
}

struct Box {
    Vec3 lo;
    Vec3 hi;
    bool contains(const Vec3 &p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
    }
};

/// Componentwise bound on |sum_i w_i B_i(u, v, w)| over |u|<=bu, |v|<=bv, |w|<=bw.
inline Vec3 warp_displacement_bound(const WarpWeights &weights, const Vec3 &b) {
    Vec3 d{};
    for (int i = 0; i < kNumBasisFields; ++i) {
        if (weights[i] == 0.0) continue;
        const Vec3 m = basis_field(i + 1, b.x, b.y, b.z);
        const double w = std::abs(weights[i]);
        d.x += w * std::abs(m.x);
        d.y += w * std::abs(m.y);
        d.z += w * std::abs(m.z);
    }
    return d;
}

namespace detail {

/// Half-extents, in units of the scales, of a local box holding {f <= level}.
inline Vec3 normalized_half_extent(const Primitive &p, double level) {
    if (p.kind == Kind::TP) {
        const double r = std::sqrt(level);
        return {r, r, r};
    }
    const double e1 = std::clamp(p.eps1, kEpsLo, kEpsHi);
    const double rho = std::pow(level, 0.5 * e1);
    Vec3 b{rho, rho, rho};
    if (p.kind != Kind::TSQIW) return b;
    // The warped point must land inside the undeformed bound, so the source
    // coordinate is at most rho plus the displacement over the current box.
    for (int round = 0; round < 3; ++round) {
        const Vec3 d = warp_displacement_bound(p.warp, b);
        const Vec3 next{rho + d.x / p.scale.x, rho + d.y / p.scale.y, rho + d.z / p.scale.z};
        const bool settled = next.x <= b.x && next.y <= b.y && next.z <= b.z;
        b = next;
        if (settled) break;
    }
    return b;
}

inline Box local_box_to_world(const Primitive &p, const Vec3 &half_local) {
    const Mat3 r = quat_to_rotation(p.rotation);
    Vec3 half{};
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) half[i] += std::abs(r(i, k)) * half_local[k];
    return {p.center - half, p.center + half};
}

inline Box level_box(const Primitive &p, double level) {
    const Vec3 b = normalized_half_extent(p, level);
    if (p.kind == Kind::TP) {
        // Exact bounding box of the ellipsoid q <= level.
        const Mat3 cov = covariance_from(p.scale, p.rotation);
        const Vec3 half{std::sqrt(level * cov(0, 0)), std::sqrt(level * cov(1, 1)), std::sqrt(level * cov(2, 2))};
        return {p.center - half, p.center + half};
    }
    return local_box_to_world(p, {b.x * p.scale.x, b.y * p.scale.y, b.z * p.scale.z});
}

/// Voxel index range [lo, hi] (inclusive) whose centers may lie in `box`;
/// empty when lo > hi on any axis.
inline std::array<std::array<int, 2>, 3> voxel_range(const GridSpec &spec, const Box &box) {
    const Vec3 h = spec.voxel_size();
    std::array<std::array<int, 2>, 3> r{};
    for (int a = 0; a < 3; ++a) {
        const double lo = (box.lo[a] - spec.origin[a]) / h[a] - 0.5;
        const double hi = (box.hi[a] - spec.origin[a]) / h[a] - 0.5;
        r[a][0] = static_cast<int>(std::max(0.0, std::ceil(lo - 1e-9)));
        r[a][1] = static_cast<int>(std::min<double>(spec.dims[a] - 1, std::floor(hi + 1e-9)));
    }
    return r;
}

} // namespace detail

/// Axis-aligned box containing {x : eval_kernel(x, p) >= threshold}. For the
/// warped family the bound comes from at most three rounds of the displacement
/// fixpoint; strongly bending warps can fold distant points back into the
/// shape, and those far folds are not covered.
inline Box support_bounds(const Primitive &p, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidInput("support_bounds: threshold must lie in (0, 1)");
    return detail::level_box(p, profile_level(threshold, p.nu));
}

/// Degrees of freedom from the number of voxel centers inside the unit-level
/// support, minus one, floored at 1.
inline double estimate_dof(const Primitive &p, const GridSpec &spec) {
    spec.validate();
    const bool warped = p.kind == Kind::TSQIW &&
                        std::any_of(p.warp.begin(), p.warp.end(), [](double w) { return w != 0.0; });
    std::array<std::array<int, 2>, 3> range{};
    if (warped) {
        range = {{{0, spec.dims[0] - 1}, {0, spec.dims[1] - 1}, {0, spec.dims[2] - 1}}};
    } else {
        range = detail::voxel_range(spec, detail::level_box(p, 1.0));
    }
    const ShapeT<double> shape = shape_of(p);
    long count = 0;
    for (int k = range[2][0]; k <= range[2][1]; ++k)
        for (int j = range[1][0]; j <= range[1][1]; ++j)
            for (int i = range[0][0]; i <= range[0][1]; ++i)
                if (shape_level(p.kind, spec.center(i, j, k), shape) <= 1.0) ++count;
    return std::max(kNuMin, static_cast<double>(count - 1));
}

struct SplatOptions {
    double threshold = 1e-3; ///< 0 disables truncation
    OpacityCoupling coupling = OpacityCoupling::multiply;
    unsigned threads = 1; ///< 0 = hardware concurrency
};

/// Truncation boxes of every primitive as inclusive voxel index ranges.
struct SupportIndex {
    std::vector<std::array<std::array<int, 2>, 3>> ranges;
    bool truncated = true;

    SupportIndex(const Scene &scene, const GridSpec &spec, double threshold) : truncated(threshold > 0.0) {
        if (!truncated) return;
        ranges.reserve(scene.primitives.size());
        for (const auto &p : scene.primitives) ranges.push_back(detail::voxel_range(spec, support_bounds(p, threshold)));
    }

    void active_at(int i, int j, int k, std::size_t count, std::vector<std::uint32_t> &out) const {
        out.clear();
        for (std::size_t p = 0; p < count; ++p) {
            if (truncated) {
                const auto &r = ranges[p];
                if (i < r[0][0] || i > r[0][1] || j < r[1][0] || j > r[1][1] || k < r[2][0] || k > r[2][1]) continue;
            }
            out.push_back(static_cast<std::uint32_t>(p));
        }
    }
};

/// Evaluates compose_occ at every voxel center, each primitive contributing
/// only inside its support box at `opts.threshold`.
inline ProbabilityGrid splat(const Scene &scene, const GridSpec &spec, const SplatOptions &opts = {}) {
    spec.validate();
    scene.validate();
    if (!(opts.threshold >= 0.0 && opts.threshold < 1.0)) throw InvalidInput("splat: threshold must lie in [0, 1)");
    ProbabilityGrid grid(spec, scene.num_classes);
    const ScenePrecompute pre(scene);
    const SupportIndex support(scene, spec, opts.threshold);
    const std::size_t n = spec.num_voxels();
    parallel_for(n, opts.threads, [&](std::size_t begin, std::size_t end) {
        std::vector<std::uint32_t> active;
        for (std::size_t v = begin; v < end; ++v) {
            const auto [i, j, k] = spec.unravel(v);
            support.active_at(i, j, k, scene.primitives.size(), active);
            detail::compose_from(spec.center(i, j, k), scene, pre, active, opts.coupling, grid.voxel(v));
        }
    });
    return grid;
}

inline ProbabilityGrid splat(const Scene &scene, const GridSpec &spec, double threshold) {
    SplatOptions opts;
    opts.threshold = threshold;
    return splat(scene, spec, opts);
}

/// Untruncated reference: every primitive evaluated at every voxel center.
inline ProbabilityGrid splat_brute_force(const Scene &scene, const GridSpec &spec) {
    ProbabilityGrid grid(spec, scene.num_classes);
    for (std::size_t v = 0; v < spec.num_voxels(); ++v) {
        const auto occ = compose_occ(spec.center(v), scene);
        std::copy(occ.begin(), occ.end(), grid.voxel(v).begin());
    }
    return grid;
}

} // namespace tprim
