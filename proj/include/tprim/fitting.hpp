// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Gradient-based fitting of primitive parameters to a target label grid.
//
// Parameters live in an unconstrained vector:
//   center      identity
//   scale       softplus
//   rotation    raw quaternion, normalized inside the kernels
//   opacity     sigmoid
//   semantics   raw logits
//   eps1, eps2  0.2 + 1.8 * sigmoid       (TSQ, TSQIW)
//   warp        tanh                      (TSQIW)
// nu is not optimized; it is re-estimated from the grid before each step and
// held constant while differentiating.
//
// Analytic gradients back-propagate the loss through the per-voxel
// composition by hand and use forward-mode duals for the kernels.

#include "tprim/dual.hpp"
#include "tprim/errors.hpp"
#include "tprim/losses.hpp"
#include "tprim/parallel.hpp"
#include "tprim/primitive.hpp"
#include "tprim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace tprim {

enum class GradientMode { analytic, finite_difference };

/// Parameter groups that fit() updates; the rest stay at their initial values.
enum ParamGroup : unsigned {
    group_center = 1u << 0,
    group_scale = 1u << 1,
    group_rotation = 1u << 2,
    group_opacity = 1u << 3,
    group_semantics = 1u << 4,
    group_eps = 1u << 5,
    group_warp = 1u << 6,
    group_all = (1u << 7) - 1,
};

struct FitOptions {
    int iterations = 500;
    double step_size = 1e-2;
    double lambda = 10.0;
    double threshold = 1e-3; ///< splat truncation; 0 evaluates every primitive everywhere
    GradientMode gradient_mode = GradientMode::analytic;
    double fd_epsilon = 1e-4;
    std::uint64_t rng_seed = 0;
    double init_jitter = 0.0; ///< uniform center jitter (meters) applied before fitting, drawn from rng_seed
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    bool recompute_dof = true;
    bool lovasz_empty = true;
    OpacityCoupling coupling = OpacityCoupling::multiply;
    unsigned threads = 1;
    unsigned groups = group_all;

    void validate() const {
        if (iterations < 1) throw InvalidInput("FitOptions: iterations must be >= 1");
        if (!(step_size > 0.0)) throw InvalidInput("FitOptions: step_size must be positive");
        if (!(lambda >= 0.0)) throw InvalidInput("FitOptions: lambda must be non-negative");
        if (!(threshold >= 0.0 && threshold < 1.0)) throw InvalidInput("FitOptions: threshold must lie in [0, 1)");
        if (!(fd_epsilon > 0.0)) throw InvalidInput("FitOptions: fd_epsilon must be positive");
    }

    LossOptions loss_options() const { return {lambda, lovasz_empty}; }
    SplatOptions splat_options() const { return {threshold, coupling, threads}; }
};

// ---------------------------------------------------------------------------
// Parameter layout

namespace param {

inline double softplus(double r) { return r > 30.0 ? r : std::log1p(std::exp(r)); }
inline double softplus_inv(double s) { return s > 30.0 ? s : std::log(std::expm1(s)); }
inline double sigmoid(double r) { return 1.0 / (1.0 + std::exp(-r)); }
inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline constexpr double kOpenMargin = 1e-9;

inline double eps_from_raw(double r) { return kEpsLo + (kEpsHi - kEpsLo) * sigmoid(r); }
inline double eps_to_raw(double e) {
    const double t = std::clamp((e - kEpsLo) / (kEpsHi - kEpsLo), kOpenMargin, 1.0 - kOpenMargin);
    return logit(t);
}
inline double opacity_to_raw(double o) { return logit(std::clamp(o, kOpenMargin, 1.0 - kOpenMargin)); }
inline double warp_to_raw(double w) { return std::atanh(std::clamp(w, -1.0 + kOpenMargin, 1.0 - kOpenMargin)); }

} // namespace param

/// Offsets of one primitive's block inside the flat parameter vector.
struct ParamBlock {
    Kind kind = Kind::TP;
    std::size_t offset = 0;
    int num_classes = 1;

    std::size_t center() const { return offset; }
    std::size_t scale() const { return offset + 3; }
    std::size_t rotation() const { return offset + 6; }
    std::size_t opacity() const { return offset + 10; }
    std::size_t semantics() const { return offset + 11; }
    std::size_t eps() const { return semantics() + static_cast<std::size_t>(num_classes); }
    std::size_t warp() const { return eps() + 2; }
    std::size_t size() const {
        std::size_t n = 11 + static_cast<std::size_t>(num_classes);
        if (kind != Kind::TP) n += 2;
        if (kind == Kind::TSQIW) n += kNumBasisFields;
        return n;
    }
};

/// Flattened unconstrained parameters with their layout. The source scene
/// supplies the fixed parts (kinds, nu, class count).
struct ParamVector {
    std::vector<double> values;
    std::vector<ParamBlock> blocks;

    static ParamVector layout_of(const Scene &scene) {
        ParamVector pv;
        std::size_t offset = 0;
        for (const auto &p : scene.primitives) {
            ParamBlock b{p.kind, offset, scene.num_classes};
            pv.blocks.push_back(b);
            offset += b.size();
        }
        pv.values.assign(offset, 0.0);
        return pv;
    }

    static ParamVector encode(const Scene &scene) {
        ParamVector pv = layout_of(scene);
        for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
            const Primitive &p = scene.primitives[i];
            const ParamBlock &b = pv.blocks[i];
            double *v = pv.values.data();
            for (int a = 0; a < 3; ++a) {
                v[b.center() + a] = p.center[a];
                v[b.scale() + a] = param::softplus_inv(p.scale[a]);
            }
            const Quaternion q = normalized(p.rotation);
            v[b.rotation() + 0] = q.w;
            v[b.rotation() + 1] = q.x;
            v[b.rotation() + 2] = q.y;
            v[b.rotation() + 3] = q.z;
            v[b.opacity()] = param::opacity_to_raw(p.opacity);
            for (int c = 0; c < scene.num_classes; ++c) v[b.semantics() + c] = p.semantics[c];
            if (p.kind != Kind::TP) {
                v[b.eps()] = param::eps_to_raw(p.eps1);
                v[b.eps() + 1] = param::eps_to_raw(p.eps2);
            }
            if (p.kind == Kind::TSQIW)
                for (int w = 0; w < kNumBasisFields; ++w) v[b.warp() + w] = param::warp_to_raw(p.warp[w]);
        }
        return pv;
    }

    Scene decode(const Scene &like) const {
        Scene out = like;
        for (std::size_t i = 0; i < out.primitives.size(); ++i) {
            Primitive &p = out.primitives[i];
            const ParamBlock &b = blocks[i];
            const double *v = values.data();
            for (int a = 0; a < 3; ++a) {
                p.center[a] = v[b.center() + a];
                p.scale[a] = param::softplus(v[b.scale() + a]);
            }
            p.rotation = {v[b.rotation()], v[b.rotation() + 1], v[b.rotation() + 2], v[b.rotation() + 3]};
            p.opacity = param::sigmoid(v[b.opacity()]);
            for (int c = 0; c < out.num_classes; ++c) p.semantics[c] = v[b.semantics() + c];
            if (p.kind != Kind::TP) {
                p.eps1 = param::eps_from_raw(v[b.eps()]);
                p.eps2 = param::eps_from_raw(v[b.eps() + 1]);
            }
            if (p.kind == Kind::TSQIW)
                for (int w = 0; w < kNumBasisFields; ++w) p.warp[w] = std::tanh(v[b.warp() + w]);
        }
        return out;
    }

    ParamGroup group_of(std::size_t index) const {
        for (const ParamBlock &b : blocks) {
            if (index < b.offset || index >= b.offset + b.size()) continue;
            if (index < b.scale()) return group_center;
            if (index < b.rotation()) return group_scale;
            if (index < b.opacity()) return group_rotation;
            if (index == b.opacity()) return group_opacity;
            if (index < b.eps()) return group_semantics;
            if (index < b.warp()) return group_eps;
            return group_warp;
        }
        throw InvalidInput("ParamVector: index out of range");
    }

    /// Human-readable name of coordinate `index`, e.g. "primitive 1 scale.y".
    std::string name_of(std::size_t index) const {
        static const char *axes[] = {"x", "y", "z"};
        static const char *quat[] = {"w", "x", "y", "z"};
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const ParamBlock &b = blocks[i];
            if (index < b.offset || index >= b.offset + b.size()) continue;
            const std::string pre = "primitive " + std::to_string(i) + " ";
            if (index < b.scale()) return pre + "center." + axes[index - b.center()];
            if (index < b.rotation()) return pre + "scale." + axes[index - b.scale()];
            if (index < b.opacity()) return pre + "rotation." + quat[index - b.rotation()];
            if (index == b.opacity()) return pre + "opacity";
            if (index < b.eps()) return pre + "semantics[" + std::to_string(index - b.semantics()) + "]";
            if (index < b.warp()) return pre + (index == b.eps() ? "eps1" : "eps2");
            return pre + "warp[" + std::to_string(index - b.warp() + 1) + "]";
        }
        return "parameter " + std::to_string(index);
    }
};

// ---------------------------------------------------------------------------
// Kernel values with gradients over geometric parameters.
//
// Geometric slot layout: center 0..2, scale 3..5, rotation 6..9, eps 10..11,
// warp 12..35. TP uses the first 10 slots, TSQ the first 12.

inline constexpr std::size_t kGeomSlots = 36;

inline std::size_t geom_slots(Kind k) {
    switch (k) {
    case Kind::TP: return 10;
    case Kind::TSQ: return 12;
    case Kind::TSQIW: return kGeomSlots;
    }
    return 0;
}

struct KernelJet {
    double kernel = 0.0;
    double density = 0.0;
    std::array<double, kGeomSlots> dkernel{};
    std::array<double, kGeomSlots> ddensity{};
};

namespace detail {

template <std::size_t N>
KernelJet kernel_jet_n(const Vec3 &x, const Primitive &p) {
    using D = Dual<N>;
    ShapeT<D> s;
    for (int a = 0; a < 3; ++a) {
        s.center[a] = D::variable(p.center[a], static_cast<std::size_t>(a));
        s.scale[a] = D::variable(p.scale[a], static_cast<std::size_t>(3 + a));
    }
    s.rotation = {D::variable(p.rotation.w, 6), D::variable(p.rotation.x, 7), D::variable(p.rotation.y, 8),
                  D::variable(p.rotation.z, 9)};
    if constexpr (N >= 12) {
        s.eps1 = D::variable(p.eps1, 10);
        s.eps2 = D::variable(p.eps2, 11);
    }
    if constexpr (N >= kGeomSlots) {
        for (int w = 0; w < kNumBasisFields; ++w)
            s.warp[static_cast<std::size_t>(w)] = D::variable(p.warp[static_cast<std::size_t>(w)], 12 + w);
    }
    KernelJet out;
    const D k = kernel_t(p.kind, x, s, p.nu);
    out.kernel = k.v;
    std::copy(k.d.begin(), k.d.end(), out.dkernel.begin());
    if (p.kind == Kind::TP) {
        const D dens = conditional_density_t(p.kind, x, s, p.nu);
        out.density = dens.v;
        std::copy(dens.d.begin(), dens.d.end(), out.ddensity.begin());
    } else {
        out.density = out.kernel;
        out.ddensity = out.dkernel;
    }
    return out;
}

} // namespace detail

inline KernelJet kernel_jet(const Vec3 &x, const Primitive &p) {
    switch (p.kind) {
    case Kind::TP: return detail::kernel_jet_n<10>(x, p);
    case Kind::TSQ: return detail::kernel_jet_n<12>(x, p);
    case Kind::TSQIW: return detail::kernel_jet_n<kGeomSlots>(x, p);
    }
    return {};
}

// ---------------------------------------------------------------------------
// Loss and gradient

struct LossAndGradient {
    LossValue loss;
    std::vector<double> gradient; ///< w.r.t. ParamVector::values
};

namespace detail {

/// Gradient of the loss w.r.t. constrained parameters, accumulated for one
/// voxel into `g` (laid out like the ParamVector, in constrained units).
inline void backprop_voxel(const Vec3 &x, const Scene &scene, const ScenePrecompute &pre,
                           std::span<const std::uint32_t> active, OpacityCoupling coupling,
                           std::span<const double> g_occ, const std::vector<ParamBlock> &blocks,
                           std::vector<KernelJet> &jets, std::vector<double> &g) {
    const int c_count = scene.num_classes;
    const std::size_t n = active.size();
    if (n == 0) return;
    jets.resize(n);
    std::vector<double> a(n), w(n), prefix(n + 1, 1.0), suffix(n + 1, 1.0);
    double denom = 0.0;
    std::vector<double> e(static_cast<std::size_t>(c_count), 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        const Primitive &p = scene.primitives[active[t]];
        jets[t] = kernel_jet(x, p);
        a[t] = coupling == OpacityCoupling::multiply ? p.opacity * jets[t].kernel : jets[t].kernel;
        w[t] = jets[t].density * pre.prior[active[t]];
        denom += w[t];
        for (int c = 0; c < c_count; ++c) e[c] += w[t] * pre.class_probs[active[t]][c];
    }
    for (std::size_t t = 0; t < n; ++t) prefix[t + 1] = prefix[t] * (1.0 - a[t]);
    for (std::size_t t = n; t-- > 0;) suffix[t] = suffix[t + 1] * (1.0 - a[t]);
    const double alpha = 1.0 - prefix[n];
    const bool mixture = denom >= kDenominatorFloor;
    if (mixture)
        for (double &v : e) v /= denom;
    else
        std::fill(e.begin(), e.end(), 1.0 / c_count);

    double g_alpha = -g_occ[0];
    for (int c = 0; c < c_count; ++c) g_alpha += g_occ[c + 1] * e[c];

    double total_opacity = 0.0;
    for (const auto &p : scene.primitives) total_opacity += std::abs(p.opacity);

    for (std::size_t t = 0; t < n; ++t) {
        const std::uint32_t i = active[t];
        const Primitive &p = scene.primitives[i];
        const ParamBlock &b = blocks[i];
        const double g_a = g_alpha * prefix[t] * suffix[t + 1];
        double g_w = 0.0;
        if (mixture) {
            const auto &ct = pre.class_probs[i];
            std::vector<double> g_ct(static_cast<std::size_t>(c_count));
            double dotp = 0.0;
            for (int c = 0; c < c_count; ++c) {
                const double g_e = alpha * g_occ[c + 1];
                g_w += g_e * (ct[c] - e[c]) / denom;
                g_ct[c] = g_e * w[t] / denom;
                dotp += g_ct[c] * ct[c];
            }
            for (int c = 0; c < c_count; ++c) g[b.semantics() + c] += ct[c] * (g_ct[c] - dotp);
        }
        // w = density * opacity / sum(opacity); the scene-wide sum cancels in e.
        const double prior_scale = total_opacity > 0.0 ? 1.0 / total_opacity : 0.0;
        double g_kernel = 0.0;
        double g_opacity = g_w * jets[t].density * prior_scale;
        if (coupling == OpacityCoupling::multiply) {
            g_kernel = g_a * p.opacity;
            g_opacity += g_a * jets[t].kernel;
        } else {
            g_kernel = g_a;
        }
        const double g_density = g_w * p.opacity * prior_scale;
        g[b.opacity()] += g_opacity;
        const std::size_t slots = geom_slots(p.kind);
        for (std::size_t s = 0; s < slots; ++s) {
            const double gs = g_kernel * jets[t].dkernel[s] + g_density * jets[t].ddensity[s];
            std::size_t dst = 0;
            if (s < 10) dst = b.center() + s; // center, scale, rotation are contiguous
            else if (s < 12) dst = b.eps() + (s - 10);
            else dst = b.warp() + (s - 12);
            g[dst] += gs;
        }
    }
}

/// Converts a gradient over constrained parameters to the raw parameters.
inline void chain_to_raw(const ParamVector &pv, std::vector<double> &g) {
    for (const ParamBlock &b : pv.blocks) {
        const double *v = pv.values.data();
        for (int a = 0; a < 3; ++a) g[b.scale() + a] *= param::sigmoid(v[b.scale() + a]);
        const double o = param::sigmoid(v[b.opacity()]);
        g[b.opacity()] *= o * (1.0 - o);
        if (b.kind != Kind::TP)
            for (int k = 0; k < 2; ++k) {
                const double s = param::sigmoid(v[b.eps() + k]);
                g[b.eps() + k] *= (kEpsHi - kEpsLo) * s * (1.0 - s);
            }
        if (b.kind == Kind::TSQIW)
            for (int w = 0; w < kNumBasisFields; ++w) {
                const double t = std::tanh(v[b.warp() + w]);
                g[b.warp() + w] *= 1.0 - t * t;
            }
    }
}

inline constexpr std::size_t kGradientBlock = 1024;

inline void require_finite(const std::vector<double> &gradient, const ParamVector &pv) {
    for (std::size_t p = 0; p < gradient.size(); ++p)
        if (!std::isfinite(gradient[p])) throw NumericalError("non-finite gradient component: " + pv.name_of(p));
}

} // namespace detail

/// Loss of splat(scene) against `target` and its analytic gradient with
/// respect to the unconstrained parameters. Partial sums are formed over
/// fixed voxel blocks and reduced in block order, so the result does not
/// depend on the thread count.
inline LossAndGradient loss_and_gradient(const Scene &scene, const LabelGrid &target, const GridSpec &spec,
                                         const FitOptions &opts) {
    if (scene.primitives.empty()) throw InvalidInput("loss_gradient: scene has no primitives");
    if (!(target.spec == spec)) throw InvalidInput("loss_gradient: target grid spec differs from spec");
    const ParamVector pv = ParamVector::encode(scene);
    // Evaluate at the decoded scene so values and gradient match the raw vector exactly.
    const Scene s = pv.decode(scene);
    const ProbabilityGrid pred = splat(s, spec, opts.splat_options());
    LossAndGradient out;
    std::vector<double> g_pred;
    out.loss = total_loss(pred, target, opts.loss_options(), &g_pred);

    const ScenePrecompute pre(s);
    const SupportIndex support(s, spec, opts.threshold);
    const std::size_t n = spec.num_voxels();
    const std::size_t n_blocks = (n + detail::kGradientBlock - 1) / detail::kGradientBlock;
    std::vector<std::vector<double>> partial(n_blocks, std::vector<double>(pv.values.size(), 0.0));
    parallel_for(n_blocks, opts.threads, [&](std::size_t b0, std::size_t b1) {
        std::vector<std::uint32_t> active;
        std::vector<KernelJet> jets;
        for (std::size_t blk = b0; blk < b1; ++blk) {
            const std::size_t end = std::min(n, (blk + 1) * detail::kGradientBlock);
            for (std::size_t v = blk * detail::kGradientBlock; v < end; ++v) {
                const auto [i, j, k] = spec.unravel(v);
                support.active_at(i, j, k, s.primitives.size(), active);
                const std::span<const double> g_occ(g_pred.data() + v * static_cast<std::size_t>(pred.stride()),
                                                    static_cast<std::size_t>(pred.stride()));
                if (std::all_of(g_occ.begin(), g_occ.end(), [](double x) { return x == 0.0; })) continue;
                detail::backprop_voxel(spec.center(i, j, k), s, pre, active, opts.coupling, g_occ, pv.blocks, jets,
                                       partial[blk]);
            }
        }
    });
    out.gradient.assign(pv.values.size(), 0.0);
    for (const auto &part : partial)
        for (std::size_t p = 0; p < part.size(); ++p) out.gradient[p] += part[p];
    detail::chain_to_raw(pv, out.gradient);
    detail::require_finite(out.gradient, pv);
    return out;
}

/// Loss at raw parameter values `raw` (layout of `like`).
inline LossValue loss_at(const ParamVector &layout, const std::vector<double> &raw, const Scene &like,
                         const LabelGrid &target, const GridSpec &spec, const FitOptions &opts) {
    ParamVector pv = layout;
    pv.values = raw;
    return total_loss(splat(pv.decode(like), spec, opts.splat_options()), target, opts.loss_options());
}

/// Central finite differences of the loss over the raw parameters.
inline LossAndGradient loss_and_fd_gradient(const Scene &scene, const LabelGrid &target, const GridSpec &spec,
                                            const FitOptions &opts) {
    if (scene.primitives.empty()) throw InvalidInput("loss_gradient: scene has no primitives");
    const ParamVector pv = ParamVector::encode(scene);
    LossAndGradient out;
    out.loss = loss_at(pv, pv.values, scene, target, spec, opts);
    out.gradient.assign(pv.values.size(), 0.0);
    std::vector<double> raw = pv.values;
    for (std::size_t p = 0; p < raw.size(); ++p) {
        const double orig = raw[p];
        raw[p] = orig + opts.fd_epsilon;
        const double up = loss_at(pv, raw, scene, target, spec, opts).total;
        raw[p] = orig - opts.fd_epsilon;
        const double down = loss_at(pv, raw, scene, target, spec, opts).total;
        raw[p] = orig;
        out.gradient[p] = (up - down) / (2.0 * opts.fd_epsilon);
    }
    detail::require_finite(out.gradient, pv);
    return out;
}

inline std::vector<double> loss_gradient(const Scene &scene, const LabelGrid &target, const GridSpec &spec,
                                         const FitOptions &opts) {
    return opts.gradient_mode == GradientMode::analytic ? loss_and_gradient(scene, target, spec, opts).gradient
                                                        : loss_and_fd_gradient(scene, target, spec, opts).gradient;
}

// ---------------------------------------------------------------------------
// Optimizer

struct TraceEntry {
    int iteration = 0;
    LossValue loss;
};

struct FitResult {
    Scene scene;             ///< lowest-loss scene seen
    LossValue best_loss;
    int best_iteration = 0;
    std::vector<TraceEntry> trace; ///< iteration 0 is the initial scene
};

/// Flags divergence: loss above `factor` times the first loss for `patience`
/// consecutive steps.
struct DivergenceGuard {
    double factor = 10.0;
    int patience = 20;
    double initial = 0.0;
    int above = 0;
    bool started = false;

    bool diverged(double loss) {
        if (!started) {
            initial = loss;
            started = true;
        }
        above = loss > factor * initial ? above + 1 : 0;
        return above >= patience;
    }
};

inline Scene with_estimated_dof(Scene scene, const GridSpec &spec) {
    for (auto &p : scene.primitives) p.nu = estimate_dof(p, spec);
    return scene;
}

/// Adaptive-moment gradient descent (bias-corrected first and second moment
/// estimates, no weight decay) for opts.iterations steps.
inline FitResult fit(const Scene &init, const LabelGrid &target, const GridSpec &spec, const FitOptions &opts,
                     const std::function<void(const TraceEntry &)> &on_step = {}) {
    opts.validate();
    spec.validate();
    init.validate();
    if (init.primitives.empty()) throw InvalidInput("fit: initial scene has no primitives");
    if (!(target.spec == spec)) throw InvalidInput("fit: target grid spec differs from spec");

    Scene start = init;
    if (opts.init_jitter > 0.0) {
        std::mt19937_64 rng(opts.rng_seed);
        std::uniform_real_distribution<double> jitter(-opts.init_jitter, opts.init_jitter);
        for (auto &p : start.primitives)
            for (int a = 0; a < 3; ++a) p.center[a] += jitter(rng);
    }
    ParamVector pv = ParamVector::encode(start);
    std::vector<double> m1(pv.values.size(), 0.0), m2(pv.values.size(), 0.0);

    FitResult result;
    result.best_loss.total = std::numeric_limits<double>::infinity();
    DivergenceGuard guard;
    for (int it = 0; it <= opts.iterations; ++it) {
        Scene current = pv.decode(start);
        if (opts.recompute_dof) current = with_estimated_dof(current, spec);
        const bool last = it == opts.iterations;
        LossAndGradient lg;
        if (last) lg.loss = total_loss(splat(current, spec, opts.splat_options()), target, opts.loss_options());
        else if (opts.gradient_mode == GradientMode::analytic) lg = loss_and_gradient(current, target, spec, opts);
        else lg = loss_and_fd_gradient(current, target, spec, opts);

        if (!std::isfinite(lg.loss.total)) throw NumericalError("fit: loss became non-finite at iteration " + std::to_string(it));
        const TraceEntry entry{it, lg.loss};
        result.trace.push_back(entry);
        if (on_step) on_step(entry);
        if (lg.loss.total < result.best_loss.total) {
            result.best_loss = lg.loss;
            result.best_iteration = it;
            result.scene = current;
        }
        if (guard.diverged(lg.loss.total)) throw NumericalError("fit: diverged (loss above 10x initial for 20 consecutive steps)");
        if (last) break;

        const double t = it + 1.0;
        const double c1 = 1.0 - std::pow(opts.beta1, t);
        const double c2 = 1.0 - std::pow(opts.beta2, t);
        for (std::size_t p = 0; p < pv.values.size(); ++p) {
            if (!(opts.groups & pv.group_of(p))) continue;
            const double g = lg.gradient[p];
            m1[p] = opts.beta1 * m1[p] + (1.0 - opts.beta1) * g;
            m2[p] = opts.beta2 * m2[p] + (1.0 - opts.beta2) * g * g;
            pv.values[p] -= opts.step_size * (m1[p] / c1) / (std::sqrt(m2[p] / c2) + opts.adam_epsilon);
        }
        for (const ParamBlock &b : pv.blocks) {
            double *q = pv.values.data() + b.rotation();
            const double qn = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
            if (!(qn > 0.0)) throw NumericalError("fit: rotation quaternion collapsed to zero");
            for (int k = 0; k < 4; ++k) q[k] /= qn;
        }
    }
    return result;
}

} // namespace tprim
