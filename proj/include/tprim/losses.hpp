// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Occupancy losses against a label grid: Lovasz-Softmax (Jaccard surrogate)
// and binary cross-entropy over one-hot targets, each with its gradient with
// respect to the predicted probabilities.

#include "tprim/errors.hpp"
#include "tprim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace tprim {

inline constexpr double kBceClip = 1e-7;

struct LossOptions {
    double lambda = 10.0;      ///< weight of the BCE term
    bool lovasz_empty = true;  ///< include the empty class in the Lovasz average
};

struct LossValue {
    double lovasz = 0.0;
    double bce = 0.0;
    double total = 0.0;
};

namespace detail {

inline void check_pair(const ProbabilityGrid &pred, const LabelGrid &target) {
    if (!(pred.spec == target.spec)) throw InvalidInput("loss: prediction and target grid specs differ");
    if (pred.num_classes != target.num_classes) throw InvalidInput("loss: class counts differ");
    for (auto l : target.labels)
        if (l > target.num_classes) throw InvalidInput("loss: target label outside 0..C");
}

} // namespace detail

/// Mean over voxels and the C+1 classes of the binary cross-entropy. When
/// `grad` is non-null it receives dBCE/dp in the prediction's layout.
inline double bce_loss(const ProbabilityGrid &pred, const LabelGrid &target, std::vector<double> *grad = nullptr) {
    detail::check_pair(pred, target);
    const int stride = pred.stride();
    const double norm = 1.0 / static_cast<double>(pred.probs.size());
    if (grad) grad->assign(pred.probs.size(), 0.0);
    double sum = 0.0;
    for (std::size_t v = 0; v < target.labels.size(); ++v) {
        const auto p = pred.voxel(v);
        for (int c = 0; c < stride; ++c) {
            const bool clipped = !(p[c] > kBceClip && p[c] < 1.0 - kBceClip);
            const double q = std::clamp(p[c], kBceClip, 1.0 - kBceClip);
            const bool hot = target.labels[v] == c;
            sum += hot ? -std::log(q) : -std::log1p(-q);
            if (grad && !clipped) (*grad)[v * stride + c] = (hot ? -1.0 / q : 1.0 / (1.0 - q)) * norm;
        }
    }
    return sum * norm;
}

/// Gradient of the Lovasz extension of the Jaccard loss with respect to the
/// sorted errors, given ground-truth membership in the same order.
inline std::vector<double> lovasz_grad(const std::vector<char> &gt_sorted) {
    const std::size_t n = gt_sorted.size();
    std::vector<double> jac(n);
    const double gts = static_cast<double>(std::count(gt_sorted.begin(), gt_sorted.end(), 1));
    double cum_fg = 0.0, cum_bg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cum_fg += gt_sorted[i] ? 1.0 : 0.0;
        cum_bg += gt_sorted[i] ? 0.0 : 1.0;
        const double inter = gts - cum_fg;
        const double uni = gts + cum_bg;
        jac[i] = 1.0 - inter / uni;
    }
    for (std::size_t i = n; i-- > 1;) jac[i] -= jac[i - 1];
    return jac;
}

/// Lovasz-Softmax averaged over the classes present in the target.
inline double lovasz_softmax_loss(const ProbabilityGrid &pred, const LabelGrid &target,
                                  std::vector<double> *grad = nullptr, bool include_empty = true) {
    detail::check_pair(pred, target);
    const int stride = pred.stride();
    const std::size_t n = target.labels.size();
    if (grad) grad->assign(pred.probs.size(), 0.0);

    std::vector<char> present(static_cast<std::size_t>(stride), 0);
    for (auto l : target.labels) present[l] = 1;
    if (!include_empty) present[0] = 0;
    const int classes = static_cast<int>(std::count(present.begin(), present.end(), 1));
    if (classes == 0) return 0.0;

    std::vector<double> err(n);
    std::vector<std::size_t> order(n);
    std::vector<char> fg_sorted(n);
    double total = 0.0;
    for (int c = 0; c < stride; ++c) {
        if (!present[static_cast<std::size_t>(c)]) continue;
        for (std::size_t v = 0; v < n; ++v) {
            const double fg = target.labels[v] == c ? 1.0 : 0.0;
            err[v] = std::abs(fg - pred.probs[v * stride + c]);
        }
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return err[a] > err[b]; });
        for (std::size_t r = 0; r < n; ++r) fg_sorted[r] = target.labels[order[r]] == c ? 1 : 0;
        const auto g = lovasz_grad(fg_sorted);
        double loss_c = 0.0;
        for (std::size_t r = 0; r < n; ++r) loss_c += err[order[r]] * g[r];
        total += loss_c;
        if (grad)
            for (std::size_t r = 0; r < n; ++r) {
                const std::size_t v = order[r];
                (*grad)[v * stride + c] += (fg_sorted[r] ? -g[r] : g[r]) / classes;
            }
    }
    return total / classes;
}

/// lovasz + lambda * bce. The optional gradient is with respect to pred.probs.
inline LossValue total_loss(const ProbabilityGrid &pred, const LabelGrid &target, const LossOptions &opts = {},
                            std::vector<double> *grad = nullptr) {
    LossValue out;
    if (grad) {
        std::vector<double> g_lov, g_bce;
        out.lovasz = lovasz_softmax_loss(pred, target, &g_lov, opts.lovasz_empty);
        out.bce = bce_loss(pred, target, &g_bce);
        grad->resize(g_lov.size());
        for (std::size_t i = 0; i < g_lov.size(); ++i) (*grad)[i] = g_lov[i] + opts.lambda * g_bce[i];
    } else {
        out.lovasz = lovasz_softmax_loss(pred, target, nullptr, opts.lovasz_empty);
        out.bce = bce_loss(pred, target);
    }
    out.total = out.lovasz + opts.lambda * out.bce;
    return out;
}

inline LossValue total_loss(const ProbabilityGrid &pred, const LabelGrid &target, double lambda) {
    LossOptions opts;
    opts.lambda = lambda;
    return total_loss(pred, target, opts);
}

} // namespace tprim
