// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tprim/errors.hpp"
#include "tprim/scene.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace tprim {

struct ClassCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    friend bool operator==(const ClassCounts &, const ClassCounts &) = default;
};

/// Per-class counts for semantic classes 1..C (index 0 unused) plus the
/// binarized occupied-vs-empty counts.
struct ConfusionCounts {
    std::vector<ClassCounts> classes;
    ClassCounts geometry;
    std::uint64_t voxels = 0; ///< voxels that entered the counts

    friend bool operator==(const ConfusionCounts &, const ConfusionCounts &) = default;
};

inline ConfusionCounts confusion(const LabelGrid &pred, const LabelGrid &gt, const std::vector<bool> *mask = nullptr) {
    if (!(pred.spec == gt.spec)) throw InvalidInput("confusion: grid specs differ");
    if (pred.num_classes != gt.num_classes) throw InvalidInput("confusion: class counts differ");
    ConfusionCounts out;
    out.classes.resize(static_cast<std::size_t>(gt.num_classes) + 1);
    for (std::size_t v = 0; v < gt.labels.size(); ++v) {
        if (mask && !(*mask)[v]) continue;
        ++out.voxels;
        const int p = pred.labels[v], g = gt.labels[v];
        if (p > gt.num_classes || g > gt.num_classes) throw InvalidInput("confusion: label outside 0..C");
        if (p == g) {
            if (p != 0) ++out.classes[p].tp;
        } else {
            if (p != 0) ++out.classes[p].fp;
            if (g != 0) ++out.classes[g].fn;
        }
        const bool po = p != 0, go = g != 0;
        if (po && go) ++out.geometry.tp;
        else if (po) ++out.geometry.fp;
        else if (go) ++out.geometry.fn;
    }
    return out;
}

/// TP / (TP + FP + FN); nullopt when the class is absent from both grids.
inline std::optional<double> iou(const ClassCounts &c) {
    const std::uint64_t denom = c.tp + c.fp + c.fn;
    if (denom == 0) return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(denom);
}

inline std::optional<double> iou(const ConfusionCounts &counts, int cls) {
    if (cls < 1 || cls >= static_cast<int>(counts.classes.size())) throw InvalidInput("iou: class out of range");
    return iou(counts.classes[static_cast<std::size_t>(cls)]);
}

/// Mean IoU over the semantic classes present in either grid.
inline std::optional<double> miou(const ConfusionCounts &counts) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t c = 1; c < counts.classes.size(); ++c)
        if (auto v = iou(counts.classes[c])) {
            sum += *v;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / n;
}

struct RangeMask {
    enum class Mode { radius, sector } mode = Mode::radius;
    double lo = 0.0; ///< inner radius (sector only)
    double hi = 50.0;

    static RangeMask radius(double r) { return {Mode::radius, 0.0, r}; }
    static RangeMask sector(double lo, double hi) { return {Mode::sector, lo, hi}; }

    /// Half-open in the horizontal distance: [lo, hi) for sectors, [0, R) for radii.
    bool contains(double d) const { return d >= (mode == Mode::sector ? lo : 0.0) && d < hi; }
};

struct RangeEval {
    ConfusionCounts counts;
    std::optional<double> iou;  ///< geometry IoU; nullopt for an empty mask
    std::optional<double> miou; ///< nullopt for an empty mask or no classes present
};

inline std::vector<bool> range_mask(const GridSpec &spec, const RangeMask &m, const Vec3 &origin) {
    std::vector<bool> mask(spec.num_voxels(), false);
    for (std::size_t v = 0; v < mask.size(); ++v) {
        const Vec3 c = spec.center(v);
        mask[v] = m.contains(std::hypot(c.x - origin.x, c.y - origin.y));
    }
    return mask;
}

/// Metrics restricted to voxels whose center lies within the horizontal
/// radius or annulus around `origin`.
inline RangeEval range_masked_eval(const LabelGrid &pred, const LabelGrid &gt, const RangeMask &m,
                                   const Vec3 &origin = {}) {
    if (m.mode == RangeMask::Mode::sector && !(m.lo >= 0.0 && m.lo < m.hi))
        throw InvalidInput("range_masked_eval: sector needs 0 <= lo < hi");
    if (!(m.hi > 0.0)) throw InvalidInput("range_masked_eval: radius must be positive");
    for (int a = 0; a < 3; ++a)
        if (origin[a] < gt.spec.origin[a] || origin[a] > gt.spec.origin[a] + gt.spec.extent[a])
            throw InvalidInput("range_masked_eval: origin lies outside the grid");
    const auto mask = range_mask(gt.spec, m, origin);
    RangeEval out;
    out.counts = confusion(pred, gt, &mask);
    if (out.counts.voxels == 0) return out;
    out.iou = iou(out.counts.geometry);
    out.miou = miou(out.counts);
    return out;
}

inline ConfusionCounts &operator+=(ConfusionCounts &a, const ConfusionCounts &b) {
    if (a.classes.size() < b.classes.size()) a.classes.resize(b.classes.size());
    for (std::size_t c = 0; c < b.classes.size(); ++c) {
        a.classes[c].tp += b.classes[c].tp;
        a.classes[c].fp += b.classes[c].fp;
        a.classes[c].fn += b.classes[c].fn;
    }
    a.geometry.tp += b.geometry.tp;
    a.geometry.fp += b.geometry.fp;
    a.geometry.fn += b.geometry.fn;
    a.voxels += b.voxels;
    return a;
}

} // namespace tprim
