// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Anchor initialization from a lidar cloud and a camera pseudo cloud:
// cylindrical voxelization, farthest point sampling, and the merge that keeps
// lidar anchors as the main skeleton and adds nearby, non-overlapping camera
// anchors.

#include "tprim/errors.hpp"
#include "tprim/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <vector>

namespace tprim {

enum class PointSource { unknown, lidar, camera };

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<PointSource> sources; ///< empty or one tag per point
};

using CylIndex = std::array<int, 3>; ///< (i_r, i_theta, i_z)

/// Occupied cylindrical bins, sorted by index, with their bin-center points.
struct VoxelSet {
    CylindricalSpec spec;
    std::vector<CylIndex> occupied;
    std::vector<Vec3> centers; ///< Cartesian bin centers, parallel to `occupied`
};

/// Bin of a Cartesian point, or false when it falls outside the half-open ranges.
inline bool cylindrical_bin(const CylindricalSpec &spec, const Vec3 &p, CylIndex &out) {
    const Cylindrical c = cart_to_cyl(p);
    if (!(c.r >= spec.r_min && c.r < spec.r_max)) return false;
    if (!(c.theta >= spec.theta_min && c.theta < spec.theta_max)) return false;
    if (!(c.z >= spec.z_min && c.z < spec.z_max)) return false;
    const auto bin = [](double v, double lo, double hi, int n) {
        return std::min(n - 1, static_cast<int>(std::floor((v - lo) / (hi - lo) * n)));
    };
    out = {bin(c.r, spec.r_min, spec.r_max, spec.n_r), bin(c.theta, spec.theta_min, spec.theta_max, spec.n_theta),
           bin(c.z, spec.z_min, spec.z_max, spec.n_z)};
    return true;
}

inline Vec3 cylindrical_bin_center(const CylindricalSpec &spec, const CylIndex &idx) {
    const double dr = (spec.r_max - spec.r_min) / spec.n_r;
    const double dt = (spec.theta_max - spec.theta_min) / spec.n_theta;
    const double dz = (spec.z_max - spec.z_min) / spec.n_z;
    return cyl_to_cart({spec.r_min + (idx[0] + 0.5) * dr, spec.theta_min + (idx[1] + 0.5) * dt,
                        spec.z_min + (idx[2] + 0.5) * dz});
}

inline VoxelSet cylindrical_partition(const PointCloud &pc, const CylindricalSpec &spec) {
    spec.validate();
    std::set<CylIndex> bins;
    CylIndex idx{};
    for (const Vec3 &p : pc.points)
        if (cylindrical_bin(spec, p, idx)) bins.insert(idx);
    VoxelSet out{spec, {bins.begin(), bins.end()}, {}};
    out.centers.reserve(out.occupied.size());
    for (const auto &b : out.occupied) out.centers.push_back(cylindrical_bin_center(spec, b));
    return out;
}

inline double squared_distance(const Vec3 &a, const Vec3 &b) {
    const Vec3 d = a - b;
    return dot(d, d);
}

/// Greedy farthest point sampling from `seed_index`. Ties in the max-min
/// distance go to the lowest index.
inline std::vector<std::size_t> farthest_point_sampling(const std::vector<Vec3> &points, std::size_t k,
                                                        std::size_t seed_index = 0) {
    if (k > points.size()) throw InvalidInput("farthest_point_sampling: k exceeds the number of points");
    if (k == 0) return {};
    if (seed_index >= points.size()) throw InvalidInput("farthest_point_sampling: seed index out of range");

    std::vector<std::size_t> picked;
    picked.reserve(k);
    picked.push_back(seed_index);
    std::vector<double> min_d2(points.size(), std::numeric_limits<double>::infinity());
    std::vector<bool> taken(points.size(), false);
    taken[seed_index] = true;
    std::size_t last = seed_index;
    while (picked.size() < k) {
        std::size_t best = points.size();
        double best_d2 = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (taken[i]) continue;
            min_d2[i] = std::min(min_d2[i], squared_distance(points[i], points[last]));
            if (min_d2[i] > best_d2) {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        taken[best] = true;
        picked.push_back(best);
        last = best;
    }
    return picked;
}

struct SkeletonResult {
    std::vector<Vec3> anchors; ///< lidar anchors first, then camera anchors
    std::size_t lidar_count = 0;
    std::size_t camera_count = 0;
    std::size_t camera_survivors = 0;
    std::size_t shortfall = 0; ///< requested camera anchors that could not be placed
};

/// Splits a total anchor budget by the ratio lidar:camera (3:1 by default).
inline std::pair<std::size_t, std::size_t> split_budget(std::size_t total, std::size_t lidar_part = 3,
                                                        std::size_t camera_part = 1) {
    if (lidar_part + camera_part == 0) throw InvalidInput("split_budget: ratio parts are both zero");
    const std::size_t lidar = total * lidar_part / (lidar_part + camera_part);
    return {lidar, total - lidar};
}

inline SkeletonResult skeleton_merge(const VoxelSet &lidar, const VoxelSet &camera, std::size_t lidar_anchors,
                                     std::size_t camera_anchors, double range_filter, std::size_t seed_index = 0) {
    if (lidar_anchors > lidar.occupied.size())
        throw InvalidInput("skeleton_merge: more lidar anchors requested than occupied lidar voxels");
    if (!(lidar.spec == camera.spec)) throw InvalidInput("skeleton_merge: voxel sets use different partitions");
    if (!(range_filter >= 0.0)) throw InvalidInput("skeleton_merge: range filter must be non-negative");

    SkeletonResult out;
    const auto lidar_pick = farthest_point_sampling(lidar.centers, lidar_anchors, seed_index);
    std::set<CylIndex> anchor_bins;
    for (std::size_t i : lidar_pick) {
        out.anchors.push_back(lidar.centers[i]);
        anchor_bins.insert(lidar.occupied[i]);
    }
    out.lidar_count = lidar_pick.size();

    const double r2 = range_filter * range_filter;
    std::vector<Vec3> survivors;
    for (std::size_t c = 0; c < camera.occupied.size(); ++c) {
        if (anchor_bins.contains(camera.occupied[c])) continue;
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < out.lidar_count; ++a)
            nearest = std::min(nearest, squared_distance(camera.centers[c], out.anchors[a]));
        if (nearest > r2) continue;
        survivors.push_back(camera.centers[c]);
    }
    out.camera_survivors = survivors.size();

    const std::size_t take = std::min(camera_anchors, survivors.size());
    out.shortfall = camera_anchors - take;
    if (take > 0) {
        const auto cam_pick = farthest_point_sampling(survivors, take, 0);
        for (std::size_t i : cam_pick) out.anchors.push_back(survivors[i]);
    }
    out.camera_count = take;
    return out;
}

} // namespace tprim
