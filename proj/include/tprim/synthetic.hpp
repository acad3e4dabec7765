// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Ground-truth scenes for fit and eval round trips.

#include "tprim/errors.hpp"
#include "tprim/io.hpp"
#include "tprim/scene.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

namespace tprim {

struct SyntheticScene {
    SceneFile file;
    GridSpec spec;
};

namespace detail {

inline Primitive make_primitive(Kind kind, const Vec3 &m, const Vec3 &s, double yaw, int cls, int num_classes,
                                double eps1 = 1.0, double eps2 = 1.0) {
    Primitive p;
    p.kind = kind;
    p.center = m;
    p.scale = s;
    p.rotation = axis_angle({0.0, 0.0, 1.0}, yaw);
    p.opacity = 0.95;
    p.semantics.assign(static_cast<std::size_t>(num_classes), 0.0);
    p.semantics[static_cast<std::size_t>(cls - 1)] = 4.0;
    if (kind != Kind::TP) {
        p.eps1 = eps1;
        p.eps2 = eps2;
    }
    return p;
}

inline Scene finish(Scene scene, const GridSpec &spec) {
    for (auto &p : scene.primitives) p.nu = estimate_dof(p, spec);
    scene.validate();
    return scene;
}

} // namespace detail

/// Three box-like TSQ primitives of distinct classes on a 32 x 32 x 8 grid
/// with 0.5 m voxels.
inline SyntheticScene three_boxes(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    std::uniform_real_distribution<double> angle(-0.4, 0.4);
    SyntheticScene out;
    out.spec.origin = {-8.0, -8.0, -2.0};
    out.spec.extent = {16.0, 16.0, 4.0};
    out.spec.dims = {32, 32, 8};
    Scene scene;
    scene.num_classes = 3;
    const Vec3 centers[3] = {{-4.0, -3.5, 0.0}, {3.5, -3.0, 0.0}, {0.0, 4.0, 0.0}};
    const Vec3 scales[3] = {{2.0, 1.2, 1.0}, {1.4, 2.2, 0.9}, {2.4, 1.5, 1.1}};
    for (int i = 0; i < 3; ++i) {
        const Vec3 m{centers[i].x + jitter(rng), centers[i].y + jitter(rng), centers[i].z};
        scene.primitives.push_back(
            detail::make_primitive(Kind::TSQ, m, scales[i], angle(rng), i + 1, scene.num_classes, 0.4, 0.4));
    }
    out.file.scene = detail::finish(std::move(scene), out.spec);
    out.file.class_names = {"box_a", "box_b", "box_c"};
    return out;
}

/// Ground slab, two walls and three road users on a 64 x 64 x 8 grid with
/// 0.5 m voxels.
inline SyntheticScene driving_toy(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> along(-10.0, 10.0);
    std::uniform_real_distribution<double> lane(-4.0, 4.0);
    std::uniform_real_distribution<double> heading(-0.3, 0.3);
    SyntheticScene out;
    out.spec.origin = {-16.0, -16.0, -2.0};
    out.spec.extent = {32.0, 32.0, 4.0};
    out.spec.dims = {64, 64, 8};
    Scene scene;
    scene.num_classes = 4;
    const int ground = 1, wall = 2, vehicle = 3, pedestrian = 4;
    scene.primitives.push_back(
        detail::make_primitive(Kind::TSQ, {0.0, 0.0, -1.75}, {15.0, 15.0, 0.3}, 0.0, ground, 4, 0.2, 0.2));
    scene.primitives.push_back(
        detail::make_primitive(Kind::TSQ, {0.0, 10.0, -0.5}, {14.0, 0.4, 1.2}, 0.0, wall, 4, 0.3, 0.3));
    scene.primitives.push_back(
        detail::make_primitive(Kind::TSQ, {0.0, -10.0, -0.5}, {14.0, 0.4, 1.2}, 0.0, wall, 4, 0.3, 0.3));
    scene.primitives.push_back(
        detail::make_primitive(Kind::TSQ, {along(rng), lane(rng), -0.7}, {2.2, 0.9, 0.7}, heading(rng), vehicle, 4, 0.4, 0.6));
    // A tapered vehicle exercises the warped family.
    Primitive van = detail::make_primitive(Kind::TSQIW, {along(rng), lane(rng), -0.5}, {2.6, 1.0, 0.9}, heading(rng),
                                           vehicle, 4, 0.4, 0.6);
    van.warp[3] = -0.1; // B4: stretch along u
    van.warp[18] = 0.05; // B19: u^2 bulge
    scene.primitives.push_back(van);
    scene.primitives.push_back(
        detail::make_primitive(Kind::TP, {along(rng), lane(rng), -0.8}, {0.35, 0.35, 0.8}, 0.0, pedestrian, 4));
    out.file.scene = detail::finish(std::move(scene), out.spec);
    out.file.class_names = {"ground", "wall", "vehicle", "pedestrian"};
    return out;
}

inline SyntheticScene synthetic_preset(const std::string &name, std::uint64_t seed) {
    if (name == "three-boxes") return three_boxes(seed);
    if (name == "driving-toy") return driving_toy(seed);
    throw InvalidInput("unknown preset '" + name + "' (expected three-boxes or driving-toy)");
}

} // namespace tprim
