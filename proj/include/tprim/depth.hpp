// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Per-pixel depth-bin probability maps: lidar projection, camera/lidar fusion,
// the bilinear half-resolution pyramid, and pseudo point cloud extraction.

#include "tprim/errors.hpp"
#include "tprim/geometry.hpp"
#include "tprim/skeleton.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace tprim {

/// H x W x D probabilities in [0, 1]. Storage is x-fastest, then y, then the
/// depth bin: index = x + W * (y + H * d).
struct DepthMap {
    int width = 0;
    int height = 0;
    int num_bins = 0;
    double bin_interval = 0.5;
    std::vector<double> data;

    DepthMap() = default;
    DepthMap(int w, int h, int d, double interval = 0.5)
        : width(w), height(h), num_bins(d), bin_interval(interval),
          data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(d), 0.0) {
        if (w < 1 || h < 1 || d < 1) throw InvalidInput("DepthMap: dimensions must be positive");
        if (!(interval > 0.0)) throw InvalidInput("DepthMap: bin interval must be positive");
    }

    std::size_t index(int x, int y, int d) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(width) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(height) * static_cast<std::size_t>(d));
    }
    double &at(int x, int y, int d) { return data[index(x, y, d)]; }
    double at(int x, int y, int d) const { return data[index(x, y, d)]; }

    bool same_shape(const DepthMap &o) const {
        return width == o.width && height == o.height && num_bins == o.num_bins && bin_interval == o.bin_interval;
    }
};

/// Pinhole camera. `extrinsic` maps world to camera coordinates (4x4 row-major,
/// last row 0 0 0 1); the camera looks along +z.
struct CameraModel {
    Mat3 intrinsic = Mat3::identity();
    std::array<double, 16> extrinsic{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
    int width = 1;
    int height = 1;

    void validate() const {
        if (!(intrinsic(0, 0) > 0.0 && intrinsic(1, 1) > 0.0))
            throw InvalidInput("CameraModel: focal lengths must be positive");
        if (width < 1 || height < 1) throw InvalidInput("CameraModel: image size must be positive");
        const Mat3 r = rotation();
        const Mat3 rrt = r * r.transposed();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (std::abs(rrt(i, j) - (i == j ? 1.0 : 0.0)) > 1e-6)
                    throw InvalidInput("CameraModel: extrinsic rotation is not orthonormal");
    }

    Mat3 rotation() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = extrinsic[static_cast<std::size_t>(i * 4 + j)];
        return r;
    }
    Vec3 translation() const { return {extrinsic[3], extrinsic[7], extrinsic[11]}; }

    Vec3 world_to_camera(const Vec3 &p) const { return rotation() * p + translation(); }
    Vec3 camera_to_world(const Vec3 &p) const { return transpose_mul(rotation(), p - translation()); }
};

/// Lidar-style sparse map: each point in front of the camera marks its
/// (pixel, floor(depth / interval)) bin; per pixel only the nearest bin is kept.
inline DepthMap project_points_to_depth(const PointCloud &points, const CameraModel &cam, int height, int width,
                                        int num_bins, double bin_interval = 0.5) {
    cam.validate();
    DepthMap out(width, height, num_bins, bin_interval);
    std::vector<int> nearest(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), -1);
    const Mat3 &k = cam.intrinsic;
    // Pixel coordinates scale from the camera image to this map's resolution.
    const double sx = static_cast<double>(width) / cam.width;
    const double sy = static_cast<double>(height) / cam.height;
    for (const Vec3 &pw : points.points) {
        const Vec3 pc = cam.world_to_camera(pw);
        if (!(pc.z > 0.0)) continue;
        const double u = (k(0, 0) * pc.x + k(0, 1) * pc.y) / pc.z + k(0, 2);
        const double v = (k(1, 1) * pc.y) / pc.z + k(1, 2);
        const double px = std::floor(u * sx), py = std::floor(v * sy);
        if (px < 0.0 || py < 0.0 || px >= width || py >= height) continue;
        const double b = std::floor(pc.z / bin_interval);
        if (b >= num_bins) continue;
        const std::size_t ray = static_cast<std::size_t>(py) * static_cast<std::size_t>(width) +
                                static_cast<std::size_t>(px);
        const int bin = static_cast<int>(b);
        if (nearest[ray] < 0 || bin < nearest[ray]) nearest[ray] = bin;
    }
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const int bin = nearest[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                                    static_cast<std::size_t>(x)];
            if (bin >= 0) out.at(x, y, bin) = 1.0;
        }
    return out;
}

/// min(cam + lidar, 1), floored at 0.
inline DepthMap fuse_depth(const DepthMap &cam_map, const DepthMap &lidar_map) {
    if (!cam_map.same_shape(lidar_map)) throw InvalidInput("fuse_depth: depth maps differ in shape or bin interval");
    DepthMap out = cam_map;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = std::clamp(cam_map.data[i] + lidar_map.data[i], 0.0, 1.0);
    return out;
}

/// Halves H and W (floor) with per-bin bilinear sampling at output pixel
/// centers mapped into input coordinates.
inline DepthMap downsample_depth(const DepthMap &in, double factor = 0.5) {
    if (factor != 0.5) throw InvalidInput("downsample_depth: only a factor of 0.5 is supported");
    if (in.width < 2 || in.height < 2) throw InvalidInput("downsample_depth: map is smaller than 2x2");
    DepthMap out(in.width / 2, in.height / 2, in.num_bins, in.bin_interval);
    const double scale_x = static_cast<double>(in.width) / out.width;
    const double scale_y = static_cast<double>(in.height) / out.height;
    for (int y = 0; y < out.height; ++y) {
        const double fy = std::clamp((y + 0.5) * scale_y - 0.5, 0.0, in.height - 1.0);
        const int y0 = static_cast<int>(std::floor(fy));
        const int y1 = std::min(y0 + 1, in.height - 1);
        const double ty = fy - y0;
        for (int x = 0; x < out.width; ++x) {
            const double fx = std::clamp((x + 0.5) * scale_x - 0.5, 0.0, in.width - 1.0);
            const int x0 = static_cast<int>(std::floor(fx));
            const int x1 = std::min(x0 + 1, in.width - 1);
            const double tx = fx - x0;
            for (int d = 0; d < in.num_bins; ++d) {
                const double top = (1.0 - tx) * in.at(x0, y0, d) + tx * in.at(x1, y0, d);
                const double bottom = (1.0 - tx) * in.at(x0, y1, d) + tx * in.at(x1, y1, d);
                out.at(x, y, d) = (1.0 - ty) * top + ty * bottom;
            }
        }
    }
    return out;
}

/// Back-projects the top_k most probable bins of every pixel ray (ties go to
/// the nearer bin) to points at the bin-center depth through the pixel center.
/// Zero-probability bins never produce points.
inline PointCloud pseudo_pointcloud(const DepthMap &map, const CameraModel &cam, int top_k = 3) {
    if (top_k < 1) throw InvalidInput("pseudo_pointcloud: top_k must be >= 1");
    cam.validate();
    const Mat3 &k = cam.intrinsic;
    const double sx = static_cast<double>(map.width) / cam.width;
    const double sy = static_cast<double>(map.height) / cam.height;
    PointCloud out;
    std::vector<int> order(static_cast<std::size_t>(map.num_bins));
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) {
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return map.at(x, y, a) > map.at(x, y, b); });
            const double u = (x + 0.5) / sx, v = (y + 0.5) / sy;
            // Normalized ray direction with z = 1.
            const double ry = (v - k(1, 2)) / k(1, 1);
            const double rx = (u - k(0, 2) - k(0, 1) * ry) / k(0, 0);
            for (int i = 0; i < std::min(top_k, map.num_bins); ++i) {
                const int bin = order[static_cast<std::size_t>(i)];
                if (!(map.at(x, y, bin) > 0.0)) break;
                const double depth = (bin + 0.5) * map.bin_interval;
                out.points.push_back(cam.camera_to_world({rx * depth, ry * depth, depth}));
                out.sources.push_back(PointSource::camera);
            }
        }
    return out;
}

} // namespace tprim
