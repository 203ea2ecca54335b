// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/scene_geometry.h"

#include <cmath>

namespace sforge {

FeatureMap SurfaceGrid::positions() const {
    FeatureMap out(width, height, 3);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out.set_vec3(x, y, position(x, y));
    return out;
}

Vec3 direction_to(const Vec3 &from, const Vec3 &to) {
    const Vec3 d = to - from;
    const double len = d.norm();
    if (!(len > 1e-12))
        throw DomainError("direction_to: source coincides with surface point");
    return d / len;
}

DirectionField direction_field(const SurfaceGrid &grid, const Vec3 &source) {
    DirectionField out(grid.width, grid.height, 3);
    for (int y = 0; y < grid.height; ++y)
        for (int x = 0; x < grid.width; ++x)
            out.set_vec3(x, y, direction_to(grid.position(x, y), source));
    return out;
}

Vec3 half_vector(const Vec3 &omega_i, const Vec3 &omega_o) {
    const Vec3 sum = omega_i + omega_o;
    const double len = sum.norm();
    if (!(len > 1e-12))
        throw DomainError("half_vector: directions are antiparallel");
    return sum / len;
}

Vec3 reflect_about(const Vec3 &normal, const Vec3 &direction) {
    return 2.0 * normal.dot(direction) * normal - direction;
}

Mat3 gram_schmidt_rotation(const Vec3 &n) {
    const Vec3 r = std::abs(n.x()) > 0.999 ? Vec3::UnitY() : Vec3::UnitX();
    const Vec3 u = n.cross(r).normalized();
    const Vec3 v = n.cross(u);
    Mat3 rot;
    rot.col(0) = u;
    rot.col(1) = v;
    rot.col(2) = n;
    return rot;
}

} // namespace sforge
