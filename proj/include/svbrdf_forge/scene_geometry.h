// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svbrdf_forge/math.h"
#include "svbrdf_forge/raster.h"

namespace sforge {

/// Flat 2x2 material surface sampled at pixel centers, z = 0.
struct SurfaceGrid {
    int width = 0;
    int height = 0;

    Vec3 position(int x, int y) const {
        return {(2.0 * x + 1.0) / width - 1.0, (2.0 * y + 1.0) / height - 1.0, 0.0};
    }
    FeatureMap positions() const;
};

struct PointSource {
    Vec3 position = Vec3::Zero();
    Rgb intensity = Rgb::Ones();
};

/// Per-pixel unit directions from each surface point toward `source`.
DirectionField direction_field(const SurfaceGrid &grid, const Vec3 &source);

/// Unit direction from `from` toward `to`; throws if the points coincide.
Vec3 direction_to(const Vec3 &from, const Vec3 &to);

Vec3 half_vector(const Vec3 &omega_i, const Vec3 &omega_o);

/// Mirror of `direction` about `normal`: 2(n.d)n - d.
Vec3 reflect_about(const Vec3 &normal, const Vec3 &direction);

/// Orthonormal R = [u v n] with u = normalize(n x r), v = n x u. R^T maps n
/// to +z and R maps +z back to n. r = +x unless n is within ~2.6 degrees of
/// the x axis, in which case r = +y.
Mat3 gram_schmidt_rotation(const Vec3 &n);

} // namespace sforge
