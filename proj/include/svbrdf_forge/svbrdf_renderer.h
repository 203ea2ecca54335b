// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svbrdf_forge/ggx_brdf.h"
#include "svbrdf_forge/raster.h"
#include "svbrdf_forge/scene_geometry.h"

#include <cmath>

namespace sforge {

/// Camera/light distance at which a 28 degree field of view exactly spans
/// the 2x2 surface: 1 / tan(14 deg).
inline const double kViewDistance = 1.0 / std::tan(14.0 * kPi / 180.0);

/// GGX SVBRDF parameter maps. Diffuse and specular hold linear reflectance,
/// normals are decoded unit vectors with positive z, and roughness keeps the
/// stored sqrt(alpha) value.
struct SvbrdfMaps {
    FeatureMap diffuse;   // H x W x 3
    FeatureMap specular;  // H x W x 3
    FeatureMap normal;    // H x W x 3
    FeatureMap roughness; // H x W x 1

    int width() const { return diffuse.width(); }
    int height() const { return diffuse.height(); }

    /// Throws DomainError on shape mismatch or out-of-range values.
    void validate() const;
    GgxSample sample(int x, int y) const;

    /// Spatially constant material, handy for tests and demos.
    static SvbrdfMaps uniform(int width, int height, const Rgb &diffuse, const Rgb &specular,
                              double sqrt_alpha, const Vec3 &normal = Vec3::UnitZ());
};

struct RenderJob {
    const SvbrdfMaps &maps;
    PointSource light;
    Vec3 view_position = Vec3::Zero();
    bool colocated = false;  // view_position is ignored and taken from the light
    bool falloff = false;    // 1/d^2 attenuation from the light
};

/// Point-light render: I * f(wi, wo) * max(0, n.wi) per pixel, unclamped.
HdrImage render(const RenderJob &job);

/// Light and view both at (0, 0, kViewDistance).
HdrImage colocated_input_render(const SvbrdfMaps &maps, const Rgb &intensity = Rgb::Ones(),
                                bool falloff = false);

/// Four-channel estimator input: log radiance (passed through as given) and
/// the z component of the per-pixel half vector, which is not log-scaled.
FeatureMap build_estimator_input(const FeatureMap &log_photo, const Vec3 &light, const Vec3 &view);

} // namespace sforge
