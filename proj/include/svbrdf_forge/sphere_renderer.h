// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svbrdf_forge/ggx_brdf.h"
#include "svbrdf_forge/nbrdf.h"
#include "svbrdf_forge/raster.h"
#include "svbrdf_forge/rng.h"
#include "svbrdf_forge/scene_geometry.h"

#include <optional>
#include <variant>
#include <vector>

namespace sforge {

/// One pixel of a fitted neural material. `encoded_normal` is the normal
/// that the parameters implicitly encode, usually read from the ground-truth
/// normal map.
struct NeuralMaterial {
    std::vector<double> params;
    const NeuralRenderer *renderer = nullptr;
    Vec3 encoded_normal = Vec3::UnitZ();
};

using SphereMaterial = std::variant<GgxSample, NeuralMaterial>;

/// Constant-radiance environment, integrated by cosine-weighted sampling.
struct EnvironmentLight {
    Rgb radiance = Rgb::Ones();
    int samples = 64;
    std::uint64_t seed = 0;
};

/// Sphere under an orthographic camera looking along -camera_direction.
/// The image spans the sphere's silhouette exactly.
struct SphereScene {
    Vec3 center = Vec3::Zero();
    double radius = 1.0;
    PointSource light{Vec3(3.0, 0.0, 4.0), Rgb::Ones()};
    Vec3 camera_direction = Vec3::UnitZ();
    int resolution = 128;
    SphereMaterial material = GgxSample{};
    std::optional<EnvironmentLight> environment;

    void validate() const;
};

/// Material-frame BRDF evaluation at a sphere point with normal m: world
/// directions are rotated by R(n) R(m)^T so that m lines up with the
/// material's encoded normal n.
Rgb eval_sphere_material(const SphereMaterial &material, const Vec3 &m, const Vec3 &omega_i, const Vec3 &omega_o);

HdrImage render_sphere(const SphereScene &scene);

struct HemisphereSample {
    Vec3 direction;
    double pdf = 0.0;
};

/// Density cos(theta)/pi on the +z hemisphere.
HemisphereSample cosine_sample_hemisphere(RngStream &rng);
double cosine_hemisphere_pdf(const Vec3 &direction);

/// Pixel index (x, y) of the brightest pixel by channel sum; ties keep the first.
std::pair<int, int> argmax_pixel(const HdrImage &image);

} // namespace sforge
