// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/sphere_renderer.h"

#include "svbrdf_forge/parallel.h"

#include <cmath>
#include <limits>
#include <string>

namespace sforge {

void SphereScene::validate() const {
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw DomainError("SphereScene: radius must be positive");
    if (!((light.position - center).norm() > radius))
        throw DomainError("SphereScene: light must lie outside the sphere");
    if (resolution < 1)
        throw DomainError("SphereScene: resolution must be positive");
    if (!(camera_direction.norm() > 0.0))
        throw DomainError("SphereScene: camera direction must be non-zero");
    if (environment && environment->samples < 1)
        throw DomainError("SphereScene: environment needs at least one sample");
    if (const auto *nm = std::get_if<NeuralMaterial>(&material)) {
        if (!nm->renderer)
            throw DomainError("SphereScene: neural material has no renderer");
        if (static_cast<int>(nm->params.size()) != nm->renderer->param_dim())
            throw DomainError("SphereScene: neural material has " + std::to_string(nm->params.size()) +
                              " parameters, renderer expects " + std::to_string(nm->renderer->param_dim()));
    }
}

Rgb eval_sphere_material(const SphereMaterial &material, const Vec3 &m, const Vec3 &omega_i, const Vec3 &omega_o) {
    const Vec3 n = std::holds_alternative<GgxSample>(material) ? std::get<GgxSample>(material).normal
                                                               : std::get<NeuralMaterial>(material).encoded_normal;
    const Mat3 rot = gram_schmidt_rotation(n) * gram_schmidt_rotation(m).transpose();
    const Vec3 wi = rot * omega_i;
    const Vec3 wo = rot * omega_o;
    if (const auto *g = std::get_if<GgxSample>(&material)) {
        if (g->normal.dot(wi) <= 0.0 || g->normal.dot(wo) <= 0.0)
            return Rgb::Zero();
        return eval_brdf(*g, wi, wo);
    }
    const auto &nm = std::get<NeuralMaterial>(material);
    if (n.dot(wo) <= 0.0)
        return Rgb::Zero();
    return as_brdf(nm.params, wi, wo, *nm.renderer, n);
}

HemisphereSample cosine_sample_hemisphere(RngStream &rng) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const double r = std::sqrt(u1);
    const double phi = 2.0 * kPi * u2;
    const Vec3 d(r * std::cos(phi), r * std::sin(phi), std::sqrt(std::max(0.0, 1.0 - u1)));
    return {d, d.z() * kInvPi};
}

double cosine_hemisphere_pdf(const Vec3 &direction) { return std::max(0.0, direction.z()) * kInvPi; }

HdrImage render_sphere(const SphereScene &scene) {
    scene.validate();
    const int res = scene.resolution;
    const Vec3 d = scene.camera_direction.normalized();
    // Screen axes: right is perpendicular to world +y (or +z when looking
    // along y), up completes the frame. A +z camera sees +x right, +y up.
    const Vec3 world_up = std::abs(d.y()) > 0.999 ? Vec3::UnitZ() : Vec3::UnitY();
    const Vec3 u = world_up.cross(d).normalized();
    const Vec3 v = d.cross(u);
    HdrImage out(res, res, 3);
    parallel_for(res, [&](int y) {
        for (int x = 0; x < res; ++x) {
            const double sx = (2.0 * x + 1.0) / res - 1.0;
            const double sy = 1.0 - (2.0 * y + 1.0) / res;
            const double r2 = sx * sx + sy * sy;
            if (r2 > 1.0)
                continue;
            const Vec3 m = (sx * u + sy * v + std::sqrt(1.0 - r2) * d).normalized();
            const Vec3 p = scene.center + scene.radius * m;
            const Vec3 wo = d;
            Rgb value = Rgb::Zero();
            const Vec3 wi = (scene.light.position - p).normalized();
            const double cosine = m.dot(wi);
            if (cosine > 0.0)
                value += scene.light.intensity * eval_sphere_material(scene.material, m, wi, wo) * cosine;
            if (scene.environment) {
                const EnvironmentLight &env = *scene.environment;
                RngStream rng = RngStream(env.seed).split(static_cast<std::uint64_t>(y) * res + x);
                const Mat3 frame = gram_schmidt_rotation(m);
                Rgb sum = Rgb::Zero();
                for (int s = 0; s < env.samples; ++s) {
                    const HemisphereSample hs = cosine_sample_hemisphere(rng);
                    if (!(hs.pdf > 0.0))
                        continue;
                    const Vec3 w = frame * hs.direction;
                    sum += eval_sphere_material(scene.material, m, w, wo) * (hs.direction.z() / hs.pdf);
                }
                value += env.radiance * sum / env.samples;
            }
            auto px = out.pixel(x, y);
            for (int c = 0; c < 3; ++c)
                px[c] = static_cast<float>(value[c]);
        }
    });
    return out;
}

std::pair<int, int> argmax_pixel(const HdrImage &image) {
    std::pair<int, int> best{0, 0};
    double best_value = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            double s = 0.0;
            for (float c : image.pixel(x, y))
                s += c;
            if (s > best_value) {
                best_value = s;
                best = {x, y};
            }
        }
    return best;
}

} // namespace sforge
