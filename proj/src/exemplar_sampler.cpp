// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/exemplar_sampler.h"

#include "svbrdf_forge/scene_geometry.h"
#include "svbrdf_forge/svbrdf_renderer.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sforge {

EvalKind parse_eval_kind(std::string_view name) {
    if (name == "reflect")
        return EvalKind::reflect;
    if (name == "identity")
        return EvalKind::identity;
    if (name == "hemisphere")
        return EvalKind::hemisphere;
    throw DomainError("unknown exemplar kind '" + std::string(name) + "' (expected reflect|identity|hemisphere)");
}

std::string_view to_string(EvalKind kind) {
    switch (kind) {
    case EvalKind::reflect:
        return "reflect";
    case EvalKind::identity:
        return "identity";
    case EvalKind::hemisphere:
        return "hemisphere";
    }
    return "?";
}

Vec2 highlight_point_from(double xi_x, double gauss_x, double xi_y, double gauss_y) {
    return {xi_x * 2.0 - 1.0 + gauss_x, xi_y * 2.0 - 1.0 + gauss_y};
}

Vec2 sample_highlight_point(RngStream &rng) {
    const double xi1 = rng.uniform();
    const double g1 = rng.normal(0.0, kHighlightJitterStd);
    const double xi3 = rng.uniform();
    const double g2 = rng.normal(0.0, kHighlightJitterStd);
    return highlight_point_from(xi1, g1, xi3, g2);
}

Vec3 sample_hemisphere_position(RngStream &rng, double radius) {
    // z uniform in (0, 1] is uniform in solid angle (Archimedes).
    const double z = 1.0 - rng.uniform();
    const double phi = 2.0 * kPi * rng.uniform();
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return radius * Vec3(r * std::cos(phi), r * std::sin(phi), z);
}

Vec3 sample_view(RngStream &rng) { return sample_hemisphere_position(rng, kViewDistance); }

Vec3 light_for_highlight(const Vec2 &p, const Vec3 &view, double distance) {
    if (!(view.z() > 0.0))
        throw DomainError("light_for_highlight: view must be above the surface");
    const Vec3 point(p.x(), p.y(), 0.0);
    const Vec3 mirrored = reflect_about(Vec3::UnitZ(), direction_to(point, view));
    if (!(mirrored.z() > 0.0))
        throw std::logic_error("light_for_highlight: mirrored direction left the upper hemisphere");
    return point + distance * mirrored;
}

Vec3 sample_light_for_highlight(const Vec2 &p, const Vec3 &view, RngStream &rng) {
    const double distance = std::abs(rng.normal(0.0, kLightDistanceStd)) + kMinLightDistance;
    return light_for_highlight(p, view, distance);
}

ExemplarConfig sample_reflect_config(RngStream &rng) {
    ExemplarConfig c;
    c.highlight_point = sample_highlight_point(rng);
    c.view_position = sample_view(rng);
    c.light_position = sample_light_for_highlight(c.highlight_point, c.view_position, rng);
    return c;
}

std::vector<ExemplarConfig> eval_configs(EvalKind kind, int count, RngStream &rng) {
    if (count < 1)
        throw DomainError("eval_configs: count must be at least 1");
    std::vector<ExemplarConfig> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        switch (kind) {
        case EvalKind::reflect:
            out.push_back(sample_reflect_config(rng));
            break;
        case EvalKind::identity: {
            const Vec3 overhead(0.0, 0.0, kViewDistance);
            out.push_back({overhead, overhead, Vec2::Zero()});
            break;
        }
        case EvalKind::hemisphere: {
            ExemplarConfig c;
            c.light_position = sample_hemisphere_position(rng, kHemisphereEvalRadius);
            c.view_position = sample_hemisphere_position(rng, kHemisphereEvalRadius);
            out.push_back(c);
            break;
        }
        }
    }
    return out;
}

} // namespace sforge
