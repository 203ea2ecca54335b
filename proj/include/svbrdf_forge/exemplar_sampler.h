// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svbrdf_forge/math.h"
#include "svbrdf_forge/rng.h"

#include <string>
#include <string_view>
#include <vector>

namespace sforge {

inline constexpr double kHighlightJitterStd = 2.0;
inline constexpr double kLightDistanceStd = 2.0;
inline constexpr double kMinLightDistance = 0.5;
inline constexpr double kHemisphereEvalRadius = 4.0;

struct ExemplarConfig {
    Vec3 light_position = Vec3::Zero();
    Vec3 view_position = Vec3::Zero();
    Vec2 highlight_point = Vec2::Zero();

    bool operator==(const ExemplarConfig &) const = default;
};

enum class EvalKind { reflect, identity, hemisphere };

EvalKind parse_eval_kind(std::string_view name);
std::string_view to_string(EvalKind kind);

/// p = 2 xi - 1 + gaussian, per coordinate, from explicit draws.
Vec2 highlight_point_from(double xi_x, double gauss_x, double xi_y, double gauss_y);

/// Uniform point on the surface square, jittered by N(0, 2) per coordinate.
/// The result is not clipped to the surface.
Vec2 sample_highlight_point(RngStream &rng);

/// Uniform (by area) on the upper hemisphere of the given radius; z > 0.
Vec3 sample_hemisphere_position(RngStream &rng, double radius);

/// sample_hemisphere_position at kViewDistance.
Vec3 sample_view(RngStream &rng);

/// Light position whose mirror direction at p (about +z) is the view
/// direction, at distance |N(0, 2)| + 0.5 from p.
Vec3 sample_light_for_highlight(const Vec2 &p, const Vec3 &view, RngStream &rng);

/// Same construction with an explicit distance, no randomness.
Vec3 light_for_highlight(const Vec2 &p, const Vec3 &view, double distance);

ExemplarConfig sample_reflect_config(RngStream &rng);

std::vector<ExemplarConfig> eval_configs(EvalKind kind, int count, RngStream &rng);

} // namespace sforge
