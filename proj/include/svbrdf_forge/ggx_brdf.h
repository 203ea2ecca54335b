// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svbrdf_forge/math.h"

namespace sforge {

/// Analytic GGX material at a single surface point.
struct GgxSample {
    Rgb diffuse = Rgb::Zero();  // linear reflectance in [0,1]
    Rgb specular = Rgb::Zero(); // F0 in [0,1]
    Vec3 normal = Vec3::UnitZ();
    double alpha = 1.0;         // slope standard deviation, decoded (not sqrt)
};

inline constexpr double kMinAlpha = 1e-3;
inline constexpr double kHalfDotGuard = 1e-6;

/// Roughness maps store sqrt(alpha). Returns r^2 clamped to [kMinAlpha, 1].
double decode_alpha(double stored);

/// Trowbridge-Reitz normal distribution D(h) for cos(theta_h) = n.h.
double ndf_d(double cos_theta_h, double alpha);

/// Separable Smith masking term for one direction; zero when back-facing.
double smith_g1(double i_dot_h, double alpha);

/// Schlick's approximation, componentwise.
Rgb fresnel_schlick(double cos_term, const Rgb &f0);

/// diffuse/pi + D F G / (4 (h.wo)(h.wi)), evaluated with sample.normal as n.
/// Zero when either direction lies below the surface or wi = -wo.
/// Symmetric in (wi, wo) bit-for-bit.
Rgb eval_brdf(const GgxSample &sample, const Vec3 &omega_i, const Vec3 &omega_o);

} // namespace sforge
