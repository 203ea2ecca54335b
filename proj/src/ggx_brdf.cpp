// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/ggx_brdf.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace sforge {

double decode_alpha(double stored) {
    return std::clamp(stored * stored, kMinAlpha, 1.0);
}

double ndf_d(double cos_theta_h, double alpha) {
    if (!(alpha > 0.0))
        throw DomainError("ndf_d: alpha must be positive, got " + std::to_string(alpha));
    if (!(std::abs(cos_theta_h) <= 1.0 + 1e-6))
        throw DomainError("ndf_d: cos_theta_h outside [-1, 1]: " + std::to_string(cos_theta_h));
    const double c = std::clamp(cos_theta_h, -1.0, 1.0);
    const double a2 = alpha * alpha;
    const double t = c * c * (a2 - 1.0) + 1.0;
    return a2 / (kPi * t * t);
}

double smith_g1(double i_dot_h, double alpha) {
    if (!(alpha > 0.0))
        throw DomainError("smith_g1: alpha must be positive, got " + std::to_string(alpha));
    if (i_dot_h <= 0.0)
        return 0.0;
    const double c = std::min(i_dot_h, 1.0);
    const double k = 0.5 * alpha;
    return c / (c * (1.0 - k) + k);
}

Rgb fresnel_schlick(double cos_term, const Rgb &f0) {
    const double c = std::clamp(cos_term, 0.0, 1.0);
    const double m = 1.0 - c;
    const double m5 = (m * m) * (m * m) * m;
    const Rgb f = f0.cwiseMax(0.0).cwiseMin(1.0);
    return f + (1.0 - f) * m5;
}

Rgb eval_brdf(const GgxSample &sample, const Vec3 &omega_i, const Vec3 &omega_o) {
    const Vec3 &n = sample.normal;
    if (n.dot(omega_i) < 0.0 || n.dot(omega_o) < 0.0)
        return Rgb::Zero();
    const Vec3 sum = omega_i + omega_o;
    const double len = sum.norm();
    if (len < 1e-12)
        return Rgb::Zero();
    const Vec3 h = sum / len;

    // Every i/o-dependent quantity is combined commutatively so swapping the
    // directions reproduces the result bit-for-bit.
    const double h_i = h.dot(omega_i);
    const double h_o = h.dot(omega_o);
    const double d = ndf_d(std::clamp(n.dot(h), -1.0, 1.0), sample.alpha);
    const Rgb f = fresnel_schlick(0.5 * (h_i + h_o), sample.specular);
    const double g = smith_g1(h_i, sample.alpha) * smith_g1(h_o, sample.alpha);
    const double denom = 4.0 * (std::max(h_i, kHalfDotGuard) * std::max(h_o, kHalfDotGuard));

    return sample.diffuse * kInvPi + f * (d * g / denom);
}

} // namespace sforge
