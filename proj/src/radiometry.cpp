// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/radiometry.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace sforge {

double log_compress(double radiance) {
    if (!(radiance >= 0.0))
        throw DomainError("log_compress: radiance must be non-negative, got " + std::to_string(radiance));
    return std::log1p(radiance);
}

double log_expand(double log_radiance) { return std::expm1(log_radiance); }

double log_expand_and_gamma(double log_radiance) {
    return std::pow(std::max(std::expm1(log_radiance), 0.0), 1.0 / kDisplayGamma);
}

FeatureMap log_compress(const HdrImage &image) {
    FeatureMap out(image.width(), image.height(), image.channels());
    for (std::size_t i = 0; i < image.size(); ++i)
        out.data()[i] = log_compress(static_cast<double>(image.data()[i]));
    return out;
}

HdrImage log_expand(const FeatureMap &log_image) {
    HdrImage out(log_image.width(), log_image.height(), log_image.channels());
    for (std::size_t i = 0; i < log_image.size(); ++i)
        out.data()[i] = static_cast<float>(std::max(log_expand(log_image.data()[i]), 0.0));
    return out;
}

FeatureMap log_expand_and_gamma(const FeatureMap &log_image) {
    FeatureMap out(log_image.width(), log_image.height(), log_image.channels());
    for (std::size_t i = 0; i < log_image.size(); ++i)
        out.data()[i] = log_expand_and_gamma(log_image.data()[i]);
    return out;
}

HdrImage ldr_clamp(const HdrImage &image, double white) {
    HdrImage out = image;
    const float w = static_cast<float>(white);
    for (auto &v : out.data())
        v = std::min(v, w);
    return out;
}

} // namespace sforge
