// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svbrdf_forge/raster.h"

namespace sforge {

inline constexpr double kDisplayGamma = 2.2;
inline constexpr double kDefaultLdrWhite = 1.0;

/// log(r + 1), natural log. Throws on negative radiance.
double log_compress(double radiance);
/// Inverse of log_compress.
double log_expand(double log_radiance);
/// (exp(r_log) - 1)^(1/2.2), for display.
double log_expand_and_gamma(double log_radiance);

FeatureMap log_compress(const HdrImage &image);
HdrImage log_expand(const FeatureMap &log_image);
FeatureMap log_expand_and_gamma(const FeatureMap &log_image);

/// min(value, white) per component.
HdrImage ldr_clamp(const HdrImage &image, double white = kDefaultLdrWhite);

} // namespace sforge
