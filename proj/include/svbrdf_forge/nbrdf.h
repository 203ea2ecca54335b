// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svbrdf_forge/direction_encoding.h"
#include "svbrdf_forge/exemplar_sampler.h"
#include "svbrdf_forge/mlp.h"
#include "svbrdf_forge/raster.h"
#include "svbrdf_forge/scene_geometry.h"

#include <span>
#include <string_view>
#include <vector>

namespace sforge {

inline constexpr int kDefaultParamDim = 64;
inline constexpr int kRenderLayers = 6;
inline constexpr int kRenderHidden = 128;
inline constexpr double kLeakySlope = 0.01;
inline constexpr double kGrazingCosine = 1e-4;
inline constexpr double kMaskNormEpsilon = 1e-6;

/// Shared per-pixel neural renderer: the encoding compressor and the
/// 6-layer renderer MLP whose input is [params, compressed encoding].
struct NeuralRenderer {
    MlpNet render;
    MlpNet nd_enc;
    EncodingConfig encoding;

    int param_dim() const { return render.input_dim() - encoding.compressed_dim; }
    void validate() const;

    static NeuralRenderer random(int param_dim, const EncodingConfig &encoding, int hidden,
                                 double leaky_slope, RngStream &rng);
};

/// param_dim + compressed_dim -> hidden x5 -> 3, leaky hidden layers, linear output.
MlpNet make_render_net(int param_dim, int compressed_dim, int hidden, double leaky_slope, RngStream &rng);

/// Log-compressed linear RGB radiance (foreshortening included) for one
/// parameter vector and one compressed direction encoding.
Rgb render_pixel(std::span<const double> params, const Eigen::VectorXd &compressed, const MlpNet &render);

/// Full path for one pixel: encode, compress, render.
Rgb render_pixel(std::span<const double> params, const Vec3 &omega_i, const Vec3 &omega_o,
                 const NeuralRenderer &renderer);

/// Renderer output turned into a BRDF value: (exp(out) - 1) / (n.wi),
/// clamped below at 0. Zero when n.wi < 1e-4.
Rgb as_brdf(std::span<const double> params, const Vec3 &omega_i, const Vec3 &omega_o,
            const NeuralRenderer &renderer, const Vec3 &normal = Vec3::UnitZ());

/// encoded_dim x (W*H) matrix of direction encodings for a light/view pair,
/// one column per pixel in raster order.
Eigen::MatrixXd encode_configuration(const SurfaceGrid &grid, const Vec3 &light, const Vec3 &view,
                                     const EncodingConfig &cfg);

/// Log-RGB relight of a parameter map (3 channels).
FeatureMap relight_log(const NeuralParamMap &params, const NeuralRenderer &renderer, const Vec3 &light,
                       const Vec3 &view);
/// Linear radiance relight, negatives clamped to 0.
HdrImage relight(const NeuralParamMap &params, const NeuralRenderer &renderer, const Vec3 &light,
                 const Vec3 &view);

/// Mean |pred - target| over masked pixels and all channels.
double l1_data_loss(const FeatureMap &pred, const FeatureMap &target, std::span<const int> mask);
std::vector<int> all_pixels(int pixel_count);

enum class MaskMode { inv_param_norm, sq_rgb_norm, none };
MaskMode parse_mask_mode(std::string_view name);
std::string_view to_string(MaskMode mode);

/// Normalized pixel weights 1 / (|params| + 1e-6).
std::vector<double> inv_param_norm_weights(const NeuralParamMap &params);
/// Normalized pixel weights |rgb|^2.
std::vector<double> sq_rgb_norm_weights(const HdrImage &rgb);
/// Scales to sum 1; all-zero (or non-finite total) falls back to uniform.
std::vector<double> normalize_weights(std::vector<double> weights);

/// Weighted sampling without replacement of ceil(fraction * N) indices
/// (Efraimidis-Spirakis keys). Returned sorted ascending, no duplicates.
std::vector<int> sample_without_replacement(std::span<const double> weights, double fraction, RngStream &rng);

std::vector<int> pixel_mask(const NeuralParamMap &params, double fraction, RngStream &rng);
std::vector<int> pixel_mask(const HdrImage &rgb, double fraction, RngStream &rng);

} // namespace sforge
