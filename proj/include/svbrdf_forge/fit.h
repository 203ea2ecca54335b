// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svbrdf_forge/adam.h"
#include "svbrdf_forge/estimator_net.h"
#include "svbrdf_forge/exemplar_sampler.h"
#include "svbrdf_forge/nbrdf.h"

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace sforge {

/// Where the per-pixel parameters come from during fitting.
///   latent    - the map itself is optimized; it starts from the output of a
///               freshly initialized estimator on the input photo.
///   estimator - the map is estimator(input photo) and the estimator weights
///               are optimized jointly with the renderer.
enum class ParamSource { latent, estimator };
ParamSource parse_param_source(std::string_view name);
std::string_view to_string(ParamSource source);

struct LossWeights {
    double data = 1.0;
    double perceptual = 0.01; // recorded only; no perceptual loss is built
    double critic = 0.03;     // recorded only; no discriminator is built
    bool operator==(const LossWeights &) const = default;
};

struct FitConfig {
    double learning_rate = 1e-4;
    double lr_decay = 0.015;     // multiplicative decay per epoch
    int epoch_iterations = 0;    // iterations per epoch; 0 = one pass over the targets
    int batch_exemplars = 8;
    int iterations = 1000;
    double mask_fraction = 0.6;
    MaskMode mask_mode = MaskMode::inv_param_norm;
    std::uint64_t seed = 0;
    ParamSource param_source = ParamSource::latent;
    int param_dim = kDefaultParamDim;
    int render_hidden = kRenderHidden;
    double leaky_slope = kLeakySlope;
    int estimator_base_channels = 16;
    LossWeights loss_weights;
    AdamConfig adam;

    void validate() const;
    int epoch_length(int target_count) const;
    double learning_rate_at(int iteration, int target_count) const;
    bool operator==(const FitConfig &) const = default;
};

struct FitTarget {
    HdrImage image;
    ExemplarConfig config;
};

struct FitResult {
    NeuralParamMap params;
    NeuralRenderer renderer;
    UNet estimator;
    // Log-space L1 before each update, over every pixel of the iteration's
    // exemplars. Gradients only flow from the masked pixels, whose L1 is
    // recorded separately.
    std::vector<double> loss_trace;
    std::vector<double> masked_loss_trace;
};

class FitDiverged : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

using FitProgress = std::function<void(int iteration, double loss)>;

/// Jointly fits the parameter map (or estimator), the renderer and the
/// encoding compressor to the targets with Adam on the masked L1 loss in log
/// space. Deterministic for a fixed seed. Throws FitDiverged when the loss
/// stops being finite.
FitResult fit(std::span<const FitTarget> targets, const HdrImage &input_photo, const FitConfig &cfg,
              const EncodingConfig &enc_cfg, const FitProgress &progress = {});

/// Estimator input for an overhead co-located photo.
FeatureMap photo_to_estimator_input(const HdrImage &photo);

} // namespace sforge
