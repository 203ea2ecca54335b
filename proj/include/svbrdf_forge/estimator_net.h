// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svbrdf_forge/raster.h"
#include "svbrdf_forge/rng.h"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sforge {

enum class ConvKind : std::uint32_t { standard = 0, highlight_aware = 1, transposed = 2 };

/// Stride-1 layers use odd kernels with reflect padding. Stride-2 layers are
/// either 2x2 standard downsamplers (no padding) or 4x4 transposed
/// upsamplers (padding 1), each exactly halving or doubling the extent.
struct ConvLayerSpec {
    int kernel = 3;
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;
    ConvKind kind = ConvKind::standard;

    void validate() const;
    int output_extent(int input_extent) const;
    bool operator==(const ConvLayerSpec &) const = default;
};

/// Weights are laid out [out][ky][kx][in]. Highlight-aware layers carry a
/// second gate convolution with the same shape.
struct ConvLayer {
    ConvLayerSpec spec;
    std::vector<double> weight;
    std::vector<double> bias;
    std::vector<double> gate_weight;
    std::vector<double> gate_bias;

    static ConvLayer random(const ConvLayerSpec &spec, RngStream &rng);
    static ConvLayer zeros(const ConvLayerSpec &spec);
    std::size_t weight_size() const;
    std::size_t parameter_count() const;
    bool operator==(const ConvLayer &) const = default;
};

struct ConvTape {
    FeatureMap input;
    FeatureMap feature; // raw feature convolution (HA only)
    FeatureMap gate;    // sigmoid gate values (HA only)
};

struct ConvGrads {
    std::vector<double> weight;
    std::vector<double> bias;
    std::vector<double> gate_weight;
    std::vector<double> gate_bias;
};

/// Standard, downsampling or transposed convolution; for highlight-aware
/// layers this is the gated product conv(x) * sigmoid(gate(x)).
FeatureMap conv_forward(const FeatureMap &input, const ConvLayer &layer, ConvTape *tape = nullptr);
void conv_backward(const ConvLayer &layer, const ConvTape &tape, const FeatureMap &out_grad, ConvGrads &grads,
                   FeatureMap *input_grad);
ConvGrads zero_grads(const ConvLayer &layer);

/// Gated convolution; throws unless the layer is highlight-aware.
FeatureMap ha_conv_forward(const FeatureMap &input, const ConvLayer &layer);

struct UNetSpec {
    int input_channels = 4;
    int base_channels = 16;
    int levels = 3;
    int blocks_per_level = 1;
    int output_channels = 64;
    int stem_kernel = 7;
    double leaky_slope = 0.01;

    int channels_at(int level) const { return base_channels << level; }
    int spatial_multiple() const { return 1 << levels; }
    void validate() const;
    bool operator==(const UNetSpec &) const = default;
};

struct UNetTape;

struct UNetGrads {
    std::vector<ConvGrads> layers;
};

/// Encoder-decoder estimator. Encoder: 7x7 stem, highlight-aware residual
/// blocks and 2x2 stride-2 downsampling per level, highlight-aware blocks at
/// the bottleneck. Decoder: 4x4 transposed upsampling, concatenation with the
/// encoder features of that level, a 3x3 channel-reducing convolution and
/// standard residual blocks. A 1x1 head produces the parameter map.
/// Residual blocks are pre-activation: x + conv(act(conv(act(x)))).
class UNet {
  public:
    UNet() = default;
    UNet(UNetSpec spec, std::vector<ConvLayer> layers);
    static UNet random(const UNetSpec &spec, RngStream &rng);
    /// Layer specs and names in canonical order.
    static std::vector<std::pair<std::string, ConvLayerSpec>> layout(const UNetSpec &spec);

    const UNetSpec &spec() const { return spec_; }
    const std::vector<ConvLayer> &layers() const { return layers_; }
    std::vector<ConvLayer> &layers() { return layers_; }
    const std::vector<std::string> &layer_names() const { return names_; }
    ConvLayer &layer(const std::string &name);
    std::size_t parameter_count() const;
    bool empty() const { return layers_.empty(); }

    FeatureMap forward(const FeatureMap &input, UNetTape *tape = nullptr) const;
    void backward(const UNetTape &tape, const FeatureMap &out_grad, UNetGrads &grads,
                  FeatureMap *input_grad = nullptr) const;
    UNetGrads zero_grads() const;

    std::vector<std::span<double>> parameter_views();
    static std::vector<std::span<const double>> gradient_views(const UNetGrads &grads);

    bool operator==(const UNet &) const = default;

  private:
    UNetSpec spec_;
    std::vector<ConvLayer> layers_;
    std::vector<std::string> names_;
};

struct UNetTape {
    std::vector<ConvTape> conv; // one per layer, canonical order
};

/// H x W x 4 estimator input -> H x W x C parameter map. H and W must be
/// divisible by 2^levels.
NeuralParamMap estimate(const FeatureMap &input, const UNet &net);

} // namespace sforge
