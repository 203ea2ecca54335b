// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/estimator_net.h"

#include "svbrdf_forge/math.h"

#include <Eigen/Core>

#include <cmath>
#include <string>

namespace sforge {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

int reflect_index(int i, int n) {
    if (n == 1)
        return 0;
    while (i < 0 || i >= n) {
        if (i < 0)
            i = -i;
        if (i >= n)
            i = 2 * n - 2 - i;
    }
    return i;
}

// For every output pixel and kernel tap, the linear input pixel index it
// reads, or -1 for an implicit zero.
struct Gather {
    int out_width = 0;
    int out_height = 0;
    int taps = 0;
    std::vector<int> source;
};

Gather make_gather(const ConvLayerSpec &spec, int in_width, int in_height) {
    Gather g;
    g.out_width = spec.output_extent(in_width);
    g.out_height = spec.output_extent(in_height);
    const int k = spec.kernel;
    g.taps = k * k;
    g.source.assign(static_cast<std::size_t>(g.out_width) * g.out_height * g.taps, -1);
    const int pad = spec.kind == ConvKind::transposed ? 1 : (spec.stride == 1 ? k / 2 : 0);
    for (int y = 0; y < g.out_height; ++y)
        for (int x = 0; x < g.out_width; ++x) {
            int *dst = g.source.data() + (static_cast<std::size_t>(y) * g.out_width + x) * g.taps;
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                    int iy, ix;
                    if (spec.kind == ConvKind::transposed) {
                        const int ty = y + pad - ky;
                        const int tx = x + pad - kx;
                        if (ty < 0 || tx < 0 || ty % 2 != 0 || tx % 2 != 0)
                            continue;
                        iy = ty / 2;
                        ix = tx / 2;
                        if (iy >= in_height || ix >= in_width)
                            continue;
                    } else {
                        iy = reflect_index(spec.stride * y + ky - pad, in_height);
                        ix = reflect_index(spec.stride * x + kx - pad, in_width);
                    }
                    dst[ky * k + kx] = iy * in_width + ix;
                }
        }
    return g;
}

Eigen::MatrixXd im2col(const FeatureMap &in, const Gather &g) {
    const int c = in.channels();
    const int pixels = g.out_width * g.out_height;
    Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.taps) * c, pixels);
    for (int p = 0; p < pixels; ++p) {
        const int *src = g.source.data() + static_cast<std::size_t>(p) * g.taps;
        double *dst = cols.col(p).data();
        for (int t = 0; t < g.taps; ++t) {
            if (src[t] < 0)
                continue;
            const auto px = in.pixel(src[t]);
            std::copy(px.begin(), px.end(), dst + static_cast<std::size_t>(t) * c);
        }
    }
    return cols;
}

void col2im_add(const Eigen::MatrixXd &cols, const Gather &g, FeatureMap &grad_in) {
    const int c = grad_in.channels();
    const int pixels = g.out_width * g.out_height;
    for (int p = 0; p < pixels; ++p) {
        const int *src = g.source.data() + static_cast<std::size_t>(p) * g.taps;
        const double *col = cols.col(p).data();
        for (int t = 0; t < g.taps; ++t) {
            if (src[t] < 0)
                continue;
            auto px = grad_in.pixel(src[t]);
            for (int ch = 0; ch < c; ++ch)
                px[ch] += col[static_cast<std::size_t>(t) * c + ch];
        }
    }
}

Eigen::Map<const RowMatrix> weight_matrix(const std::vector<double> &w, const ConvLayerSpec &spec) {
    return {w.data(), spec.out_channels, static_cast<Eigen::Index>(spec.kernel) * spec.kernel * spec.in_channels};
}

Eigen::Map<RowMatrix> weight_matrix(std::vector<double> &w, const ConvLayerSpec &spec) {
    return {w.data(), spec.out_channels, static_cast<Eigen::Index>(spec.kernel) * spec.kernel * spec.in_channels};
}

FeatureMap apply(const Eigen::MatrixXd &cols, const std::vector<double> &w, const std::vector<double> &b,
                 const ConvLayerSpec &spec, const Gather &g) {
    FeatureMap out(g.out_width, g.out_height, spec.out_channels);
    Eigen::Map<Eigen::MatrixXd> o(out.data().data(), spec.out_channels, static_cast<Eigen::Index>(g.out_width) * g.out_height);
    o.noalias() = weight_matrix(w, spec) * cols;
    o.colwise() += Eigen::Map<const Eigen::VectorXd>(b.data(), spec.out_channels);
    return out;
}

void adjoint(const Eigen::MatrixXd &cols, const std::vector<double> &w, const ConvLayerSpec &spec,
             const Eigen::Map<const Eigen::MatrixXd> &go, std::vector<double> &grad_w, std::vector<double> &grad_b,
             Eigen::MatrixXd *grad_cols) {
    weight_matrix(grad_w, spec).noalias() += go * cols.transpose();
    Eigen::Map<Eigen::VectorXd>(grad_b.data(), spec.out_channels) += go.rowwise().sum();
    if (grad_cols)
        grad_cols->noalias() += weight_matrix(w, spec).transpose() * go;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

double leaky(double v, double s) { return v > 0.0 ? v : s * v; }

FeatureMap leaky_map(const FeatureMap &x, double s) {
    FeatureMap out = x;
    for (double &v : out.data())
        v = leaky(v, s);
    return out;
}

// Multiplies the gradient by the leaky derivative, read off the activated
// values (same sign as the pre-activation).
void leaky_backward(FeatureMap &grad, const FeatureMap &activated, double s) {
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!(activated.data()[i] > 0.0))
            grad.data()[i] *= s;
}

void add_into(FeatureMap &a, const FeatureMap &b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        a.data()[i] += b.data()[i];
}

FeatureMap concat_channels(const FeatureMap &a, const FeatureMap &b) {
    FeatureMap out(a.width(), a.height(), a.channels() + b.channels());
    for (int p = 0; p < a.pixel_count(); ++p) {
        auto dst = out.pixel(p);
        const auto pa = a.pixel(p);
        const auto pb = b.pixel(p);
        std::copy(pa.begin(), pa.end(), dst.begin());
        std::copy(pb.begin(), pb.end(), dst.begin() + a.channels());
    }
    return out;
}

std::pair<FeatureMap, FeatureMap> split_channels(const FeatureMap &x, int first) {
    FeatureMap a(x.width(), x.height(), first);
    FeatureMap b(x.width(), x.height(), x.channels() - first);
    for (int p = 0; p < x.pixel_count(); ++p) {
        const auto src = x.pixel(p);
        std::copy(src.begin(), src.begin() + first, a.pixel(p).begin());
        std::copy(src.begin() + first, src.end(), b.pixel(p).begin());
    }
    return {std::move(a), std::move(b)};
}

} // namespace

void ConvLayerSpec::validate() const {
    if (in_channels < 1 || out_channels < 1 || kernel < 1)
        throw DomainError("ConvLayerSpec: channels and kernel must be positive");
    if (stride == 1) {
        if (kind == ConvKind::transposed)
            throw DomainError("ConvLayerSpec: transposed layers must have stride 2");
        if (kernel % 2 == 0)
            throw DomainError("ConvLayerSpec: stride-1 kernels must be odd");
    } else if (stride == 2) {
        const bool down = kind == ConvKind::standard && kernel == 2;
        const bool up = kind == ConvKind::transposed && kernel == 4;
        if (!down && !up)
            throw DomainError("ConvLayerSpec: stride 2 is only for 2x2 downsampling or 4x4 transposed upsampling");
    } else {
        throw DomainError("ConvLayerSpec: stride must be 1 or 2");
    }
}

int ConvLayerSpec::output_extent(int input_extent) const {
    if (stride == 1)
        return input_extent;
    if (kind == ConvKind::transposed)
        return input_extent * 2;
    if (input_extent % 2 != 0)
        throw DomainError("ConvLayerSpec: downsampling needs an even extent, got " + std::to_string(input_extent));
    return input_extent / 2;
}

std::size_t ConvLayer::weight_size() const {
    return static_cast<std::size_t>(spec.out_channels) * spec.kernel * spec.kernel * spec.in_channels;
}

std::size_t ConvLayer::parameter_count() const {
    return weight.size() + bias.size() + gate_weight.size() + gate_bias.size();
}

ConvLayer ConvLayer::zeros(const ConvLayerSpec &spec) {
    spec.validate();
    ConvLayer l;
    l.spec = spec;
    l.weight.assign(l.weight_size(), 0.0);
    l.bias.assign(spec.out_channels, 0.0);
    if (spec.kind == ConvKind::highlight_aware) {
        l.gate_weight.assign(l.weight_size(), 0.0);
        l.gate_bias.assign(spec.out_channels, 0.0);
    }
    return l;
}

ConvLayer ConvLayer::random(const ConvLayerSpec &spec, RngStream &rng) {
    ConvLayer l = zeros(spec);
    const int taps = spec.kind == ConvKind::transposed ? (spec.kernel / 2) * (spec.kernel / 2) : spec.kernel * spec.kernel;
    const double bound = std::sqrt(6.0 / (static_cast<double>(taps) * spec.in_channels));
    for (double &w : l.weight)
        w = (2.0 * rng.uniform() - 1.0) * bound;
    for (double &w : l.gate_weight)
        w = (2.0 * rng.uniform() - 1.0) * bound;
    return l;
}

ConvGrads zero_grads(const ConvLayer &layer) {
    return {std::vector<double>(layer.weight.size(), 0.0), std::vector<double>(layer.bias.size(), 0.0),
            std::vector<double>(layer.gate_weight.size(), 0.0), std::vector<double>(layer.gate_bias.size(), 0.0)};
}

FeatureMap conv_forward(const FeatureMap &input, const ConvLayer &layer, ConvTape *tape) {
    const ConvLayerSpec &spec = layer.spec;
    if (input.channels() != spec.in_channels)
        throw DomainError("conv_forward: input has " + std::to_string(input.channels()) + " channels, layer expects " +
                          std::to_string(spec.in_channels));
    const Gather g = make_gather(spec, input.width(), input.height());
    const Eigen::MatrixXd cols = im2col(input, g);
    FeatureMap feature = apply(cols, layer.weight, layer.bias, spec, g);
    if (tape)
        tape->input = input;
    if (spec.kind != ConvKind::highlight_aware)
        return feature;

    FeatureMap gate = apply(cols, layer.gate_weight, layer.gate_bias, spec, g);
    for (double &v : gate.data())
        v = sigmoid(v);
    FeatureMap out = feature;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] *= gate.data()[i];
    if (tape) {
        tape->feature = std::move(feature);
        tape->gate = std::move(gate);
    }
    return out;
}

void conv_backward(const ConvLayer &layer, const ConvTape &tape, const FeatureMap &out_grad, ConvGrads &grads,
                   FeatureMap *input_grad) {
    const ConvLayerSpec &spec = layer.spec;
    const FeatureMap &input = tape.input;
    const Gather g = make_gather(spec, input.width(), input.height());
    if (out_grad.width() != g.out_width || out_grad.height() != g.out_height || out_grad.channels() != spec.out_channels)
        throw DomainError("conv_backward: output gradient shape mismatch");
    const Eigen::MatrixXd cols = im2col(input, g);
    const Eigen::Index pixels = static_cast<Eigen::Index>(g.out_width) * g.out_height;
    Eigen::MatrixXd grad_cols;
    if (input_grad)
        grad_cols = Eigen::MatrixXd::Zero(cols.rows(), cols.cols());
    Eigen::MatrixXd *gc = input_grad ? &grad_cols : nullptr;

    if (spec.kind != ConvKind::highlight_aware) {
        Eigen::Map<const Eigen::MatrixXd> go(out_grad.data().data(), spec.out_channels, pixels);
        adjoint(cols, layer.weight, spec, go, grads.weight, grads.bias, gc);
    } else {
        // out = f * s(q): df = go * s, dq = go * f * s (1 - s)
        FeatureMap gf = out_grad;
        FeatureMap gq = out_grad;
        for (std::size_t i = 0; i < gf.size(); ++i) {
            const double s = tape.gate.data()[i];
            gf.data()[i] *= s;
            gq.data()[i] *= tape.feature.data()[i] * s * (1.0 - s);
        }
        Eigen::Map<const Eigen::MatrixXd> mf(gf.data().data(), spec.out_channels, pixels);
        Eigen::Map<const Eigen::MatrixXd> mq(gq.data().data(), spec.out_channels, pixels);
        adjoint(cols, layer.weight, spec, mf, grads.weight, grads.bias, gc);
        adjoint(cols, layer.gate_weight, spec, mq, grads.gate_weight, grads.gate_bias, gc);
    }
    if (input_grad) {
        *input_grad = FeatureMap(input.width(), input.height(), input.channels());
        col2im_add(grad_cols, g, *input_grad);
    }
}

FeatureMap ha_conv_forward(const FeatureMap &input, const ConvLayer &layer) {
    if (layer.spec.kind != ConvKind::highlight_aware)
        throw DomainError("ha_conv_forward: layer is not highlight-aware");
    return conv_forward(input, layer);
}

// ---------------------------------------------------------------------------

void UNetSpec::validate() const {
    if (input_channels < 1 || base_channels < 1 || output_channels < 1 || levels < 1 || blocks_per_level < 0)
        throw DomainError("UNetSpec: sizes must be positive");
    if (stem_kernel < 1 || stem_kernel % 2 == 0)
        throw DomainError("UNetSpec: stem kernel must be odd");
}

std::vector<std::pair<std::string, ConvLayerSpec>> UNet::layout(const UNetSpec &spec) {
    spec.validate();
    std::vector<std::pair<std::string, ConvLayerSpec>> out;
    const auto block = [&](const std::string &prefix, int c, ConvKind kind) {
        for (int b = 0; b < spec.blocks_per_level; ++b) {
            const std::string name = prefix + ".block" + std::to_string(b);
            out.push_back({name + ".a", {3, c, c, 1, kind}});
            out.push_back({name + ".b", {3, c, c, 1, kind}});
        }
    };
    out.push_back({"stem", {spec.stem_kernel, spec.input_channels, spec.channels_at(0), 1, ConvKind::standard}});
    for (int l = 0; l < spec.levels; ++l) {
        block("enc" + std::to_string(l), spec.channels_at(l), ConvKind::highlight_aware);
        out.push_back({"down" + std::to_string(l),
                       {2, spec.channels_at(l), spec.channels_at(l + 1), 2, ConvKind::standard}});
    }
    block("bottleneck", spec.channels_at(spec.levels), ConvKind::highlight_aware);
    for (int l = spec.levels - 1; l >= 0; --l) {
        const std::string s = std::to_string(l);
        out.push_back({"up" + s, {4, spec.channels_at(l + 1), spec.channels_at(l), 2, ConvKind::transposed}});
        out.push_back({"fuse" + s, {3, 2 * spec.channels_at(l), spec.channels_at(l), 1, ConvKind::standard}});
        block("dec" + s, spec.channels_at(l), ConvKind::standard);
    }
    out.push_back({"head", {1, spec.channels_at(0), spec.output_channels, 1, ConvKind::standard}});
    return out;
}

UNet::UNet(UNetSpec spec, std::vector<ConvLayer> layers) : spec_(spec), layers_(std::move(layers)) {
    const auto lay = layout(spec_);
    if (lay.size() != layers_.size())
        throw DomainError("UNet: expected " + std::to_string(lay.size()) + " layers, got " +
                          std::to_string(layers_.size()));
    for (std::size_t i = 0; i < lay.size(); ++i) {
        if (!(layers_[i].spec == lay[i].second))
            throw DomainError("UNet: layer '" + lay[i].first + "' has an unexpected shape");
        if (layers_[i].weight.size() != layers_[i].weight_size() ||
            layers_[i].bias.size() != static_cast<std::size_t>(layers_[i].spec.out_channels))
            throw DomainError("UNet: layer '" + lay[i].first + "' has wrongly sized buffers");
        names_.push_back(lay[i].first);
    }
}

UNet UNet::random(const UNetSpec &spec, RngStream &rng) {
    std::vector<ConvLayer> layers;
    for (const auto &[name, s] : layout(spec))
        layers.push_back(ConvLayer::random(s, rng));
    return UNet(spec, std::move(layers));
}

ConvLayer &UNet::layer(const std::string &name) {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name)
            return layers_[i];
    throw DomainError("UNet: no layer named '" + name + "'");
}

std::size_t UNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto &l : layers_)
        n += l.parameter_count();
    return n;
}

FeatureMap UNet::forward(const FeatureMap &input, UNetTape *tape) const {
    if (input.channels() != spec_.input_channels)
        throw DomainError("UNet::forward: expected " + std::to_string(spec_.input_channels) + " input channels");
    const int m = spec_.spatial_multiple();
    if (input.width() % m != 0 || input.height() % m != 0)
        throw DomainError("UNet::forward: extent " + std::to_string(input.width()) + "x" +
                          std::to_string(input.height()) + " is not divisible by " + std::to_string(m));
    if (tape)
        tape->conv.assign(layers_.size(), {});
    std::size_t li = 0;
    const double s = spec_.leaky_slope;
    auto conv = [&](const FeatureMap &x) {
        const std::size_t i = li++;
        return conv_forward(x, layers_[i], tape ? &tape->conv[i] : nullptr);
    };
    auto blocks = [&](FeatureMap x) {
        for (int b = 0; b < spec_.blocks_per_level; ++b) {
            const FeatureMap u = conv(leaky_map(x, s));
            add_into(x, conv(leaky_map(u, s)));
        }
        return x;
    };

    FeatureMap x = conv(input);
    std::vector<FeatureMap> skips;
    for (int l = 0; l < spec_.levels; ++l) {
        x = blocks(std::move(x));
        skips.push_back(x);
        x = conv(x);
    }
    x = blocks(std::move(x));
    for (int l = spec_.levels - 1; l >= 0; --l) {
        const FeatureMap up = conv(x);
        x = conv(concat_channels(up, skips[l]));
        x = blocks(std::move(x));
    }
    return conv(leaky_map(x, s));
}

void UNet::backward(const UNetTape &tape, const FeatureMap &out_grad, UNetGrads &grads, FeatureMap *input_grad) const {
    if (tape.conv.size() != layers_.size())
        throw DomainError("UNet::backward: tape does not match network");
    const double s = spec_.leaky_slope;
    std::size_t li = layers_.size();
    // Reverse of `conv` in forward: returns d(loss)/d(conv input).
    auto conv_back = [&](const FeatureMap &g) {
        const std::size_t i = --li;
        FeatureMap gi;
        conv_backward(layers_[i], tape.conv[i], g, grads.layers[i], &gi);
        return gi;
    };
    auto blocks_back = [&](FeatureMap g) {
        for (int b = spec_.blocks_per_level; b-- > 0;) {
            FeatureMap gu = conv_back(g); // conv_b; its tape input is leaky(u)
            leaky_backward(gu, tape.conv[li].input, s);
            FeatureMap gx = conv_back(gu); // conv_a; its tape input is leaky(x)
            leaky_backward(gx, tape.conv[li].input, s);
            add_into(g, gx);
        }
        return g;
    };

    FeatureMap g = conv_back(out_grad); // head
    leaky_backward(g, tape.conv[li].input, s);
    std::vector<FeatureMap> skip_grads(spec_.levels);
    for (int l = 0; l < spec_.levels; ++l) {
        g = blocks_back(std::move(g));
        const FeatureMap gcat = conv_back(g); // fuse
        auto [gup, gskip] = split_channels(gcat, spec_.channels_at(l));
        skip_grads[l] = std::move(gskip);
        g = conv_back(gup); // up
    }
    g = blocks_back(std::move(g)); // bottleneck
    for (int l = spec_.levels - 1; l >= 0; --l) {
        g = conv_back(g); // down
        add_into(g, skip_grads[l]);
        g = blocks_back(std::move(g));
    }
    // Stem.
    const std::size_t i = --li;
    FeatureMap gi;
    conv_backward(layers_[i], tape.conv[i], g, grads.layers[i], input_grad ? &gi : nullptr);
    if (input_grad)
        *input_grad = std::move(gi);
}

UNetGrads UNet::zero_grads() const {
    UNetGrads g;
    for (const auto &l : layers_)
        g.layers.push_back(sforge::zero_grads(l));
    return g;
}

std::vector<std::span<double>> UNet::parameter_views() {
    std::vector<std::span<double>> v;
    for (auto &l : layers_) {
        v.emplace_back(l.weight);
        v.emplace_back(l.bias);
        if (!l.gate_weight.empty()) {
            v.emplace_back(l.gate_weight);
            v.emplace_back(l.gate_bias);
        }
    }
    return v;
}

std::vector<std::span<const double>> UNet::gradient_views(const UNetGrads &grads) {
    std::vector<std::span<const double>> v;
    for (const auto &l : grads.layers) {
        v.emplace_back(l.weight);
        v.emplace_back(l.bias);
        if (!l.gate_weight.empty()) {
            v.emplace_back(l.gate_weight);
            v.emplace_back(l.gate_bias);
        }
    }
    return v;
}

NeuralParamMap estimate(const FeatureMap &input, const UNet &net) { return net.forward(input); }

} // namespace sforge
