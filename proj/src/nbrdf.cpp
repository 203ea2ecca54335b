// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/nbrdf.h"

#include "svbrdf_forge/radiometry.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace sforge {

void NeuralRenderer::validate() const {
    encoding.validate();
    if (nd_enc.input_dim() != encoding.encoded_dim())
        throw DomainError("NeuralRenderer: nd_enc input " + std::to_string(nd_enc.input_dim()) +
                          " does not match encoding length " + std::to_string(encoding.encoded_dim()));
    if (nd_enc.output_dim() != encoding.compressed_dim)
        throw DomainError("NeuralRenderer: nd_enc output does not match compressed_dim");
    if (render.output_dim() != 3)
        throw DomainError("NeuralRenderer: render net must output RGB");
    if (param_dim() < 1)
        throw DomainError("NeuralRenderer: render input leaves no room for material parameters");
}

MlpNet make_render_net(int param_dim, int compressed_dim, int hidden, double leaky_slope, RngStream &rng) {
    std::array<int, kRenderLayers + 1> dims{};
    dims.front() = param_dim + compressed_dim;
    for (int l = 1; l < kRenderLayers; ++l)
        dims[l] = hidden;
    dims.back() = 3;
    return MlpNet::random(dims, Activation::leaky, Activation::linear, leaky_slope, rng);
}

NeuralRenderer NeuralRenderer::random(int param_dim, const EncodingConfig &encoding, int hidden, double leaky_slope,
                                      RngStream &rng) {
    NeuralRenderer r;
    r.encoding = encoding;
    r.nd_enc = make_nd_enc(encoding, leaky_slope, rng);
    r.render = make_render_net(param_dim, encoding.compressed_dim, hidden, leaky_slope, rng);
    return r;
}

Rgb render_pixel(std::span<const double> params, const Eigen::VectorXd &compressed, const MlpNet &render) {
    const auto n = static_cast<Eigen::Index>(params.size());
    if (n + compressed.size() != render.input_dim())
        throw DomainError("render_pixel: params (" + std::to_string(n) + ") + encoding (" +
                          std::to_string(compressed.size()) + ") do not match renderer input " +
                          std::to_string(render.input_dim()));
    Eigen::VectorXd x(render.input_dim());
    x.head(n) = Eigen::Map<const Eigen::VectorXd>(params.data(), n);
    x.tail(compressed.size()) = compressed;
    const Eigen::VectorXd y = render.forward_one(x);
    return {y[0], y[1], y[2]};
}

Rgb render_pixel(std::span<const double> params, const Vec3 &omega_i, const Vec3 &omega_o,
                 const NeuralRenderer &renderer) {
    const Eigen::VectorXd enc =
        encode_directions(omega_i, omega_o, half_vector(omega_i, omega_o), renderer.encoding);
    return render_pixel(params, nd_enc_forward(enc, renderer.nd_enc), renderer.render);
}

Rgb as_brdf(std::span<const double> params, const Vec3 &omega_i, const Vec3 &omega_o, const NeuralRenderer &renderer,
            const Vec3 &normal) {
    const double cosine = normal.dot(omega_i);
    if (cosine < kGrazingCosine)
        return Rgb::Zero();
    const Rgb log_rgb = render_pixel(params, omega_i, omega_o, renderer);
    const Rgb radiance = log_rgb.unaryExpr([](double v) { return std::expm1(v); });
    return (radiance / std::max(cosine, kGrazingCosine)).cwiseMax(0.0);
}

Eigen::MatrixXd encode_configuration(const SurfaceGrid &grid, const Vec3 &light, const Vec3 &view,
                                     const EncodingConfig &cfg) {
    Eigen::MatrixXd enc(cfg.encoded_dim(), grid.width * grid.height);
    for (int y = 0; y < grid.height; ++y)
        for (int x = 0; x < grid.width; ++x) {
            const Vec3 p = grid.position(x, y);
            const Vec3 wi = direction_to(p, light);
            const Vec3 wo = direction_to(p, view);
            const Eigen::Index col = static_cast<Eigen::Index>(y) * grid.width + x;
            encode_directions(wi, wo, half_vector(wi, wo), cfg,
                              std::span<double>(enc.col(col).data(), static_cast<std::size_t>(enc.rows())));
        }
    return enc;
}

FeatureMap relight_log(const NeuralParamMap &params, const NeuralRenderer &renderer, const Vec3 &light,
                       const Vec3 &view) {
    renderer.validate();
    if (params.channels() != renderer.param_dim())
        throw DomainError("relight: parameter map has " + std::to_string(params.channels()) +
                          " channels, renderer expects " + std::to_string(renderer.param_dim()));
    const SurfaceGrid grid{params.width(), params.height()};
    const Eigen::MatrixXd enc = encode_configuration(grid, light, view, renderer.encoding);
    const Eigen::Index pixels = enc.cols();
    const Eigen::Index c = params.channels();
    Eigen::MatrixXd input(renderer.render.input_dim(), pixels);
    input.topRows(c) = Eigen::Map<const Eigen::MatrixXd>(params.data().data(), c, pixels);
    input.bottomRows(renderer.encoding.compressed_dim) = renderer.nd_enc.forward(enc);
    const Eigen::MatrixXd out = renderer.render.forward(input);
    FeatureMap result(grid.width, grid.height, 3);
    Eigen::Map<Eigen::MatrixXd>(result.data().data(), 3, pixels) = out;
    return result;
}

HdrImage relight(const NeuralParamMap &params, const NeuralRenderer &renderer, const Vec3 &light, const Vec3 &view) {
    return log_expand(relight_log(params, renderer, light, view));
}

double l1_data_loss(const FeatureMap &pred, const FeatureMap &target, std::span<const int> mask) {
    if (!pred.same_shape(target))
        throw DomainError("l1_data_loss: prediction and target shapes differ");
    if (mask.empty())
        throw DomainError("l1_data_loss: empty mask");
    double sum = 0.0;
    for (int idx : mask) {
        if (idx < 0 || idx >= pred.pixel_count())
            throw DomainError("l1_data_loss: mask index out of range");
        const auto p = pred.pixel(idx);
        const auto t = target.pixel(idx);
        for (int c = 0; c < pred.channels(); ++c)
            sum += std::abs(p[c] - t[c]);
    }
    return sum / (static_cast<double>(mask.size()) * pred.channels());
}

std::vector<int> all_pixels(int pixel_count) {
    std::vector<int> idx(pixel_count);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

MaskMode parse_mask_mode(std::string_view name) {
    if (name == "inv_param_norm")
        return MaskMode::inv_param_norm;
    if (name == "sq_rgb_norm")
        return MaskMode::sq_rgb_norm;
    if (name == "none")
        return MaskMode::none;
    throw DomainError("unknown mask mode '" + std::string(name) + "'");
}

std::string_view to_string(MaskMode mode) {
    switch (mode) {
    case MaskMode::inv_param_norm:
        return "inv_param_norm";
    case MaskMode::sq_rgb_norm:
        return "sq_rgb_norm";
    case MaskMode::none:
        return "none";
    }
    return "?";
}

std::vector<double> normalize_weights(std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw DomainError("normalize_weights: weights must be finite and non-negative");
        total += w;
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(weights.size()));
        return weights;
    }
    for (double &w : weights)
        w /= total;
    return weights;
}

std::vector<double> inv_param_norm_weights(const NeuralParamMap &params) {
    std::vector<double> w(params.pixel_count());
    for (int i = 0; i < params.pixel_count(); ++i) {
        double sq = 0.0;
        for (double v : params.pixel(i))
            sq += v * v;
        w[i] = 1.0 / (std::sqrt(sq) + kMaskNormEpsilon);
    }
    return normalize_weights(std::move(w));
}

std::vector<double> sq_rgb_norm_weights(const HdrImage &rgb) {
    std::vector<double> w(rgb.pixel_count());
    for (int i = 0; i < rgb.pixel_count(); ++i) {
        double sq = 0.0;
        for (float v : rgb.pixel(i))
            sq += static_cast<double>(v) * v;
        w[i] = sq;
    }
    return normalize_weights(std::move(w));
}

std::vector<int> sample_without_replacement(std::span<const double> weights, double fraction, RngStream &rng) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw DomainError("sample_without_replacement: fraction must lie in (0, 1]");
    const int n = static_cast<int>(weights.size());
    if (n == 0)
        throw DomainError("sample_without_replacement: no candidates");
    const int k = std::min(n, static_cast<int>(std::ceil(fraction * n - 1e-9)));
    const std::vector<double> p = normalize_weights(std::vector<double>(weights.begin(), weights.end()));

    // Efraimidis-Spirakis: keep the k largest log(u)/w. Zero-weight items
    // rank after every positive one, in random order among themselves.
    struct Key {
        bool positive;
        double key;
        int index;
    };
    std::vector<Key> keys(n);
    for (int i = 0; i < n; ++i) {
        const double log_u = std::log(1.0 - rng.uniform());
        keys[i] = p[i] > 0.0 ? Key{true, log_u / p[i], i} : Key{false, log_u, i};
    }
    auto better = [](const Key &a, const Key &b) {
        if (a.positive != b.positive)
            return a.positive;
        if (a.key != b.key)
            return a.key > b.key;
        return a.index < b.index;
    };
    if (k < n)
        std::nth_element(keys.begin(), keys.begin() + k, keys.end(), better);
    std::vector<int> chosen(k);
    for (int i = 0; i < k; ++i)
        chosen[i] = keys[i].index;
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

std::vector<int> pixel_mask(const NeuralParamMap &params, double fraction, RngStream &rng) {
    const auto w = inv_param_norm_weights(params);
    return sample_without_replacement(w, fraction, rng);
}

std::vector<int> pixel_mask(const HdrImage &rgb, double fraction, RngStream &rng) {
    const auto w = sq_rgb_norm_weights(rgb);
    return sample_without_replacement(w, fraction, rng);
}

} // namespace sforge
