// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/fit.h"

#include "svbrdf_forge/adam.h"
#include "svbrdf_forge/parallel.h"
#include "svbrdf_forge/radiometry.h"
#include "svbrdf_forge/svbrdf_renderer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace sforge {

namespace {

// Columns per work block. Fixed so that the gradient reduction order does not
// depend on the worker count.
constexpr int kBlockColumns = 256;

struct Block {
    int target = 0; // index into the batch
    int begin = 0;  // pixel range
    int end = 0;
};

struct BlockResult {
    double full_abs_sum = 0.0;
    double abs_sum = 0.0;       // masked pixels only
    std::vector<int> columns;   // masked pixels, relative to begin
    MlpGrads render;
    MlpGrads nd_enc;
    Eigen::MatrixXd param_grad; // C x columns
};

UNetSpec estimator_spec(const FitConfig &cfg) {
    UNetSpec s;
    s.input_channels = 4;
    s.base_channels = cfg.estimator_base_channels;
    s.output_channels = cfg.param_dim;
    s.leaky_slope = cfg.leaky_slope;
    return s;
}

std::vector<int> draw_mask(const FitConfig &cfg, const NeuralParamMap &params, const HdrImage &target,
                           RngStream &rng) {
    switch (cfg.mask_mode) {
    case MaskMode::inv_param_norm:
        return pixel_mask(params, cfg.mask_fraction, rng);
    case MaskMode::sq_rgb_norm:
        return pixel_mask(target, cfg.mask_fraction, rng);
    case MaskMode::none:
        break;
    }
    return all_pixels(params.pixel_count());
}

} // namespace

ParamSource parse_param_source(std::string_view name) {
    if (name == "latent")
        return ParamSource::latent;
    if (name == "estimator")
        return ParamSource::estimator;
    throw DomainError("unknown parameter source '" + std::string(name) + "'");
}

std::string_view to_string(ParamSource source) {
    return source == ParamSource::latent ? "latent" : "estimator";
}

void FitConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw DomainError("FitConfig: learning_rate must be positive");
    if (!(lr_decay >= 0.0 && lr_decay < 1.0))
        throw DomainError("FitConfig: lr_decay must lie in [0, 1)");
    if (epoch_iterations < 0)
        throw DomainError("FitConfig: epoch_iterations must be non-negative");
    if (batch_exemplars < 1)
        throw DomainError("FitConfig: batch_exemplars must be positive");
    if (iterations < 0)
        throw DomainError("FitConfig: iterations must be non-negative");
    if (!(mask_fraction > 0.0 && mask_fraction <= 1.0))
        throw DomainError("FitConfig: mask_fraction must lie in (0, 1]");
    if (param_dim < 1 || render_hidden < 1)
        throw DomainError("FitConfig: param_dim and render_hidden must be positive");
    if (!(leaky_slope >= 0.0 && leaky_slope < 1.0))
        throw DomainError("FitConfig: leaky_slope must lie in [0, 1)");
    if (estimator_base_channels < 1)
        throw DomainError("FitConfig: estimator_base_channels must be positive");
    try {
        adam.validate();
    } catch (const std::invalid_argument &e) {
        throw DomainError(std::string("FitConfig: ") + e.what());
    }
}

int FitConfig::epoch_length(int target_count) const {
    if (epoch_iterations > 0)
        return epoch_iterations;
    return std::max(1, (target_count + batch_exemplars - 1) / batch_exemplars);
}

double FitConfig::learning_rate_at(int iteration, int target_count) const {
    return learning_rate * std::pow(1.0 - lr_decay, iteration / epoch_length(target_count));
}

FeatureMap photo_to_estimator_input(const HdrImage &photo) {
    const Vec3 eye(0.0, 0.0, kViewDistance);
    return build_estimator_input(log_compress(photo), eye, eye);
}

FitResult fit(std::span<const FitTarget> targets, const HdrImage &input_photo, const FitConfig &cfg,
              const EncodingConfig &enc_cfg, const FitProgress &progress) {
    cfg.validate();
    enc_cfg.validate();
    if (targets.empty())
        throw DomainError("fit: at least one target is required");
    if (input_photo.channels() != 3)
        throw DomainError("fit: input photo must be RGB");
    for (const auto &t : targets) {
        if (!t.image.same_shape(input_photo))
            throw DomainError("fit: every target must match the input photo resolution");
        for (float v : t.image.data())
            if (!std::isfinite(v) || v < 0.0f)
                throw DomainError("fit: target radiance must be finite and non-negative");
    }

    const int width = input_photo.width();
    const int height = input_photo.height();
    const int pixels = width * height;
    const int c = cfg.param_dim;
    const SurfaceGrid grid{width, height};

    RngStream root(cfg.seed);
    RngStream init_rng = root.split(0);
    RngStream estimator_rng = root.split(1);
    RngStream mask_rng = root.split(2);
    RngStream batch_rng = root.split(3);

    FitResult result;
    result.renderer = NeuralRenderer::random(c, enc_cfg, cfg.render_hidden, cfg.leaky_slope, init_rng);

    const UNetSpec uspec = estimator_spec(cfg);
    const bool divisible = width % uspec.spatial_multiple() == 0 && height % uspec.spatial_multiple() == 0;
    const FeatureMap est_input = photo_to_estimator_input(input_photo);
    if (cfg.param_source == ParamSource::estimator && !divisible)
        throw DomainError("fit: estimator source needs a resolution divisible by " +
                          std::to_string(uspec.spatial_multiple()));
    if (divisible) {
        result.estimator = UNet::random(uspec, estimator_rng);
        // Rescale the head so the initial map has unit RMS on this input.
        const NeuralParamMap raw = result.estimator.forward(est_input);
        double sq = 0.0;
        for (double v : raw.data())
            sq += v * v;
        const double rms = std::sqrt(sq / static_cast<double>(raw.size()));
        if (rms > 0.0 && std::isfinite(rms)) {
            ConvLayer &head = result.estimator.layer("head");
            for (double &w : head.weight)
                w /= rms;
            for (double &b : head.bias)
                b /= rms;
        }
        result.params = result.estimator.forward(est_input);
    } else {
        result.params = NeuralParamMap(width, height, c);
        for (double &v : result.params.data())
            v = 0.1 * estimator_rng.normal();
    }

    const int count = static_cast<int>(targets.size());
    std::vector<FeatureMap> log_targets;
    std::vector<Eigen::MatrixXd> encodings;
    for (const auto &t : targets) {
        log_targets.push_back(log_compress(t.image));
        encodings.push_back(encode_configuration(grid, t.config.light_position, t.config.view_position, enc_cfg));
    }

    Adam adam(cfg.adam);
    if (cfg.param_source == ParamSource::latent)
        adam.add(std::span<double>(result.params.data()));
    else
        adam.add(result.estimator.parameter_views());
    adam.add(result.renderer.render.parameter_views());
    adam.add(result.renderer.nd_enc.parameter_views());

    const int batch_size = std::min(cfg.batch_exemplars, count);
    const MlpNet &render = result.renderer.render;
    const MlpNet &nd_enc = result.renderer.nd_enc;
    const int compressed = enc_cfg.compressed_dim;

    for (int it = 0; it < cfg.iterations; ++it) {
        UNetTape utape;
        if (cfg.param_source == ParamSource::estimator)
            result.params = result.estimator.forward(est_input, &utape);

        std::vector<int> batch(count);
        std::iota(batch.begin(), batch.end(), 0);
        if (batch_size < count) {
            const std::vector<double> uniform(count, 1.0);
            batch = sample_without_replacement(uniform, static_cast<double>(batch_size) / count, batch_rng);
            batch.resize(batch_size);
        }

        std::vector<std::vector<int>> masks;
        std::size_t total_samples = 0;
        for (int b : batch) {
            masks.push_back(draw_mask(cfg, result.params, targets[b].image, mask_rng));
            total_samples += masks.back().size();
        }
        const double scale = 1.0 / (static_cast<double>(total_samples) * 3.0);

        std::vector<Block> blocks;
        for (int bi = 0; bi < static_cast<int>(batch.size()); ++bi)
            for (int s = 0; s < pixels; s += kBlockColumns)
                blocks.push_back({bi, s, std::min(pixels, s + kBlockColumns)});

        std::vector<BlockResult> partial(blocks.size());
        parallel_for(static_cast<int>(blocks.size()), [&](int k) {
            const Block &blk = blocks[k];
            const int t = batch[blk.target];
            const int cols = blk.end - blk.begin;
            Eigen::MatrixXd input(c + compressed, cols);
            input.topRows(c) =
                Eigen::Map<const Eigen::MatrixXd>(result.params.data().data() + static_cast<std::size_t>(blk.begin) * c, c, cols);
            MlpTape enc_tape;
            MlpTape render_tape;
            input.bottomRows(compressed) = nd_enc.forward(encodings[t].middleCols(blk.begin, cols), &enc_tape);
            const Eigen::MatrixXd out = render.forward(input, &render_tape);
            const Eigen::Map<const Eigen::MatrixXd> target(
                log_targets[t].data().data() + static_cast<std::size_t>(blk.begin) * 3, 3, cols);
            const Eigen::MatrixXd diff = out - target;

            BlockResult &r = partial[k];
            r.full_abs_sum = diff.cwiseAbs().sum();
            const std::vector<int> &mask = masks[blk.target];
            const auto lo = std::lower_bound(mask.begin(), mask.end(), blk.begin);
            const auto hi = std::lower_bound(lo, mask.end(), blk.end);
            for (auto m = lo; m != hi; ++m)
                r.columns.push_back(*m - blk.begin);
            if (r.columns.empty())
                return;

            const Eigen::MatrixXd masked = diff(Eigen::all, r.columns);
            r.abs_sum = masked.cwiseAbs().sum();
            const Eigen::MatrixXd grad =
                masked.unaryExpr([scale](double d) { return d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0); });
            const auto select = [&](MlpTape &tape) {
                for (auto &m : tape.inputs)
                    m = Eigen::MatrixXd(m(Eigen::all, r.columns));
                for (auto &m : tape.preactivations)
                    m = Eigen::MatrixXd(m(Eigen::all, r.columns));
            };
            select(enc_tape);
            select(render_tape);
            r.render = render.zero_grads();
            r.nd_enc = nd_enc.zero_grads();
            Eigen::MatrixXd input_grad;
            render.backward(render_tape, grad, r.render, &input_grad);
            nd_enc.backward(enc_tape, input_grad.bottomRows(compressed), r.nd_enc);
            r.param_grad = input_grad.topRows(c);
        });

        double abs_sum = 0.0;
        double full_abs_sum = 0.0;
        MlpGrads render_grads = render.zero_grads();
        MlpGrads enc_grads = nd_enc.zero_grads();
        NeuralParamMap param_grads(width, height, c);
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            const BlockResult &r = partial[k];
            full_abs_sum += r.full_abs_sum;
            if (r.columns.empty())
                continue;
            abs_sum += r.abs_sum;
            render_grads.add(r.render);
            enc_grads.add(r.nd_enc);
            for (std::size_t j = 0; j < r.columns.size(); ++j) {
                auto dst = param_grads.pixel(blocks[k].begin + r.columns[j]);
                for (int ch = 0; ch < c; ++ch)
                    dst[ch] += r.param_grad(ch, static_cast<Eigen::Index>(j));
            }
        }
        const double loss = full_abs_sum / (static_cast<double>(batch.size()) * pixels * 3.0);
        const double masked_loss = abs_sum * scale;
        if (!std::isfinite(loss) || !std::isfinite(masked_loss))
            throw FitDiverged("fit: loss became non-finite at iteration " + std::to_string(it));
        result.loss_trace.push_back(loss);
        result.masked_loss_trace.push_back(masked_loss);
        if (progress)
            progress(it, loss);

        std::vector<std::span<const double>> grads;
        UNetGrads ugrads;
        if (cfg.param_source == ParamSource::latent) {
            grads.emplace_back(param_grads.data());
        } else {
            ugrads = result.estimator.zero_grads();
            result.estimator.backward(utape, param_grads, ugrads);
            grads = UNet::gradient_views(ugrads);
        }
        for (auto g : MlpNet::gradient_views(render_grads))
            grads.push_back(g);
        for (auto g : MlpNet::gradient_views(enc_grads))
            grads.push_back(g);
        adam.step(grads, cfg.learning_rate_at(it, count));
    }

    if (cfg.param_source == ParamSource::estimator)
        result.params = result.estimator.forward(est_input);
    for (double v : result.params.data())
        if (!std::isfinite(v))
            throw FitDiverged("fit: parameter map became non-finite");
    return result;
}

} // namespace sforge
