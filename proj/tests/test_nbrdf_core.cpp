// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/adam.h"
#include "svbrdf_forge/fit.h"
#include "svbrdf_forge/gradcheck.h"
#include "svbrdf_forge/nbrdf.h"
#include "svbrdf_forge/radiometry.h"
#include "svbrdf_forge/svbrdf_renderer.h"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <set>

namespace sforge {
namespace {

constexpr double kIntensity = 8.0;

std::vector<FitTarget> reflect_targets(const SvbrdfMaps &maps, int count, std::uint64_t seed) {
    RngStream rng(seed);
    std::vector<FitTarget> targets;
    for (int i = 0; i < count; ++i) {
        const ExemplarConfig c = sample_reflect_config(rng);
        targets.push_back(
            {render({maps, {c.light_position, Rgb::Constant(kIntensity)}, c.view_position, false, false}), c});
    }
    return targets;
}

// 16x16 gray Lambertian fitted once and shared by the tests below.
struct LambertianFit {
    SvbrdfMaps maps = SvbrdfMaps::uniform(16, 16, Rgb::Constant(0.5), Rgb::Zero(), 0.5);
    std::vector<FitTarget> targets;
    FitResult result;
};

const LambertianFit &lambertian_fit() {
    static const LambertianFit fit_data = [] {
        LambertianFit f;
        f.targets = reflect_targets(f.maps, 8, 42);
        FitConfig cfg;
        cfg.learning_rate = 2.5e-3;
        cfg.iterations = 300;
        cfg.seed = 7;
        f.result = fit(f.targets, colocated_input_render(f.maps, Rgb::Constant(kIntensity)), cfg, EncodingConfig{});
        return f;
    }();
    return fit_data;
}

MlpNet small_net(std::uint64_t seed, int in = 5, int hidden = 7, int out = 3) {
    RngStream rng(seed);
    const std::array<int, 4> dims{in, hidden, hidden, out};
    MlpNet net = MlpNet::random(dims, Activation::leaky, Activation::linear, 0.01, rng);
    for (auto &l : net.layers())
        for (Eigen::Index i = 0; i < l.bias.size(); ++i)
            l.bias[i] = 0.1 * rng.normal();
    return net;
}

Eigen::MatrixXd random_matrix(int rows, int cols, RngStream &rng) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = rng.normal();
    return m;
}

TEST(RenderNet, Architecture) {
    RngStream rng(1);
    const NeuralRenderer r = NeuralRenderer::random(kDefaultParamDim, EncodingConfig{}, kRenderHidden, kLeakySlope, rng);
    ASSERT_EQ(r.render.layers().size(), 6u);
    EXPECT_EQ(r.render.input_dim(), 64 + 32);
    EXPECT_EQ(r.render.output_dim(), 3);
    for (std::size_t l = 0; l + 1 < 6; ++l) {
        EXPECT_EQ(r.render.layers()[l].output_dim(), 128);
        EXPECT_EQ(r.render.layers()[l].activation, Activation::leaky);
    }
    EXPECT_EQ(r.render.layers().back().activation, Activation::linear);
    EXPECT_EQ(r.param_dim(), 64);
    EXPECT_NO_THROW(r.validate());
}

TEST(RenderPixel, ZeroWeightsGiveZero) {
    RngStream rng(2);
    NeuralRenderer r = NeuralRenderer::random(8, EncodingConfig{4, 6}, 16, 0.01, rng);
    for (auto &l : r.render.layers()) {
        l.weight.setZero();
        l.bias.setZero();
    }
    const std::vector<double> params(8, 0.7);
    EXPECT_TRUE((render_pixel(params, Vec3::UnitZ(), Vec3(0.6, 0, 0.8), r) == 0.0).all());
}

TEST(RenderPixel, PureAndChecksDimensions) {
    RngStream rng(3);
    const NeuralRenderer r = NeuralRenderer::random(8, EncodingConfig{4, 6}, 16, 0.01, rng);
    const std::vector<double> params{0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8};
    const Vec3 wi = Vec3(0.2, 0.1, 0.9).normalized();
    const Vec3 wo = Vec3(-0.3, 0.2, 0.8).normalized();
    const Rgb a = render_pixel(params, wi, wo, r);
    EXPECT_TRUE((a == render_pixel(params, wi, wo, r)).all());
    const std::vector<double> short_params(7, 0.0);
    EXPECT_THROW(render_pixel(short_params, wi, wo, r), DomainError);
}

TEST(RenderPixel, ParametersAreLightAndViewIndependent) {
    // relight reuses one parameter map for every configuration and agrees
    // with per-pixel evaluation through the compressed encoding.
    RngStream rng(4);
    const NeuralRenderer r = NeuralRenderer::random(6, EncodingConfig{3, 5}, 12, 0.01, rng);
    NeuralParamMap params(4, 3, 6);
    for (double &v : params.data())
        v = rng.normal();
    const NeuralParamMap cached = params;
    const SurfaceGrid grid{4, 3};
    for (const Vec3 &light : {Vec3(0.5, 0.2, 2.0), Vec3(-1.0, 0.3, 1.5)}) {
        const Vec3 view(0.1, -0.4, 3.0);
        const FeatureMap out = relight_log(params, r, light, view);
        EXPECT_EQ(params, cached);
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 4; ++x) {
                const Vec3 p = grid.position(x, y);
                const Rgb ref = render_pixel(params.pixel(x, y), direction_to(p, light), direction_to(p, view), r);
                for (int c = 0; c < 3; ++c)
                    EXPECT_NEAR(out.at(x, y, c), ref[c], 1e-12);
            }
    }
}

TEST(AsBrdf, OverheadColocatedEqualsExpandedOutput) {
    RngStream rng(5);
    const NeuralRenderer r = NeuralRenderer::random(8, EncodingConfig{4, 6}, 16, 0.01, rng);
    std::vector<double> params(8);
    for (double &v : params)
        v = rng.normal();
    const Vec3 n = Vec3::UnitZ();
    const Rgb out = render_pixel(params, n, n, r);
    const Rgb b = as_brdf(params, n, n, r);
    for (int c = 0; c < 3; ++c)
        EXPECT_EQ(b[c], std::max(0.0, std::expm1(out[c])));
}

TEST(AsBrdf, NegativeRadianceClampsAndGrazingIsZero) {
    RngStream rng(6);
    NeuralRenderer r = NeuralRenderer::random(4, EncodingConfig{2, 3}, 8, 0.01, rng);
    for (auto &l : r.render.layers())
        l.weight.setZero();
    r.render.layers().back().bias = Eigen::Vector3d(-2.0, 0.5, -0.1);
    const std::vector<double> params(4, 0.0);
    const Vec3 wi = Vec3(0.3, 0.0, 0.9).normalized();
    const Rgb b = as_brdf(params, wi, Vec3::UnitZ(), r);
    EXPECT_EQ(b[0], 0.0);
    EXPECT_NEAR(b[1], std::expm1(0.5) / wi.z(), 1e-12);
    EXPECT_EQ(b[2], 0.0);
    const Vec3 grazing = Vec3(1.0, 0.0, 5e-5).normalized();
    EXPECT_TRUE((as_brdf(params, grazing, Vec3::UnitZ(), r) == 0.0).all());
}

TEST(MlpBackward, LinearLayerAdjoint) {
    RngStream rng(7);
    const Eigen::MatrixXd w = random_matrix(3, 5, rng);
    const MlpNet net({DenseLayer{w, Eigen::VectorXd::Zero(3), Activation::linear}}, 0.01);
    const Eigen::MatrixXd x = random_matrix(5, 4, rng);
    const Eigen::MatrixXd g = random_matrix(3, 4, rng);
    MlpTape tape;
    net.forward(x, &tape);
    MlpGrads grads = net.zero_grads();
    Eigen::MatrixXd in_grad;
    net.backward(tape, g, grads, &in_grad);
    EXPECT_EQ(in_grad, Eigen::MatrixXd(w.transpose() * g));
    EXPECT_TRUE(grads.weight[0].isApprox(g * x.transpose(), 1e-14));
    EXPECT_TRUE(grads.bias[0].isApprox(g.rowwise().sum(), 1e-14));
}

TEST(MlpBackward, ZeroOutputGradientGivesZeroGradients) {
    RngStream rng(8);
    const MlpNet net = small_net(8);
    const Eigen::MatrixXd x = random_matrix(5, 6, rng);
    MlpTape tape;
    net.forward(x, &tape);
    MlpGrads grads = net.zero_grads();
    Eigen::MatrixXd in_grad;
    net.backward(tape, Eigen::MatrixXd::Zero(3, 6), grads, &in_grad);
    EXPECT_TRUE(grads.is_zero());
    EXPECT_TRUE(in_grad.isZero(0.0));
}

TEST(MlpBackward, MatchesFiniteDifferences) {
    RngStream rng(9);
    const MlpNet net = small_net(9, 6, 24, 3);
    const Eigen::MatrixXd x = random_matrix(6, 3, rng);
    GradCheckOptions opt;
    opt.parameter_samples = 1000;
    const GradCheckReport rep = check_mlp_gradients(net, x, rng, opt);
    EXPECT_GT(rep.checked, 500);
    EXPECT_LT(rep.max_rel_error, 1e-4);
}

TEST(MlpNet, RejectsMismatchedLayers) {
    std::vector<DenseLayer> layers{{Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4), Activation::leaky},
                                   {Eigen::MatrixXd::Zero(2, 5), Eigen::VectorXd::Zero(2), Activation::linear}};
    EXPECT_THROW(MlpNet(layers, 0.01), DomainError);
    const MlpNet ok = small_net(1);
    EXPECT_THROW(ok.forward(Eigen::MatrixXd::Zero(4, 1)), DomainError);
}

TEST(L1DataLoss, HandExamples) {
    FeatureMap a(5, 4, 3, 0.25);
    EXPECT_EQ(l1_data_loss(a, a, all_pixels(20)), 0.0);
    FeatureMap b = a;
    for (double &v : b.data())
        v += 0.5;
    EXPECT_DOUBLE_EQ(l1_data_loss(b, a, all_pixels(20)), 0.5);
    EXPECT_THROW(l1_data_loss(a, a, std::vector<int>{}), DomainError);
    EXPECT_THROW(l1_data_loss(a, FeatureMap(4, 5, 3), all_pixels(20)), DomainError);
    EXPECT_THROW(l1_data_loss(a, a, std::vector<int>{20}), DomainError);
}

TEST(L1DataLoss, MatchesNaiveLoop) {
    RngStream rng(10);
    FeatureMap p(13, 7, 3);
    FeatureMap t(13, 7, 3);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p.data()[i] = rng.normal();
        t.data()[i] = rng.normal();
    }
    long double sum = 0.0L;
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 13; ++x)
            for (int c = 0; c < 3; ++c)
                sum += std::abs(static_cast<long double>(p.at(x, y, c)) - t.at(x, y, c));
    EXPECT_NEAR(l1_data_loss(p, t, all_pixels(91)), static_cast<double>(sum / (91 * 3)), 1e-7);
    const std::vector<int> subset{0, 5, 90};
    double s = 0.0;
    for (int i : subset)
        for (int c = 0; c < 3; ++c)
            s += std::abs(p.pixel(i)[c] - t.pixel(i)[c]);
    EXPECT_NEAR(l1_data_loss(p, t, subset), s / 9.0, 1e-15);
}

TEST(PixelMask, UniformFullFractionSelectsAll) {
    RngStream rng(11);
    const NeuralParamMap params(6, 5, 4, 1.0);
    EXPECT_EQ(pixel_mask(params, 1.0, rng), all_pixels(30));
    HdrImage rgb(6, 5, 3, 0.5f);
    EXPECT_EQ(pixel_mask(rgb, 1.0, rng), all_pixels(30));
}

TEST(PixelMask, WeightsNormalize) {
    RngStream rng(12);
    NeuralParamMap params(8, 8, 5);
    HdrImage rgb(8, 8, 3);
    for (double &v : params.data())
        v = rng.normal();
    for (float &v : rgb.data())
        v = static_cast<float>(rng.uniform());
    for (const auto &w : {inv_param_norm_weights(params), sq_rgb_norm_weights(rgb)}) {
        double sum = 0.0;
        for (double v : w) {
            EXPECT_GE(v, 0.0);
            sum += v;
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
    const auto zero = normalize_weights(std::vector<double>(4, 0.0));
    for (double v : zero)
        EXPECT_EQ(v, 0.25);
}

TEST(PixelMask, DominantPixelIsChosen) {
    NeuralParamMap params(8, 8, 3, 1.0);
    // A zero-norm pixel gets weight 1/1e-6, a million times the others.
    for (double &v : params.pixel(37))
        v = 0.0;
    RngStream rng(13);
    int hits = 0;
    constexpr int kTrials = 1000;
    for (int t = 0; t < kTrials; ++t) {
        const std::vector<int> m = pixel_mask(params, 1.0 / 64.0, rng);
        ASSERT_EQ(m.size(), 1u);
        hits += m[0] == 37;
    }
    EXPECT_GT(hits, 0.99 * kTrials);
}

TEST(PixelMask, NoDuplicatesAndCeilCount) {
    RngStream rng(14);
    NeuralParamMap params(10, 10, 4);
    for (double &v : params.data())
        v = rng.normal();
    for (double fraction : {0.01, 0.333, 0.6, 0.999}) {
        const std::vector<int> m = pixel_mask(params, fraction, rng);
        EXPECT_EQ(static_cast<int>(m.size()), static_cast<int>(std::ceil(fraction * 100 - 1e-9)));
        EXPECT_EQ(std::set<int>(m.begin(), m.end()).size(), m.size());
        EXPECT_TRUE(std::is_sorted(m.begin(), m.end()));
    }
    EXPECT_THROW(pixel_mask(params, 0.0, rng), DomainError);
    EXPECT_THROW(pixel_mask(params, 1.5, rng), DomainError);
}

TEST(MaskModeNames, ParseAndPrint) {
    for (MaskMode m : {MaskMode::inv_param_norm, MaskMode::sq_rgb_norm, MaskMode::none})
        EXPECT_EQ(parse_mask_mode(to_string(m)), m);
    EXPECT_THROW(parse_mask_mode("random"), DomainError);
}

TEST(Adam, FirstStepHasLearningRateMagnitude) {
    std::vector<double> x{1.0, -2.0, 3.0};
    Adam adam;
    adam.add(std::span<double>(x));
    const std::vector<double> g{0.5, -4.0, 1e-3};
    adam.step({std::span<const double>(g)}, 0.1);
    EXPECT_NEAR(x[0], 0.9, 1e-6);
    EXPECT_NEAR(x[1], -1.9, 1e-6);
    EXPECT_NEAR(x[2], 2.9, 1e-4);
    EXPECT_EQ(adam.steps(), 1);
}

TEST(Adam, MinimizesQuadratic) {
    std::vector<double> x{5.0, -3.0};
    Adam adam;
    adam.add(std::span<double>(x));
    for (int i = 0; i < 2000; ++i) {
        const std::vector<double> g{2.0 * (x[0] - 1.0), 2.0 * (x[1] + 2.0)};
        adam.step({std::span<const double>(g)}, 0.05);
    }
    EXPECT_NEAR(x[0], 1.0, 1e-3);
    EXPECT_NEAR(x[1], -2.0, 1e-3);
}

TEST(Adam, RejectsMismatchedGradients) {
    std::vector<double> x(3, 0.0);
    Adam adam;
    adam.add(std::span<double>(x));
    const std::vector<double> g(2, 0.0);
    EXPECT_THROW(adam.step({std::span<const double>(g)}, 0.1), std::invalid_argument);
}

TEST(FitConfig, ValidatesAndSchedules) {
    FitConfig cfg;
    EXPECT_EQ(cfg.learning_rate, 1e-4);
    EXPECT_EQ(cfg.mask_fraction, 0.6);
    EXPECT_EQ(cfg.adam.beta1, 0.9);
    EXPECT_EQ(cfg.adam.beta2, 0.999);
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.epoch_length(8), 1);
    EXPECT_EQ(cfg.epoch_length(20), 3);
    EXPECT_DOUBLE_EQ(cfg.learning_rate_at(0, 8), 1e-4);
    EXPECT_DOUBLE_EQ(cfg.learning_rate_at(2, 8), 1e-4 * 0.985 * 0.985);
    cfg.epoch_iterations = 10;
    EXPECT_DOUBLE_EQ(cfg.learning_rate_at(9, 8), 1e-4);
    EXPECT_DOUBLE_EQ(cfg.learning_rate_at(10, 8), 1e-4 * 0.985);
    FitConfig bad;
    bad.mask_fraction = 0.0;
    EXPECT_THROW(bad.validate(), DomainError);
    bad = FitConfig{};
    bad.learning_rate = 0.0;
    EXPECT_THROW(bad.validate(), DomainError);
    bad = FitConfig{};
    bad.adam.beta1 = 1.0;
    EXPECT_THROW(bad.validate(), DomainError);
}

TEST(Fit, ReproducesLambertianTargets) {
    const LambertianFit &f = lambertian_fit();
    ASSERT_EQ(f.result.loss_trace.size(), 300u);
    EXPECT_LT(f.result.masked_loss_trace.back(), 0.02);
    double sum = 0.0;
    for (const FitTarget &t : f.targets) {
        const FeatureMap pred =
            relight_log(f.result.params, f.result.renderer, t.config.light_position, t.config.view_position);
        sum += l1_data_loss(pred, log_compress(t.image), all_pixels(256));
    }
    EXPECT_LT(sum / f.targets.size(), 0.02);
}

TEST(Fit, LambertianPixelActsAsConstantBrdf) {
    const LambertianFit &f = lambertian_fit();
    const auto params = f.result.params.pixel(8, 8);
    // 16 probe pairs within 35 degrees of the normal, where the Fresnel term
    // of the ground truth is negligible and the reference BRDF is a / pi.
    std::vector<double> values;
    for (int k = 0; k < 16; ++k) {
        const double theta = 0.6 * (k % 4 + 1) / 4.0;
        const double phi = kPi * (k / 4) / 2.0;
        const Vec3 wi(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
        const Vec3 wo = Vec3(-0.5 * wi.y(), 0.5 * wi.x(), 1.0).normalized();
        GgxSample gt;
        gt.diffuse = Rgb::Constant(0.5);
        gt.alpha = 0.25;
        ASSERT_NEAR(eval_brdf(gt, wi, wo).mean(), 0.5 / kPi, 1e-3 * 0.5 / kPi);
        values.push_back((as_brdf(params, wi, wo, f.result.renderer) / kIntensity).mean());
    }
    double mean = 0.0;
    for (double v : values)
        mean += v / values.size();
    double max_dev = 0.0;
    for (double v : values)
        max_dev = std::max(max_dev, std::abs(v - mean));
    EXPECT_LT(max_dev, 0.2 * mean) << "mean " << mean << " (a/pi = " << 0.5 / kPi << ")";
}

TEST(Fit, TexturedGgxLossDecreasesWithDefaults) {
    SvbrdfMaps maps = SvbrdfMaps::uniform(16, 16, Rgb::Zero(), Rgb::Constant(0.3), 0.5);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            const bool check = ((x / 4) + (y / 4)) % 2;
            maps.diffuse.set_vec3(x, y, check ? Vec3(0.6, 0.3, 0.1) : Vec3(0.1, 0.3, 0.6));
            maps.roughness.at(x, y, 0) = check ? 0.3 : 0.6;
        }
    const auto targets = reflect_targets(maps, 8, 1);
    // The reflect sampler centres a highlight on the surface for most draws.
    int on_surface = 0;
    for (const FitTarget &t : targets)
        on_surface += t.config.highlight_point.cwiseAbs().maxCoeff() <= 1.0;
    ASSERT_GT(on_surface, 0);
    FitConfig cfg;
    cfg.iterations = 100;
    cfg.seed = 1;
    const FitResult r = fit(targets, colocated_input_render(maps, Rgb::Constant(kIntensity)), cfg, EncodingConfig{});
    ASSERT_EQ(r.loss_trace.size(), 100u);
    for (std::size_t i = 1; i < r.loss_trace.size(); ++i)
        EXPECT_LT(r.loss_trace[i], r.loss_trace[i - 1]) << "iteration " << i;
}

TEST(Fit, DeterministicForFixedSeed) {
    const SvbrdfMaps maps = SvbrdfMaps::uniform(8, 8, Rgb::Constant(0.4), Rgb::Constant(0.1), 0.6);
    const auto targets = reflect_targets(maps, 4, 3);
    const HdrImage photo = colocated_input_render(maps, Rgb::Constant(kIntensity));
    FitConfig cfg;
    cfg.iterations = 15;
    cfg.batch_exemplars = 2;
    cfg.seed = 99;
    const FitResult a = fit(targets, photo, cfg, EncodingConfig{});
    const FitResult b = fit(targets, photo, cfg, EncodingConfig{});
    EXPECT_EQ(a.loss_trace, b.loss_trace);
    EXPECT_EQ(a.masked_loss_trace, b.masked_loss_trace);
    EXPECT_EQ(a.params, b.params);
    EXPECT_TRUE(a.renderer.render == b.renderer.render);
    cfg.seed = 100;
    EXPECT_NE(fit(targets, photo, cfg, EncodingConfig{}).loss_trace, a.loss_trace);
}

TEST(Fit, EstimatorSourceRuns) {
    const SvbrdfMaps maps = SvbrdfMaps::uniform(8, 8, Rgb::Constant(0.4), Rgb::Zero(), 0.6);
    const auto targets = reflect_targets(maps, 2, 4);
    FitConfig cfg;
    cfg.iterations = 5;
    cfg.param_source = ParamSource::estimator;
    cfg.estimator_base_channels = 4;
    cfg.learning_rate = 1e-3;
    const FitResult r = fit(targets, colocated_input_render(maps, Rgb::Constant(kIntensity)), cfg, EncodingConfig{});
    EXPECT_EQ(r.loss_trace.size(), 5u);
    EXPECT_FALSE(r.estimator.empty());
    EXPECT_EQ(r.params, estimate(photo_to_estimator_input(colocated_input_render(maps, Rgb::Constant(kIntensity))),
                                 r.estimator));
}

TEST(Fit, RejectsBadInputs) {
    const SvbrdfMaps maps = SvbrdfMaps::uniform(8, 8, Rgb::Constant(0.4), Rgb::Zero(), 0.6);
    auto targets = reflect_targets(maps, 2, 5);
    const HdrImage photo = colocated_input_render(maps);
    FitConfig cfg;
    cfg.iterations = 1;
    EXPECT_THROW(fit({}, photo, cfg, EncodingConfig{}), DomainError);
    EXPECT_THROW(fit(targets, HdrImage(4, 4, 3), cfg, EncodingConfig{}), DomainError);
    targets[0].image.at(0, 0, 0) = -1.0f;
    EXPECT_THROW(fit(targets, photo, cfg, EncodingConfig{}), DomainError);
    const SvbrdfMaps odd = SvbrdfMaps::uniform(6, 6, Rgb::Constant(0.4), Rgb::Zero(), 0.6);
    cfg.param_source = ParamSource::estimator;
    EXPECT_THROW(fit(reflect_targets(odd, 1, 6), colocated_input_render(odd), cfg, EncodingConfig{}), DomainError);
}

TEST(Fit, DivergenceIsReported) {
    const SvbrdfMaps maps = SvbrdfMaps::uniform(8, 8, Rgb::Constant(0.4), Rgb::Zero(), 0.6);
    const auto targets = reflect_targets(maps, 2, 7);
    FitConfig cfg;
    cfg.iterations = 5;
    cfg.learning_rate = 1e300;
    EXPECT_THROW(fit(targets, colocated_input_render(maps), cfg, EncodingConfig{}), FitDiverged);
}

TEST(GradCheckSuite, PassesForFixedSeed) {
    const GradCheckSuite s = run_gradcheck_suite(1);
    EXPECT_LT(s.render.max_rel_error, kMlpGradTolerance);
    EXPECT_LT(s.nd_enc.max_rel_error, kMlpGradTolerance);
    EXPECT_LT(s.unet.max_rel_error, kUNetGradTolerance);
    EXPECT_TRUE(s.passed());
}

} // namespace
} // namespace sforge
