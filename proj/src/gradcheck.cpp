// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/gradcheck.h"

#include "svbrdf_forge/direction_encoding.h"
#include "svbrdf_forge/nbrdf.h"
#include "svbrdf_forge/scene_geometry.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace sforge {

namespace {

double rel_error(double a, double n, double floor) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

std::vector<bool> mlp_pattern(const MlpNet &net, const Eigen::MatrixXd &input) {
    MlpTape tape;
    net.forward(input, &tape);
    std::vector<bool> p;
    for (std::size_t l = 0; l < net.layers().size(); ++l)
        if (net.layers()[l].activation == Activation::leaky)
            for (Eigen::Index i = 0; i < tape.preactivations[l].size(); ++i)
                p.push_back(tape.preactivations[l].data()[i] > 0.0);
    return p;
}

std::vector<bool> unet_pattern(const UNet &net, const FeatureMap &input) {
    UNetTape tape;
    net.forward(input, &tape);
    std::vector<bool> p;
    // Tape inputs of every layer but the stem are leaky outputs or linear
    // combinations of them; their signs cover every kink.
    for (std::size_t l = 1; l < tape.conv.size(); ++l)
        for (double v : tape.conv[l].input.data())
            p.push_back(v > 0.0);
    return p;
}

// One coordinate: central difference of `loss` while `slot` is perturbed.
struct Probe {
    double *slot;
    double analytic;
};

template <typename Loss, typename Pattern>
void check_probes(std::vector<Probe> &probes, const Loss &loss, const Pattern &pattern, const GradCheckOptions &opt,
                  GradCheckReport &report) {
    for (Probe &p : probes) {
        const double saved = *p.slot;
        *p.slot = saved + opt.step;
        const double up = loss();
        const auto pat_up = pattern();
        *p.slot = saved - opt.step;
        const double down = loss();
        const auto pat_down = pattern();
        *p.slot = saved;
        if (pat_up != pat_down) {
            ++report.skipped;
            continue;
        }
        const double numeric = (up - down) / (2.0 * opt.step);
        report.max_rel_error = std::max(report.max_rel_error, rel_error(p.analytic, numeric, opt.floor));
        ++report.checked;
    }
}

std::vector<std::size_t> pick(std::size_t total, int count, RngStream &rng) {
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0);
    if (static_cast<std::size_t>(count) >= total)
        return idx;
    for (int i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(total - i));
        std::swap(idx[i], idx[std::min(j, total - 1)]);
    }
    idx.resize(count);
    return idx;
}

} // namespace

GradCheckReport check_mlp_gradients(const MlpNet &net_in, const Eigen::MatrixXd &input_in, RngStream &rng,
                                    const GradCheckOptions &opt) {
    MlpNet net = net_in;
    Eigen::MatrixXd input = input_in;
    Eigen::MatrixXd probe(net.output_dim(), input.cols());
    for (Eigen::Index i = 0; i < probe.size(); ++i)
        probe.data()[i] = rng.normal();

    MlpTape tape;
    net.forward(input, &tape);
    MlpGrads grads = net.zero_grads();
    Eigen::MatrixXd input_grad;
    net.backward(tape, probe, grads, &input_grad);

    const auto loss = [&] { return net.forward(input).cwiseProduct(probe).sum(); };
    const auto pattern = [&] { return mlp_pattern(net, input); };

    std::vector<Probe> probes;
    auto params = net.parameter_views();
    const auto gviews = MlpNet::gradient_views(grads);
    std::vector<std::pair<std::size_t, std::size_t>> flat;
    for (std::size_t v = 0; v < params.size(); ++v)
        for (std::size_t i = 0; i < params[v].size(); ++i)
            flat.push_back({v, i});
    for (std::size_t k : pick(flat.size(), opt.parameter_samples, rng))
        probes.push_back({&params[flat[k].first][flat[k].second], gviews[flat[k].first][flat[k].second]});
    for (Eigen::Index i = 0; i < input.size(); ++i)
        probes.push_back({input.data() + i, input_grad.data()[i]});

    GradCheckReport report;
    check_probes(probes, loss, pattern, opt, report);
    return report;
}

GradCheckReport check_unet_gradients(const UNet &net_in, const FeatureMap &input_in, RngStream &rng,
                                     const GradCheckOptions &opt) {
    UNet net = net_in;
    FeatureMap input = input_in;
    UNetTape tape;
    const FeatureMap out = net.forward(input, &tape);
    FeatureMap probe(out.width(), out.height(), out.channels());
    for (double &v : probe.data())
        v = rng.normal();
    UNetGrads grads = net.zero_grads();
    FeatureMap input_grad;
    net.backward(tape, probe, grads, &input_grad);

    const auto loss = [&] {
        const FeatureMap o = net.forward(input);
        double s = 0.0;
        for (std::size_t i = 0; i < o.size(); ++i)
            s += o.data()[i] * probe.data()[i];
        return s;
    };
    const auto pattern = [&] { return unet_pattern(net, input); };

    std::vector<Probe> probes;
    auto params = net.parameter_views();
    const auto gviews = UNet::gradient_views(grads);
    std::vector<std::pair<std::size_t, std::size_t>> flat;
    for (std::size_t v = 0; v < params.size(); ++v)
        for (std::size_t i = 0; i < params[v].size(); ++i)
            flat.push_back({v, i});
    for (std::size_t k : pick(flat.size(), opt.parameter_samples, rng))
        probes.push_back({&params[flat[k].first][flat[k].second], gviews[flat[k].first][flat[k].second]});
    for (std::size_t k : pick(input.size(), opt.parameter_samples / 4, rng))
        probes.push_back({input.data().data() + k, input_grad.data()[k]});

    GradCheckReport report;
    check_probes(probes, loss, pattern, opt, report);
    return report;
}

GradCheckSuite run_gradcheck_suite(std::uint64_t seed) {
    const RngStream root(seed);
    GradCheckSuite suite;
    const EncodingConfig enc;
    constexpr int kColumns = 4;
    {
        RngStream rng = root.split(0);
        const MlpNet net = make_render_net(kDefaultParamDim, enc.compressed_dim, kRenderHidden, kLeakySlope, rng);
        Eigen::MatrixXd x(net.input_dim(), kColumns);
        for (Eigen::Index i = 0; i < x.size(); ++i)
            x.data()[i] = rng.normal();
        suite.render = check_mlp_gradients(net, x, rng);
    }
    {
        RngStream rng = root.split(1);
        const MlpNet net = make_nd_enc(enc, kLeakySlope, rng);
        Eigen::MatrixXd x(enc.encoded_dim(), kColumns);
        for (int c = 0; c < kColumns; ++c) {
            const Vec3 wi = Vec3(rng.normal(), rng.normal(), std::abs(rng.normal()) + 0.1).normalized();
            const Vec3 wo = Vec3(rng.normal(), rng.normal(), std::abs(rng.normal()) + 0.1).normalized();
            x.col(c) = encode_directions(wi, wo, half_vector(wi, wo), enc);
        }
        suite.nd_enc = check_mlp_gradients(net, x, rng);
    }
    {
        RngStream rng = root.split(2);
        UNetSpec spec;
        spec.base_channels = 4;
        spec.output_channels = 8;
        const UNet net = UNet::random(spec, rng);
        FeatureMap x(16, 16, spec.input_channels);
        for (double &v : x.data())
            v = rng.normal();
        suite.unet = check_unet_gradients(net, x, rng);
    }
    return suite;
}

} // namespace sforge
