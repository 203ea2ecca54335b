// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/mlp.h"

#include "svbrdf_forge/math.h"

#include <cmath>
#include <string>

namespace sforge {

void MlpGrads::set_zero() {
    for (auto &w : weight)
        w.setZero();
    for (auto &b : bias)
        b.setZero();
}

void MlpGrads::add(const MlpGrads &other) {
    for (std::size_t l = 0; l < weight.size(); ++l) {
        weight[l] += other.weight[l];
        bias[l] += other.bias[l];
    }
}

bool MlpGrads::is_zero() const {
    for (std::size_t l = 0; l < weight.size(); ++l)
        if (!weight[l].isZero(0.0) || !bias[l].isZero(0.0))
            return false;
    return true;
}

MlpNet::MlpNet(std::vector<DenseLayer> layers, double leaky_slope)
    : layers_(std::move(layers)), leaky_slope_(leaky_slope) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (layers_[l].bias.size() != layers_[l].weight.rows())
            throw DomainError("MlpNet: bias size mismatch in layer " + std::to_string(l));
        if (l > 0 && layers_[l].input_dim() != layers_[l - 1].output_dim())
            throw DomainError("MlpNet: layer " + std::to_string(l) + " input " +
                              std::to_string(layers_[l].input_dim()) + " does not chain with output " +
                              std::to_string(layers_[l - 1].output_dim()));
        if (!layers_[l].weight.allFinite() || !layers_[l].bias.allFinite())
            throw DomainError("MlpNet: non-finite weights in layer " + std::to_string(l));
    }
}

MlpNet MlpNet::random(std::span<const int> dims, Activation hidden, Activation output, double leaky_slope,
                      RngStream &rng) {
    if (dims.size() < 2)
        throw DomainError("MlpNet::random: need at least two dims");
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int in = dims[l];
        const int out = dims[l + 1];
        const Activation act = (l + 2 == dims.size()) ? output : hidden;
        const double gain = act == Activation::leaky ? 2.0 / (1.0 + leaky_slope * leaky_slope) : 1.0;
        const double bound = std::sqrt(3.0 * gain / in);
        DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out), act};
        // Row-major fill so the draw order matches the serialized layout.
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c)
                layer.weight(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
        layers.push_back(std::move(layer));
    }
    return MlpNet(std::move(layers), leaky_slope);
}

std::size_t MlpNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto &l : layers_)
        n += l.weight.size() + l.bias.size();
    return n;
}

Eigen::MatrixXd MlpNet::forward(const Eigen::MatrixXd &x, MlpTape *tape) const {
    if (x.rows() != input_dim())
        throw DomainError("MlpNet::forward: input has " + std::to_string(x.rows()) + " rows, net expects " +
                          std::to_string(input_dim()));
    if (tape) {
        tape->inputs.resize(layers_.size());
        tape->preactivations.resize(layers_.size());
    }
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const DenseLayer &layer = layers_[l];
        Eigen::MatrixXd z = layer.weight * a;
        z.colwise() += layer.bias;
        if (tape)
            tape->inputs[l] = std::move(a);
        if (layer.activation == Activation::leaky)
            a = z.unaryExpr([s = leaky_slope_](double v) { return v > 0.0 ? v : s * v; });
        else
            a = z;
        if (tape)
            tape->preactivations[l] = std::move(z);
    }
    return a;
}

Eigen::VectorXd MlpNet::forward_one(const Eigen::VectorXd &x) const {
    return forward(Eigen::MatrixXd(x)).col(0);
}

void MlpNet::backward(const MlpTape &tape, const Eigen::MatrixXd &out_grad, MlpGrads &grads,
                      Eigen::MatrixXd *input_grad) const {
    if (tape.inputs.size() != layers_.size())
        throw DomainError("MlpNet::backward: tape does not match network");
    if (out_grad.rows() != output_dim() || out_grad.cols() != tape.inputs.front().cols())
        throw DomainError("MlpNet::backward: output gradient shape mismatch");
    Eigen::MatrixXd g = out_grad;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const DenseLayer &layer = layers_[l];
        if (layer.activation == Activation::leaky)
            g = g.cwiseProduct(tape.preactivations[l].unaryExpr(
                [s = leaky_slope_](double v) { return v > 0.0 ? 1.0 : s; }));
        grads.weight[l].noalias() += g * tape.inputs[l].transpose();
        grads.bias[l] += g.rowwise().sum();
        if (l > 0 || input_grad)
            g = layer.weight.transpose() * g;
    }
    if (input_grad)
        *input_grad = std::move(g);
}

MlpGrads MlpNet::zero_grads() const {
    MlpGrads g;
    for (const auto &l : layers_) {
        g.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
        g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
    return g;
}

std::vector<std::span<double>> MlpNet::parameter_views() {
    std::vector<std::span<double>> views;
    for (auto &l : layers_) {
        views.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
        views.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
    return views;
}

std::vector<std::span<const double>> MlpNet::gradient_views(const MlpGrads &grads) {
    std::vector<std::span<const double>> views;
    for (std::size_t l = 0; l < grads.weight.size(); ++l) {
        views.emplace_back(grads.weight[l].data(), static_cast<std::size_t>(grads.weight[l].size()));
        views.emplace_back(grads.bias[l].data(), static_cast<std::size_t>(grads.bias[l].size()));
    }
    return views;
}

bool MlpNet::operator==(const MlpNet &other) const {
    if (leaky_slope_ != other.leaky_slope_ || layers_.size() != other.layers_.size())
        return false;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto &a = layers_[l];
        const auto &b = other.layers_[l];
        if (a.activation != b.activation || a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
            a.weight != b.weight || a.bias != b.bias)
            return false;
    }
    return true;
}

} // namespace sforge
