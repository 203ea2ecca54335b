// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svbrdf_forge/rng.h"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace sforge {

enum class Activation : std::uint32_t { leaky = 0, linear = 1 };

struct DenseLayer {
    Eigen::MatrixXd weight; // out x in
    Eigen::VectorXd bias;   // out
    Activation activation = Activation::leaky;

    int input_dim() const { return static_cast<int>(weight.cols()); }
    int output_dim() const { return static_cast<int>(weight.rows()); }
};

/// Activations kept by a forward pass for the matching backward pass.
/// Samples are stored column-wise.
struct MlpTape {
    std::vector<Eigen::MatrixXd> inputs;         // input to each layer
    std::vector<Eigen::MatrixXd> preactivations; // W x + b of each layer
};

/// Gradient accumulators shaped like the network.
struct MlpGrads {
    std::vector<Eigen::MatrixXd> weight;
    std::vector<Eigen::VectorXd> bias;

    void set_zero();
    void add(const MlpGrads &other);
    bool is_zero() const;
};

/// Dense feed-forward network evaluated on column batches.
class MlpNet {
  public:
    MlpNet() = default;
    MlpNet(std::vector<DenseLayer> layers, double leaky_slope);

    /// Layer widths dims[0] -> dims[1] -> ...; hidden layers use `hidden`,
    /// the last uses `output`. Kaiming-uniform weights, zero biases.
    static MlpNet random(std::span<const int> dims, Activation hidden, Activation output,
                         double leaky_slope, RngStream &rng);

    int input_dim() const { return layers_.empty() ? 0 : layers_.front().input_dim(); }
    int output_dim() const { return layers_.empty() ? 0 : layers_.back().output_dim(); }
    double leaky_slope() const { return leaky_slope_; }
    const std::vector<DenseLayer> &layers() const { return layers_; }
    std::vector<DenseLayer> &layers() { return layers_; }
    std::size_t parameter_count() const;

    /// x is input_dim x batch. Throws DomainError on dimension mismatch.
    Eigen::MatrixXd forward(const Eigen::MatrixXd &x, MlpTape *tape = nullptr) const;
    Eigen::VectorXd forward_one(const Eigen::VectorXd &x) const;

    /// Reverse-mode pass. Accumulates parameter gradients into `grads` and,
    /// when `input_grad` is non-null, writes d(loss)/d(input) to it.
    void backward(const MlpTape &tape, const Eigen::MatrixXd &out_grad, MlpGrads &grads,
                  Eigen::MatrixXd *input_grad = nullptr) const;

    MlpGrads zero_grads() const;

    /// Views over every weight and bias buffer, in layer order (W0, b0, W1, ...).
    std::vector<std::span<double>> parameter_views();
    static std::vector<std::span<const double>> gradient_views(const MlpGrads &grads);

    bool operator==(const MlpNet &other) const;

  private:
    std::vector<DenseLayer> layers_;
    double leaky_slope_ = 0.01;
};

} // namespace sforge
