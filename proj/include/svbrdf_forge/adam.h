// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sforge {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
    bool operator==(const AdamConfig &) const = default;
};

/// Adam with bias-corrected moments over a fixed set of registered buffers.
/// Buffers must outlive the optimizer and keep their size.
class Adam {
  public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    void add(std::span<double> parameters);
    void add(const std::vector<std::span<double>> &parameters) {
        for (auto p : parameters)
            add(p);
    }

    /// One update. `grads` must match the registration order and sizes.
    void step(const std::vector<std::span<const double>> &grads, double learning_rate);

    std::int64_t steps() const { return t_; }
    std::size_t slot_count() const { return slots_.size(); }

  private:
    struct Slot {
        std::span<double> param;
        std::vector<double> m;
        std::vector<double> v;
    };
    AdamConfig config_;
    std::vector<Slot> slots_;
    std::int64_t t_ = 0;
};

} // namespace sforge
