// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/adam.h"

#include <cmath>
#include <stdexcept>

namespace sforge {

void AdamConfig::validate() const {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw std::invalid_argument("AdamConfig: betas must lie in [0, 1)");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("AdamConfig: epsilon must be positive");
}

void Adam::add(std::span<double> parameters) {
    slots_.push_back({parameters, std::vector<double>(parameters.size(), 0.0),
                      std::vector<double>(parameters.size(), 0.0)});
}

void Adam::step(const std::vector<std::span<const double>> &grads, double learning_rate) {
    if (grads.size() != slots_.size())
        throw std::invalid_argument("Adam::step: gradient count does not match registered buffers");
    ++t_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t s = 0; s < slots_.size(); ++s) {
        Slot &slot = slots_[s];
        const auto g = grads[s];
        if (g.size() != slot.param.size())
            throw std::invalid_argument("Adam::step: gradient size mismatch");
        for (std::size_t i = 0; i < g.size(); ++i) {
            slot.m[i] = b1 * slot.m[i] + (1.0 - b1) * g[i];
            slot.v[i] = b2 * slot.v[i] + (1.0 - b2) * g[i] * g[i];
            const double m_hat = slot.m[i] / c1;
            const double v_hat = slot.v[i] / c2;
            slot.param[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
    }
}

} // namespace sforge
