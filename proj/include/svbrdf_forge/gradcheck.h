// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svbrdf_forge/estimator_net.h"
#include "svbrdf_forge/mlp.h"
#include "svbrdf_forge/rng.h"

namespace sforge {

/// Reverse-mode gradients against central differences of the scalar
/// L = sum(probe .* output) for a random probe. A coordinate whose +h or -h
/// evaluation flips the sign of any leaky-ReLU input is skipped: the
/// derivative is not defined across the kink.
struct GradCheckOptions {
    double step = 1e-4;
    // Relative error is |a - n| / max(|a|, |n|, floor).
    double floor = 1e-6;
    int parameter_samples = 1000;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    int checked = 0;
    int skipped = 0;
};

/// Checks a random subset of weights and biases, plus every input entry.
GradCheckReport check_mlp_gradients(const MlpNet &net, const Eigen::MatrixXd &input, RngStream &rng,
                                    const GradCheckOptions &opt = {});
GradCheckReport check_unet_gradients(const UNet &net, const FeatureMap &input, RngStream &rng,
                                     const GradCheckOptions &opt = {});

inline constexpr double kMlpGradTolerance = 1e-4;
inline constexpr double kUNetGradTolerance = 1e-3;

struct GradCheckSuite {
    GradCheckReport render;
    GradCheckReport nd_enc;
    GradCheckReport unet;
    bool passed() const {
        return render.max_rel_error < kMlpGradTolerance && nd_enc.max_rel_error < kMlpGradTolerance &&
               unet.max_rel_error < kUNetGradTolerance && render.checked > 0 && nd_enc.checked > 0 &&
               unet.checked > 0;
    }
};

/// Seeded checks of a default-size renderer MLP, the direction compressor on
/// real encodings, and a 16x16 estimator with base width 4.
GradCheckSuite run_gradcheck_suite(std::uint64_t seed);

} // namespace sforge
