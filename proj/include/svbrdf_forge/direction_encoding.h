// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svbrdf_forge/math.h"
#include "svbrdf_forge/mlp.h"

#include <span>

namespace sforge {

struct EncodingConfig {
    int frequency_count = 16;
    int compressed_dim = 32;

    /// Raw xyz of three directions plus sin/cos per frequency per component.
    int encoded_dim() const { return 9 + 18 * frequency_count; }
    int sinusoidal_dim() const { return 18 * frequency_count; }
    /// Values per direction block: x, y, z then the sinusoids.
    int block_dim() const { return 3 + 6 * frequency_count; }
    void validate() const;

    bool operator==(const EncodingConfig &) const = default;
};

inline constexpr int kNdEncHidden = 64;

/// Writes [Gamma(wi), Gamma(wo), Gamma(wh)] into `out`, each block laid out
/// as (x, y, z, sin(pi x), cos(pi x), sin(pi y), cos(pi y), sin(pi z),
/// cos(pi z), sin(2 pi x), ...) for frequencies 2^k pi, k = 0..n-1.
void encode_directions(const Vec3 &omega_i, const Vec3 &omega_o, const Vec3 &omega_h,
                       const EncodingConfig &cfg, std::span<double> out);
Eigen::VectorXd encode_directions(const Vec3 &omega_i, const Vec3 &omega_o, const Vec3 &omega_h,
                                  const EncodingConfig &cfg);

/// Encoding compressor: encoded_dim -> 64 -> compressed_dim, leaky activations.
MlpNet make_nd_enc(const EncodingConfig &cfg, double leaky_slope, RngStream &rng);

/// Throws DomainError when the encoding length does not match the net.
Eigen::VectorXd nd_enc_forward(const Eigen::VectorXd &encoded, const MlpNet &net);

} // namespace sforge
