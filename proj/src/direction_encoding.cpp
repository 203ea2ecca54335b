// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/direction_encoding.h"

#include <array>
#include <cmath>
#include <string>

namespace sforge {

void EncodingConfig::validate() const {
    if (frequency_count < 1)
        throw DomainError("EncodingConfig: frequency_count must be >= 1");
    if (compressed_dim < 1)
        throw DomainError("EncodingConfig: compressed_dim must be >= 1");
}

void encode_directions(const Vec3 &omega_i, const Vec3 &omega_o, const Vec3 &omega_h, const EncodingConfig &cfg,
                       std::span<double> out) {
    if (out.size() != static_cast<std::size_t>(cfg.encoded_dim()))
        throw DomainError("encode_directions: output span has wrong length");
    const std::array<const Vec3 *, 3> dirs{&omega_i, &omega_o, &omega_h};
    std::size_t k = 0;
    for (const Vec3 *d : dirs) {
        out[k++] = d->x();
        out[k++] = d->y();
        out[k++] = d->z();
        double freq = kPi;
        for (int f = 0; f < cfg.frequency_count; ++f, freq *= 2.0) {
            for (int c = 0; c < 3; ++c) {
                const double arg = freq * (*d)[c];
                out[k++] = std::sin(arg);
                out[k++] = std::cos(arg);
            }
        }
    }
}

Eigen::VectorXd encode_directions(const Vec3 &omega_i, const Vec3 &omega_o, const Vec3 &omega_h,
                                  const EncodingConfig &cfg) {
    Eigen::VectorXd out(cfg.encoded_dim());
    encode_directions(omega_i, omega_o, omega_h, cfg, std::span<double>(out.data(), out.size()));
    return out;
}

MlpNet make_nd_enc(const EncodingConfig &cfg, double leaky_slope, RngStream &rng) {
    cfg.validate();
    const std::array<int, 3> dims{cfg.encoded_dim(), kNdEncHidden, cfg.compressed_dim};
    return MlpNet::random(dims, Activation::leaky, Activation::leaky, leaky_slope, rng);
}

Eigen::VectorXd nd_enc_forward(const Eigen::VectorXd &encoded, const MlpNet &net) {
    if (encoded.size() != net.input_dim())
        throw DomainError("nd_enc_forward: encoding length " + std::to_string(encoded.size()) +
                          " does not match net input " + std::to_string(net.input_dim()));
    return net.forward_one(encoded);
}

} // namespace sforge
