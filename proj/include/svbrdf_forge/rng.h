// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sforge {

/// Seeded random stream with a platform-independent sample sequence.
///
/// The engine is std::mt19937_64, whose output is fixed by the standard.
/// The standard library distributions are not, so uniforms are built from
/// the top 53 bits of each draw and normals use the Box-Muller transform
/// (one engine pair per normal, no caching). Bump kAlgorithm whenever any
/// of this changes; it is recorded in run manifests.
class RngStream {
  public:
    static constexpr std::string_view kAlgorithm = "mt19937_64/u53/box-muller/v1";

    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal(double mean = 0.0, double stddev = 1.0);

    /// Child stream for parallel or per-purpose generation. The child seed is
    /// splitmix64(seed ^ splitmix64(index + 1)); it does not consume state.
    RngStream split(std::uint64_t index) const;

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace sforge
