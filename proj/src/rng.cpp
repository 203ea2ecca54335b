// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/rng.h"

#include "svbrdf_forge/math.h"

#include <cmath>

namespace sforge {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double RngStream::normal(double mean, double stddev) {
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    return mean + stddev * z;
}

RngStream RngStream::split(std::uint64_t index) const {
    return RngStream(splitmix64(seed_ ^ splitmix64(index + 1)));
}

} // namespace sforge
