// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <numbers>
#include <stdexcept>

namespace sforge {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Rgb = Eigen::Array3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInvPi = std::numbers::inv_pi;

// Raised when an operation is called outside its mathematical domain
// (negative radiance, antiparallel half vectors, mismatched rasters, ...).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

inline bool is_unit(const Vec3 &v, double tolerance = 1e-6) {
    return std::abs(v.norm() - 1.0) <= tolerance;
}

} // namespace sforge
