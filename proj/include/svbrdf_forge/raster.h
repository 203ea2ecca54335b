// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svbrdf_forge/math.h"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sforge {

/// Interleaved H x W x C raster, row-major with y = 0 at the top.
///
/// Pixel (x, y) sits on the surface at ((2x+1)/W - 1, (2y+1)/H - 1), so
/// the top-left corner of the image is the surface corner (-1, -1).
template <typename T>
class Raster {
  public:
    Raster() = default;
    Raster(int width, int height, int channels, T fill = T{})
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<std::size_t>(width) * height * channels, fill) {
        if (width < 0 || height < 0 || channels < 0)
            throw DomainError("raster dimensions must be non-negative");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    int pixel_count() const { return width_ * height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool same_shape(const Raster &o) const {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }
    template <typename U>
    bool same_extent(const Raster<U> &o) const {
        return width_ == o.width() && height_ == o.height();
    }

    std::size_t offset(int x, int y, int c = 0) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    T &at(int x, int y, int c) { return data_[offset(x, y, c)]; }
    const T &at(int x, int y, int c) const { return data_[offset(x, y, c)]; }

    std::span<T> pixel(int x, int y) { return {data_.data() + offset(x, y), static_cast<std::size_t>(channels_)}; }
    std::span<const T> pixel(int x, int y) const {
        return {data_.data() + offset(x, y), static_cast<std::size_t>(channels_)};
    }
    // Pixel by linear index y * W + x.
    std::span<T> pixel(int index) {
        return {data_.data() + static_cast<std::size_t>(index) * channels_, static_cast<std::size_t>(channels_)};
    }
    std::span<const T> pixel(int index) const {
        return {data_.data() + static_cast<std::size_t>(index) * channels_, static_cast<std::size_t>(channels_)};
    }

    Vec3 vec3(int x, int y) const {
        const auto p = pixel(x, y);
        return {static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2])};
    }
    void set_vec3(int x, int y, const Vec3 &v) {
        auto p = pixel(x, y);
        p[0] = static_cast<T>(v.x());
        p[1] = static_cast<T>(v.y());
        p[2] = static_cast<T>(v.z());
    }

    std::vector<T> &data() { return data_; }
    const std::vector<T> &data() const { return data_; }

    bool operator==(const Raster &) const = default;

  private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<T> data_;
};

/// Linear-RGB radiance, H x W x 3, non-negative and unbounded above.
using HdrImage = Raster<float>;
/// Double-precision feature raster (log radiance, direction fields, network features).
using FeatureMap = Raster<double>;
/// H x W x 3 unit vectors.
using DirectionField = Raster<double>;
/// H x W x C learned per-pixel material parameters.
using NeuralParamMap = Raster<double>;

template <typename To, typename From>
Raster<To> raster_cast(const Raster<From> &in) {
    Raster<To> out(in.width(), in.height(), in.channels());
    for (std::size_t i = 0; i < in.size(); ++i)
        out.data()[i] = static_cast<To>(in.data()[i]);
    return out;
}

inline void require_same_extent(const auto &a, const auto &b, const std::string &what) {
    if (a.width() != b.width() || a.height() != b.height())
        throw DomainError(what + ": raster extents differ (" + std::to_string(a.width()) + "x" +
                          std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                          std::to_string(b.height()) + ")");
}

} // namespace sforge
