// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/svbrdf_renderer.h"

#include <algorithm>
#include <string>

namespace sforge {

namespace {

void check_range(const FeatureMap &map, const char *name, double lo, double hi) {
    for (double v : map.data())
        if (!(v >= lo && v <= hi))
            throw DomainError(std::string("SvbrdfMaps: ") + name + " value " + std::to_string(v) +
                              " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

} // namespace

void SvbrdfMaps::validate() const {
    if (diffuse.channels() != 3 || specular.channels() != 3 || normal.channels() != 3 || roughness.channels() != 1)
        throw DomainError("SvbrdfMaps: expected 3/3/3/1 channels for diffuse/specular/normal/roughness");
    require_same_extent(diffuse, specular, "SvbrdfMaps specular");
    require_same_extent(diffuse, normal, "SvbrdfMaps normal");
    require_same_extent(diffuse, roughness, "SvbrdfMaps roughness");
    check_range(diffuse, "diffuse", 0.0, 1.0);
    check_range(specular, "specular", 0.0, 1.0);
    check_range(roughness, "roughness", 0.0, 1.0);
    for (int y = 0; y < height(); ++y)
        for (int x = 0; x < width(); ++x) {
            const Vec3 n = normal.vec3(x, y);
            if (!is_unit(n, 1e-3) || !(n.z() > 0.0))
                throw DomainError("SvbrdfMaps: normal at (" + std::to_string(x) + ", " + std::to_string(y) +
                                  ") is not a unit vector with positive z");
        }
}

GgxSample SvbrdfMaps::sample(int x, int y) const {
    GgxSample s;
    const auto d = diffuse.pixel(x, y);
    const auto sp = specular.pixel(x, y);
    s.diffuse = Rgb(d[0], d[1], d[2]);
    s.specular = Rgb(sp[0], sp[1], sp[2]);
    s.normal = normal.vec3(x, y);
    s.alpha = decode_alpha(roughness.at(x, y, 0));
    return s;
}

SvbrdfMaps SvbrdfMaps::uniform(int width, int height, const Rgb &diffuse, const Rgb &specular, double sqrt_alpha,
                               const Vec3 &normal) {
    SvbrdfMaps maps{FeatureMap(width, height, 3), FeatureMap(width, height, 3), FeatureMap(width, height, 3),
                    FeatureMap(width, height, 1, sqrt_alpha)};
    const Vec3 n = normal.normalized();
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            maps.diffuse.set_vec3(x, y, diffuse.matrix());
            maps.specular.set_vec3(x, y, specular.matrix());
            maps.normal.set_vec3(x, y, n);
        }
    return maps;
}

HdrImage render(const RenderJob &job) {
    const SvbrdfMaps &maps = job.maps;
    maps.validate();
    const Vec3 view = job.colocated ? job.light.position : job.view_position;
    const SurfaceGrid grid{maps.width(), maps.height()};
    HdrImage out(grid.width, grid.height, 3);
    for (int y = 0; y < grid.height; ++y)
        for (int x = 0; x < grid.width; ++x) {
            const Vec3 p = grid.position(x, y);
            const Vec3 wi = direction_to(p, job.light.position);
            const Vec3 wo = direction_to(p, view);
            const GgxSample s = maps.sample(x, y);
            const double cosine = std::max(0.0, s.normal.dot(wi));
            Rgb radiance = eval_brdf(s, wi, wo) * cosine * job.light.intensity;
            if (job.falloff)
                radiance /= (job.light.position - p).squaredNorm();
            out.set_vec3(x, y, radiance.matrix());
        }
    return out;
}

HdrImage colocated_input_render(const SvbrdfMaps &maps, const Rgb &intensity, bool falloff) {
    const RenderJob job{maps, PointSource{Vec3(0.0, 0.0, kViewDistance), intensity}, Vec3::Zero(), true, falloff};
    return render(job);
}

FeatureMap build_estimator_input(const FeatureMap &log_photo, const Vec3 &light, const Vec3 &view) {
    if (log_photo.channels() != 3)
        throw DomainError("build_estimator_input: photo must have 3 channels");
    const SurfaceGrid grid{log_photo.width(), log_photo.height()};
    FeatureMap out(grid.width, grid.height, 4);
    for (int y = 0; y < grid.height; ++y)
        for (int x = 0; x < grid.width; ++x) {
            const Vec3 p = grid.position(x, y);
            const Vec3 h = half_vector(direction_to(p, light), direction_to(p, view));
            auto dst = out.pixel(x, y);
            const auto src = log_photo.pixel(x, y);
            dst[0] = src[0];
            dst[1] = src[1];
            dst[2] = src[2];
            dst[3] = h.z();
        }
    return out;
}

} // namespace sforge
