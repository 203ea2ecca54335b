// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/exemplar_sampler.h"
#include "svbrdf_forge/fit.h"
#include "svbrdf_forge/ggx_brdf.h"
#include "svbrdf_forge/gradcheck.h"
#include "svbrdf_forge/io.h"
#include "svbrdf_forge/nbrdf.h"
#include "svbrdf_forge/radiometry.h"
#include "svbrdf_forge/sphere_renderer.h"
#include "svbrdf_forge/svbrdf_renderer.h"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace sforge;

namespace {

std::vector<double> parse_numbers(const std::string &text, const std::string &what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception &) {
            throw CLI::ValidationError(what, "'" + text + "' is not a comma-separated list of numbers");
        }
    }
    return out;
}

Vec3 parse_vec3(const std::string &text, const std::string &what) {
    const auto v = parse_numbers(text, what);
    if (v.size() != 3)
        throw CLI::ValidationError(what, "expected X,Y,Z");
    return {v[0], v[1], v[2]};
}

Rgb parse_rgb(const std::string &text, const std::string &what) {
    const auto v = parse_numbers(text, what);
    if (v.size() == 1)
        return Rgb::Constant(v[0]);
    if (v.size() != 3)
        throw CLI::ValidationError(what, "expected V or R,G,B");
    return {v[0], v[1], v[2]};
}

std::pair<int, int> parse_pixel(const std::string &text, const std::string &what) {
    const auto v = parse_numbers(text, what);
    if (v.size() != 2 || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1]))
        throw CLI::ValidationError(what, "expected integer X,Y");
    return {static_cast<int>(v[0]), static_cast<int>(v[1])};
}

std::string format_vec(const Vec3 &v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", v.x(), v.y(), v.z());
    return buf;
}

void write_image(const HdrImage &image, const fs::path &path) {
    if (path.extension() == ".png") {
        HdrImage display = ldr_clamp(image);
        for (float &v : display.data())
            v = static_cast<float>(std::pow(static_cast<double>(v), 1.0 / kDisplayGamma));
        write_png_raw(display, path);
    } else {
        write_pfm(image, path);
    }
}

HdrImage read_image(const fs::path &path) {
    return path.extension() == ".png" ? read_png_ldr(path) : read_pfm(path);
}

NormalPolicy parse_policy(const std::string &s) {
    if (s == "reject")
        return NormalPolicy::reject;
    if (s == "renormalize")
        return NormalPolicy::renormalize;
    throw CLI::ValidationError("--normals", "expected reject or renormalize");
}

// ---------------------------------------------------------------------------

struct RenderArgs {
    std::string maps, light, view, intensity = "1", out, normals = "reject";
    bool colocated = false, falloff = false, ldr = false;
};

int run_render(const RenderArgs &a) {
    const SvbrdfMaps maps = load_svbrdf_maps(a.maps, parse_policy(a.normals));
    const Vec3 light = a.light.empty() ? Vec3(0.0, 0.0, kViewDistance) : parse_vec3(a.light, "--light");
    const bool colocated = a.colocated || a.view.empty();
    const Vec3 view = colocated ? light : parse_vec3(a.view, "--view");
    RenderJob job{maps, {light, parse_rgb(a.intensity, "--intensity")}, view, colocated, a.falloff};
    HdrImage img = render(job);
    if (a.ldr)
        img = ldr_clamp(img);
    write_image(img, a.out);
    record_manifest(a.out, {"render",
                            a.out,
                            std::nullopt,
                            {{"maps", a.maps},
                             {"light", format_vec(light)},
                             {"view", format_vec(view)},
                             {"intensity", a.intensity},
                             {"ldr", a.ldr}},
                            a.falloff,
                            std::nullopt});
    return 0;
}

struct SampleArgs {
    std::string kind = "reflect", out, maps, intensity = "1", normals = "reject";
    int count = 8;
    std::uint64_t seed = 0;
    bool falloff = false, ldr = false;
};

int run_sample(const SampleArgs &a) {
    const EvalKind kind = parse_eval_kind(a.kind);
    if (a.count < 1)
        throw CLI::ValidationError("--count", "must be positive");
    RngStream rng(a.seed);
    const std::vector<ExemplarConfig> configs = eval_configs(kind, a.count, rng);
    // A .json --out names the configuration file itself; anything else is a directory.
    const bool to_file = fs::path(a.out).extension() == ".json";
    const fs::path doc = to_file ? fs::path(a.out) : fs::path(a.out) / "exemplars.json";
    const nlohmann::json manifest_cfg = {
        {"kind", a.kind}, {"count", a.count}, {"maps", a.maps}, {"intensity", a.intensity}, {"ldr", a.ldr}};
    if (a.maps.empty()) {
        write_file_atomic(doc, exemplars_to_json(configs, kind, a.seed).dump(2) + "\n");
    } else {
        if (to_file)
            throw CLI::ValidationError("--out", "rendering targets needs an output directory");
        const SvbrdfMaps maps = load_svbrdf_maps(a.maps, parse_policy(a.normals));
        const Rgb intensity = parse_rgb(a.intensity, "--intensity");
        std::vector<FitTarget> targets;
        for (const auto &c : configs) {
            HdrImage img = render({maps, {c.light_position, intensity}, c.view_position, false, a.falloff});
            if (a.ldr)
                img = ldr_clamp(img);
            targets.push_back({std::move(img), c});
        }
        save_targets(targets, a.out, a.seed);
    }
    record_manifest(doc, {"sample-exemplars", doc.filename().string(), a.seed, manifest_cfg, a.falloff, std::nullopt});
    return 0;
}

struct EstimateArgs {
    std::string input, net, out;
};

int run_estimate(const EstimateArgs &a) {
    const NetworkFile nf = read_network(a.net);
    if (!nf.estimator)
        throw IoError(a.net + ": no estimator section");
    const NeuralParamMap params = estimate(photo_to_estimator_input(read_image(a.input)), *nf.estimator);
    write_param_map(params, a.out);
    record_manifest(a.out, {"estimate", a.out, std::nullopt, {{"input", a.input}, {"net", a.net}}, false, std::nullopt});
    return 0;
}

struct FitArgs {
    std::string input, targets, config, out_params, out_net, loss_trace;
    std::optional<std::uint64_t> seed;
    std::optional<int> iterations;
    bool ldr_input = false, quiet = false;
};

int run_fit(const FitArgs &a) {
    FitRunConfig rc;
    if (!a.config.empty())
        rc = read_fit_config(a.config);
    if (a.seed)
        rc.fit.seed = *a.seed;
    if (a.iterations)
        rc.fit.iterations = *a.iterations;
    HdrImage photo = read_image(a.input);
    if (a.ldr_input)
        photo = ldr_clamp(photo);
    const std::vector<FitTarget> targets = load_targets(a.targets);
    const int report_every = std::max(1, rc.fit.iterations / 20);
    FitProgress progress;
    if (!a.quiet)
        progress = [&](int it, double loss) {
            if (it % report_every == 0 || it + 1 == rc.fit.iterations)
                std::fprintf(stderr, "iter %5d  loss %.6f\n", it, loss);
        };
    const FitResult result = fit(targets, photo, rc.fit, rc.encoding, progress);

    write_param_map(result.params, a.out_params);
    NetworkFile nf;
    nf.renderer = result.renderer;
    if (rc.fit.param_source == ParamSource::estimator)
        nf.estimator = result.estimator;
    write_network(nf, a.out_net);
    const nlohmann::json cfg = to_json(rc.fit, rc.encoding);
    record_manifest(a.out_params, {"fit", a.out_params, rc.fit.seed, cfg, false, rc.encoding});
    record_manifest(a.out_net, {"fit", a.out_net, rc.fit.seed, cfg, false, rc.encoding});
    if (!a.loss_trace.empty()) {
        write_file_atomic(a.loss_trace, nlohmann::json{{"loss", result.loss_trace}}.dump() + "\n");
        record_manifest(a.loss_trace, {"fit", a.loss_trace, rc.fit.seed, cfg, false, rc.encoding});
    }
    if (!result.loss_trace.empty())
        std::printf("final loss %.6f\n", result.loss_trace.back());
    return 0;
}

struct RelightArgs {
    std::string params, net, light, view, out;
};

int run_relight(const RelightArgs &a) {
    const NeuralParamMap params = read_param_map(a.params);
    const NetworkFile nf = read_network(a.net);
    if (!nf.renderer)
        throw IoError(a.net + ": no renderer sections");
    const Vec3 light = parse_vec3(a.light, "--light");
    const Vec3 view = parse_vec3(a.view, "--view");
    write_image(relight(params, *nf.renderer, light, view), a.out);
    record_manifest(a.out, {"relight",
                            a.out,
                            std::nullopt,
                            {{"params", a.params}, {"net", a.net}, {"light", format_vec(light)}, {"view", format_vec(view)}},
                            false,
                            nf.renderer->encoding});
    return 0;
}

struct SphereArgs {
    std::string material, light = "3,0,4", camera = "0,0,1", out, env_radiance = "1", normal_maps, normals = "reject";
    int res = 128, env_samples = 0;
    std::uint64_t seed = 0;
};

std::vector<std::string> split_colon(const std::string &s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ':'))
        parts.push_back(item);
    return parts;
}

int run_sphere(const SphereArgs &a) {
    const auto parts = split_colon(a.material);
    SphereScene scene;
    scene.light.position = parse_vec3(a.light, "--light");
    scene.camera_direction = parse_vec3(a.camera, "--camera");
    scene.resolution = a.res;
    if (a.env_samples > 0)
        scene.environment = EnvironmentLight{parse_rgb(a.env_radiance, "--env-radiance"), a.env_samples, a.seed};

    NeuralRenderer renderer;
    if (parts.size() == 3 && parts[0] == "ggx") {
        const SvbrdfMaps maps = load_svbrdf_maps(parts[1], parse_policy(a.normals));
        const auto [x, y] = parse_pixel(parts[2], "--material");
        if (x < 0 || y < 0 || x >= maps.width() || y >= maps.height())
            throw CLI::ValidationError("--material", "pixel outside the maps");
        scene.material = maps.sample(x, y);
    } else if (parts.size() == 4 && parts[0] == "neural") {
        const NeuralParamMap params = read_param_map(parts[1]);
        NetworkFile nf = read_network(parts[2]);
        if (!nf.renderer)
            throw IoError(parts[2] + ": no renderer sections");
        renderer = std::move(*nf.renderer);
        const auto [x, y] = parse_pixel(parts[3], "--material");
        if (x < 0 || y < 0 || x >= params.width() || y >= params.height())
            throw CLI::ValidationError("--material", "pixel outside the parameter map");
        NeuralMaterial nm;
        const auto px = params.pixel(x, y);
        nm.params.assign(px.begin(), px.end());
        nm.renderer = &renderer;
        if (!a.normal_maps.empty())
            nm.encoded_normal = load_svbrdf_maps(a.normal_maps, parse_policy(a.normals)).normal.vec3(x, y);
        scene.material = std::move(nm);
    } else {
        throw CLI::ValidationError("--material", "expected ggx:DIR:X,Y or neural:PARAMS.npm:NET.nbrf:X,Y");
    }
    write_image(render_sphere(scene), a.out);
    record_manifest(a.out, {"sphere-render",
                            a.out,
                            a.env_samples > 0 ? std::optional<std::uint64_t>(a.seed) : std::nullopt,
                            {{"material", a.material},
                             {"light", a.light},
                             {"camera", a.camera},
                             {"res", a.res},
                             {"env_samples", a.env_samples}},
                            false,
                            std::nullopt});
    return 0;
}

int run_gradcheck(std::uint64_t seed) {
    const GradCheckSuite s = run_gradcheck_suite(seed);
    const auto line = [](const char *name, const GradCheckReport &r, double tol) {
        std::printf("%-8s max_rel_error %.3e (tol %.0e)  checked %d  skipped %d  %s\n", name, r.max_rel_error, tol,
                    r.checked, r.skipped, r.max_rel_error < tol && r.checked > 0 ? "ok" : "FAIL");
    };
    line("render", s.render, kMlpGradTolerance);
    line("nd_enc", s.nd_enc, kMlpGradTolerance);
    line("unet", s.unet, kUNetGradTolerance);
    return s.passed() ? 0 : 1;
}

int run_selftest() {
    int failures = 0;
    const auto check = [&](const char *name, bool ok) {
        std::printf("%-28s %s\n", name, ok ? "ok" : "FAIL");
        failures += ok ? 0 : 1;
    };
    check("ndf_d(1, 0.5) = 4/pi", std::abs(ndf_d(1.0, 0.5) - 4.0 / kPi) < 1e-9);
    check("view distance", std::abs(kViewDistance - 4.010781) < 1e-5);
    check("encoding length", EncodingConfig{}.encoded_dim() == 297 && EncodingConfig{}.sinusoidal_dim() == 288);
    {
        HdrImage img(3, 2, 3);
        RngStream rng(7);
        for (float &v : img.data())
            v = static_cast<float>(rng.uniform() * 100.0);
        check("pfm roundtrip", decode_pfm(encode_pfm(img)) == img);
    }
    {
        RngStream rng(11);
        NetworkFile nf;
        nf.renderer = NeuralRenderer::random(8, EncodingConfig{4, 6}, 16, kLeakySlope, rng);
        const auto bytes = encode_network(nf);
        check("network roundtrip", encode_network(decode_network(bytes)) == bytes);
    }
    {
        double worst = 0.0;
        for (double r = 1e-6; r <= 1e4; r *= 1.5)
            worst = std::max(worst, std::abs(r - log_expand(log_compress(r))) / (1.0 + r));
        check("log roundtrip", worst < 1e-6);
    }
    {
        RngStream rng(3);
        bool ok = true;
        for (int i = 0; i < 1000; ++i) {
            const ExemplarConfig c = sample_reflect_config(rng);
            const Vec3 p(c.highlight_point.x(), c.highlight_point.y(), 0.0);
            const Vec3 h = half_vector(direction_to(p, c.light_position), direction_to(p, c.view_position));
            ok = ok && (h - Vec3::UnitZ()).norm() < 1e-6;
        }
        check("exemplar highlight identity", ok);
    }
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"svbrdf-forge: GGX SVBRDF rendering, neural material fitting and relighting.\n"
                 "SVBRDF_FORGE_THREADS caps the number of worker threads."};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kSoftwareVersion));

    RenderArgs ra;
    auto *render_cmd = app.add_subcommand("render", "Render SVBRDF maps under a point light");
    render_cmd->add_option("--maps", ra.maps, "Directory with diffuse/specular/normal/roughness maps")->required();
    render_cmd->add_option("--light", ra.light, "Light position X,Y,Z (default: overhead at the view distance)");
    render_cmd->add_option("--view", ra.view, "View position X,Y,Z (default: co-located with the light)");
    render_cmd->add_flag("--colocated", ra.colocated, "Place the view at the light");
    render_cmd->add_option("--intensity", ra.intensity, "Light intensity V or R,G,B")->capture_default_str();
    render_cmd->add_flag("--falloff", ra.falloff, "Apply 1/d^2 light falloff");
    render_cmd->add_flag("--ldr", ra.ldr, "Clamp the result to [0,1]");
    render_cmd->add_option("--normals", ra.normals, "Policy for downward normals: reject|renormalize")->capture_default_str();
    render_cmd->add_option("--out", ra.out, "Output image (.pfm, or .png for a gamma-encoded preview)")->required();

    SampleArgs sa;
    auto *sample_cmd = app.add_subcommand("sample-exemplars", "Sample light/view configurations and optionally render targets");
    sample_cmd->add_option("--kind", sa.kind, "reflect|identity|hemisphere")->capture_default_str();
    sample_cmd->add_option("--count", sa.count, "Number of configurations")->capture_default_str();
    sample_cmd->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
    sample_cmd->add_option("--maps", sa.maps, "SVBRDF map directory; when given, targets are rendered");
    sample_cmd->add_option("--intensity", sa.intensity, "Light intensity V or R,G,B")->capture_default_str();
    sample_cmd->add_flag("--falloff", sa.falloff, "Apply 1/d^2 light falloff");
    sample_cmd->add_flag("--ldr", sa.ldr, "Clamp rendered targets to [0,1]");
    sample_cmd->add_option("--normals", sa.normals, "Policy for downward normals: reject|renormalize")->capture_default_str();
    sample_cmd->add_option("--out", sa.out, "Output directory, or a .json file when no maps are given")->required();

    EstimateArgs ea;
    auto *estimate_cmd = app.add_subcommand("estimate", "Run the estimator on a co-located photo");
    estimate_cmd->add_option("--input", ea.input, "Input photo (.pfm or .png)")->required();
    estimate_cmd->add_option("--net", ea.net, "Network file with an estimator section")->required();
    estimate_cmd->add_option("--out", ea.out, "Output parameter map (.npm)")->required();

    FitArgs fa;
    auto *fit_cmd = app.add_subcommand("fit", "Fit a neural material to rendered targets");
    fit_cmd->add_option("--input", fa.input, "Co-located input photo (.pfm or .png)")->required();
    fit_cmd->add_option("--targets", fa.targets, "Directory with exemplars.json and target images")->required();
    fit_cmd->add_option("--config", fa.config, "Fit configuration JSON (default: built-in defaults)");
    fit_cmd->add_option("--seed", fa.seed, "Override the configured seed");
    fit_cmd->add_option("--iterations", fa.iterations, "Override the configured iteration count");
    fit_cmd->add_flag("--ldr-input", fa.ldr_input, "Clamp the input photo to [0,1] first");
    fit_cmd->add_option("--out-params", fa.out_params, "Output parameter map (.npm)")->required();
    fit_cmd->add_option("--out-net", fa.out_net, "Output network file (.nbrf)")->required();
    fit_cmd->add_option("--loss-trace", fa.loss_trace, "Optional JSON file for the loss trace");
    fit_cmd->add_flag("--quiet", fa.quiet, "No progress output");

    RelightArgs la;
    auto *relight_cmd = app.add_subcommand("relight", "Render a fitted material under a new light and view");
    relight_cmd->add_option("--params", la.params, "Parameter map (.npm)")->required();
    relight_cmd->add_option("--net", la.net, "Network file (.nbrf)")->required();
    relight_cmd->add_option("--light", la.light, "Light position X,Y,Z")->required();
    relight_cmd->add_option("--view", la.view, "View position X,Y,Z")->required();
    relight_cmd->add_option("--out", la.out, "Output image (.pfm or .png)")->required();

    SphereArgs pa;
    auto *sphere_cmd = app.add_subcommand("sphere-render", "Render one pixel's material on a sphere");
    sphere_cmd->add_option("--material", pa.material, "ggx:DIR:X,Y or neural:PARAMS.npm:NET.nbrf:X,Y")->required();
    sphere_cmd->add_option("--normal-maps", pa.normal_maps, "Map directory supplying the encoded normal of a neural pixel");
    sphere_cmd->add_option("--normals", pa.normals, "Policy for downward normals: reject|renormalize")->capture_default_str();
    sphere_cmd->add_option("--light", pa.light, "Light position LX,LY,LZ")->capture_default_str();
    sphere_cmd->add_option("--camera", pa.camera, "Direction towards the orthographic camera")->capture_default_str();
    sphere_cmd->add_option("--res", pa.res, "Image resolution")->capture_default_str();
    sphere_cmd->add_option("--env-samples", pa.env_samples, "Cosine samples for a constant environment (0 = off)")
        ->capture_default_str();
    sphere_cmd->add_option("--env-radiance", pa.env_radiance, "Environment radiance V or R,G,B")->capture_default_str();
    sphere_cmd->add_option("--seed", pa.seed, "Seed for environment sampling")->capture_default_str();
    sphere_cmd->add_option("--out", pa.out, "Output image (.pfm or .png)")->required();

    std::uint64_t gc_seed = 0;
    auto *gradcheck_cmd = app.add_subcommand("gradcheck", "Compare reverse-mode gradients with finite differences");
    gradcheck_cmd->add_option("--seed", gc_seed, "Random seed")->capture_default_str();

    auto *selftest_cmd = app.add_subcommand("selftest", "Run quick internal consistency checks");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*render_cmd)
            return run_render(ra);
        if (*sample_cmd)
            return run_sample(sa);
        if (*estimate_cmd)
            return run_estimate(ea);
        if (*fit_cmd)
            return run_fit(fa);
        if (*relight_cmd)
            return run_relight(la);
        if (*sphere_cmd)
            return run_sphere(pa);
        if (*gradcheck_cmd)
            return run_gradcheck(gc_seed);
        if (*selftest_cmd)
            return run_selftest();
    } catch (const CLI::Error &e) {
        return app.exit(e);
    } catch (const FitDiverged &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
