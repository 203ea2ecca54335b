// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/io.h"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>

namespace fs = std::filesystem;

namespace sforge {
namespace {

class TempDir {
  public:
    TempDir() {
        const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() /
                ("sforge_" + std::string(info->test_suite_name()) + "_" + info->name() + "_" +
                 std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path &path() const { return path_; }
    fs::path operator/(const std::string &name) const { return path_ / name; }

  private:
    fs::path path_;
};

std::vector<std::uint8_t> be_float(float v) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    return {static_cast<std::uint8_t>(u >> 24), static_cast<std::uint8_t>(u >> 16), static_cast<std::uint8_t>(u >> 8),
            static_cast<std::uint8_t>(u)};
}

SvbrdfMaps checker_maps(int w, int h) {
    SvbrdfMaps maps = SvbrdfMaps::uniform(w, h, Rgb::Zero(), Rgb::Constant(0.2), 0.5);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const bool odd = (x / 2 + y / 2) % 2;
            maps.diffuse.set_vec3(x, y, odd ? Vec3(0.6, 0.3, 0.1) : Vec3(0.1, 0.3, 0.6));
            maps.roughness.at(x, y, 0) = odd ? 0.3 : 0.7;
        }
    return maps;
}

TEST(Pfm, RoundtripIsBitExact) {
    HdrImage img(1, 1, 3);
    img.data() = {0.5f, 0.25f, 1e6f};
    const HdrImage back = decode_pfm(encode_pfm(img));
    ASSERT_TRUE(back.same_shape(img));
    EXPECT_EQ(std::memcmp(back.data().data(), img.data().data(), 12), 0);

    TempDir dir;
    HdrImage big(7, 5, 3);
    for (std::size_t i = 0; i < big.size(); ++i)
        big.data()[i] = std::ldexp(static_cast<float>(i) + 0.1f, static_cast<int>(i % 40) - 20);
    big.data()[3] = std::numeric_limits<float>::denorm_min();
    big.data()[4] = -0.0f;
    write_pfm(big, dir / "a.pfm");
    const HdrImage read = read_pfm(dir / "a.pfm");
    for (std::size_t i = 0; i < big.size(); ++i)
        EXPECT_EQ(std::bit_cast<std::uint32_t>(read.data()[i]), std::bit_cast<std::uint32_t>(big.data()[i]));
}

TEST(Pfm, BigEndianFixture) {
    // 2x2, positive scale: big-endian, rows stored bottom-up.
    const std::string header = "PF\n2 2\n1.0\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    const float bottom[6] = {1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.0f};
    const float top[6] = {-1.5f, 0.125f, 7.0f, 1e-3f, 65536.0f, 0.0f};
    for (float v : bottom)
        for (auto b : be_float(v))
            bytes.push_back(b);
    for (float v : top)
        for (auto b : be_float(v))
            bytes.push_back(b);
    ASSERT_EQ(bytes[header.size()], 0x3f);
    ASSERT_EQ(bytes[header.size() + 1], 0x80);
    const HdrImage img = decode_pfm(bytes);
    ASSERT_EQ(img.width(), 2);
    ASSERT_EQ(img.height(), 2);
    for (int i = 0; i < 6; ++i) {
        EXPECT_EQ(img.data()[i], top[i]);
        EXPECT_EQ(img.data()[6 + i], bottom[i]);
    }
}

TEST(Pfm, RejectsNaNAndMalformedInput) {
    HdrImage img(2, 1, 3, 1.0f);
    std::vector<std::uint8_t> bytes = encode_pfm(img);
    const auto nan_bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
    const std::size_t at = bytes.size() - 4;
    for (int i = 0; i < 4; ++i)
        bytes[at + i] = static_cast<std::uint8_t>(nan_bits >> (8 * i));
    EXPECT_THROW(decode_pfm(bytes), IoError);
    const std::vector<std::uint8_t> good = encode_pfm(img);
    EXPECT_THROW(decode_pfm(std::span(good).first(good.size() - 1)), IoError);
    const std::string bad_magic = "P6\n1 1\n-1.0\n";
    EXPECT_THROW(decode_pfm(std::vector<std::uint8_t>(bad_magic.begin(), bad_magic.end())), IoError);
    const std::string bad_dims = "PF\n1 x\n-1.0\n";
    EXPECT_THROW(decode_pfm(std::vector<std::uint8_t>(bad_dims.begin(), bad_dims.end())), IoError);
    EXPECT_THROW(read_pfm("/nonexistent/file.pfm"), IoError);
}

TEST(Png, LdrInverseGamma) {
    TempDir dir;
    HdrImage img(3, 1, 3);
    img.data() = {1.0f, 1.0f, 1.0f, 0.0f, 0.0f, 0.0f, 128.0f / 255.0f, 128.0f / 255.0f, 128.0f / 255.0f};
    write_png_raw(img, dir / "a.png");
    const HdrImage lin = read_png_ldr(dir / "a.png");
    EXPECT_EQ(lin.at(0, 0, 0), 1.0f);
    EXPECT_EQ(lin.at(1, 0, 1), 0.0f);
    const long double ref = std::pow(128.0L / 255.0L, 2.2L);
    EXPECT_NEAR(lin.at(2, 0, 2), static_cast<double>(ref), 1e-6);
    EXPECT_NEAR(lin.at(2, 0, 2), 0.21952, 1e-5);
}

TEST(Png, SixteenBitRoundtrip) {
    TempDir dir;
    HdrImage img(2, 2, 3);
    for (std::size_t i = 0; i < img.size(); ++i)
        img.data()[i] = static_cast<float>(i) / 11.0f;
    write_png_raw(img, dir / "b.png", 16);
    const HdrImage back = read_png_raw(dir / "b.png");
    for (std::size_t i = 0; i < img.size(); ++i)
        EXPECT_NEAR(back.data()[i], img.data()[i], 0.5 / 65535.0 + 1e-7);
    EXPECT_THROW(write_png_raw(img, dir / "c.png", 4), IoError);
}

TEST(NormalDecoding, CanonicalAndSideways) {
    EXPECT_TRUE(decode_normal(Vec3(0.5, 0.5, 1.0), NormalPolicy::reject).isApprox(Vec3::UnitZ(), 1e-15));
    EXPECT_THROW(decode_normal(Vec3(1.0, 0.5, 0.5), NormalPolicy::reject), IoError);
    const Vec3 n = decode_normal(Vec3(1.0, 0.5, 0.5), NormalPolicy::renormalize);
    EXPECT_NEAR(n.norm(), 1.0, 1e-15);
    EXPECT_GT(n.z(), 0.0);
    EXPECT_GT(n.x(), 0.999);
    const Vec3 tilted = decode_normal(Vec3(0.75, 0.5, 0.9), NormalPolicy::reject);
    EXPECT_TRUE(tilted.isApprox(Vec3(0.5, 0.0, 0.8).normalized(), 1e-15));
}

TEST(SvbrdfMapsIo, RoundtripAndRoughnessDecode) {
    TempDir dir;
    SvbrdfMaps maps = checker_maps(4, 4);
    maps.roughness.at(1, 2, 0) = 0.25;
    maps.normal.set_vec3(3, 3, Vec3(0.3, -0.2, 0.9).normalized());
    save_svbrdf_maps(maps, dir.path());
    const SvbrdfMaps back = load_svbrdf_maps(dir.path());
    EXPECT_DOUBLE_EQ(back.sample(1, 2).alpha, 0.0625);
    for (std::size_t i = 0; i < maps.diffuse.size(); ++i) {
        EXPECT_NEAR(back.diffuse.data()[i], maps.diffuse.data()[i], 1e-6);
        EXPECT_NEAR(back.normal.data()[i], maps.normal.data()[i], 1e-6);
    }
    fs::remove(dir / "specular.pfm");
    EXPECT_THROW(load_svbrdf_maps(dir.path()), IoError);
}

TEST(SvbrdfMapsIo, ResolutionMismatchRejected) {
    TempDir dir;
    save_svbrdf_maps(checker_maps(4, 4), dir.path());
    write_pfm(HdrImage(2, 4, 3, 0.5f), dir / "roughness.pfm");
    EXPECT_THROW(load_svbrdf_maps(dir.path()), IoError);
}

TEST(NetworkContainer, RoundtripIsBitExact) {
    RngStream rng(1);
    NetworkFile file;
    file.renderer = NeuralRenderer::random(8, EncodingConfig{4, 6}, 16, 0.01, rng);
    for (auto *net : {&file.renderer->render, &file.renderer->nd_enc})
        *net = rounded_to_float(*net);
    UNetSpec spec;
    spec.base_channels = 4;
    spec.output_channels = 8;
    spec.leaky_slope = static_cast<float>(0.01);
    UNet unet = UNet::random(spec, rng);
    for (auto view : unet.parameter_views())
        for (double &v : view)
            v = static_cast<float>(v);
    file.estimator = unet;
    const std::vector<std::uint8_t> bytes = encode_network(file);
    const NetworkFile back = decode_network(bytes);
    ASSERT_TRUE(back.renderer && back.estimator);
    EXPECT_TRUE(back.renderer->render == file.renderer->render);
    EXPECT_TRUE(back.renderer->nd_enc == file.renderer->nd_enc);
    EXPECT_EQ(back.renderer->encoding.frequency_count, 4);
    EXPECT_EQ(back.renderer->encoding.compressed_dim, 6);
    EXPECT_EQ(*back.estimator, unet);
    EXPECT_EQ(encode_network(back), bytes);

    std::vector<std::uint8_t> bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_network(bad), IoError);
    EXPECT_THROW(decode_network(std::span(bytes).first(bytes.size() - 3)), IoError);
    bad = bytes;
    bad.push_back(0);
    EXPECT_THROW(decode_network(bad), IoError);
}

TEST(ParamMapContainer, RoundtripIsBitExact) {
    TempDir dir;
    NeuralParamMap params(5, 3, 7);
    RngStream rng(2);
    for (double &v : params.data())
        v = static_cast<float>(rng.normal());
    write_param_map(params, dir / "p.npm");
    EXPECT_EQ(read_param_map(dir / "p.npm"), params);
    const std::vector<std::uint8_t> bytes = encode_param_map(params);
    EXPECT_EQ(bytes.size(), 16u + 5u * 3u * 7u * 4u);
    EXPECT_THROW(decode_param_map(std::span(bytes).first(bytes.size() - 4)), IoError);
    params.data()[0] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(encode_param_map(params), IoError);
}

TEST(FitConfigJson, RoundtripAndValidation) {
    FitConfig cfg;
    cfg.learning_rate = 2.5e-3;
    cfg.seed = 7;
    cfg.mask_mode = MaskMode::sq_rgb_norm;
    cfg.adam.beta2 = 0.99;
    EncodingConfig enc{8, 16};
    const FitRunConfig back = fit_config_from_json(to_json(cfg, enc));
    EXPECT_EQ(back.fit, cfg);
    EXPECT_EQ(back.encoding.frequency_count, 8);
    EXPECT_EQ(back.encoding.compressed_dim, 16);

    nlohmann::json j = to_json(cfg, enc);
    j["learnin_rate"] = 1.0;
    try {
        fit_config_from_json(j);
        FAIL() << "unknown field accepted";
    } catch (const ConfigError &e) {
        EXPECT_NE(std::string(e.what()).find("learnin_rate"), std::string::npos);
    }
    j = to_json(cfg, enc);
    j["adam"]["gamma"] = 0.5;
    EXPECT_THROW(fit_config_from_json(j), ConfigError);
    j = to_json(cfg, enc);
    j.erase("schema_version");
    EXPECT_THROW(fit_config_from_json(j), ConfigError);
    j = to_json(cfg, enc);
    j["schema_version"] = 2;
    EXPECT_THROW(fit_config_from_json(j), ConfigError);
    j = to_json(cfg, enc);
    j["mask_fraction"] = 2.0;
    EXPECT_THROW(fit_config_from_json(j), ConfigError);
    j = to_json(cfg, enc);
    j["iterations"] = "many";
    EXPECT_THROW(fit_config_from_json(j), ConfigError);
    EXPECT_EQ(fit_config_from_json({{"schema_version", 1}}).fit, FitConfig{});
}

TEST(ExemplarsJson, Roundtrip) {
    RngStream rng(3);
    const auto configs = eval_configs(EvalKind::reflect, 4, rng);
    const auto back = exemplars_from_json(exemplars_to_json(configs, EvalKind::reflect, 3));
    ASSERT_EQ(back.size(), configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i)
        EXPECT_EQ(back[i], configs[i]);
    nlohmann::json j = exemplars_to_json(configs, EvalKind::reflect, 3);
    j["configs"][0]["colour"] = 1;
    EXPECT_THROW(exemplars_from_json(j), ConfigError);
}

TEST(Targets, SaveAndLoad) {
    TempDir dir;
    const SvbrdfMaps maps = checker_maps(4, 4);
    RngStream rng(4);
    std::vector<FitTarget> targets;
    for (int i = 0; i < 3; ++i) {
        const ExemplarConfig c = sample_reflect_config(rng);
        targets.push_back({render({maps, {c.light_position, Rgb::Ones()}, c.view_position, false, false}), c});
    }
    save_targets(targets, dir.path(), 4);
    const auto back = load_targets(dir.path());
    ASSERT_EQ(back.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back[i].image, targets[i].image);
        EXPECT_EQ(back[i].config, targets[i].config);
    }
}

TEST(AtomicWrite, ReplacesWholeFileAndLeavesNoTemporaries) {
    TempDir dir;
    write_file_atomic(dir / "x.txt", std::string_view("first version, longer"));
    write_file_atomic(dir / "x.txt", std::string_view("second"));
    const auto bytes = read_file(dir / "x.txt");
    EXPECT_EQ(std::string(bytes.begin(), bytes.end()), "second");
    int entries = 0;
    for ([[maybe_unused]] const auto &e : fs::directory_iterator(dir.path()))
        ++entries;
    EXPECT_EQ(entries, 1);
    write_file_atomic(dir / "sub" / "x.txt", std::string_view("a"));
    EXPECT_TRUE(fs::exists(dir / "sub" / "x.txt"));
}

TEST(Manifest, OnePerDirectoryWithEntries) {
    TempDir dir;
    ManifestEntry a{"render", "a.pfm", 5, {{"k", 1}}, true, EncodingConfig{}};
    record_manifest(dir / "a.pfm", a);
    ManifestEntry b{"relight", "b.pfm", std::nullopt, {}, false, std::nullopt};
    record_manifest(dir / "b.pfm", b);
    const auto bytes = read_file(dir / "manifest.json");
    const nlohmann::json doc = nlohmann::json::parse(bytes.begin(), bytes.end());
    ASSERT_EQ(doc["entries"].size(), 2u);
    const auto &e = doc["entries"]["a.pfm"];
    EXPECT_EQ(e["seed"], 5);
    EXPECT_EQ(e["falloff"], true);
    EXPECT_EQ(e["software_version"], std::string(kSoftwareVersion));
    EXPECT_EQ(e["config_hash"], config_hash({{"k", 1}}));
    EXPECT_EQ(e["encoding"]["frequency_count"], 16);
    EXPECT_TRUE(e.contains("created_utc"));
    EXPECT_TRUE(doc["entries"]["b.pfm"]["seed"].is_null());
}

#ifdef SFORGE_CLI_PATH

int run_cli(const std::string &args) {
    const std::string cmd = std::string(SFORGE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, RenderSampleFitRelightSphere) {
    TempDir dir;
    const fs::path maps = dir / "maps";
    fs::create_directories(maps);
    save_svbrdf_maps(checker_maps(8, 8), maps);
    const std::string d = dir.path().string();

    ASSERT_EQ(run_cli("render --maps " + maps.string() + " --colocated --intensity 8 --out " + d + "/photo.pfm"), 0);
    EXPECT_EQ(read_pfm(dir / "photo.pfm"), colocated_input_render(load_svbrdf_maps(maps), Rgb::Constant(8.0)));
    EXPECT_TRUE(fs::exists(dir / "manifest.json"));

    for (const char *sub : {"t1", "t2"})
        ASSERT_EQ(run_cli("sample-exemplars --count 3 --seed 11 --intensity 8 --maps " + maps.string() + " --out " + d +
                          "/" + sub),
                  0);
    EXPECT_EQ(read_file(dir / "t1" / "exemplars.json"), read_file(dir / "t2" / "exemplars.json"));
    EXPECT_EQ(read_file(dir / "t1" / "exemplar_002.pfm"), read_file(dir / "t2" / "exemplar_002.pfm"));
    EXPECT_TRUE(fs::exists(dir / "t1" / "manifest.json"));
    ASSERT_EQ(run_cli("sample-exemplars --kind hemisphere --count 5 --seed 2 --out " + d + "/configs.json"), 0);
    {
        const auto bytes = read_file(dir / "configs.json");
        EXPECT_EQ(exemplars_from_json(nlohmann::json::parse(bytes.begin(), bytes.end())).size(), 5u);
    }

    for (const char *run : {"f1", "f2"}) {
        fs::create_directories(dir / run);
        ASSERT_EQ(run_cli("fit --input " + d + "/photo.pfm --targets " + d + "/t1 --iterations 4 --seed 2 --quiet" +
                          " --out-params " + d + "/" + run + "/p.npm --out-net " + d + "/" + run + "/n.nbrf" +
                          " --loss-trace " + d + "/" + run + "/trace.json"),
                  0);
    }
    EXPECT_EQ(read_file(dir / "f1" / "p.npm"), read_file(dir / "f2" / "p.npm"));
    EXPECT_EQ(read_file(dir / "f1" / "n.nbrf"), read_file(dir / "f2" / "n.nbrf"));
    EXPECT_EQ(read_file(dir / "f1" / "trace.json"), read_file(dir / "f2" / "trace.json"));

    ASSERT_EQ(run_cli("relight --params " + d + "/f1/p.npm --net " + d + "/f1/n.nbrf --light 0.5,0.2,2 --view 0,0,4" +
                      " --out " + d + "/relit.pfm"),
              0);
    EXPECT_EQ(read_pfm(dir / "relit.pfm").width(), 8);

    ASSERT_EQ(run_cli("sphere-render --material ggx:" + maps.string() + ":3,4 --res 16 --out " + d + "/s1.pfm"), 0);
    ASSERT_EQ(run_cli("sphere-render --material neural:" + d + "/f1/p.npm:" + d + "/f1/n.nbrf:3,4 --normal-maps " +
                      maps.string() + " --res 16 --out " + d + "/s2.pfm"),
              0);
    EXPECT_EQ(read_pfm(dir / "s2.pfm").width(), 16);
}

TEST(Cli, RejectsBadInput) {
    TempDir dir;
    const std::string d = dir.path().string();
    write_file_atomic(dir / "bad.json", std::string_view("{\"schema_version\": 1, \"bogus\": 3}"));
    EXPECT_NE(run_cli("fit --input " + d + "/none.pfm --targets " + d + " --config " + d +
                      "/bad.json --out-params a --out-net b"),
              0);
    EXPECT_NE(run_cli("render --maps " + d + "/nomaps --out " + d + "/x.pfm"), 0);
    EXPECT_NE(run_cli("no-such-command"), 0);
    EXPECT_FALSE(fs::exists(dir / "x.pfm"));
}

TEST(Cli, HelpAndSelfChecks) {
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli("gradcheck --seed 1"), 0);
    EXPECT_EQ(run_cli("selftest"), 0);
}

#endif

} // namespace
} // namespace sforge
