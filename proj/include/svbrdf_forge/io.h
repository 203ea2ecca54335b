// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svbrdf_forge/estimator_net.h"
#include "svbrdf_forge/fit.h"
#include "svbrdf_forge/nbrdf.h"
#include "svbrdf_forge/raster.h"
#include "svbrdf_forge/svbrdf_renderer.h"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sforge {

inline constexpr std::string_view kSoftwareVersion = "svbrdf-forge 0.1.0";

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path &path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path &path, std::string_view text);
std::vector<std::uint8_t> read_file(const std::filesystem::path &path);

// ---------------------------------------------------------------------------
// PFM. "PF" (RGB) or "Pf" (gray, expanded to RGB on read), width height,
// scale whose sign gives endianness (negative = little-endian), then rows
// bottom-to-top. Writes are always little-endian RGB with scale -1.
std::vector<std::uint8_t> encode_pfm(const HdrImage &image);
HdrImage decode_pfm(std::span<const std::uint8_t> bytes);
HdrImage read_pfm(const std::filesystem::path &path);
void write_pfm(const HdrImage &image, const std::filesystem::path &path);

// ---------------------------------------------------------------------------
// PNG via libpng. 8- or 16-bit gray/RGB(A); alpha is dropped, gray expands.
/// Stored values scaled to [0,1] with no transfer function.
HdrImage read_png_raw(const std::filesystem::path &path);
/// read_png_raw followed by value^2.2 (display-encoded to linear).
HdrImage read_png_ldr(const std::filesystem::path &path);
/// Writes [0,1]-clamped values with no transfer function; bit_depth 8 or 16.
void write_png_raw(const HdrImage &image, const std::filesystem::path &path, int bit_depth = 8);

// ---------------------------------------------------------------------------
// SVBRDF maps: <dir>/{diffuse,specular,normal,roughness}.{pfm,png}.
// Diffuse and specular files are gamma-2.2 encoded and linearized on load;
// normal ([0,1] -> 2v-1) and roughness (sqrt(alpha), first channel) are linear.
enum class NormalPolicy { reject, renormalize };

/// Decodes one stored normal. Non-positive z is rejected, or lifted to
/// 1e-3 and renormalized under NormalPolicy::renormalize.
Vec3 decode_normal(const Vec3 &stored, NormalPolicy policy);
SvbrdfMaps load_svbrdf_maps(const std::filesystem::path &dir, NormalPolicy policy = NormalPolicy::reject);
/// Writes the four maps as PFM using the same encodings load expects.
void save_svbrdf_maps(const SvbrdfMaps &maps, const std::filesystem::path &dir);

// ---------------------------------------------------------------------------
// Network container, little-endian:
//   "NBRF" u32 version u32 section_count, then per section
//   u32 kind u32 name_len name, followed by the section body:
//     kind 0 (mlp):      u32 layer_count f32 leaky_slope,
//                        per layer u32 in u32 out u32 activation,
//                        f32 weight[out*in] (row-major) f32 bias[out]
//     kind 1 (unet):     u32 input_channels base_channels levels
//                        blocks_per_level output_channels stem_kernel,
//                        f32 leaky_slope, u32 layer_count, per layer
//                        u32 kernel in out stride kind, f32 weight f32 bias
//                        and, for highlight-aware layers, f32 gate_weight
//                        f32 gate_bias (weights [out][ky][kx][in])
//     kind 2 (encoding): u32 frequency_count u32 compressed_dim
// Renderer files carry sections "encoding", "render" and "nd_enc";
// estimator weights live in a "estimator" unet section.
inline constexpr std::uint32_t kNetworkVersion = 1;

struct NetworkFile {
    std::optional<NeuralRenderer> renderer;
    std::optional<UNet> estimator;
};

std::vector<std::uint8_t> encode_network(const NetworkFile &file);
NetworkFile decode_network(std::span<const std::uint8_t> bytes);
void write_network(const NetworkFile &file, const std::filesystem::path &path);
NetworkFile read_network(const std::filesystem::path &path);

/// Rounds every weight to float32, as a write/read cycle would.
MlpNet rounded_to_float(const MlpNet &net);

// ---------------------------------------------------------------------------
// Parameter map: "NPMP" u32 H u32 W u32 C, then H*W*C f32, all little-endian.
std::vector<std::uint8_t> encode_param_map(const NeuralParamMap &params);
NeuralParamMap decode_param_map(std::span<const std::uint8_t> bytes);
void write_param_map(const NeuralParamMap &params, const std::filesystem::path &path);
NeuralParamMap read_param_map(const std::filesystem::path &path);

// ---------------------------------------------------------------------------
// JSON. Configs carry "schema_version": 1; unknown keys are rejected with a
// message naming the key.
inline constexpr int kConfigSchemaVersion = 1;

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct FitRunConfig {
    FitConfig fit;
    EncodingConfig encoding;
};

FitRunConfig fit_config_from_json(const nlohmann::json &j);
nlohmann::json to_json(const FitConfig &cfg, const EncodingConfig &enc);
FitRunConfig read_fit_config(const std::filesystem::path &path);

/// Exemplar set document:
///   {"schema": "svbrdf-forge/exemplars", "schema_version": 1,
///    "rng": "...", "seed": N, "kind": "reflect",
///    "configs": [{"light": [x,y,z], "view": [x,y,z],
///                 "highlight": [x,y], "image": "optional.pfm"}]}
nlohmann::json exemplars_to_json(const std::vector<ExemplarConfig> &configs, EvalKind kind, std::uint64_t seed);
std::vector<ExemplarConfig> exemplars_from_json(const nlohmann::json &j);

/// Loads DIR/exemplars.json and the image of each entry ("image" key, or
/// exemplar_NNN.pfm by position).
std::vector<FitTarget> load_targets(const std::filesystem::path &dir);
void save_targets(const std::vector<FitTarget> &targets, const std::filesystem::path &dir, std::uint64_t seed);

/// 64-bit FNV-1a of the compact JSON dump, hex encoded.
std::string config_hash(const nlohmann::json &j);

/// Records one output in <dir>/manifest.json (one manifest per directory;
/// entries are keyed by output file name).
struct ManifestEntry {
    std::string command;
    std::string output;
    std::optional<std::uint64_t> seed;
    nlohmann::json config = nlohmann::json::object();
    bool falloff = false;
    std::optional<EncodingConfig> encoding;
};
void record_manifest(const std::filesystem::path &output_file, const ManifestEntry &entry);

} // namespace sforge
