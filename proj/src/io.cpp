// Copyright 2026 The svbrdf-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "svbrdf_forge/io.h"

#include "svbrdf_forge/radiometry.h"
#include "svbrdf_forge/rng.h"

#include <png.h>
#include <unistd.h>

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

namespace sforge {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Files

void write_file_atomic(const fs::path &path, std::span<const std::uint8_t> bytes) {
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    fs::path tmp = path;
    static std::atomic<unsigned> counter{0};
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out)
            throw IoError("failed writing '" + tmp.string() + "'");
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
    }
}

void write_file_atomic(const fs::path &path, std::string_view text) {
    write_file_atomic(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace {

// Little-endian binary writer/reader.
class Writer {
  public:
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i)
            buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s);
    }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

  private:
    std::vector<std::uint8_t> buf_;
};

class Reader {
  public:
    Reader(std::span<const std::uint8_t> data, std::string what) : data_(data), what_(std::move(what)) {}
    void need(std::size_t n) const {
        if (pos_ + n > data_.size())
            throw IoError(what_ + ": truncated data at byte " + std::to_string(pos_));
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char *>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    double f32() {
        const float f = std::bit_cast<float>(u32());
        if (!std::isfinite(f))
            throw IoError(what_ + ": non-finite value");
        return f;
    }
    std::string str() {
        const std::uint32_t n = u32();
        return bytes(n);
    }
    // Bounded count so that a corrupt header cannot request huge allocations.
    int count(std::uint32_t limit, const char *name) {
        const std::uint32_t v = u32();
        if (v > limit)
            throw IoError(what_ + ": implausible " + name + " " + std::to_string(v));
        return static_cast<int>(v);
    }
    bool done() const { return pos_ == data_.size(); }

  private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    std::string what_;
};

} // namespace

// ---------------------------------------------------------------------------
// PFM

std::vector<std::uint8_t> encode_pfm(const HdrImage &image) {
    if (image.channels() != 3)
        throw IoError("write_pfm: image must have 3 channels");
    const std::string header = "PF\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n-1.0\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + image.size() * 4);
    for (int y = image.height() - 1; y >= 0; --y)
        for (float v : std::span<const float>(image.data().data() + image.offset(0, y), static_cast<std::size_t>(image.width()) * 3)) {
            const auto u = std::bit_cast<std::uint32_t>(v);
            for (int i = 0; i < 4; ++i)
                out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
        }
    return out;
}

HdrImage decode_pfm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size() && std::isspace(bytes[pos]))
            ++pos;
        std::string t;
        while (pos < bytes.size() && !std::isspace(bytes[pos]))
            t.push_back(static_cast<char>(bytes[pos++]));
        if (t.empty())
            throw IoError("PFM: truncated header");
        return t;
    };
    const std::string magic = token();
    int channels = 0;
    if (magic == "PF")
        channels = 3;
    else if (magic == "Pf")
        channels = 1;
    else
        throw IoError("PFM: bad magic '" + magic + "'");
    int width = 0, height = 0;
    double scale = 0.0;
    try {
        std::size_t used = 0;
        const std::string ws = token();
        width = std::stoi(ws, &used);
        if (used != ws.size())
            throw IoError("");
        const std::string hs = token();
        height = std::stoi(hs, &used);
        if (used != hs.size())
            throw IoError("");
        const std::string ss = token();
        scale = std::stod(ss, &used);
        if (used != ss.size())
            throw IoError("");
    } catch (const std::exception &) {
        throw IoError("PFM: malformed header");
    }
    if (width <= 0 || height <= 0 || scale == 0.0 || !std::isfinite(scale))
        throw IoError("PFM: malformed header");
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw IoError("PFM: truncated header");
    ++pos; // single whitespace before the payload
    const bool little = scale < 0.0;
    const std::size_t count = static_cast<std::size_t>(width) * height * channels;
    if (bytes.size() - pos < count * 4)
        throw IoError("PFM: truncated payload");
    HdrImage image(width, height, 3);
    for (int row = 0; row < height; ++row) {
        const int y = height - 1 - row;
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < channels; ++c) {
                const std::uint8_t *b = bytes.data() + pos;
                pos += 4;
                const std::uint32_t u = little ? (b[0] | b[1] << 8 | b[2] << 16 | static_cast<std::uint32_t>(b[3]) << 24)
                                               : (b[3] | b[2] << 8 | b[1] << 16 | static_cast<std::uint32_t>(b[0]) << 24);
                const float v = std::bit_cast<float>(u);
                if (std::isnan(v))
                    throw IoError("PFM: NaN sample at (" + std::to_string(x) + ", " + std::to_string(y) + ")");
                if (channels == 1)
                    for (int k = 0; k < 3; ++k)
                        image.at(x, y, k) = v;
                else
                    image.at(x, y, c) = v;
            }
    }
    return image;
}

HdrImage read_pfm(const fs::path &path) {
    try {
        return decode_pfm(read_file(path));
    } catch (const IoError &e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_pfm(const HdrImage &image, const fs::path &path) { write_file_atomic(path, encode_pfm(image)); }

// ---------------------------------------------------------------------------
// PNG

namespace {

struct PngBuffer {
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;
};

void png_read_bytes(png_structp png, png_bytep out, png_size_t n) {
    auto *buf = static_cast<PngBuffer *>(png_get_io_ptr(png));
    if (buf->pos + n > buf->data.size())
        png_error(png, "truncated PNG data");
    std::memcpy(out, buf->data.data() + buf->pos, n);
    buf->pos += n;
}

void png_write_bytes(png_structp png, png_bytep in, png_size_t n) {
    auto *out = static_cast<std::vector<std::uint8_t> *>(png_get_io_ptr(png));
    out->insert(out->end(), in, in + n);
}

void png_flush_noop(png_structp) {}

void png_error_to_buffer(png_structp png, png_const_charp msg) {
    auto *err = static_cast<char *>(png_get_error_ptr(png));
    std::snprintf(err, 256, "%s", msg);
    png_longjmp(png, 1);
}

void png_warning_ignore(png_structp, png_const_charp) {}

// Decoded samples, already expanded to 8 or 16 bits with alpha stripped.
struct PngPixels {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<std::uint8_t> rows;
};

// libpng reports errors by longjmp; no objects with destructors may be
// created between setjmp and the end of this function.
bool decode_png_raw(PngBuffer &buf, PngPixels &px, char *err) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, err, png_error_to_buffer, png_warning_ignore);
    if (!png) {
        std::snprintf(err, 256, "out of memory");
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_set_read_fn(png, &buf, png_read_bytes);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_PALETTE && depth != 8 && depth != 16) {
        std::snprintf(err, 256, "unsupported bit depth %d", depth);
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(png);
    png_read_update_info(png, info);
    px.width = static_cast<int>(png_get_image_width(png, info));
    px.height = static_cast<int>(png_get_image_height(png, info));
    px.channels = png_get_channels(png, info);
    px.bit_depth = png_get_bit_depth(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    px.rows.resize(stride * px.height);
    for (int y = 0; y < px.height; ++y)
        png_read_row(png, px.rows.data() + stride * y, nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

bool encode_png_raw(const std::vector<std::uint8_t> &rows, int width, int height, int depth,
                    std::vector<std::uint8_t> &out, char *err) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, err, png_error_to_buffer, png_warning_ignore);
    if (!png) {
        std::snprintf(err, 256, "out of memory");
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_set_write_fn(png, &out, png_write_bytes, png_flush_noop);
    png_set_IHDR(png, info, width, height, depth, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(width) * 3 * (depth / 8);
    for (int y = 0; y < height; ++y)
        png_write_row(png, rows.data() + stride * y);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

} // namespace

HdrImage read_png_raw(const fs::path &path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    PngBuffer buf{bytes};
    PngPixels px;
    char err[256] = "";
    if (!decode_png_raw(buf, px, err))
        throw IoError(path.string() + ": " + err);
    HdrImage image(px.width, px.height, 3);
    const double max_value = px.bit_depth == 16 ? 65535.0 : 255.0;
    const std::size_t bytes_per = px.bit_depth / 8;
    const std::size_t stride = static_cast<std::size_t>(px.width) * px.channels * bytes_per;
    for (int y = 0; y < px.height; ++y)
        for (int x = 0; x < px.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const int src_c = px.channels >= 3 ? c : 0;
                const std::uint8_t *p = px.rows.data() + stride * y + (static_cast<std::size_t>(x) * px.channels + src_c) * bytes_per;
                const unsigned v = bytes_per == 2 ? (p[0] << 8 | p[1]) : p[0];
                image.at(x, y, c) = static_cast<float>(v / max_value);
            }
    return image;
}

HdrImage read_png_ldr(const fs::path &path) {
    HdrImage image = read_png_raw(path);
    for (float &v : image.data())
        v = static_cast<float>(std::pow(static_cast<double>(v), kDisplayGamma));
    return image;
}

void write_png_raw(const HdrImage &image, const fs::path &path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw IoError("write_png: bit depth must be 8 or 16");
    if (image.channels() != 3)
        throw IoError("write_png: image must have 3 channels");
    const double max_value = bit_depth == 16 ? 65535.0 : 255.0;
    std::vector<std::uint8_t> rows;
    rows.reserve(image.size() * (bit_depth / 8));
    for (float f : image.data()) {
        const double clamped = std::isnan(f) ? 0.0 : std::clamp(static_cast<double>(f), 0.0, 1.0);
        const auto v = static_cast<unsigned>(std::lround(clamped * max_value));
        if (bit_depth == 16)
            rows.push_back(static_cast<std::uint8_t>(v >> 8));
        rows.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
    std::vector<std::uint8_t> out;
    char err[256] = "";
    if (!encode_png_raw(rows, image.width(), image.height(), bit_depth, out, err))
        throw IoError(path.string() + ": " + err);
    write_file_atomic(path, out);
}

// ---------------------------------------------------------------------------
// SVBRDF maps

Vec3 decode_normal(const Vec3 &stored, NormalPolicy policy) {
    Vec3 v = 2.0 * stored - Vec3::Ones();
    const double len = v.norm();
    if (!(len > 1e-12))
        throw IoError("normal map: zero-length normal");
    v /= len;
    if (v.z() > 0.0)
        return v;
    if (policy == NormalPolicy::reject)
        throw IoError("normal map: normal (" + std::to_string(v.x()) + ", " + std::to_string(v.y()) + ", " +
                      std::to_string(v.z()) + ") does not face up");
    v.z() = 1e-3;
    return v.normalized();
}

namespace {

HdrImage read_map_image(const fs::path &dir, const std::string &name) {
    const fs::path pfm = dir / (name + ".pfm");
    if (fs::exists(pfm))
        return read_pfm(pfm);
    const fs::path png = dir / (name + ".png");
    if (fs::exists(png))
        return read_png_raw(png);
    throw IoError("missing " + name + " map in '" + dir.string() + "'");
}

FeatureMap linearized(const HdrImage &img) {
    FeatureMap out(img.width(), img.height(), 3);
    for (std::size_t i = 0; i < img.size(); ++i)
        out.data()[i] = std::pow(std::clamp(static_cast<double>(img.data()[i]), 0.0, 1.0), kDisplayGamma);
    return out;
}

HdrImage gamma_encoded(const FeatureMap &map) {
    HdrImage out(map.width(), map.height(), 3);
    for (std::size_t i = 0; i < map.size(); ++i)
        out.data()[i] = static_cast<float>(std::pow(std::max(0.0, map.data()[i]), 1.0 / kDisplayGamma));
    return out;
}

} // namespace

SvbrdfMaps load_svbrdf_maps(const fs::path &dir, NormalPolicy policy) {
    const HdrImage diffuse = read_map_image(dir, "diffuse");
    const HdrImage specular = read_map_image(dir, "specular");
    const HdrImage normal = read_map_image(dir, "normal");
    const HdrImage roughness = read_map_image(dir, "roughness");
    try {
        require_same_extent(diffuse, specular, "specular map");
        require_same_extent(diffuse, normal, "normal map");
        require_same_extent(diffuse, roughness, "roughness map");
    } catch (const DomainError &e) {
        throw IoError(dir.string() + ": " + e.what());
    }
    SvbrdfMaps maps;
    maps.diffuse = linearized(diffuse);
    maps.specular = linearized(specular);
    maps.normal = FeatureMap(diffuse.width(), diffuse.height(), 3);
    maps.roughness = FeatureMap(diffuse.width(), diffuse.height(), 1);
    for (int y = 0; y < diffuse.height(); ++y)
        for (int x = 0; x < diffuse.width(); ++x) {
            maps.normal.set_vec3(x, y, decode_normal(normal.vec3(x, y), policy));
            maps.roughness.at(x, y, 0) = std::clamp(static_cast<double>(roughness.at(x, y, 0)), 0.0, 1.0);
        }
    maps.validate();
    return maps;
}

void save_svbrdf_maps(const SvbrdfMaps &maps, const fs::path &dir) {
    maps.validate();
    write_pfm(gamma_encoded(maps.diffuse), dir / "diffuse.pfm");
    write_pfm(gamma_encoded(maps.specular), dir / "specular.pfm");
    HdrImage normal(maps.width(), maps.height(), 3);
    HdrImage rough(maps.width(), maps.height(), 3);
    for (int y = 0; y < maps.height(); ++y)
        for (int x = 0; x < maps.width(); ++x) {
            normal.set_vec3(x, y, 0.5 * (maps.normal.vec3(x, y) + Vec3::Ones()));
            for (int c = 0; c < 3; ++c)
                rough.at(x, y, c) = static_cast<float>(maps.roughness.at(x, y, 0));
        }
    write_pfm(normal, dir / "normal.pfm");
    write_pfm(rough, dir / "roughness.pfm");
}

// ---------------------------------------------------------------------------
// Network container

namespace {

enum SectionKind : std::uint32_t { kMlpSection = 0, kUNetSection = 1, kEncodingSection = 2 };

constexpr std::uint32_t kMaxDim = 1u << 20;

void write_mlp(Writer &w, const MlpNet &net) {
    w.u32(static_cast<std::uint32_t>(net.layers().size()));
    w.f32(net.leaky_slope());
    for (const auto &l : net.layers()) {
        w.u32(l.input_dim());
        w.u32(l.output_dim());
        w.u32(static_cast<std::uint32_t>(l.activation));
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
                w.f32(l.weight(r, c));
        for (Eigen::Index r = 0; r < l.bias.size(); ++r)
            w.f32(l.bias[r]);
    }
}

MlpNet read_mlp(Reader &r) {
    const int count = r.count(1024, "layer count");
    const double slope = r.f32();
    std::vector<DenseLayer> layers;
    for (int i = 0; i < count; ++i) {
        DenseLayer l;
        const int in = r.count(kMaxDim, "layer input size");
        const int out = r.count(kMaxDim, "layer output size");
        const std::uint32_t act = r.u32();
        if (act > 1)
            throw IoError("network: unknown activation tag " + std::to_string(act));
        l.activation = static_cast<Activation>(act);
        r.need(static_cast<std::size_t>(in) * out * 4);
        l.weight.resize(out, in);
        for (int row = 0; row < out; ++row)
            for (int col = 0; col < in; ++col)
                l.weight(row, col) = r.f32();
        l.bias.resize(out);
        for (int row = 0; row < out; ++row)
            l.bias[row] = r.f32();
        layers.push_back(std::move(l));
    }
    try {
        return MlpNet(std::move(layers), slope);
    } catch (const DomainError &e) {
        throw IoError(std::string("network: ") + e.what());
    }
}

void write_floats(Writer &w, const std::vector<double> &v) {
    for (double x : v)
        w.f32(x);
}

std::vector<double> read_floats(Reader &r, std::size_t n) {
    r.need(n * 4);
    std::vector<double> v(n);
    for (double &x : v)
        x = r.f32();
    return v;
}

void write_unet(Writer &w, const UNet &net) {
    const UNetSpec &s = net.spec();
    for (int v : {s.input_channels, s.base_channels, s.levels, s.blocks_per_level, s.output_channels, s.stem_kernel})
        w.u32(static_cast<std::uint32_t>(v));
    w.f32(s.leaky_slope);
    w.u32(static_cast<std::uint32_t>(net.layers().size()));
    for (const auto &l : net.layers()) {
        for (int v : {l.spec.kernel, l.spec.in_channels, l.spec.out_channels, l.spec.stride})
            w.u32(static_cast<std::uint32_t>(v));
        w.u32(static_cast<std::uint32_t>(l.spec.kind));
        write_floats(w, l.weight);
        write_floats(w, l.bias);
        if (l.spec.kind == ConvKind::highlight_aware) {
            write_floats(w, l.gate_weight);
            write_floats(w, l.gate_bias);
        }
    }
}

UNet read_unet(Reader &r) {
    UNetSpec s;
    s.input_channels = r.count(kMaxDim, "input channels");
    s.base_channels = r.count(kMaxDim, "base channels");
    s.levels = r.count(16, "level count");
    s.blocks_per_level = r.count(64, "block count");
    s.output_channels = r.count(kMaxDim, "output channels");
    s.stem_kernel = r.count(64, "stem kernel");
    s.leaky_slope = r.f32();
    const int count = r.count(4096, "layer count");
    std::vector<ConvLayer> layers;
    try {
        for (int i = 0; i < count; ++i) {
            ConvLayerSpec ls;
            ls.kernel = r.count(64, "kernel");
            ls.in_channels = r.count(kMaxDim, "channels");
            ls.out_channels = r.count(kMaxDim, "channels");
            ls.stride = r.count(2, "stride");
            const std::uint32_t kind = r.u32();
            if (kind > 2)
                throw IoError("network: unknown convolution kind " + std::to_string(kind));
            ls.kind = static_cast<ConvKind>(kind);
            ConvLayer l = ConvLayer::zeros(ls);
            l.weight = read_floats(r, l.weight.size());
            l.bias = read_floats(r, l.bias.size());
            if (ls.kind == ConvKind::highlight_aware) {
                l.gate_weight = read_floats(r, l.gate_weight.size());
                l.gate_bias = read_floats(r, l.gate_bias.size());
            }
            layers.push_back(std::move(l));
        }
        return UNet(s, std::move(layers));
    } catch (const DomainError &e) {
        throw IoError(std::string("network: ") + e.what());
    }
}

} // namespace

std::vector<std::uint8_t> encode_network(const NetworkFile &file) {
    Writer w;
    w.bytes("NBRF");
    w.u32(kNetworkVersion);
    w.u32((file.renderer ? 3u : 0u) + (file.estimator ? 1u : 0u));
    if (file.renderer) {
        file.renderer->validate();
        w.u32(kEncodingSection);
        w.str("encoding");
        w.u32(static_cast<std::uint32_t>(file.renderer->encoding.frequency_count));
        w.u32(static_cast<std::uint32_t>(file.renderer->encoding.compressed_dim));
        w.u32(kMlpSection);
        w.str("render");
        write_mlp(w, file.renderer->render);
        w.u32(kMlpSection);
        w.str("nd_enc");
        write_mlp(w, file.renderer->nd_enc);
    }
    if (file.estimator) {
        w.u32(kUNetSection);
        w.str("estimator");
        write_unet(w, *file.estimator);
    }
    return w.take();
}

NetworkFile decode_network(std::span<const std::uint8_t> bytes) {
    Reader r(bytes, "network");
    if (r.bytes(4) != "NBRF")
        throw IoError("network: bad magic");
    const std::uint32_t version = r.u32();
    if (version != kNetworkVersion)
        throw IoError("network: unsupported version " + std::to_string(version));
    const int sections = r.count(64, "section count");
    std::optional<EncodingConfig> enc;
    std::optional<MlpNet> render, nd_enc;
    NetworkFile file;
    std::set<std::string> seen;
    for (int i = 0; i < sections; ++i) {
        const std::uint32_t kind = r.u32();
        const std::string name = r.str();
        if (!seen.insert(name).second)
            throw IoError("network: duplicate section '" + name + "'");
        if (kind == kEncodingSection && name == "encoding") {
            EncodingConfig e;
            e.frequency_count = r.count(1024, "frequency count");
            e.compressed_dim = r.count(kMaxDim, "compressed dim");
            enc = e;
        } else if (kind == kMlpSection && name == "render") {
            render = read_mlp(r);
        } else if (kind == kMlpSection && name == "nd_enc") {
            nd_enc = read_mlp(r);
        } else if (kind == kUNetSection && name == "estimator") {
            file.estimator = read_unet(r);
        } else {
            throw IoError("network: unexpected section '" + name + "' of kind " + std::to_string(kind));
        }
    }
    if (!r.done())
        throw IoError("network: trailing bytes");
    if (enc || render || nd_enc) {
        if (!(enc && render && nd_enc))
            throw IoError("network: renderer needs 'encoding', 'render' and 'nd_enc' sections");
        NeuralRenderer nr{std::move(*render), std::move(*nd_enc), *enc};
        try {
            nr.validate();
        } catch (const DomainError &e) {
            throw IoError(std::string("network: ") + e.what());
        }
        file.renderer = std::move(nr);
    }
    return file;
}

void write_network(const NetworkFile &file, const fs::path &path) { write_file_atomic(path, encode_network(file)); }

NetworkFile read_network(const fs::path &path) {
    try {
        return decode_network(read_file(path));
    } catch (const IoError &e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

MlpNet rounded_to_float(const MlpNet &net) {
    MlpNet out = net;
    for (auto &l : out.layers()) {
        l.weight = l.weight.cast<float>().cast<double>();
        l.bias = l.bias.cast<float>().cast<double>();
    }
    return MlpNet(out.layers(), static_cast<float>(net.leaky_slope()));
}

// ---------------------------------------------------------------------------
// Parameter maps

std::vector<std::uint8_t> encode_param_map(const NeuralParamMap &params) {
    Writer w;
    w.bytes("NPMP");
    w.u32(static_cast<std::uint32_t>(params.height()));
    w.u32(static_cast<std::uint32_t>(params.width()));
    w.u32(static_cast<std::uint32_t>(params.channels()));
    for (double v : params.data()) {
        if (!std::isfinite(v))
            throw IoError("parameter map: non-finite value");
        w.f32(v);
    }
    return w.take();
}

NeuralParamMap decode_param_map(std::span<const std::uint8_t> bytes) {
    Reader r(bytes, "parameter map");
    if (r.bytes(4) != "NPMP")
        throw IoError("parameter map: bad magic");
    const int h = r.count(kMaxDim, "height");
    const int w = r.count(kMaxDim, "width");
    const int c = r.count(kMaxDim, "channels");
    const std::size_t n = static_cast<std::size_t>(h) * w * c;
    r.need(n * 4);
    NeuralParamMap params(w, h, c);
    for (double &v : params.data())
        v = r.f32();
    if (!r.done())
        throw IoError("parameter map: trailing bytes");
    return params;
}

void write_param_map(const NeuralParamMap &params, const fs::path &path) {
    write_file_atomic(path, encode_param_map(params));
}

NeuralParamMap read_param_map(const fs::path &path) {
    try {
        return decode_param_map(read_file(path));
    } catch (const IoError &e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void reject_unknown(const json &j, std::initializer_list<std::string_view> known, const std::string &where) {
    if (!j.is_object())
        throw ConfigError(where + ": expected a JSON object");
    for (const auto &[key, value] : j.items()) {
        bool ok = false;
        for (auto k : known)
            ok = ok || key == k;
        if (!ok)
            throw ConfigError(where + ": unknown field '" + key + "'");
    }
}

template <typename T>
void read_field(const json &j, const char *key, T &out, const std::string &where) {
    if (!j.contains(key))
        return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception &) {
        throw ConfigError(where + ": field '" + key + "' has the wrong type");
    }
}

Vec3 vec3_from(const json &j, const std::string &what) {
    if (!j.is_array() || j.size() != 3)
        throw ConfigError(what + ": expected [x, y, z]");
    try {
        return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
    } catch (const json::exception &) {
        throw ConfigError(what + ": expected numbers");
    }
}

void check_schema_version(const json &j, const std::string &where) {
    if (!j.contains("schema_version"))
        throw ConfigError(where + ": missing 'schema_version'");
    if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != kConfigSchemaVersion)
        throw ConfigError(where + ": unsupported schema_version (expected " + std::to_string(kConfigSchemaVersion) + ")");
}

} // namespace

FitRunConfig fit_config_from_json(const json &j) {
    const std::string where = "fit config";
    reject_unknown(j,
                   {"schema_version", "learning_rate", "lr_decay", "epoch_iterations", "batch_exemplars", "iterations",
                    "mask_fraction", "mask_mode", "seed", "param_source", "param_dim", "render_hidden", "leaky_slope",
                    "estimator_base_channels", "loss_weights", "adam", "encoding"},
                   where);
    check_schema_version(j, where);
    FitRunConfig rc;
    FitConfig &c = rc.fit;
    read_field(j, "learning_rate", c.learning_rate, where);
    read_field(j, "lr_decay", c.lr_decay, where);
    read_field(j, "epoch_iterations", c.epoch_iterations, where);
    read_field(j, "batch_exemplars", c.batch_exemplars, where);
    read_field(j, "iterations", c.iterations, where);
    read_field(j, "mask_fraction", c.mask_fraction, where);
    read_field(j, "seed", c.seed, where);
    read_field(j, "param_dim", c.param_dim, where);
    read_field(j, "render_hidden", c.render_hidden, where);
    read_field(j, "leaky_slope", c.leaky_slope, where);
    read_field(j, "estimator_base_channels", c.estimator_base_channels, where);
    try {
        if (j.contains("mask_mode"))
            c.mask_mode = parse_mask_mode(j["mask_mode"].get<std::string>());
        if (j.contains("param_source"))
            c.param_source = parse_param_source(j["param_source"].get<std::string>());
    } catch (const std::exception &e) {
        throw ConfigError(where + ": " + e.what());
    }
    if (j.contains("loss_weights")) {
        const json &lw = j["loss_weights"];
        reject_unknown(lw, {"data", "perceptual", "critic"}, where + ".loss_weights");
        read_field(lw, "data", c.loss_weights.data, where);
        read_field(lw, "perceptual", c.loss_weights.perceptual, where);
        read_field(lw, "critic", c.loss_weights.critic, where);
    }
    if (j.contains("adam")) {
        const json &a = j["adam"];
        reject_unknown(a, {"beta1", "beta2", "epsilon"}, where + ".adam");
        read_field(a, "beta1", c.adam.beta1, where);
        read_field(a, "beta2", c.adam.beta2, where);
        read_field(a, "epsilon", c.adam.epsilon, where);
    }
    if (j.contains("encoding")) {
        const json &e = j["encoding"];
        reject_unknown(e, {"frequency_count", "compressed_dim"}, where + ".encoding");
        read_field(e, "frequency_count", rc.encoding.frequency_count, where);
        read_field(e, "compressed_dim", rc.encoding.compressed_dim, where);
    }
    try {
        c.validate();
        rc.encoding.validate();
    } catch (const DomainError &e) {
        throw ConfigError(where + ": " + e.what());
    }
    return rc;
}

json to_json(const FitConfig &c, const EncodingConfig &enc) {
    return {{"schema_version", kConfigSchemaVersion},
            {"learning_rate", c.learning_rate},
            {"lr_decay", c.lr_decay},
            {"epoch_iterations", c.epoch_iterations},
            {"batch_exemplars", c.batch_exemplars},
            {"iterations", c.iterations},
            {"mask_fraction", c.mask_fraction},
            {"mask_mode", std::string(to_string(c.mask_mode))},
            {"seed", c.seed},
            {"param_source", std::string(to_string(c.param_source))},
            {"param_dim", c.param_dim},
            {"render_hidden", c.render_hidden},
            {"leaky_slope", c.leaky_slope},
            {"estimator_base_channels", c.estimator_base_channels},
            {"loss_weights",
             {{"data", c.loss_weights.data}, {"perceptual", c.loss_weights.perceptual}, {"critic", c.loss_weights.critic}}},
            {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}}},
            {"encoding", {{"frequency_count", enc.frequency_count}, {"compressed_dim", enc.compressed_dim}}}};
}

FitRunConfig read_fit_config(const fs::path &path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error &e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    try {
        return fit_config_from_json(j);
    } catch (const ConfigError &e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

json exemplars_to_json(const std::vector<ExemplarConfig> &configs, EvalKind kind, std::uint64_t seed) {
    json list = json::array();
    for (const auto &c : configs)
        list.push_back({{"light", {c.light_position.x(), c.light_position.y(), c.light_position.z()}},
                        {"view", {c.view_position.x(), c.view_position.y(), c.view_position.z()}},
                        {"highlight", {c.highlight_point.x(), c.highlight_point.y()}}});
    return {{"schema", "svbrdf-forge/exemplars"},
            {"schema_version", kConfigSchemaVersion},
            {"rng", std::string(RngStream::kAlgorithm)},
            {"seed", seed},
            {"kind", std::string(to_string(kind))},
            {"configs", list}};
}

std::vector<ExemplarConfig> exemplars_from_json(const json &j) {
    const std::string where = "exemplars";
    reject_unknown(j, {"schema", "schema_version", "rng", "seed", "kind", "configs"}, where);
    check_schema_version(j, where);
    if (!j.contains("configs") || !j["configs"].is_array())
        throw ConfigError(where + ": missing 'configs' array");
    std::vector<ExemplarConfig> out;
    for (const auto &e : j["configs"]) {
        reject_unknown(e, {"light", "view", "highlight", "image"}, where + ".configs");
        if (!e.contains("light") || !e.contains("view"))
            throw ConfigError(where + ": every config needs 'light' and 'view'");
        ExemplarConfig c;
        c.light_position = vec3_from(e["light"], "light");
        c.view_position = vec3_from(e["view"], "view");
        if (e.contains("highlight")) {
            const json &h = e["highlight"];
            if (!h.is_array() || h.size() != 2)
                throw ConfigError(where + ": 'highlight' must be [x, y]");
            c.highlight_point = {h[0].get<double>(), h[1].get<double>()};
        }
        out.push_back(c);
    }
    return out;
}

namespace {

std::string exemplar_file_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "exemplar_%03zu.pfm", i);
    return buf;
}

} // namespace

std::vector<FitTarget> load_targets(const fs::path &dir) {
    const fs::path doc_path = dir / "exemplars.json";
    const std::vector<std::uint8_t> bytes = read_file(doc_path);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error &e) {
        throw ConfigError(doc_path.string() + ": " + e.what());
    }
    const std::vector<ExemplarConfig> configs = exemplars_from_json(j);
    std::vector<FitTarget> targets;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const json &e = j["configs"][i];
        const fs::path image = e.contains("image") ? dir / e["image"].get<std::string>() : dir / exemplar_file_name(i);
        targets.push_back({read_pfm(image), configs[i]});
    }
    return targets;
}

void save_targets(const std::vector<FitTarget> &targets, const fs::path &dir, std::uint64_t seed) {
    std::vector<ExemplarConfig> configs;
    for (const auto &t : targets)
        configs.push_back(t.config);
    json j = exemplars_to_json(configs, EvalKind::reflect, seed);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const std::string name = exemplar_file_name(i);
        write_pfm(targets[i].image, dir / name);
        j["configs"][i]["image"] = name;
    }
    write_file_atomic(dir / "exemplars.json", j.dump(2) + "\n");
}

std::string config_hash(const json &j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void record_manifest(const fs::path &output_file, const ManifestEntry &entry) {
    const fs::path dir = output_file.has_parent_path() ? output_file.parent_path() : fs::path(".");
    const fs::path path = dir / "manifest.json";
    json doc;
    if (fs::exists(path)) {
        const std::vector<std::uint8_t> bytes = read_file(path);
        try {
            doc = json::parse(bytes.begin(), bytes.end());
        } catch (const json::parse_error &e) {
            throw IoError(path.string() + ": " + e.what());
        }
    } else {
        doc = {{"schema", "svbrdf-forge/manifest"},
               {"schema_version", kConfigSchemaVersion},
               {"entries", json::object()}};
    }
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);

    json e = {{"command", entry.command},
              {"software_version", std::string(kSoftwareVersion)},
              {"config", entry.config},
              {"config_hash", config_hash(entry.config)},
              {"falloff", entry.falloff},
              {"rng", std::string(RngStream::kAlgorithm)},
              {"created_utc", stamp}};
    e["seed"] = entry.seed ? json(*entry.seed) : json(nullptr);
    if (entry.encoding)
        e["encoding"] = {{"frequency_count", entry.encoding->frequency_count},
                         {"compressed_dim", entry.encoding->compressed_dim}};
    doc["entries"][output_file.filename().string()] = e;
    write_file_atomic(path, doc.dump(2) + "\n");
}

} // namespace sforge
