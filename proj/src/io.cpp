#include "orthoseg/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace orthoseg {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

struct PngRead {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngRead() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWrite {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWrite() { png_destroy_write_struct(&png, &info); }
};

// Decodes to either 8-bit gray/RGB or 16-bit gray, depending on need.
void read_png_rows(const std::string& path, bool want_labels, int& w, int& h, int& ch,
                   int& bit_depth, std::vector<std::vector<uint8_t>>& rows) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw io_error("cannot open " + path);

    PngRead ctx;
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw io_error("libpng init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw io_error("libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw io_error("failed to decode " + path);

    png_init_io(ctx.png, f.get());
    png_read_info(ctx.png, ctx.info);

    png_uint_32 pw, ph;
    int depth, color;
    png_get_IHDR(ctx.png, ctx.info, &pw, &ph, &depth, &color, nullptr, nullptr, nullptr);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    png_set_strip_alpha(ctx.png);
    if (want_labels) {
        // keep 16-bit; widen 8-bit labels
        if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
            color == PNG_COLOR_TYPE_PALETTE)
            throw io_error(path + ": label maps must be single-channel PNG");
    } else {
        if (depth == 16) png_set_strip_16(ctx.png);
    }
    png_read_update_info(ctx.png, ctx.info);

    w = static_cast<int>(pw);
    h = static_cast<int>(ph);
    ch = png_get_channels(ctx.png, ctx.info);
    bit_depth = png_get_bit_depth(ctx.png, ctx.info);

    size_t rowbytes = png_get_rowbytes(ctx.png, ctx.info);
    rows.assign(h, std::vector<uint8_t>(rowbytes));
    std::vector<png_bytep> ptrs(h);
    for (int y = 0; y < h; ++y) ptrs[y] = rows[y].data();
    png_read_image(ctx.png, ptrs.data());
    png_read_end(ctx.png, nullptr);
}

void write_png_rows(const std::string& path, int w, int h, int ch, int bit_depth,
                    const std::vector<std::vector<uint8_t>>& rows) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw io_error("cannot write " + path);

    PngWrite ctx;
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw io_error("libpng init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw io_error("libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw io_error("failed to encode " + path);

    png_init_io(ctx.png, f.get());
    int color = ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(ctx.png, ctx.info, w, h, bit_depth, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);

    std::vector<png_bytep> ptrs(h);
    for (int y = 0; y < h; ++y) ptrs[y] = const_cast<png_bytep>(rows[y].data());
    png_write_image(ctx.png, ptrs.data());
    png_write_end(ctx.png, nullptr);
}

}  // namespace

ImageGrid read_image_png(const std::string& path) {
    int w, h, ch, depth;
    std::vector<std::vector<uint8_t>> rows;
    read_png_rows(path, false, w, h, ch, depth, rows);
    if (ch != 1 && ch != 3) throw io_error(path + ": expected grayscale or RGB");

    ImageGrid img(h, w, ch);
    for (int c = 0; c < ch; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                img.at(c, y, x) = rows[y][static_cast<size_t>(x) * ch + c] / 255.0f;
    return img;
}

void write_image_png(const std::string& path, const ImageGrid& img) {
    if (img.channels() != 1 && img.channels() != 3)
        throw io_error("write_image_png: expected 1 or 3 channels");
    const int w = img.width(), h = img.height(), ch = img.channels();
    std::vector<std::vector<uint8_t>> rows(h, std::vector<uint8_t>(static_cast<size_t>(w) * ch));
    for (int c = 0; c < ch; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                float v = std::clamp(img.at(c, y, x), 0.0f, 1.0f);
                rows[y][static_cast<size_t>(x) * ch + c] =
                    static_cast<uint8_t>(std::lround(v * 255.0f));
            }
    write_png_rows(path, w, h, ch, 8, rows);
}

LabelMap read_label_png(const std::string& path) {
    int w, h, ch, depth;
    std::vector<std::vector<uint8_t>> rows;
    read_png_rows(path, true, w, h, ch, depth, rows);
    if (ch != 1) throw io_error(path + ": label maps must be single-channel");

    LabelMap labels(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            uint32_t v;
            if (depth == 16) {
                // PNG stores 16-bit samples big-endian
                v = (static_cast<uint32_t>(rows[y][2 * x]) << 8) | rows[y][2 * x + 1];
            } else {
                v = rows[y][x];
            }
            labels.at(y, x) = v;
        }
    return labels;
}

void write_label_png(const std::string& path, const LabelMap& labels) {
    if (labels.max_label() > 65535)
        throw io_error("write_label_png: more than 65535 objects cannot be stored as 16-bit PNG");
    const int w = labels.width(), h = labels.height();
    std::vector<std::vector<uint8_t>> rows(h, std::vector<uint8_t>(static_cast<size_t>(w) * 2));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            uint16_t v = static_cast<uint16_t>(labels.at(y, x));
            rows[y][2 * x] = static_cast<uint8_t>(v >> 8);
            rows[y][2 * x + 1] = static_cast<uint8_t>(v & 0xff);
        }
    write_png_rows(path, w, h, 1, 16, rows);
}

void write_distance_png(const std::string& path, const Raster<float>& dist) {
    if (dist.channels() != 1) throw io_error("write_distance_png: expected single channel");
    const int w = dist.width(), h = dist.height();
    std::vector<std::vector<uint8_t>> rows(h, std::vector<uint8_t>(static_cast<size_t>(w) * 2));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float v = std::clamp(dist.at(0, y, x), 0.0f, 1.0f);
            uint16_t q = static_cast<uint16_t>(std::lround(v * 65535.0f));
            rows[y][2 * x] = static_cast<uint8_t>(q >> 8);
            rows[y][2 * x + 1] = static_cast<uint8_t>(q & 0xff);
        }
    write_png_rows(path, w, h, 1, 16, rows);
}

// ---- binary tensor / checkpoint formats ----

namespace {

void put_u16(std::ostream& os, uint16_t v) {
    uint8_t b[2] = {static_cast<uint8_t>(v & 0xff), static_cast<uint8_t>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v & 0xff), static_cast<uint8_t>((v >> 8) & 0xff),
                    static_cast<uint8_t>((v >> 16) & 0xff), static_cast<uint8_t>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& os, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    put_u32(os, u);
}

uint16_t get_u16(std::istream& is) {
    uint8_t b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t get_u32(std::istream& is) {
    uint8_t b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

float get_f32(std::istream& is) {
    uint32_t u = get_u32(is);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

constexpr uint16_t kFormatVersion = 1;

}  // namespace

void write_tensor(const std::string& path, const Raster<float>& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot write " + path);
    os.write("OSGT", 4);
    put_u16(os, kFormatVersion);
    put_u32(os, 3);
    put_u32(os, static_cast<uint32_t>(t.channels()));
    put_u32(os, static_cast<uint32_t>(t.height()));
    put_u32(os, static_cast<uint32_t>(t.width()));
    for (float v : t.raw()) put_f32(os, v);
    if (!os) throw io_error("short write to " + path);
}

Raster<float> read_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "OSGT", 4) != 0)
        throw io_error(path + ": not a tensor file (bad magic)");
    if (get_u16(is) != kFormatVersion) throw io_error(path + ": unsupported tensor version");
    uint32_t rank = get_u32(is);
    if (rank != 3) throw io_error(path + ": expected rank-3 tensor");
    uint32_t c = get_u32(is), h = get_u32(is), w = get_u32(is);
    if (c == 0 || h == 0 || w == 0 || static_cast<uint64_t>(c) * h * w > (1u << 30))
        throw io_error(path + ": implausible tensor dims");
    Raster<float> t(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
    for (float& v : t.raw()) v = get_f32(is);
    if (!is) throw io_error(path + ": truncated tensor file");
    return t;
}

void save_checkpoint(const std::string& path, const NetworkSpec& spec,
                     const ParamSet<float>& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot write " + path);
    os.write("OSEG", 4);
    put_u16(os, kFormatVersion);
    put_u32(os, static_cast<uint32_t>(spec.input_channels));
    put_u32(os, static_cast<uint32_t>(spec.base_channels));
    put_u32(os, static_cast<uint32_t>(spec.depth));
    put_u32(os, static_cast<uint32_t>(spec.embedding_dim));
    put_u32(os, static_cast<uint32_t>(spec.head_channels));
    put_u32(os, static_cast<uint32_t>(params.count()));
    for (size_t i = 0; i < params.count(); ++i) {
        const std::string& name = params.names[i];
        const Tensor<float>& t = params.tensors[i];
        put_u32(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(os, static_cast<uint32_t>(t.dims.size()));
        for (int d : t.dims) put_u32(os, static_cast<uint32_t>(d));
        for (float v : t.v) put_f32(os, v);
    }
    if (!os) throw io_error("short write to " + path);
}

std::pair<NetworkSpec, ParamSet<float>> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "OSEG", 4) != 0)
        throw io_error(path + ": not a checkpoint (bad magic)");
    if (get_u16(is) != kFormatVersion) throw io_error(path + ": unsupported checkpoint version");

    NetworkSpec spec;
    spec.input_channels = static_cast<int>(get_u32(is));
    spec.base_channels = static_cast<int>(get_u32(is));
    spec.depth = static_cast<int>(get_u32(is));
    spec.embedding_dim = static_cast<int>(get_u32(is));
    spec.head_channels = static_cast<int>(get_u32(is));
    spec.validate();

    uint32_t count = get_u32(is);
    ParamSet<float> params;
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = get_u32(is);
        if (name_len > 4096) throw io_error(path + ": implausible name length");
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        uint32_t rank = get_u32(is);
        if (rank > 8) throw io_error(path + ": implausible tensor rank");
        std::vector<int> dims(rank);
        uint64_t n = 1;
        for (uint32_t d = 0; d < rank; ++d) {
            dims[d] = static_cast<int>(get_u32(is));
            n *= static_cast<uint64_t>(dims[d]);
        }
        if (n > (1u << 30)) throw io_error(path + ": implausible tensor size");
        Tensor<float> t(dims);
        for (float& v : t.v) v = get_f32(is);
        params.add(std::move(name), std::move(t));
    }
    if (!is) throw io_error(path + ": truncated checkpoint");

    // layout must match what the spec would construct
    ParamSet<float> expect = init_parameters<float>(spec, 0);
    if (!params.same_layout(expect))
        throw io_error(path + ": parameter layout does not match the stored spec");
    return {spec, std::move(params)};
}

}  // namespace orthoseg
