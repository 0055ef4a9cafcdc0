#include "drdc/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <png.h>
#include <stdexcept>

namespace drdc {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

} // namespace

ImageU8 read_png(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("cannot open PNG: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("PNG decode error: " + path);
    }

    png_init_io(png, f.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);

    // normalize everything to 8-bit gray or RGB
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (depth == 16) png_set_strip_16(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("unsupported PNG channel count in " + path);
    }

    ImageU8 img;
    img.height = static_cast<int>(h);
    img.width = static_cast<int>(w);
    img.channels = channels;
    img.pixels.resize(static_cast<size_t>(h) * w * channels);

    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = img.pixels.data() + static_cast<size_t>(y) * w * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::string& path, const ImageU8& img) {
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("write_png: 1 or 3 channels only");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("cannot create PNG: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG encode error: " + path);
    }

    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_bytep> rows(static_cast<size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[static_cast<size_t>(y)] = const_cast<png_bytep>(
            img.pixels.data() + static_cast<size_t>(y) * img.width * img.channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageU8 to_u8(const Tensor& chw) {
    if (chw.ndim() != 3) throw std::invalid_argument("to_u8: CHW tensor expected");
    const int C = chw.dim(0), H = chw.dim(1), W = chw.dim(2);
    if (C != 1 && C != 3) throw std::invalid_argument("to_u8: 1 or 3 channels only");
    ImageU8 img;
    img.height = H;
    img.width = W;
    img.channels = C;
    img.pixels.resize(static_cast<size_t>(H) * W * C);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c) {
                double v = chw.at3(c, y, x);
                v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
                img.pixels[img.idx(y, x, c)] = static_cast<uint8_t>(std::lround(v * 255.0));
            }
    return img;
}

Tensor to_tensor(const ImageU8& img, int want_channels) {
    if (want_channels != 1 && want_channels != 3)
        throw std::invalid_argument("to_tensor: 1 or 3 channels only");
    Tensor t({want_channels, img.height, img.width});
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < want_channels; ++c) {
                const int src_c = img.channels == 1 ? 0 : std::min(c, img.channels - 1);
                t.at3(c, y, x) = img.pixels[img.idx(y, x, src_c)] / 255.0;
            }
    return t;
}

ImageU8 mask_to_u8(const Tensor& hw) {
    if (hw.ndim() != 2) throw std::invalid_argument("mask_to_u8: HW tensor expected");
    ImageU8 img;
    img.height = hw.dim(0);
    img.width = hw.dim(1);
    img.channels = 1;
    img.pixels.resize(static_cast<size_t>(img.height) * img.width);
    for (int64_t i = 0; i < hw.numel(); ++i)
        img.pixels[static_cast<size_t>(i)] = hw[i] > 0.5 ? 255 : 0;
    return img;
}

Tensor mask_from_u8(const ImageU8& img) {
    Tensor t({img.height, img.width});
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            t.at2(y, x) = img.pixels[img.idx(y, x, 0)] > 127.5 ? 1.0 : 0.0;
    return t;
}

} // namespace drdc
