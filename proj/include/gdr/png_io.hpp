#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "gdr/image.hpp"

namespace gdr {

/// Quantization rule used when writing files: clamp to [0,1], then
/// round-half-up to an 8-bit code.
inline std::uint8_t quantize_byte(double v) {
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] inline void png_io_fail(const std::string& path,
                                     const std::string& reason) {
    throw std::runtime_error("png: " + path + ": " + reason);
}

}  // namespace detail

/// Reads an 8-bit grayscale or RGB PNG and maps bytes to [0,1] by v/255.
/// Anything else (16-bit, palette, alpha) is rejected with an error naming
/// the file.
inline ImageTensor load_image(const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) detail::png_io_fail(path, "cannot open file");

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 ||
        png_sig_cmp(header, 0, 8) != 0)
        detail::png_io_fail(path, "not a PNG file");

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) detail::png_io_fail(path, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        detail::png_io_fail(path, "png_create_info_struct failed");
    }
    std::vector<png_bytep> row_ptrs;
    std::vector<png_byte> raw;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        detail::png_io_fail(path, "libpng decode error");
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);

    if (bit_depth != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        detail::png_io_fail(path, "unsupported bit depth " +
                                      std::to_string(bit_depth) +
                                      " (only 8-bit supported)");
    }
    int channels = 0;
    if (color_type == PNG_COLOR_TYPE_GRAY)
        channels = 1;
    else if (color_type == PNG_COLOR_TYPE_RGB)
        channels = 3;
    else {
        png_destroy_read_struct(&png, &info, nullptr);
        detail::png_io_fail(path, "unsupported color type " +
                                      std::to_string(color_type) +
                                      " (only 8-bit gray or RGB supported)");
    }

    raw.resize(static_cast<std::size_t>(h) * w * channels);
    row_ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        row_ptrs[y] = raw.data() + static_cast<std::size_t>(y) * w * channels;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    std::vector<double> values(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) values[i] = raw[i] / 255.0;
    return ImageTensor::from_data(static_cast<int>(h), static_cast<int>(w),
                                  channels, std::move(values));
}

/// Writes an 8-bit PNG (grayscale or RGB by channel count). Values are
/// clamped to [0,1] and quantized with round-half-up.
inline void save_image(const ImageTensor& img, const std::string& path) {
    if (img.empty()) throw std::invalid_argument("save_image: empty image");

    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) detail::png_io_fail(path, "cannot open file for writing");

    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) detail::png_io_fail(path, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        detail::png_io_fail(path, "png_create_info_struct failed");
    }

    std::vector<png_byte> raw(img.size());
    std::vector<png_bytep> row_ptrs;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        detail::png_io_fail(path, "libpng encode error");
    }

    png_init_io(png, fp.get());
    const int color_type =
        img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, img.width(), img.height(), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    for (std::size_t i = 0; i < img.size(); ++i)
        raw[i] = quantize_byte(img.data()[i]);
    const std::size_t stride =
        static_cast<std::size_t>(img.width()) * img.channels();
    row_ptrs.resize(img.height());
    for (int y = 0; y < img.height(); ++y)
        row_ptrs[y] = raw.data() + static_cast<std::size_t>(y) * stride;
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace gdr
