// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include <png.h>

#include "gsc/errors.hpp"
#include "gsc/io.hpp"

namespace gsc {

namespace {

std::string lower_ext(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos)
        return "";
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

unsigned char encode_byte(double v) {
    // Round half away from zero; inputs are already clamped to [0,1].
    const double scaled = std::floor(v * 255.0 + 0.5);
    return static_cast<unsigned char>(std::clamp(scaled, 0.0, 255.0));
}

/// RAII wrapper closing a C FILE*.
struct FileHandle {
    std::FILE* f = nullptr;
    explicit FileHandle(std::FILE* file) : f(file) {}
    ~FileHandle() {
        if (f)
            std::fclose(f);
    }
    FileHandle(const FileHandle&) = delete;
    FileHandle& operator=(const FileHandle&) = delete;
};

ImageBuffer read_png(const std::string& path) {
    FileHandle fh(std::fopen(path.c_str(), "rb"));
    if (!fh.f)
        throw InvalidInputError("read_image: cannot open '" + path + "'");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        throw IoError("read_image: libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("read_image: libpng initialization failed");
    }
    std::vector<unsigned char> data;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("read_image: '" + path + "' is not a valid PNG");
    }

    png_init_io(png, fh.f);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);

    if (depth == 16)
        png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int channels = static_cast<int>(png_get_channels(png, info));
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("read_image: '" + path + "' decodes to unsupported channel count");
    }

    data.resize(static_cast<std::size_t>(w) * h * static_cast<std::size_t>(channels));
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = data.data() + static_cast<std::size_t>(y) * w * static_cast<std::size_t>(channels);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    ImageBuffer img = ImageBuffer::create(static_cast<int>(w), static_cast<int>(h), channels);
    for (std::size_t i = 0; i < data.size(); ++i)
        img.pixels[i] = static_cast<double>(data[i]) / 255.0;
    return img;
}

void write_png(const ImageBuffer& img, const std::string& path) {
    FileHandle fh(std::fopen(path.c_str(), "wb"));
    if (!fh.f)
        throw IoError("write_image: cannot open '" + path + "' for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        throw IoError("write_image: libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("write_image: libpng initialization failed");
    }
    std::vector<unsigned char> data;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("write_image: failed writing '" + path + "'");
    }

    png_init_io(png, fh.f);
    // Fixed compression settings keep output bytes reproducible.
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    data.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        data[i] = encode_byte(img.pixels[i]);
    rows.resize(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[static_cast<std::size_t>(y)] =
            data.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width) *
                              static_cast<std::size_t>(img.channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

int read_pnm_int(std::istream& in, const std::string& path) {
    // Skips whitespace and '#' comments between header tokens.
    for (;;) {
        const int c = in.peek();
        if (c == EOF)
            throw FormatError("read_image: '" + path + "' has a truncated PNM header");
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        if (c == '#') {
            std::string comment;
            std::getline(in, comment);
            continue;
        }
        break;
    }
    int value = 0;
    if (!(in >> value))
        throw FormatError("read_image: '" + path + "' has a malformed PNM header");
    return value;
}

ImageBuffer read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidInputError("read_image: cannot open '" + path + "'");

    char magic[2] = {0, 0};
    in.read(magic, 2);
    int channels = 0;
    if (magic[0] == 'P' && magic[1] == '6')
        channels = 3;
    else if (magic[0] == 'P' && magic[1] == '5')
        channels = 1;
    else
        throw FormatError("read_image: '" + path + "' is not a P5/P6 PNM file");

    const int w = read_pnm_int(in, path);
    const int h = read_pnm_int(in, path);
    const int maxval = read_pnm_int(in, path);
    if (w <= 0 || h <= 0)
        throw FormatError("read_image: '" + path + "' has invalid PNM dimensions");
    if (maxval != 255)
        throw FormatError("read_image: '" + path + "' must use maxval 255");
    in.get(); // single whitespace byte after maxval

    std::vector<unsigned char> data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
                                    static_cast<std::size_t>(channels));
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!in)
        throw FormatError("read_image: '" + path + "' has truncated PNM pixel data");

    ImageBuffer img = ImageBuffer::create(w, h, channels);
    for (std::size_t i = 0; i < data.size(); ++i)
        img.pixels[i] = static_cast<double>(data[i]) / 255.0;
    return img;
}

void write_pnm(const ImageBuffer& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("write_image: cannot open '" + path + "' for writing");
    out << (img.channels == 3 ? "P6" : "P5") << "\n"
        << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> data(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        data[i] = encode_byte(img.pixels[i]);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out)
        throw IoError("write_image: failed writing '" + path + "'");
}

} // namespace

ImageBuffer ImageBuffer::create(int width, int height, int channels, double fill) {
    if (width <= 0 || height <= 0 || (channels != 1 && channels != 3))
        throw InvalidInputError("ImageBuffer: dimensions must be positive with 1 or 3 channels");
    ImageBuffer img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.pixels.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                          static_cast<std::size_t>(channels),
                      fill);
    return img;
}

ImageBuffer read_image(const std::string& path) {
    const std::string ext = lower_ext(path);
    if (ext == "png")
        return read_png(path);
    if (ext == "ppm" || ext == "pgm" || ext == "pnm")
        return read_pnm(path);
    throw FormatError("read_image: unsupported image format '" + path +
                      "' (expected .png, .ppm, or .pgm)");
}

void write_image(const ImageBuffer& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0 || (img.channels != 1 && img.channels != 3))
        throw InvalidInputError("write_image: empty or malformed image buffer");
    const std::string ext = lower_ext(path);
    if (ext == "png") {
        write_png(img, path);
        return;
    }
    if (ext == "ppm" || ext == "pgm" || ext == "pnm") {
        write_pnm(img, path);
        return;
    }
    throw FormatError("write_image: unsupported image format '" + path +
                      "' (expected .png, .ppm, or .pgm)");
}

} // namespace gsc
