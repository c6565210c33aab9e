#include "vizsteg/image.hpp"

#include <png.h>

#include <array>
#include <cstdio>
#include <memory>

namespace vizsteg {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ImageU8 load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw Error("cannot open image file: " + path);

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
        throw FormatError("not a PNG file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("corrupt PNG: " + path);
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_uint_32 w = 0, h = 0;
    int bit_depth = 0, color_type = 0;
    png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (bit_depth == 16) png_set_strip_16(png);
    (void)png_set_interlace_handling(png);
    png_read_update_info(png, info);

    color_type = png_get_color_type(png, info);
    const int channels = png_get_channels(png, info);
    const size_t rowbytes = png_get_rowbytes(png, info);

    std::vector<uint8_t> raw(static_cast<size_t>(h) * rowbytes);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<size_t>(y) * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const bool gray = (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA);
    const bool alpha = (channels == 2 || channels == 4);
    ImageU8 img(gray ? 1 : 3, static_cast<int>(h), static_cast<int>(w));

    for (int y = 0; y < img.h; ++y) {
        const uint8_t* src = raw.data() + static_cast<size_t>(y) * rowbytes;
        for (int x = 0; x < img.w; ++x) {
            const uint8_t* px = src + static_cast<size_t>(x) * channels;
            const int a = alpha ? px[channels - 1] : 255;
            for (int ch = 0; ch < img.c; ++ch) {
                // Composite over white.
                const int v = (px[ch] * a + 255 * (255 - a) + 127) / 255;
                img.at(y, x, ch) = static_cast<uint8_t>(v > 255 ? 255 : v);
            }
        }
    }
    return img;
}

void save_png(const std::string& path, const ImageU8& img) {
    if (img.c != 1 && img.c != 3) throw ShapeError("save_png: channel count must be 1 or 3");
    if (img.h <= 0 || img.w <= 0) throw ShapeError("save_png: empty image");

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw Error("cannot write image file: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("PNG write failed: " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.w, img.h, 8,
                 img.c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_bytep> rows(img.h);
    for (int y = 0; y < img.h; ++y)
        rows[y] = const_cast<png_bytep>(img.pix.data() + static_cast<size_t>(y) * img.w * img.c);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

TensorF to_float(const ImageU8& img) {
    TensorF t(img.c, img.h, img.w);
    for (int ch = 0; ch < img.c; ++ch)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                t.at(ch, y, x) = static_cast<float>(img.at(y, x, ch)) / 255.0f;
    return t;
}

ImageU8 to_u8(const TensorF& t) {
    if (t.c != 1 && t.c != 3) throw ShapeError("to_u8: channel count must be 1 or 3");
    ImageU8 img(t.c, t.h, t.w);
    for (int ch = 0; ch < t.c; ++ch)
        for (int y = 0; y < t.h; ++y)
            for (int x = 0; x < t.w; ++x) {
                const float v = t.at(ch, y, x);
                const float cl = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
                img.at(y, x, ch) = static_cast<uint8_t>(std::lround(cl * 255.f));
            }
    return img;
}

uint32_t crc32(const void* data, size_t n) {
    static const auto table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
            t[i] = c;
        }
        return t;
    }();
    uint32_t c = 0xFFFFFFFFu;
    const auto* p = static_cast<const uint8_t*>(data);
    for (size_t i = 0; i < n; ++i) c = table[(c ^ p[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

}  // namespace vizsteg
