#include "image.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <memory>

namespace osr {

Image to_unit(const Image& img) {
    if (img.range == Range::unit) return img;
    Image out = img;
    out.range = Range::unit;
    for (auto& v : out.data) v = std::clamp(0.5f * (v + 1.0f), 0.0f, 1.0f);
    return out;
}

Image to_signed(const Image& img) {
    if (img.range == Range::signed_) return img;
    Image out = img;
    out.range = Range::signed_;
    for (auto& v : out.data) v = std::clamp(2.0f * v - 1.0f, -1.0f, 1.0f);
    return out;
}

void clamp_to_range(Image& img) {
    float lo = img.range_lo();
    for (auto& v : img.data) v = std::clamp(v, lo, 1.0f);
}

Image crop(const Image& img, int y0, int x0, int ch_, int cw) {
    require(y0 >= 0 && x0 >= 0 && ch_ >= 1 && cw >= 1 && y0 + ch_ <= img.h && x0 + cw <= img.w,
            errc::invalid_argument, "crop window outside image");
    Image out(ch_, cw, img.c, img.range);
    for (int y = 0; y < ch_; ++y)
        for (int x = 0; x < cw; ++x)
            for (int k = 0; k < img.c; ++k) out.at(y, x, k) = img.at(y0 + y, x0 + x, k);
    return out;
}

Image reflect_pad(const Image& img, int h_pad, int w_pad) {
    require(h_pad >= img.h && w_pad >= img.w, errc::invalid_argument, "pad target smaller than image");
    if (h_pad == img.h && w_pad == img.w) return img;
    // reflection without repeating the edge sample: index 2*(n-1) - i
    auto mirror = [](int i, int n) {
        if (n == 1) return 0;
        int period = 2 * (n - 1);
        i %= period;
        return i < n ? i : period - i;
    };
    Image out(h_pad, w_pad, img.c, img.range);
    for (int y = 0; y < h_pad; ++y) {
        int sy = mirror(y, img.h);
        for (int x = 0; x < w_pad; ++x) {
            int sx = mirror(x, img.w);
            for (int k = 0; k < img.c; ++k) out.at(y, x, k) = img.at(sy, sx, k);
        }
    }
    return out;
}

Tensor image_to_tensor(const Image& img) {
    Tensor t({img.c, img.h, img.w});
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int k = 0; k < img.c; ++k) t.at(k, y, x) = img.at(y, x, k);
    return t;
}

Image tensor_to_image(const Tensor& t, Range range, bool clamp) {
    require(t.shape.size() == 3, errc::invalid_argument, "expected [C,H,W] tensor");
    Image img(t.dim(1), t.dim(2), t.dim(0), range);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int k = 0; k < img.c; ++k) img.at(y, x, k) = t.at(k, y, x);
    if (clamp) clamp_to_range(img);
    return img;
}

/*================================================= png ====*/

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};

}  // namespace

Image read_png(const std::string& path, Range range) {
    std::unique_ptr<FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
    require(fp != nullptr, errc::io_error, "cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, errc::internal, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(errc::internal, "png_create_info_struct failed");
    }
    std::vector<png_bytep> rows;
    std::vector<png_byte> pixels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(errc::io_error, "failed to decode PNG " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    require(channels == 1 || channels == 3, errc::io_error,
            "unsupported PNG channel count in " + path);

    pixels.resize(size_t(h) * w * channels);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + size_t(y) * w * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(int(h), int(w), channels, range);
    const float scale = range == Range::unit ? 1.0f / 255.0f : 1.0f / 127.5f;
    const float shift = range == Range::unit ? 0.0f : -1.0f;
    for (size_t i = 0; i < pixels.size(); ++i) img.data[i] = float(pixels[i]) * scale + shift;
    return img;
}

void write_png(const std::string& path, const Image& img) {
    std::unique_ptr<FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
    require(fp != nullptr, errc::io_error, "cannot open " + path + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, errc::internal, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail(errc::internal, "png_create_info_struct failed");
    }
    std::vector<png_byte> pixels(size_t(img.h) * img.w * img.c);
    std::vector<png_bytep> rows(size_t(img.h));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(errc::io_error, "failed to encode PNG " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, png_uint_32(img.w), png_uint_32(img.h), 8,
                 img.c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // fixed filter + level so identical pixels give identical bytes
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_compression_level(png, 6);

    const float lo = img.range_lo();
    const float scale = img.range == Range::unit ? 255.0f : 127.5f;
    const float shift = img.range == Range::unit ? 0.0f : 127.5f;
    for (size_t i = 0; i < img.data.size(); ++i) {
        float v = std::clamp(img.data[i], lo, 1.0f);
        float b = std::floor(v * scale + shift + 0.5f);  // round half up
        pixels[i] = png_byte(std::clamp(b, 0.0f, 255.0f));
    }
    for (int y = 0; y < img.h; ++y) rows[size_t(y)] = pixels.data() + size_t(y) * img.w * img.c;
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace osr
