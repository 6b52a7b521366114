#pragma once

#include <string>
#include <vector>

#include "common.hpp"
#include "tensor.hpp"

namespace osr {

enum class Range { unit, signed_ };  // [0,1] pixel domain / [-1,1] model domain

// H x W x C image of floats with an explicit value-range tag.
struct Image {
    int h = 0;
    int w = 0;
    int c = 0;
    Range range = Range::unit;
    std::vector<float> data;  // row-major, channel-interleaved [H][W][C]

    Image() = default;
    Image(int h_, int w_, int c_, Range r) : h(h_), w(w_), c(c_), range(r) {
        require(h >= 1 && w >= 1 && (c == 1 || c == 3), errc::invalid_argument,
                "image must be H>=1, W>=1, C in {1,3}");
        data.assign(size_t(h) * w * c, 0.0f);
    }

    float& at(int y, int x, int ch) { return data[size_t((y * w + x) * c + ch)]; }
    float at(int y, int x, int ch) const { return data[size_t((y * w + x) * c + ch)]; }

    float range_lo() const { return range == Range::unit ? 0.0f : -1.0f; }
    float range_hi() const { return 1.0f; }
};

// range conversions (pure, clamping)
Image to_unit(const Image& img);
Image to_signed(const Image& img);
void clamp_to_range(Image& img);

// crop of size (ch x cw) with top-left (y0, x0); must lie inside the image
Image crop(const Image& img, int y0, int x0, int ch_, int cw);

// reflect-pad on the bottom/right edges up to (H_pad, W_pad)
Image reflect_pad(const Image& img, int h_pad, int w_pad);

// image <-> [C,H,W] tensor
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t, Range range, bool clamp = true);

// 8-bit PNG I/O. unit = byte/255, signed = byte/127.5 - 1; writes round
// half-up after clamping to the declared range.
Image read_png(const std::string& path, Range range);
void write_png(const std::string& path, const Image& img);

}  // namespace osr
