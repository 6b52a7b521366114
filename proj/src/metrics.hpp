#pragma once

#include "image.hpp"

namespace osr {

// 10*log10(1/MSE) over all pixels/channels of unit-range images, capped at
// 100 dB (the zero-MSE sentinel)
double psnr(const Image& a, const Image& b);

// single-scale SSIM on the mean channel: 11x11 Gaussian window sigma 1.5,
// K1=0.01, K2=0.03, valid windows only
double ssim(const Image& a, const Image& b);

}  // namespace osr
