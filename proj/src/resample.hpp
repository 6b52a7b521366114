#pragma once

#include "image.hpp"

namespace osr {

// Catmull-Rom cubic weights (a = -0.5) for source offsets {-1, 0, 1, 2}
// around the floor sample, at fractional position t in [0,1).
inline void bicubic_weights(double t, double w[4]) {
    w[0] = ((-0.5 * t + 1.0) * t - 0.5) * t;
    w[1] = ((1.5 * t - 2.5) * t) * t + 1.0;
    w[2] = ((-1.5 * t + 2.0) * t + 0.5) * t;
    w[3] = ((0.5 * t - 0.5) * t) * t;
}

// Separable Catmull-Rom resampling with half-pixel-center mapping and
// edge-clamped source coordinates; output clamped to the image range.
Image bicubic_resample(const Image& img, int out_h, int out_w);

// hr_size / lr_size as an exact real ratio
double compute_scale(int lr_size, int hr_size);

}  // namespace osr
