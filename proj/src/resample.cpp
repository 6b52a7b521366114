#include "resample.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace osr {

namespace {

struct Taps {
    int idx[4];
    double w[4];
};

// Per-output-coordinate source taps: half-pixel-center mapping
// src = (dst + 0.5) * in/out - 0.5, neighbors clamped to the edge.
std::vector<Taps> make_taps(int in_size, int out_size) {
    std::vector<Taps> taps(static_cast<size_t>(out_size));
    const double ratio = double(in_size) / double(out_size);
    for (int o = 0; o < out_size; ++o) {
        double src = (double(o) + 0.5) * ratio - 0.5;
        double base = std::floor(src);
        double t = src - base;
        Taps& tp = taps[size_t(o)];
        bicubic_weights(t, tp.w);
        for (int k = 0; k < 4; ++k) {
            int idx = int(base) - 1 + k;
            tp.idx[k] = std::clamp(idx, 0, in_size - 1);
        }
    }
    return taps;
}

}  // namespace

Image bicubic_resample(const Image& img, int out_h, int out_w) {
    require(out_h >= 1 && out_w >= 1, errc::invalid_argument, "non-positive resample target");

    const auto tx = make_taps(img.w, out_w);
    const auto ty = make_taps(img.h, out_h);

    // horizontal pass (double accumulators keep the oracle comparison tight)
    std::vector<double> mid(size_t(img.h) * out_w * img.c);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < out_w; ++x) {
            const Taps& tp = tx[size_t(x)];
            for (int k = 0; k < img.c; ++k) {
                double acc = 0.0;
                for (int j = 0; j < 4; ++j) acc += tp.w[j] * double(img.at(y, tp.idx[j], k));
                mid[size_t((y * out_w + x) * img.c + k)] = acc;
            }
        }

    // vertical pass
    Image out(out_h, out_w, img.c, img.range);
    const double lo = img.range_lo();
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            const Taps& tp = ty[size_t(y)];
            for (int k = 0; k < img.c; ++k) {
                double acc = 0.0;
                for (int j = 0; j < 4; ++j)
                    acc += tp.w[j] * mid[size_t((tp.idx[j] * out_w + x) * img.c + k)];
                out.at(y, x, k) = float(std::clamp(acc, lo, 1.0));
            }
        }
    return out;
}

double compute_scale(int lr_size, int hr_size) {
    require(lr_size >= 1 && hr_size >= 1, errc::invalid_argument, "sizes must be >= 1");
    return double(hr_size) / double(lr_size);
}

}  // namespace osr
