#include "degrade.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace osr {

void DegradationConfig::validate() const {
    require(blur_sigma_range[0] >= 0 && blur_sigma_range[0] <= blur_sigma_range[1],
            errc::invalid_argument, "bad blur_sigma_range");
    require(noise_sigma_range[0] >= 0 && noise_sigma_range[0] <= noise_sigma_range[1],
            errc::invalid_argument, "bad noise_sigma_range");
    require(quantize_levels == 0 || quantize_levels >= 2, errc::invalid_argument,
            "quantize_levels must be 0 (none) or >= 2");
}

PairSpec sample_pair_spec(Rng& rng, const int hr_bounds[2], const double scale_bounds[2]) {
    require(hr_bounds[0] >= 1 && hr_bounds[0] <= hr_bounds[1], errc::invalid_argument,
            "bad hr_bounds");
    require(scale_bounds[0] > 1.0 && scale_bounds[0] <= scale_bounds[1], errc::invalid_argument,
            "bad scale_bounds");

    // hr is drawn over multiples of 16 so the AE (x4) and the two stride-2
    // UNet levels divide evenly during training
    int lo16 = (hr_bounds[0] + 15) / 16;
    int hi16 = hr_bounds[1] / 16;
    require(lo16 <= hi16, errc::invalid_argument, "hr_bounds contain no multiple of 16");
    // feasibility: the largest hr at the smallest scale must reach lr >= 8
    require(lr_size_for(hi16 * 16, scale_bounds[0]) >= 8, errc::invalid_argument,
            "bounds cannot produce lr_size >= 8");

    PairSpec spec;
    for (;;) {
        spec.hr_size = 16 * int(rng.uniform_int(lo16, hi16));
        spec.scale = rng.uniform(scale_bounds[0], scale_bounds[1]);
        spec.lr_size = lr_size_for(spec.hr_size, spec.scale);
        if (spec.lr_size >= 8) return spec;
    }
}

Image gaussian_blur(const Image& img, double sigma) {
    if (sigma <= 0.0) return img;
    int radius = int(std::ceil(3.0 * sigma));
    std::vector<double> kernel(size_t(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-0.5 * double(i) * double(i) / (sigma * sigma));
        kernel[size_t(i + radius)] = v;
        sum += v;
    }
    for (auto& v : kernel) v /= sum;

    auto clampi = [](int i, int n) { return std::clamp(i, 0, n - 1); };
    // horizontal
    Image mid = img;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int k = 0; k < img.c; ++k) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[size_t(i + radius)] * double(img.at(y, clampi(x + i, img.w), k));
                mid.at(y, x, k) = float(acc);
            }
    // vertical
    Image out = img;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int k = 0; k < img.c; ++k) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[size_t(i + radius)] * double(mid.at(clampi(y + i, img.h), x, k));
                out.at(y, x, k) = float(acc);
            }
    clamp_to_range(out);
    return out;
}

Image degrade(const Image& img, const DegradationConfig& cfg, const PairSpec& spec,
              uint64_t seed) {
    cfg.validate();
    require(img.h == spec.hr_size && img.w == spec.hr_size, errc::invalid_argument,
            "degrade input must be the HR patch of spec.hr_size");

    if (cfg.mode == DegradeMode::bicubic_only)
        return bicubic_resample(img, spec.lr_size, spec.lr_size);

    Rng rng(seed);
    double blur_sigma = rng.uniform(cfg.blur_sigma_range[0], cfg.blur_sigma_range[1]);
    Image out = gaussian_blur(img, blur_sigma);
    out = bicubic_resample(out, spec.lr_size, spec.lr_size);

    double noise_sigma = rng.uniform(cfg.noise_sigma_range[0], cfg.noise_sigma_range[1]);
    if (noise_sigma > 0.0) {
        // noise std is in unit range; signed images span twice that
        float amp = float(noise_sigma) * (img.range == Range::signed_ ? 2.0f : 1.0f);
        for (auto& v : out.data) v += amp * float(rng.normal());
    }
    if (cfg.quantize_levels >= 2) {
        // quantize over the declared range
        const float lo = out.range_lo();
        const float span = 1.0f - lo;
        const float steps = float(cfg.quantize_levels - 1);
        for (auto& v : out.data) {
            float u = (std::clamp(v, lo, 1.0f) - lo) / span;
            v = lo + span * std::floor(u * steps + 0.5f) / steps;
        }
    }
    clamp_to_range(out);
    return out;
}

}  // namespace osr
