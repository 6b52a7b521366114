#pragma once

#include "resample.hpp"

namespace osr {

enum class DegradeMode { bicubic_only, realworld };

struct DegradationConfig {
    double blur_sigma_range[2] = {0.1, 1.0};   // Gaussian std in pixels
    double noise_sigma_range[2] = {0.0, 0.02}; // additive Gaussian std in unit range
    int quantize_levels = 0;                   // >= 2 enables uniform quantization; 0 = none
    DegradeMode mode = DegradeMode::bicubic_only;

    void validate() const;
};

struct PairSpec {
    int hr_size = 0;
    double scale = 1.0;
    int lr_size = 0;  // always floor(hr_size / scale + 0.5)
};

inline int lr_size_for(int hr_size, double scale) {
    return int(std::floor(double(hr_size) / scale + 0.5));
}

// Draw a training PairSpec: hr uniform over multiples of 16 within hr_bounds
// (the AE factor and UNet depth need clean divisibility), scale continuous
// uniform in scale_bounds; resampled until lr_size >= 8.
PairSpec sample_pair_spec(Rng& rng, const int hr_bounds[2], const double scale_bounds[2]);

// Separable Gaussian blur, radius ceil(3*sigma), edge-clamped; sigma <= 0 is identity.
Image gaussian_blur(const Image& img, double sigma);

// blur -> bicubic to lr_size -> additive noise -> quantize, all seeded and
// clamped; bicubic_only mode runs only the resample.
Image degrade(const Image& img, const DegradationConfig& cfg, const PairSpec& spec, uint64_t seed);

}  // namespace osr
