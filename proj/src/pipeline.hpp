#pragma once

#include "training.hpp"

// end-to-end inference: pre-upsampling chain, condition assembly, DDPM
// sampling over a subsampled step ladder, decode, crop

namespace osr {

inline constexpr int kDefaultSampleSteps = 50;
inline constexpr int kMaxOutputSize = 2048;

struct SampleRequest {
    Image lr;                          // unit-range input
    double scale = 0.0;                // used when out_h/out_w are 0
    int out_h = 0, out_w = 0;          // explicit target size (optional)
    int steps = kDefaultSampleSteps;
    uint64_t seed = 0;
    int class_id = -1;                 // -1 = auto (null class)
};

// M_up x4 then bicubic to the target grid; falls back to direct bicubic when
// the target is below 4x or M_up is disabled. Signed-range output.
Image preupsample(ParamStore& ps, const ModelConfig& cfg, const Image& lr, int out_h,
                  int out_w);

// resolved conditioning scale for a request (exact ratio for explicit sizes)
double request_scale(const SampleRequest& req);

Image super_resolve(Context& ctx, const SampleRequest& req);

}  // namespace osr
