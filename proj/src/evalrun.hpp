#pragma once

#include "metrics.hpp"
#include "pipeline.hpp"

// scale-grid evaluation protocol: crop, degrade, super-resolve, score against
// ground truth, with a bicubic baseline row per scale pair

namespace osr {

struct ScalePair {
    int lr_size = 0;
    int hr_size = 0;
};

struct EvalProtocol {
    // the published scale grid: x5.3, x8, x10.7, x16, x20.8, x24
    std::vector<ScalePair> scale_pairs = {{64, 340}, {64, 512}, {32, 342},
                                          {32, 512}, {32, 666}, {32, 768}};
    DegradeMode degrade_mode = DegradeMode::bicubic_only;
    std::string crop_policy = "random_n";  // random_n | center
    int patches_per_pair = 16;
    int sample_steps = kDefaultSampleSteps;

    void validate() const;
};

struct MetricRow {
    std::string scale_label;
    int lr_size = 0, hr_size = 0;
    std::string method;  // "model" or "bicubic"
    std::vector<double> psnr_values, ssim_values;  // per image
    double psnr_mean = 0.0, ssim_mean = 0.0;
    int n_images = 0;
    bool flagged = false;  // at least one per-image failure was skipped
};

struct EvalResult {
    std::vector<MetricRow> rows;  // two per scale pair: model, then bicubic
    Image grid;                   // LR / bicubic / model / HR strip per pair
};

EvalResult run_eval(Context& ctx, const EvalProtocol& proto,
                    const std::vector<LabeledImage>& corpus, uint64_t seed);

// fixed columns: scale_label,lr_size,hr_size,method,psnr_mean,ssim_mean,n_images
std::string eval_csv(const std::vector<MetricRow>& rows);

std::string scale_label_for(int lr_size, int hr_size);

// [eval] section: scale_pairs = "64:340,64:512,...", degrade_mode, crop_policy,
// patches_per_pair, sample_steps
EvalProtocol eval_protocol_from(const Config& c);

}  // namespace osr
