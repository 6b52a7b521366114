#pragma once

#include <vector>

#include "degrade.hpp"

namespace osr {

// Procedural texture classes used as the training corpus; class ids feed the
// semantic embedding tables (index 0..3; the null/unconditional class sits one
// past these in the tables).
inline constexpr int kNumTextureClasses = 4;
inline constexpr const char* kTextureClassNames[kNumTextureClasses] = {
    "gratings", "checkers", "noise", "blobs"};

struct LabeledImage {
    Image image;
    int class_id = 0;
};

// kind: "mixed" (round-robin over all classes) or one class name.
// Deterministic per (seed, index): item i depends only on seed and i.
std::vector<LabeledImage> synth_dataset(int n, const std::string& kind, uint64_t seed,
                                        int image_size = 128);

// PNG corpus directory: files named NNNNN_<class>.png
void save_corpus(const std::string& dir, const std::vector<LabeledImage>& items);
std::vector<LabeledImage> load_corpus(const std::string& dir);

}  // namespace osr
