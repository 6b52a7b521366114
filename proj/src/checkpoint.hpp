#pragma once

#include <map>
#include <string>

#include "params.hpp"

// checkpoint directory: manifest.json (format version, array table, config
// map, schedule params) + weights.bin (little-endian f32, row-major,
// concatenated in manifest order). Round trips are bit-exact.

namespace osr {

struct CheckpointMeta {
    std::map<std::string, std::string> config;  // flat key=value
    int schedule_T = 1000;
    double beta_start = 1e-4;
    double beta_end = 2e-2;
    std::string sigma_mode = "posterior";
};

void save_checkpoint(const ParamStore& ps, const CheckpointMeta& meta, const std::string& dir);

// validation-first: the whole manifest is checked against weights.bin before
// any array is materialized
ParamStore load_checkpoint(const std::string& dir, CheckpointMeta& meta);

}  // namespace osr
