#pragma once

#include <map>
#include <string>

#include "degrade.hpp"
#include "model.hpp"

namespace osr {

// training-loop settings (model topology lives in ModelConfig)
struct TrainConfig {
    double alpha_lqa = 1.0;       // LQA loss weight
    double learning_rate = 5e-5;
    int batch_size = 8;
    int steps = 3000;
    int hr_lo = 32, hr_hi = 512;          // HR crop bounds (pixels)
    double scale_lo = 4.0, scale_hi = 16.0;  // SR scale bounds
    DegradeMode degrade_mode = DegradeMode::bicubic_only;
    double uncond_dropout = 0.1;  // null-class caption swap probability
    double grad_clip = 0.0;       // 0 = off
    uint64_t seed = 0;

    void validate() const;
};

// flat `key = value` text config with [section] headers; keys are stored
// namespaced as "section.key"
struct Config {
    std::map<std::string, std::string> kv;

    static Config parse_text(const std::string& text);
    static Config parse_file(const std::string& path);
    std::string serialize() const;  // grouped back into sections

    bool has(const std::string& key) const { return kv.count(key) != 0; }
    void set(const std::string& key, const std::string& v) { kv[key] = v; }

    std::string get(const std::string& key, const std::string& dflt) const;
    int get_int(const std::string& key, int dflt) const;
    double get_double(const std::string& key, double dflt) const;
    bool get_bool(const std::string& key, bool dflt) const;
};

ModelConfig model_config_from(const Config& c);
TrainConfig train_config_from(const Config& c);
void write_model_config(Config& c, const ModelConfig& m);
void write_train_config(Config& c, const TrainConfig& t);

}  // namespace osr
