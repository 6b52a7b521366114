#pragma once

#include <map>

#include "autograd.hpp"
#include "schedule.hpp"
#include "synth.hpp"

namespace osr {

// Structural model configuration. Defaults are the desk-scale shape: 3-level
// UNet (32,64,96) with attention at the two deepest levels, f=4 autoencoder
// with a 4-channel latent, pe_dim 64 embeddings.
struct ModelConfig {
    // autoencoder
    int ae_factor = 4;  // two stride-2 stages
    std::vector<int> ae_channels = {32, 64, 64};
    int latent_channels = 4;
    float latent_scale = 1.0f;

    // denoiser
    std::vector<int> channels = {32, 64, 96};  // per UNet level
    std::vector<int> attn_levels = {1, 2};     // the two deepest levels
    int pe_dim = 64;
    int sem_dim = 32;     // caption/fine token width
    int cap_tokens = 4;   // L_c
    int fine_tokens = 8;  // L_f
    int num_classes = kNumTextureClasses;  // the null class sits at index num_classes

    // fidelity-branch image encoder pyramid (1/2, 1/4, 1/8 resolution)
    std::vector<int> imgenc_channels = {32, 32, 48};

    // x4 pixel-domain pre-upsampler
    int up_channels = 32;

    // diffusion schedule
    int T = 1000;
    double beta_start = 1e-4;
    double beta_end = 2e-2;
    SigmaMode sigma_mode = SigmaMode::posterior;

    std::string scale_encoding = "raw";  // raw | log2

    // ablation toggles (the --no-* flags); stored with the checkpoint
    bool use_global_scale = true;
    bool use_local_mod = true;
    bool use_sepr = true;
    bool use_mup = true;

    int levels() const { return int(channels.size()); }
    int null_class() const { return num_classes; }
    bool has_attn(int level) const {
        for (int l : attn_levels)
            if (l == level) return true;
        return false;
    }
    // image size must divide by ae_factor * 2^(levels-1) for clean UNet round trips
    int size_multiple() const { return ae_factor * (1 << (levels() - 1)); }
};

// largest group count <= 8 that divides the channel count
inline int norm_groups(int channels) {
    int g = std::min(8, channels);
    while (channels % g != 0) --g;
    return g;
}
inline constexpr float kGroupNormEps = 1e-5f;

// all learnable weights, seeded; newly added conditioning projections are
// zero-initialized so the composed model starts bit-equal to the bare UNet
ParamStore init_params(const ModelConfig& cfg, uint64_t seed);

// names the init gives zero weights (neutrality set), for tests/ablation
std::vector<std::string> zero_init_prefixes(const ModelConfig& cfg);

/*================================================= forward-pass context ====*/

// One forward pass's view of a ParamStore: each parameter becomes a single
// graph leaf (shared across uses), gradients flow back into the store.
template <class T>
struct Net {
    ParamStoreT<T>& ps;
    const ModelConfig& cfg;
    bool train = false;
    std::map<std::string, Var<T>> cache;

    Net(ParamStoreT<T>& ps_, const ModelConfig& cfg_, bool train_ = false)
        : ps(ps_), cfg(cfg_), train(train_) {}

    Var<T> P(const std::string& name) {
        auto it = cache.find(name);
        if (it != cache.end()) return it->second;
        Var<T> v = param_leaf(ps, name, train);
        cache.emplace(name, v);
        return v;
    }
};

}  // namespace osr
