// osr: command-line front end over the C API (see include/omniscale.h)
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "omniscale.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitInternal = 2;

// user mistakes (bad args, bad files, bad checkpoints) -> 1, bugs -> 2
int exit_code_for(osr_status s) {
    switch (s) {
        case OSR_OK: return kExitOk;
        case OSR_ERR_INVALID_ARGUMENT:
        case OSR_ERR_INVALID_STATE:
        case OSR_ERR_IO:
        case OSR_ERR_CORRUPT_CHECKPOINT: return kExitUser;
        default: return kExitInternal;
    }
}

int report(osr_status s, const char* what) {
    if (s == OSR_OK) return kExitOk;
    std::fprintf(stderr, "osr: %s failed: %s\n", what, osr_last_error());
    return exit_code_for(s);
}

// OMNISCALE_SEED overrides --seed when set
uint64_t effective_seed(uint64_t cli_seed, bool* bad_env) {
    const char* e = std::getenv("OMNISCALE_SEED");
    if (!e || !*e) return cli_seed;
    char* end = nullptr;
    unsigned long long v = std::strtoull(e, &end, 10);
    if (end == e || *end != '\0') {
        *bad_env = true;
        return cli_seed;
    }
    return uint64_t(v);
}

std::string read_text_file(const std::string& path, bool* ok) {
    std::ifstream f(path, std::ios::binary);
    if (!f.good()) {
        *ok = false;
        return {};
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    *ok = true;
    return ss.str();
}

struct ContextGuard {
    osr_context* ctx = nullptr;
    ~ContextGuard() { osr_context_free(ctx); }
};

// load the checkpoint when one exists at dir, otherwise build a fresh context
// from the optional config file
int open_or_create(const std::string& ckpt, const std::string& config_path, uint64_t seed,
                   ContextGuard& g) {
    if (std::filesystem::exists(std::filesystem::path(ckpt) / "manifest.json"))
        return report(osr_context_load(ckpt.c_str(), &g.ctx), "loading checkpoint");
    std::string cfg_text;
    if (!config_path.empty()) {
        bool ok = false;
        cfg_text = read_text_file(config_path, &ok);
        if (!ok) {
            std::fprintf(stderr, "osr: cannot read config: %s\n", config_path.c_str());
            return kExitUser;
        }
    }
    return report(
        osr_context_new(config_path.empty() ? nullptr : cfg_text.c_str(), seed, &g.ctx),
        "creating context");
}

int open_existing(const std::string& ckpt, ContextGuard& g) {
    if (!std::filesystem::exists(std::filesystem::path(ckpt) / "manifest.json")) {
        std::fprintf(stderr, "osr: no checkpoint at %s (missing manifest.json)\n",
                     ckpt.c_str());
        return kExitUser;
    }
    return report(osr_context_load(ckpt.c_str(), &g.ctx), "loading checkpoint");
}

int apply_toggle(osr_context* ctx, bool off, const char* key) {
    if (!off) return kExitOk;
    return report(osr_context_set(ctx, key, "false"), key);
}

void print_step(int step, double l_diff, double l_lqa, double l_total, void* user) {
    int every = *static_cast<int*>(user);
    if (every > 0 && (step % every == 0))
        std::printf("step %6d  l_diff %.6f  l_lqa %.6f  l_total %.6f\n", step, l_diff, l_lqa,
                     l_total);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"osr — scale-controlled latent-diffusion super-resolution"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(osr_version()));

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a procedural PNG corpus");
    std::string sy_out;
    int sy_count = 256, sy_size = 96;
    std::string sy_kind = "mixed";
    uint64_t sy_seed = 0;
    synth->add_option("--out", sy_out, "output directory")->required();
    synth->add_option("--count", sy_count, "number of images");
    synth->add_option("--kind", sy_kind, "gratings|checkers|noise|blobs|mixed");
    synth->add_option("--size", sy_size, "square image size in px");
    synth->add_option("--seed", sy_seed, "RNG seed");

    // ---- shared train options ----
    struct TrainArgs {
        std::string corpus, ckpt, config;
        int steps = 0;
        uint64_t seed = 0;
        int print_every = 25;
    };

    auto add_train_common = [](CLI::App* cmd, TrainArgs& a, int default_steps) {
        a.steps = default_steps;
        cmd->add_option("--corpus", a.corpus, "training corpus directory")->required();
        cmd->add_option("--ckpt", a.ckpt, "checkpoint directory (loaded when present, saved on finish)")
            ->required();
        cmd->add_option("--config", a.config, "config file for a fresh context");
        cmd->add_option("--steps", a.steps, "optimizer steps");
        cmd->add_option("--seed", a.seed, "RNG seed (env OMNISCALE_SEED overrides)");
        cmd->add_option("--print-every", a.print_every, "progress print interval (0 = quiet)");
    };

    auto* train_ae = app.add_subcommand("train-ae", "pre-train the autoencoder (then freeze it)");
    TrainArgs ae_args;
    add_train_common(train_ae, ae_args, 800);

    auto* train_up =
        app.add_subcommand("train-upsampler", "pre-train the x4 pixel upsampler (then freeze it)");
    TrainArgs up_args;
    add_train_common(train_up, up_args, 600);

    auto* train = app.add_subcommand("train", "joint diffusion + feature-alignment training");
    TrainArgs tr_args;
    add_train_common(train, tr_args, 3000);
    double tr_alpha = -1.0;
    bool tr_no_gscale = false, tr_no_lmod = false, tr_no_sepr = false, tr_no_mup = false;
    train->add_option("--alpha-lqa", tr_alpha, "feature-alignment loss weight (default from config)");
    train->add_flag("--no-global-scale", tr_no_gscale, "disable per-level global scale injection");
    train->add_flag("--no-local-mod", tr_no_lmod, "disable local scale modulation of fidelity features");
    train->add_flag("--no-sepr", tr_no_sepr, "disable fine-semantics cross-attention");
    train->add_flag("--no-mup", tr_no_mup, "condition on plain bicubic (skip the x4 upsampler)");

    // ---- sample ----
    auto* sample = app.add_subcommand("sample", "super-resolve one PNG");
    std::string sm_ckpt, sm_in, sm_out, sm_size;
    double sm_scale = 0.0;
    int sm_steps = 50, sm_class = -1;
    uint64_t sm_seed = 0;
    bool sm_no_mup = false;
    sample->add_option("--ckpt", sm_ckpt, "checkpoint directory")->required();
    sample->add_option("--in", sm_in, "input LR PNG")->required();
    sample->add_option("--out", sm_out, "output PNG")->required();
    sample->add_option("--scale", sm_scale, "upscaling factor (>= 1)");
    sample->add_option("--size", sm_size, "explicit output size HxW (or one integer for square)");
    sample->add_option("--steps", sm_steps, "denoising steps");
    sample->add_option("--seed", sm_seed, "RNG seed (env OMNISCALE_SEED overrides)");
    sample->add_option("--class", sm_class, "semantic class id (-1 = unconditional)");
    sample->add_flag("--no-mup", sm_no_mup, "condition on plain bicubic (skip the x4 upsampler)");

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "scale-grid evaluation against the bicubic baseline");
    std::string ev_ckpt, ev_corpus, ev_protocol, ev_out, ev_grid;
    uint64_t ev_seed = 0;
    bool ev_no_mup = false;
    eval->add_option("--ckpt", ev_ckpt, "checkpoint directory")->required();
    eval->add_option("--corpus", ev_corpus, "evaluation corpus directory")->required();
    eval->add_option("--protocol", ev_protocol, "protocol config file ([eval] section)");
    eval->add_option("--out", ev_out, "output CSV path")->required();
    eval->add_option("--grid", ev_grid, "comparison strip PNG path");
    eval->add_option("--seed", ev_seed, "RNG seed (env OMNISCALE_SEED overrides)");
    eval->add_flag("--no-mup", ev_no_mup, "condition on plain bicubic (skip the x4 upsampler)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUser;
    }

    bool bad_env = false;

    if (*synth) {
        uint64_t seed = effective_seed(sy_seed, &bad_env);
        if (bad_env) {
            std::fprintf(stderr, "osr: OMNISCALE_SEED is not an integer\n");
            return kExitUser;
        }
        int rc = report(osr_synth_dataset(sy_out.c_str(), sy_count, sy_kind.c_str(), seed, sy_size),
                        "synth");
        if (rc == kExitOk) std::printf("wrote %d images to %s\n", sy_count, sy_out.c_str());
        return rc;
    }

    if (*train_ae || *train_up) {
        TrainArgs& a = *train_ae ? ae_args : up_args;
        uint64_t seed = effective_seed(a.seed, &bad_env);
        if (bad_env) {
            std::fprintf(stderr, "osr: OMNISCALE_SEED is not an integer\n");
            return kExitUser;
        }
        ContextGuard g;
        int rc = open_or_create(a.ckpt, a.config, seed, g);
        if (rc != kExitOk) return rc;
        double last = 0.0;
        osr_status s = *train_ae
                           ? osr_pretrain_autoencoder(g.ctx, a.corpus.c_str(), a.steps, seed, &last)
                           : osr_pretrain_upsampler(g.ctx, a.corpus.c_str(), a.steps, seed, &last);
        rc = report(s, *train_ae ? "train-ae" : "train-upsampler");
        if (rc != kExitOk) return rc;
        std::printf("final loss %.6f over %d steps\n", last, a.steps);
        rc = report(osr_context_save(g.ctx, a.ckpt.c_str()), "saving checkpoint");
        if (rc == kExitOk) std::printf("saved checkpoint to %s\n", a.ckpt.c_str());
        return rc;
    }

    if (*train) {
        uint64_t seed = effective_seed(tr_args.seed, &bad_env);
        if (bad_env) {
            std::fprintf(stderr, "osr: OMNISCALE_SEED is not an integer\n");
            return kExitUser;
        }
        ContextGuard g;
        int rc = open_or_create(tr_args.ckpt, tr_args.config, seed, g);
        if (rc != kExitOk) return rc;
        char seed_str[32];
        std::snprintf(seed_str, sizeof(seed_str), "%llu", (unsigned long long)seed);
        rc = report(osr_context_set(g.ctx, "train.seed", seed_str), "train.seed");
        if (rc != kExitOk) return rc;
        if (tr_alpha >= 0.0) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", tr_alpha);
            rc = report(osr_context_set(g.ctx, "train.alpha_lqa", buf), "train.alpha_lqa");
            if (rc != kExitOk) return rc;
        }
        if ((rc = apply_toggle(g.ctx, tr_no_gscale, "model.use_global_scale")) != kExitOk) return rc;
        if ((rc = apply_toggle(g.ctx, tr_no_lmod, "model.use_local_mod")) != kExitOk) return rc;
        if ((rc = apply_toggle(g.ctx, tr_no_sepr, "model.use_sepr")) != kExitOk) return rc;
        if ((rc = apply_toggle(g.ctx, tr_no_mup, "model.use_mup")) != kExitOk) return rc;
        rc = report(osr_train(g.ctx, tr_args.corpus.c_str(), tr_args.steps, print_step,
                              &tr_args.print_every),
                    "train");
        if (rc != kExitOk) return rc;
        rc = report(osr_context_save(g.ctx, tr_args.ckpt.c_str()), "saving checkpoint");
        if (rc == kExitOk) std::printf("saved checkpoint to %s\n", tr_args.ckpt.c_str());
        return rc;
    }

    if (*sample) {
        uint64_t seed = effective_seed(sm_seed, &bad_env);
        if (bad_env) {
            std::fprintf(stderr, "osr: OMNISCALE_SEED is not an integer\n");
            return kExitUser;
        }
        if ((sm_scale > 0.0) == !sm_size.empty()) {
            std::fprintf(stderr, "osr: give exactly one of --scale or --size\n");
            return kExitUser;
        }
        int out_h = 0, out_w = 0;
        if (!sm_size.empty()) {
            char sep = 0;
            if (std::sscanf(sm_size.c_str(), "%dx%d%c", &out_h, &out_w, &sep) == 2) {
            } else if (std::sscanf(sm_size.c_str(), "%d%c", &out_h, &sep) == 1) {
                out_w = out_h;
            } else {
                std::fprintf(stderr, "osr: --size expects HxW or one integer, got %s\n",
                             sm_size.c_str());
                return kExitUser;
            }
        }
        ContextGuard g;
        int rc = open_existing(sm_ckpt, g);
        if (rc != kExitOk) return rc;
        if ((rc = apply_toggle(g.ctx, sm_no_mup, "model.use_mup")) != kExitOk) return rc;
        rc = report(osr_sample(g.ctx, sm_in.c_str(), sm_out.c_str(), sm_scale, out_h, out_w,
                               sm_steps, seed, sm_class),
                    "sample");
        if (rc == kExitOk) std::printf("wrote %s\n", sm_out.c_str());
        return rc;
    }

    if (*eval) {
        uint64_t seed = effective_seed(ev_seed, &bad_env);
        if (bad_env) {
            std::fprintf(stderr, "osr: OMNISCALE_SEED is not an integer\n");
            return kExitUser;
        }
        std::string proto_text;
        if (!ev_protocol.empty()) {
            bool ok = false;
            proto_text = read_text_file(ev_protocol, &ok);
            if (!ok) {
                std::fprintf(stderr, "osr: cannot read protocol: %s\n", ev_protocol.c_str());
                return kExitUser;
            }
        }
        ContextGuard g;
        int rc = open_existing(ev_ckpt, g);
        if (rc != kExitOk) return rc;
        if ((rc = apply_toggle(g.ctx, ev_no_mup, "model.use_mup")) != kExitOk) return rc;
        rc = report(osr_eval(g.ctx, ev_corpus.c_str(),
                             ev_protocol.empty() ? nullptr : proto_text.c_str(), seed,
                             ev_out.c_str(), ev_grid.empty() ? nullptr : ev_grid.c_str()),
                    "eval");
        if (rc == kExitOk) std::printf("wrote %s\n", ev_out.c_str());
        return rc;
    }

    return kExitUser;
}
