#include "omniscale.h"

#include <fstream>

#include "evalrun.hpp"
#include "pipeline.hpp"

using namespace osr;

struct osr_context {
    Context ctx;
};

namespace {

thread_local std::string g_last_error;

osr_status map_code(errc c) {
    switch (c) {
        case errc::invalid_argument: return OSR_ERR_INVALID_ARGUMENT;
        case errc::invalid_state: return OSR_ERR_INVALID_STATE;
        case errc::io_error: return OSR_ERR_IO;
        case errc::corrupt_checkpoint: return OSR_ERR_CORRUPT_CHECKPOINT;
        case errc::diverged: return OSR_ERR_DIVERGED;
        case errc::internal: return OSR_ERR_INTERNAL;
    }
    return OSR_ERR_INTERNAL;
}

template <class Fn>
osr_status wrap(Fn&& fn) {
    try {
        fn();
        return OSR_OK;
    } catch (const error& e) {
        g_last_error = e.what();
        return map_code(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return OSR_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return OSR_ERR_INTERNAL;
    }
}

void check_arg(bool ok, const char* msg) { require(ok, errc::invalid_argument, msg); }

}  // namespace

extern "C" {

const char* osr_version(void) { return "0.1.0"; }

const char* osr_last_error(void) { return g_last_error.c_str(); }

osr_status osr_context_new(const char* config_text, uint64_t init_seed, osr_context** out) {
    return wrap([&] {
        check_arg(out != nullptr, "out must not be NULL");
        Config c = config_text ? Config::parse_text(config_text) : Config{};
        ModelConfig m = model_config_from(c);
        TrainConfig t = train_config_from(c);
        *out = new osr_context{Context::fresh(m, t, init_seed)};
    });
}

osr_status osr_context_load(const char* checkpoint_dir, osr_context** out) {
    return wrap([&] {
        check_arg(checkpoint_dir != nullptr && out != nullptr,
                  "checkpoint_dir and out must not be NULL");
        *out = new osr_context{Context::load(checkpoint_dir)};
    });
}

osr_status osr_context_save(osr_context* ctx, const char* checkpoint_dir) {
    return wrap([&] {
        check_arg(ctx != nullptr && checkpoint_dir != nullptr,
                  "ctx and checkpoint_dir must not be NULL");
        ctx->ctx.save(checkpoint_dir);
    });
}

void osr_context_free(osr_context* ctx) { delete ctx; }

osr_status osr_context_set(osr_context* ctx, const char* key, const char* value) {
    return wrap([&] {
        check_arg(ctx != nullptr && key != nullptr && value != nullptr,
                  "ctx, key and value must not be NULL");
        std::string k = key;
        static const char* kModelToggles[] = {"model.use_global_scale", "model.use_local_mod",
                                              "model.use_sepr", "model.use_mup"};
        bool is_toggle = false;
        for (const char* t : kModelToggles) is_toggle |= (k == t);
        require(is_toggle || k.rfind("train.", 0) == 0, errc::invalid_argument,
                "key not adjustable at runtime: " + k);
        Config c;
        write_model_config(c, ctx->ctx.mcfg);
        write_train_config(c, ctx->ctx.tcfg);
        require(c.has(k), errc::invalid_argument, "unknown config key: " + k);
        c.set(k, value);
        ModelConfig m = model_config_from(c);
        TrainConfig t = train_config_from(c);
        ctx->ctx.mcfg = m;
        ctx->ctx.tcfg = t;
    });
}

osr_status osr_synth_dataset(const char* out_dir, int count, const char* kind, uint64_t seed,
                             int image_size) {
    return wrap([&] {
        check_arg(out_dir != nullptr, "out_dir must not be NULL");
        save_corpus(out_dir, synth_dataset(count, kind ? kind : "mixed", seed, image_size));
    });
}

osr_status osr_pretrain_autoencoder(osr_context* ctx, const char* corpus_dir, int steps,
                                    uint64_t seed, double* last_loss) {
    return wrap([&] {
        check_arg(ctx != nullptr && corpus_dir != nullptr,
                  "ctx and corpus_dir must not be NULL");
        auto curve = pretrain_autoencoder(ctx->ctx, load_corpus(corpus_dir), steps, seed);
        if (last_loss) *last_loss = curve.empty() ? 0.0 : curve.back();
    });
}

osr_status osr_pretrain_upsampler(osr_context* ctx, const char* corpus_dir, int steps,
                                  uint64_t seed, double* last_loss) {
    return wrap([&] {
        check_arg(ctx != nullptr && corpus_dir != nullptr,
                  "ctx and corpus_dir must not be NULL");
        auto curve = pretrain_upsampler(ctx->ctx, load_corpus(corpus_dir), steps, seed);
        if (last_loss) *last_loss = curve.empty() ? 0.0 : curve.back();
    });
}

osr_status osr_train(osr_context* ctx, const char* corpus_dir, int steps, osr_step_fn on_step,
                     void* user) {
    return wrap([&] {
        check_arg(ctx != nullptr && corpus_dir != nullptr,
                  "ctx and corpus_dir must not be NULL");
        StepHook hook;
        if (on_step)
            hook = [on_step, user](const LossReport& r) {
                on_step(r.step, r.l_diff, r.l_lqa, r.l_total, user);
            };
        run_training(ctx->ctx, load_corpus(corpus_dir), steps, hook);
    });
}

osr_status osr_sample(osr_context* ctx, const char* lr_png, const char* out_png, double scale,
                      int out_h, int out_w, int steps, uint64_t seed, int class_id) {
    return wrap([&] {
        check_arg(ctx != nullptr && lr_png != nullptr && out_png != nullptr,
                  "ctx, lr_png and out_png must not be NULL");
        SampleRequest req;
        req.lr = read_png(lr_png, Range::unit);
        req.scale = scale;
        req.out_h = out_h;
        req.out_w = out_w;
        req.steps = steps <= 0 ? kDefaultSampleSteps : steps;
        req.seed = seed;
        req.class_id = class_id;
        write_png(out_png, super_resolve(ctx->ctx, req));
    });
}

osr_status osr_eval(osr_context* ctx, const char* corpus_dir, const char* protocol_text,
                    uint64_t seed, const char* csv_path, const char* grid_png) {
    return wrap([&] {
        check_arg(ctx != nullptr && corpus_dir != nullptr && csv_path != nullptr,
                  "ctx, corpus_dir and csv_path must not be NULL");
        EvalProtocol proto =
            protocol_text ? eval_protocol_from(Config::parse_text(protocol_text))
                          : EvalProtocol{};
        EvalResult res = run_eval(ctx->ctx, proto, load_corpus(corpus_dir), seed);
        std::ofstream f(csv_path, std::ios::binary);
        require(f.good(), errc::io_error, std::string("cannot write csv: ") + csv_path);
        f << eval_csv(res.rows);
        require(f.good(), errc::io_error, "short write: csv");
        f.close();
        if (grid_png) write_png(grid_png, res.grid);
    });
}

}  // extern "C"
