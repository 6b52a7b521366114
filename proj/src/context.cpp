#include "training.hpp"

namespace osr {

Context Context::fresh(const ModelConfig& m, const TrainConfig& t, uint64_t init_seed) {
    Context ctx;
    ctx.mcfg = m;
    ctx.tcfg = t;
    ctx.ps = init_params(m, init_seed);
    ctx.sched = make_schedule(m.T, m.beta_start, m.beta_end);
    return ctx;
}

void Context::save(const std::string& dir) const {
    Config c;
    write_model_config(c, mcfg);
    write_train_config(c, tcfg);
    CheckpointMeta meta;
    meta.config = c.kv;
    meta.schedule_T = mcfg.T;
    meta.beta_start = mcfg.beta_start;
    meta.beta_end = mcfg.beta_end;
    meta.sigma_mode = mcfg.sigma_mode == SigmaMode::posterior ? "posterior" : "beta";
    save_checkpoint(ps, meta, dir);
}

Context Context::load(const std::string& dir) {
    CheckpointMeta meta;
    ParamStore loaded = load_checkpoint(dir, meta);

    Config c;
    c.kv = meta.config;
    Context ctx;
    ctx.mcfg = model_config_from(c);
    ctx.tcfg = train_config_from(c);
    require(meta.schedule_T == ctx.mcfg.T && meta.beta_start == ctx.mcfg.beta_start &&
                meta.beta_end == ctx.mcfg.beta_end,
            errc::corrupt_checkpoint, "schedule block disagrees with the stored config");

    // the stored array table must match the model the config describes
    ParamStore expected = init_params(ctx.mcfg, 0);
    for (const auto& [name, e] : expected.entries) {
        auto it = loaded.entries.find(name);
        require(it != loaded.entries.end(), errc::corrupt_checkpoint,
                "checkpoint missing array: " + name);
        require(it->second.value.shape == e.value.shape, errc::corrupt_checkpoint,
                "checkpoint array shape mismatch: " + name);
    }
    for (const auto& [name, e] : loaded.entries)
        require(expected.has(name), errc::corrupt_checkpoint,
                "checkpoint has unexpected array: " + name);

    ctx.ps = std::move(loaded);
    ctx.sched = make_schedule(ctx.mcfg.T, ctx.mcfg.beta_start, ctx.mcfg.beta_end);
    return ctx;
}

}  // namespace osr
