#ifndef OMNISCALE_H
#define OMNISCALE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Scale-controlled latent-diffusion super-resolution, C interface.
 * All functions return osr_status; osr_last_error() describes the most
 * recent failure on the calling thread. */

typedef enum {
    OSR_OK = 0,
    OSR_ERR_INVALID_ARGUMENT = 1,
    OSR_ERR_INVALID_STATE = 2,
    OSR_ERR_IO = 3,
    OSR_ERR_CORRUPT_CHECKPOINT = 4,
    OSR_ERR_DIVERGED = 5,
    OSR_ERR_INTERNAL = 6
} osr_status;

typedef struct osr_context osr_context;

const char* osr_version(void);

/* thread-local message for the last failing call */
const char* osr_last_error(void);

/* ---- context lifecycle ------------------------------------------------ */

/* config_text: flat `key = value` config with [model]/[train] sections, or
 * NULL for defaults; init_seed seeds the weight initialization */
osr_status osr_context_new(const char* config_text, uint64_t init_seed, osr_context** out);

osr_status osr_context_load(const char* checkpoint_dir, osr_context** out);

osr_status osr_context_save(osr_context* ctx, const char* checkpoint_dir);

void osr_context_free(osr_context* ctx);

/* Adjust a run-time knob on a live context. Accepted keys: the conditioning
 * toggles "model.use_global_scale", "model.use_local_mod", "model.use_sepr",
 * "model.use_mup" (value "true"/"false") and any "train.*" key. Structural
 * model keys are rejected (weights are already materialized). */
osr_status osr_context_set(osr_context* ctx, const char* key, const char* value);

/* ---- data ------------------------------------------------------------- */

/* procedural texture corpus written as PNG files named NNNNN_<class>.png;
 * kind: "mixed" or one of gratings|checkers|noise|blobs */
osr_status osr_synth_dataset(const char* out_dir, int count, const char* kind, uint64_t seed,
                             int image_size);

/* ---- training --------------------------------------------------------- */

typedef void (*osr_step_fn)(int step, double l_diff, double l_lqa, double l_total,
                            void* user);

/* reconstruction pre-training of the autoencoder; freezes it afterwards */
osr_status osr_pretrain_autoencoder(osr_context* ctx, const char* corpus_dir, int steps,
                                    uint64_t seed, double* last_loss);

/* x4 pre-training of the pixel-domain upsampler; freezes it afterwards */
osr_status osr_pretrain_upsampler(osr_context* ctx, const char* corpus_dir, int steps,
                                  uint64_t seed, double* last_loss);

/* joint diffusion + LQA training for `steps` steps; on_step may be NULL */
osr_status osr_train(osr_context* ctx, const char* corpus_dir, int steps, osr_step_fn on_step,
                     void* user);

/* ---- inference -------------------------------------------------------- */

/* Super-resolve lr_png into out_png. Either scale >= 1 (out_h = out_w = 0)
 * or an explicit output size (scale = 0). steps <= 0 selects the default
 * (50). class_id < 0 selects the unconditional class. */
osr_status osr_sample(osr_context* ctx, const char* lr_png, const char* out_png, double scale,
                      int out_h, int out_w, int steps, uint64_t seed, int class_id);

/* ---- evaluation ------------------------------------------------------- */

/* Scale-grid evaluation over PNGs in corpus_dir. protocol_text: flat config
 * ([eval] section) or NULL for the default grid. Writes the CSV and, when
 * grid_png is non-NULL, the LR/bicubic/model/HR comparison strip. */
osr_status osr_eval(osr_context* ctx, const char* corpus_dir, const char* protocol_text,
                    uint64_t seed, const char* csv_path, const char* grid_png);

#ifdef __cplusplus
}
#endif

#endif /* OMNISCALE_H */
