/* srnet - space-time memory video object segmentation, C API.
 *
 * The core is a C++ library exposed behind this flat interface: opaque
 * handles, integer status codes, and a per-thread error message. Every
 * function returns SRNET_OK (0) on success; on failure it returns a code
 * below and srnet_last_error() carries the detail.
 */

#ifndef SRNET_H
#define SRNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SRNET_API __declspec(dllexport)
#else
#define SRNET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum srnet_status {
  SRNET_OK = 0,
  SRNET_ERR_INVALID_ARGUMENT = 1,
  SRNET_ERR_IO = 2,
  SRNET_ERR_PROTOCOL = 3,
  SRNET_ERR_UNSUPPORTED = 4,
  SRNET_ERR_NUMERIC = 5,
  SRNET_ERR_INTERNAL = 6
} srnet_status;

/* Message for the most recent failure on this thread; never NULL. */
SRNET_API const char* srnet_last_error(void);

SRNET_API const char* srnet_version(void);

/* Frees any string returned through a char** out-parameter. */
SRNET_API void srnet_string_free(char* s);

/* ---- configuration -------------------------------------------------- */

/* Flat "key = value" configuration with dotted keys. */
typedef struct srnet_config srnet_config;

SRNET_API srnet_status srnet_config_create(srnet_config** out);
SRNET_API srnet_status srnet_config_load(const char* path, srnet_config** out);
SRNET_API srnet_status srnet_config_set(srnet_config* cfg, const char* key,
                                        const char* value);
/* Writes the value into buf (NUL-terminated); fails if the key is absent or
 * buf_len is too small. */
SRNET_API srnet_status srnet_config_get(const srnet_config* cfg,
                                        const char* key, char* buf,
                                        size_t buf_len);
SRNET_API void srnet_config_destroy(srnet_config* cfg);

/* ---- one-shot pipeline entry points ---------------------------------- */

/* Renders a synthetic sequence spec into out_dir/frames (PPM) and
 * out_dir/gt (PGM label maps). */
SRNET_API srnet_status srnet_synth(const char* spec_path, const char* out_dir);

/* Trains on the sequence described by spec_path and writes the model
 * (config.txt, params/) plus loss.csv under out_dir. cfg may be NULL for
 * defaults. final_loss may be NULL. */
SRNET_API srnet_status srnet_train(const char* spec_path,
                                   const srnet_config* cfg,
                                   const char* out_dir, double* final_loss);

/* Segments every frame in frames_dir given the first-frame annotation;
 * writes mask_%04d.pgm label maps into out_dir. fps may be NULL. */
SRNET_API srnet_status srnet_infer(const char* model_dir,
                                   const char* frames_dir,
                                   const char* mask0_path, const char* out_dir,
                                   double* fps);

/* Scores predictions against ground truth and writes a CSV report
 * (sequence,object,J,F,JF). mean_j/mean_f may be NULL. */
SRNET_API srnet_status srnet_eval(const char* pred_dir, const char* gt_dir,
                                  const char* report_csv, double* mean_j,
                                  double* mean_f);

/* Runs the ablation variants listed in cfg key "ablate.variants" (comma
 * separated) on the sequence spec at key "ablate.spec"; writes a text table
 * to report_path and returns it in table_out when non-NULL. */
SRNET_API srnet_status srnet_ablate(const srnet_config* cfg,
                                    const char* report_path, char** table_out);

/* Gradient certification. op may be NULL (all ops) or a name substring.
 * Returns the table text in table_out (free with srnet_string_free) and the
 * number of failing rows in num_failed when non-NULL. */
SRNET_API srnet_status srnet_gradcheck(const char* op, char** table_out,
                                       int* num_failed);

/* ---- frame-by-frame inference sessions -------------------------------- */

typedef struct srnet_model srnet_model;
typedef struct srnet_session srnet_session;

SRNET_API srnet_status srnet_model_load(const char* model_dir,
                                        srnet_model** out);
SRNET_API void srnet_model_destroy(srnet_model* model);

/* Frame geometry the model's parameters are bound to. */
SRNET_API srnet_status srnet_model_frame_size(const srnet_model* model,
                                              int* height, int* width);

SRNET_API srnet_status srnet_session_create(const srnet_model* model,
                                            int num_objects,
                                            srnet_session** out);
SRNET_API void srnet_session_destroy(srnet_session* session);

/* rgb: height*width*3 floats in [0,1], row-major. labels: height*width
 * bytes with object ids (0 = background). Must be called once before the
 * first step. */
SRNET_API srnet_status srnet_session_set_reference(srnet_session* session,
                                                   const float* rgb,
                                                   const uint8_t* labels);

/* Predicts the next frame's labels into labels_out (height*width bytes).
 * probs_out, when non-NULL, receives height*width*(num_objects+1) floats of
 * per-pixel class probabilities (background first). */
SRNET_API srnet_status srnet_session_step(srnet_session* session,
                                          const float* rgb,
                                          uint8_t* labels_out,
                                          float* probs_out);

#ifdef __cplusplus
}
#endif

#endif /* SRNET_H */
