#ifndef GLCNET_GLCNET_H
#define GLCNET_GLCNET_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define GLC_API __attribute__((visibility("default")))
#else
#define GLC_API
#endif

typedef enum glc_status {
  GLC_OK = 0,
  GLC_INVALID_ARGUMENT = 1,
  GLC_IO = 2,
  GLC_FORMAT = 3,
  GLC_NUMERIC = 4,
  GLC_STATE = 5,
  GLC_INTERNAL = 6
} glc_status;

typedef struct glc_config glc_config;
typedef struct glc_metrics glc_metrics;

/* Message of the last failed call on this thread ("" if none). */
GLC_API const char* glc_last_error(void);
GLC_API const char* glc_version(void);
/* 0 quiet, 1 progress (default), 2 verbose; messages go to stderr. */
GLC_API void glc_set_verbosity(int level);

/* Paper-scale defaults. */
GLC_API glc_status glc_config_create(glc_config** out);
GLC_API glc_status glc_config_load(const char* path, glc_config** out);
GLC_API glc_status glc_config_parse(const char* text, glc_config** out);
GLC_API void glc_config_destroy(glc_config* cfg);
/* Dotted keys, e.g. "pretrain.lambda". */
GLC_API glc_status glc_config_set(glc_config* cfg, const char* key, const char* value);
/* Copies the value into buf (NUL-terminated); *needed gets the full length + 1. */
GLC_API glc_status glc_config_get(const glc_config* cfg, const char* key, char* buf, size_t size, size_t* needed);
GLC_API glc_status glc_config_validate(const glc_config* cfg);
GLC_API glc_status glc_config_hash(const glc_config* cfg, uint64_t* out);
GLC_API glc_status glc_config_canonical(const glc_config* cfg, char* buf, size_t size, size_t* needed);

GLC_API glc_status glc_cmd_synth(const glc_config* cfg, const char* out_dir);
/* scene_dir may be NULL or "" (data.root, then GLCNET_DATA_ROOT). */
GLC_API glc_status glc_cmd_tile(const glc_config* cfg, const char* scene_dir, const char* out_dir);
GLC_API glc_status glc_cmd_pretrain(const glc_config* cfg, const char* manifest_dir, const char* out_dir);
/* checkpoint may be NULL when finetune.load_groups is empty; metrics may be NULL. */
GLC_API glc_status glc_cmd_finetune(const glc_config* cfg, const char* manifest_dir, const char* checkpoint,
                                    const char* out_dir, glc_metrics** metrics);
GLC_API glc_status glc_cmd_evaluate(const glc_config* cfg, const char* manifest_dir, const char* checkpoint,
                                    const char* out_dir, glc_metrics** metrics);
GLC_API glc_status glc_cmd_ablate(const glc_config* cfg, const char* manifest_dir, const char* out_dir);
GLC_API glc_status glc_cmd_plot(const char* run_dir);

GLC_API glc_status glc_metrics_summary(const glc_metrics* m, double* oa, double* kappa, double* macro_f1);
GLC_API int glc_metrics_num_classes(const glc_metrics* m);
GLC_API glc_status glc_metrics_class(const glc_metrics* m, int c, double* f1, int64_t* support);
GLC_API void glc_metrics_destroy(glc_metrics* m);

#ifdef __cplusplus
}
#endif

#endif
