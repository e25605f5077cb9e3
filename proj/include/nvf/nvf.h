#ifndef NVF_NVF_H
#define NVF_NVF_H

#include <stddef.h>

#if defined(_WIN32)
#define NVF_API __declspec(dllexport)
#else
#define NVF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nvf_status {
  NVF_OK = 0,
  NVF_ERR_CONFIG = 1,
  NVF_ERR_CONTRACT = 2,
  NVF_ERR_IO = 3,
  NVF_ERR_FORMAT = 4,
  NVF_ERR_TRAINING = 5,
  NVF_ERR_EDIT = 6,
  NVF_ERR_OPTIMIZER = 7,
  NVF_ERR_INTERNAL = 8
} nvf_status;

typedef struct nvf_config nvf_config;
typedef struct nvf_video nvf_video;
typedef struct nvf_field nvf_field;

/* Message of the most recent failing call on this thread; "" if none. */
NVF_API const char* nvf_last_error(void);
/* Lower-case kind name: "config", "io", "format", ... */
NVF_API const char* nvf_status_kind(nvf_status status);
/* Frees strings returned through char** out-parameters. */
NVF_API void nvf_string_free(char* s);

/* Configuration: flat `key = value` text validated against the schema. */
NVF_API nvf_status nvf_config_new(nvf_config** out);
NVF_API nvf_status nvf_config_load(const char* path, nvf_config** out);
NVF_API nvf_status nvf_config_parse(const char* text, nvf_config** out);
NVF_API nvf_status nvf_config_set(nvf_config* config, const char* key, const char* value);
NVF_API nvf_status nvf_config_schema_json(char** out);
NVF_API void nvf_config_free(nvf_config* config);

/* Videos are T x H x W x 3 float arrays in [0,1], row-major. Paths ending in
   .y4m are Y4M files; anything else is a directory of frame-%05d.png. */
NVF_API nvf_status nvf_video_load(const char* path, nvf_video** out);
NVF_API nvf_status nvf_video_from_data(int frames, int height, int width, const float* data, double fps,
                                       nvf_video** out);
/* kind: "moving-square" or "constant". */
NVF_API nvf_status nvf_video_synthetic(const char* kind, int frames, int height, int width, nvf_video** out);
NVF_API nvf_status nvf_video_save(const nvf_video* video, const char* path);
NVF_API nvf_status nvf_video_shape(const nvf_video* video, int* frames, int* height, int* width);
NVF_API const float* nvf_video_data(const nvf_video* video);
NVF_API void nvf_video_free(nvf_video* video);

/* Fitted field parameters (NVF1 files). */
NVF_API nvf_status nvf_field_init(const nvf_config* config, const nvf_video* video, nvf_field** out);
NVF_API nvf_status nvf_field_load(const char* path, nvf_field** out);
NVF_API nvf_status nvf_field_save(const nvf_field* field, const char* path);
NVF_API nvf_status nvf_field_shape(const nvf_field* field, int* frames, int* height, int* width,
                                   size_t* parameter_count);
NVF_API void nvf_field_free(nvf_field* field);

/* Initialises a field from the config and fits it to the video. */
NVF_API nvf_status nvf_fit(const nvf_config* config, const nvf_video* video, nvf_field** out_field,
                           char** out_report_json);
/* Edits the field in place with the configured editor. */
NVF_API nvf_status nvf_edit(const nvf_config* config, nvf_field* field, const nvf_video* video,
                            char** out_report_json);
/* Renders the source frame grid with `interp` novel frames between each
   pair. width/height 0 select the source size. */
NVF_API nvf_status nvf_render(const nvf_field* field, int width, int height, int interp, double fps, int threads,
                              nvf_video** out);
NVF_API nvf_status nvf_metrics(const nvf_video* a, const nvf_video* b, char** out_json);
/* One fit step and one edit step per frame count on a synthetic video. */
NVF_API nvf_status nvf_bench_mem(const nvf_config* config, const int* frames, size_t count, int height, int width,
                                 char** out_json);

#ifdef __cplusplus
}
#endif

#endif
