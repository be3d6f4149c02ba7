#ifndef IFCRITIC_H
#define IFCRITIC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define IFC_API __attribute__((visibility("default")))
#else
#define IFC_API
#endif

typedef enum ifc_status
{
  IFC_OK = 0,
  IFC_PARTIAL = 1,          /* command finished, some records failed */
  IFC_ERR_INVALID_ARG = -1,
  IFC_ERR_CONFIG = -2,
  IFC_ERR_IO = -3,
  IFC_ERR_SCHEMA = -4,
  IFC_ERR_PARSE = -5,
  IFC_ERR_PROVIDER = -6,
  IFC_ERR_INTERNAL = -7,
} ifc_status;

typedef struct ifc_context ifc_context;

/* Message of the last failing call on this thread; never NULL. */
IFC_API const char* ifc_last_error(void);

IFC_API const char* ifc_version(void);

IFC_API void ifc_string_free(char* s);

/* ---- context ----------------------------------------------------------- */

/* config_path may be NULL for an all-defaults config with no providers. */
IFC_API ifc_status ifc_context_new(const char* config_path, ifc_context** out);
IFC_API void ifc_context_free(ifc_context* ctx);

/* Overrides, applied before the first command runs. */
IFC_API ifc_status ifc_context_set_cache_dir(ifc_context* ctx, const char* dir);
IFC_API ifc_status ifc_context_set_provider(ifc_context* ctx, const char* provider);
IFC_API ifc_status ifc_context_set_concurrency(ifc_context* ctx, size_t concurrency);
IFC_API ifc_status ifc_context_set_seed(ifc_context* ctx, uint64_t seed);
IFC_API ifc_status ifc_context_skip_stage(ifc_context* ctx, const char* stage);
/* Silences per-record diagnostics on stderr. */
IFC_API ifc_status ifc_context_set_quiet(ifc_context* ctx, int quiet);

typedef struct ifc_stats
{
  size_t provider_calls;
  size_t cache_hits;
  size_t cache_misses;
} ifc_stats;

IFC_API ifc_status ifc_context_stats(ifc_context* ctx, ifc_stats* out);

/* JSON summary of the last command run on ctx; caller frees. */
IFC_API ifc_status ifc_context_last_summary(ifc_context* ctx, char** out_json);

/* ---- commands ----------------------------------------------------------
 * All paths are files of line-delimited records. */

IFC_API ifc_status ifc_cmd_checklist(ifc_context* ctx, const char* inputs, const char* out);

/* provenance: "expert", "self" or "predicted"; samples <= 0 uses the config. */
IFC_API ifc_status ifc_cmd_critique(ifc_context* ctx, const char* inputs, const char* checklists,
                                    const char* provenance, int samples, const char* out);

IFC_API ifc_status ifc_cmd_filter(ifc_context* ctx, const char* inputs, const char* checklists,
                                  const char* samples, const char* out, const char* report,
                                  const char* work_dir, int resume);

/* split_out may be NULL. */
IFC_API ifc_status ifc_cmd_prefpairs(ifc_context* ctx, const char* inputs, const char* checklists,
                                     const char* self_samples, const char* final_critiques,
                                     const char* out, const char* split_out);

IFC_API ifc_status ifc_cmd_reward(ifc_context* ctx, const char* inputs, const char* critiques,
                                  const char* out);

IFC_API ifc_status ifc_cmd_dpo_select(ifc_context* ctx, const char* rewards, const char* out);

IFC_API ifc_status ifc_cmd_metaeval(ifc_context* ctx, const char* inputs, const char* predictions,
                                    const char* gold, const char* out);

/* out of NULL or "-" prints to stdout. */
IFC_API ifc_status ifc_cmd_report(ifc_context* ctx, const char* metrics, const char* out);

/* ---- pure helpers ------------------------------------------------------ */

IFC_API ifc_status ifc_gestalt_ratio(const char* a, const char* b, double* out);

/* Parses critique text against a checklist given as a JSON array of
 * constraint strings; returns the segments as a JSON array. */
IFC_API ifc_status ifc_parse_critique(const char* text, const char* checklist_json, char** out_json);

/* Renders a JSON array of segments back to critique text. */
IFC_API ifc_status ifc_render_critique(const char* segments_json, char** out_text);

/* Fraction of judgments equal to 1, as an exact fraction. */
IFC_API ifc_status ifc_checklist_reward(const int* judgments, size_t n, int64_t* numerator,
                                        int64_t* denominator);

#ifdef __cplusplus
}
#endif

#endif
