/* C interface of the gammacell library. All handles are opaque; every call
 * that can fail returns a gc_status and leaves a message in gc_last_error(). */
#ifndef GAMMACELL_H
#define GAMMACELL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(GAMMACELL_BUILDING)
#define GC_API __attribute__((visibility("default")))
#else
#define GC_API
#endif

typedef enum gc_status {
  GC_OK = 0,
  GC_INVALID = 1, /* validation error: bad config, arguments or input files */
  GC_COMPUTE = 2, /* numerical failure */
  GC_IO = 3,      /* output could not be written */
  GC_INTERNAL = 4
} gc_status;

typedef struct gc_config gc_config;
typedef struct gc_report gc_report;
typedef struct gc_density gc_density;

typedef struct gc_row {
  const char* experiment; /* valid until the report is freed */
  const char* kind;
  int n;                  /* X is n x n, row-major in X[0 .. n*n) */
  double X[9];
  double delta;
  int k;
  int res;
  double value;
  int converged;
  double wall_time;
  uint64_t seed;
} gc_row;

GC_API const char* gc_version(void);
/* Message of the last failed call on this thread ("" if none). */
GC_API const char* gc_last_error(void);

/* Copies of strings use the (buf, cap, needed) convention: *needed receives
 * strlen + 1; buf may be NULL with cap 0 to query the size. */

GC_API gc_status gc_config_load(const char* path, gc_config** out);
GC_API gc_status gc_config_parse(const char* toml_text, gc_config** out);
GC_API void gc_config_free(gc_config* c);
GC_API gc_status gc_config_set_seed(gc_config* c, uint64_t seed);
GC_API gc_status gc_config_get_seed(const gc_config* c, uint64_t* seed);
GC_API gc_status gc_config_set_workers(gc_config* c, int workers);
/* NULL disables the disk cache. */
GC_API gc_status gc_config_set_cache_dir(gc_config* c, const char* dir);
GC_API gc_status gc_config_set_out_dir(gc_config* c, const char* dir);
GC_API gc_status gc_config_get_out_dir(const gc_config* c, char* buf, size_t cap, size_t* needed);
/* Comma-separated output formats from [io].formats, e.g. "csv,json". */
GC_API gc_status gc_config_get_formats(const gc_config* c, char* buf, size_t cap, size_t* needed);
GC_API gc_status gc_config_hash(const gc_config* c, char* buf, size_t cap, size_t* needed);
/* Newline-separated job list of a command; validates without computing. */
GC_API gc_status gc_config_describe_jobs(const gc_config* c, const char* command, char* buf, size_t cap,
                                         size_t* needed);

/* command: cell, homog, envelope, korn, rigidity, commute, equiv, diagonal, addition. */
GC_API gc_status gc_run(const gc_config* c, const char* command, gc_report** out);

GC_API gc_status gc_report_load(const char* path, gc_report** out);
GC_API void gc_report_free(gc_report* r);
/* format: "csv" or "json". */
GC_API gc_status gc_report_write(const gc_report* r, const char* format, const char* path);
GC_API gc_status gc_report_to_string(const gc_report* r, const char* format, char* buf, size_t cap, size_t* needed);
GC_API gc_status gc_report_plot(const gc_report* r, const char* kind, const char* path, int log_scale);
GC_API size_t gc_report_row_count(const gc_report* r);
GC_API gc_status gc_report_row(const gc_report* r, size_t i, gc_row* out);
GC_API size_t gc_report_check_count(const gc_report* r);
GC_API gc_status gc_report_check(const gc_report* r, size_t i, const char** name, int* pass);
GC_API size_t gc_report_metric_count(const gc_report* r);
GC_API gc_status gc_report_metric(const gc_report* r, size_t i, const char** name, double* value);
GC_API size_t gc_report_note_count(const gc_report* r);
GC_API const char* gc_report_note(const gc_report* r, size_t i);
GC_API const char* gc_report_config_hash(const gc_report* r);
GC_API uint64_t gc_report_seed(const gc_report* r);
/* 1 when every check passes (vacuously true without checks). */
GC_API int gc_report_all_checks_pass(const gc_report* r);

/* Density from a TOML snippet using the [density] keys at top level. */
GC_API gc_status gc_density_parse(const char* toml_text, gc_density** out);
GC_API void gc_density_free(gc_density* d);
GC_API int gc_density_dim(const gc_density* d);
/* x has n entries, X n*n row-major. */
GC_API gc_status gc_density_eval(const gc_density* d, const double* x, const double* X, double* out);
GC_API gc_status gc_density_grad(const gc_density* d, const double* x, const double* X, double* out);
GC_API gc_status gc_dist_so(int n, const double* X, double* out);
GC_API gc_status gc_cell_energy(const gc_density* d, const double* X, int k, int res, int symmetrized, double delta,
                                uint64_t seed, double* m_value, int* converged);
GC_API gc_status gc_oracle_1d_homog(const double* a, const double* theta, size_t count, double p, double X,
                                    double* out);

#ifdef __cplusplus
}
#endif

#endif
