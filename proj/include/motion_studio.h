#ifndef MOTION_STUDIO_H
#define MOTION_STUDIO_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MOTION_STUDIO_BUILD)
#    define MS_API __declspec(dllexport)
#  else
#    define MS_API __declspec(dllimport)
#  endif
#else
#  define MS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ms_status {
  MS_OK = 0,
  MS_ERR_INVALID_ARGUMENT = 1,
  MS_ERR_DIMENSION_MISMATCH = 2,
  MS_ERR_OUT_OF_REACH = 3,
  MS_ERR_PARSE = 4,
  MS_ERR_VALIDATION = 5,
  MS_ERR_UNSUPPORTED_VERSION = 6,
  MS_ERR_UNKNOWN_PRESET = 7,
  MS_ERR_MODEL_MISMATCH = 8,
  MS_ERR_BUSY = 9,
  MS_ERR_TOO_SHORT = 10,
  MS_ERR_IO = 11,
  MS_ERR_PORT_BUSY = 12,
  MS_ERR_PROTOCOL = 13,
  MS_ERR_INTERNAL = 100
} ms_status;

typedef struct ms_model ms_model;
typedef struct ms_sequence ms_sequence;
typedef struct ms_log ms_log;
typedef struct ms_metric_config ms_metric_config;
typedef struct ms_report ms_report;
typedef struct ms_server ms_server;

/* Message describing the last failure on the calling thread; never NULL. */
MS_API const char* ms_last_error(void);
MS_API const char* ms_status_name(ms_status status);
MS_API const char* ms_version(void);
/* Frees strings returned through char** out-parameters. */
MS_API void ms_string_free(char* s);

/* ---- robot model ---- */
MS_API ms_status ms_model_load(const char* path, ms_model** out);
MS_API ms_status ms_model_from_json(const char* json, ms_model** out);
/* Built-in 2-link planar arm (links 1.0 m and 0.5 m). */
MS_API ms_status ms_model_planar2(ms_model** out);
MS_API void ms_model_free(ms_model* model);
MS_API size_t ms_model_dof(const ms_model* model);
MS_API ms_status ms_model_to_json(const ms_model* model, char** out);

/* orientation is a unit quaternion in w, x, y, z order. */
MS_API ms_status ms_fk(const ms_model* model, const double* q, size_t n, double position[3],
                       double orientation[4]);
/* Writes the 6 x n geometric Jacobian in row-major order. */
MS_API ms_status ms_jacobian(const ms_model* model, const double* q, size_t n, double* out);
MS_API ms_status ms_manipulability(const ms_model* model, const double* q, size_t n, double* out);
/* orientation may be NULL for a position-only target. q_out receives the
 * best solution even when it did not converge; *converged reports which. */
MS_API ms_status ms_ik(const ms_model* model, const double position[3], const double* orientation,
                       const double* seed, size_t n, double* q_out, int* converged);

/* ---- keyframe sequences ---- */
MS_API ms_status ms_sequence_load(const char* path, ms_sequence** out);
MS_API ms_status ms_sequence_from_json(const char* json, ms_sequence** out);
MS_API void ms_sequence_free(ms_sequence* seq);
MS_API ms_status ms_sequence_validate(const ms_sequence* seq, const ms_model* model);
MS_API ms_status ms_sequence_to_json(const ms_sequence* seq, char** out);
MS_API double ms_sequence_duration(const ms_sequence* seq);

/* ---- execution ----
 * sim_config is optional JSON: {"gains": {...}, "bindings": {...},
 * "teleop": {...}, "dt": s, "record_rate": Hz}. NULL means defaults. */
MS_API ms_status ms_play(const ms_model* model, const char* sim_config, const ms_sequence* seq,
                         double record_rate, ms_log** out);
/* events_json is an InputEvent list; recording runs settle seconds past the
 * last event. */
MS_API ms_status ms_replay(const ms_model* model, const char* sim_config, const char* events_json,
                           double settle, ms_log** out);

/* ---- trajectory logs ---- */
MS_API ms_status ms_log_load(const char* csv_path, ms_log** out);
/* Writes the CSV and its "<csv_path>.meta.json" sidecar. */
MS_API ms_status ms_log_write(const ms_log* log, const char* csv_path);
MS_API ms_status ms_log_to_csv(const ms_log* log, char** out);
MS_API size_t ms_log_rows(const ms_log* log);
MS_API void ms_log_free(ms_log* log);

/* ---- effort metrics ---- */
MS_API ms_status ms_metric_config_default(ms_metric_config** out);
MS_API ms_status ms_metric_config_load(const char* path, ms_metric_config** out);
MS_API void ms_metric_config_free(ms_metric_config* cfg);
/* cfg may be NULL for defaults. notes_json is optional:
 * {"impressions": "...", "meaning": "...", "intended": {...}}. */
MS_API ms_status ms_analyze(const ms_log* log, const ms_model* model, const ms_metric_config* cfg,
                            const char* notes_json, ms_report** out);
MS_API ms_status ms_report_json(const ms_report* report, char** out);
MS_API ms_status ms_report_text(const ms_report* report, char** out);
MS_API void ms_report_free(ms_report* report);
/* CSV with columns t,speed,jerk. */
MS_API ms_status ms_metric_series_csv(const ms_log* log, const ms_model* model, const ms_metric_config* cfg,
                                      char** out);

/* Checks one input file. kind is one of "model", "sequence", "bindings",
 * "metrics", "events", "gains", "log". model is required for "sequence"
 * and "gains", optional otherwise. */
MS_API ms_status ms_validate_file(const char* kind, const char* path, const ms_model* model);

/* ---- server ---- */
typedef struct ms_server_options {
  const char* address; /* NULL means 127.0.0.1 */
  int ws_port;         /* 0 picks a free port */
  int tcp_port;        /* < 0 disables the framed-TCP endpoint */
  double snapshot_rate;
  int fast;
} ms_server_options;

MS_API void ms_server_options_init(ms_server_options* options);
MS_API ms_status ms_server_create(const ms_model* model, const char* sim_config, const ms_metric_config* cfg,
                                  const ms_server_options* options, ms_server** out);
MS_API ms_status ms_server_start(ms_server* server);
MS_API uint16_t ms_server_ws_port(const ms_server* server);
MS_API uint16_t ms_server_tcp_port(const ms_server* server);
MS_API void ms_server_stop(ms_server* server);
/* Blocks until ms_server_stop is called from another thread. */
MS_API void ms_server_wait(ms_server* server);
MS_API void ms_server_free(ms_server* server);

#ifdef __cplusplus
}
#endif

#endif
