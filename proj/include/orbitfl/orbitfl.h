#ifndef ORBITFL_H
#define ORBITFL_H

/* C interface to the orbitfl simulator. All handles are opaque; every
 * function returning ofl_status leaves a description of a failure in
 * ofl_last_error() (per thread). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define OFL_API __declspec(dllexport)
#elif defined(__GNUC__)
#define OFL_API __attribute__((visibility("default")))
#else
#define OFL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ofl_status {
  OFL_OK = 0,
  OFL_ERR_CONFIG = 1,
  OFL_ERR_RUNTIME = 2,
  OFL_ERR_DEADLOCK = 3,
  OFL_ERR_IO = 4,
  OFL_ERR_INVALID_ARG = 5
} ofl_status;

typedef struct ofl_scenario ofl_scenario;
typedef struct ofl_result ofl_result;
typedef struct ofl_comparison ofl_comparison;

typedef struct ofl_record {
  double sim_time_s;
  int32_t epoch;
  double test_accuracy;
  double test_loss;
  int64_t ps_down_msgs;
  int64_t ps_down_bits;
  int64_t ps_up_msgs;
  int64_t ps_up_bits;
  int64_t isl_msgs;
  int64_t isl_bits;
  int64_t fallback_hops;
  double epoch_duration_s;
} ofl_record;

OFL_API const char* ofl_version(void);
OFL_API const char* ofl_last_error(void);

/* scenarios */
OFL_API ofl_status ofl_scenario_default(ofl_scenario** out);
OFL_API ofl_status ofl_scenario_load(const char* path, ofl_scenario** out);
OFL_API ofl_status ofl_scenario_parse(const char* text, ofl_scenario** out);
OFL_API ofl_status ofl_scenario_clone(const ofl_scenario* s, ofl_scenario** out);
OFL_API void ofl_scenario_free(ofl_scenario* s);

OFL_API ofl_status ofl_scenario_set_seed(ofl_scenario* s, uint64_t seed);
OFL_API ofl_status ofl_scenario_get_seed(const ofl_scenario* s, uint64_t* seed);
/* "fedisl" or "fednonisl" */
OFL_API ofl_status ofl_scenario_set_protocol(ofl_scenario* s, const char* name);
OFL_API ofl_status ofl_scenario_set_horizon_hours(ofl_scenario* s, double hours);
OFL_API ofl_status ofl_scenario_set_max_epochs(ofl_scenario* s, int32_t epochs);
/* 0 skips local training (timing-only run). */
OFL_API ofl_status ofl_scenario_set_train(ofl_scenario* s, int train);

/* Scenario invariants (ISL visibility, data split). *num_problems receives the
 * number of problems; each is readable with ofl_scenario_problem until the
 * next call on the same handle. */
OFL_API ofl_status ofl_scenario_validate(ofl_scenario* s, size_t* num_problems);
OFL_API const char* ofl_scenario_problem(const ofl_scenario* s, size_t index);

OFL_API ofl_status ofl_scenario_write_canonical(const ofl_scenario* s, const char* path);

/* satellite-PS windows in [from_s, from_s + horizon_s] as CSV */
OFL_API ofl_status ofl_contacts_write_csv(const ofl_scenario* s, double from_s, double horizon_s, const char* path,
                                          size_t* num_windows);

/* runs */
OFL_API ofl_status ofl_run(const ofl_scenario* s, ofl_result** out);
OFL_API void ofl_result_free(ofl_result* r);
OFL_API size_t ofl_result_num_records(const ofl_result* r);
OFL_API ofl_status ofl_result_record(const ofl_result* r, size_t index, ofl_record* out);
OFL_API double ofl_result_initial_accuracy(const ofl_result* r);
OFL_API double ofl_result_end_time(const ofl_result* r);
/* echo_seed != 0 writes a leading "# seed=<n>" comment line */
OFL_API ofl_status ofl_result_write_csv(const ofl_result* r, const char* path, int echo_seed);

/* comparisons: a is the baseline, b the candidate; target <= 0 means 95% of
 * the best accuracy of b */
OFL_API ofl_status ofl_compare(const ofl_scenario* a, const ofl_scenario* b, double target, ofl_comparison** out);
OFL_API void ofl_comparison_free(ofl_comparison* c);
/* speedup is +inf when either run missed the target */
OFL_API double ofl_comparison_speedup(const ofl_comparison* c);
OFL_API double ofl_comparison_traffic_ratio(const ofl_comparison* c);
OFL_API double ofl_comparison_target(const ofl_comparison* c);
/* which = 0 for a, 1 for b; the result stays owned by the comparison */
OFL_API const ofl_result* ofl_comparison_result(const ofl_comparison* c, int which);
OFL_API ofl_status ofl_comparison_write_csv(const ofl_comparison* c, const char* path);

#ifdef __cplusplus
}
#endif

#endif
