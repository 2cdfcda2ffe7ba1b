/* C API for the dstripes bit-serial accelerator simulator.
 *
 * All functions return DST_OK (0) on success or a dst_status error code;
 * dst_last_error() describes the most recent failure on the calling thread.
 * Objects returned through out-parameters are owned by the caller and must be
 * released with the matching *_free function.
 */
#ifndef DSTRIPES_C_H
#define DSTRIPES_C_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dst_status {
    DST_OK = 0,
    DST_ERR_INVALID_ARGUMENT = 1,
    DST_ERR_IO = 2,
    DST_ERR_FORMAT = 3,
    DST_ERR_STATE = 4,
    DST_ERR_INTERNAL = 5
} dst_status;

typedef enum dst_engine_kind {
    DST_ENGINE_BITPARALLEL = 0,
    DST_ENGINE_STRIPES = 1,
    DST_ENGINE_DYNAMIC = 2,
    DST_ENGINE_ESSENTIAL = 3
} dst_engine_kind;

typedef enum dst_profile_mode {
    DST_PROFILE_FIXED = 0,
    DST_PROFILE_MSP2 = 1
} dst_profile_mode;

typedef struct dst_trace dst_trace;
typedef struct dst_net dst_net;
typedef struct dst_profile dst_profile;
typedef struct dst_sim dst_sim;
typedef struct dst_report dst_report;

/* Message for the last error on this thread; empty string if none. */
const char* dst_last_error(void);

void dst_string_free(char* s);

/* ---- traces ------------------------------------------------------------ */

int dst_trace_read(const char* path, dst_trace** out);
int dst_trace_write(const dst_trace* trace, const char* path);
/* spec_json: {"base_width":16,"group_size":16,
               "layers":[{"name":"l0","groups":64,"spans":[{"span":8,"weight":1}]}]} */
int dst_trace_gen_synthetic(const char* spec_json, uint64_t seed, dst_trace** out);
int dst_trace_layer_count(const dst_trace* trace, uint32_t* out);
int dst_trace_base_width(const dst_trace* trace, int* out);
void dst_trace_free(dst_trace* trace);

/* ---- reference network ------------------------------------------------- */

int dst_net_from_json(const char* json_text, dst_net** out);
int dst_net_gen_trace(const dst_net* net, uint64_t input_seed, uint32_t batch, dst_trace** out);
void dst_net_free(dst_net* net);

/* ---- precision profiles ------------------------------------------------ */

/* target_retention in [0,1]: required fraction of eval inputs keeping their
 * baseline top-1 decision. exact_activations != 0 demands bit-identical
 * activations instead (yields the observed envelope in fixed mode). */
int dst_profile_run(const dst_net* net, dst_profile_mode mode, uint64_t input_seed,
                    uint32_t batch, double target_retention, int exact_activations,
                    dst_profile** out);
int dst_profile_envelope(const dst_trace* trace, dst_profile** out);
int dst_profile_read(const char* path, dst_profile** out);
int dst_profile_write(const dst_profile* profile, const char* path);
void dst_profile_free(dst_profile* profile);

/* ---- simulation -------------------------------------------------------- */

typedef struct dst_arch_config {
    int pallet_size;    /* default 256 */
    int subgroup_size;  /* default 16 */
    int base_width;     /* default 16 */
    int shifter_full;   /* nonzero: full-range shifter (essential engine) */
    int shifter_bits;   /* reach in bits when shifter_full == 0 */
} dst_arch_config;

void dst_arch_config_default(dst_arch_config* cfg);

int dst_sim_new(const dst_arch_config* cfg, dst_sim** out);
int dst_sim_add_engine(dst_sim* sim, dst_engine_kind kind);
/* profile may be NULL; required for the stripes engine. */
int dst_sim_add_trace(dst_sim* sim, const char* name, const dst_trace* trace,
                      const dst_profile* profile);
int dst_sim_run(dst_sim* sim, dst_report** out);
void dst_sim_free(dst_sim* sim);

/* ---- reports ----------------------------------------------------------- */

int dst_report_cycles(const dst_report* report, const char* network, dst_engine_kind kind,
                      uint64_t* out);
/* network == NULL or "": geometric mean across all networks. */
int dst_report_speedup(const dst_report* report, const char* network, dst_engine_kind kind,
                       dst_engine_kind baseline, double* out);
/* Returned string must be freed with dst_string_free. */
int dst_report_to_json(const dst_report* report, char** out);
int dst_report_to_csv(const dst_report* report, char** out);
void dst_report_free(dst_report* report);

/* ---- stateless helpers ------------------------------------------------- */

/* Keep only the `budget` most significant set bits of raw. */
int dst_msp2_truncate(uint32_t raw, int width, int budget, uint32_t* out);
/* Detect (n_high, n_low) of a group; *is_zero set for an all-zero group. */
int dst_detect_precision(const uint16_t* values, size_t count, int width, int* n_high,
                         int* n_low, int* is_zero);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DSTRIPES_C_H */
