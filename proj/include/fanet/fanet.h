#ifndef FANET_FANET_H
#define FANET_FANET_H

#include <stddef.h>
#include <stdint.h>

#if defined(FANET_BUILDING_LIBRARY)
#define FANET_API __attribute__((visibility("default")))
#else
#define FANET_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every function returns a status. On failure the message is available
 * through fanet_last_error() until the next call on the same thread. */
typedef enum fanet_status {
    FANET_OK = 0,
    FANET_INVALID_ARGUMENT = 1,
    FANET_IO = 2,
    FANET_FORMAT = 3,
    FANET_RUNTIME = 4,
    FANET_BUFFER_TOO_SMALL = 5
} fanet_status;

typedef struct fanet_config fanet_config;
typedef struct fanet_sequence fanet_sequence;
typedef struct fanet_model fanet_model;
typedef struct fanet_tracker fanet_tracker;

typedef struct fanet_box {
    double x;
    double y;
    double w;
    double h;
} fanet_box;

typedef struct fanet_frame_result {
    fanet_box box;
    double f_plus;
    /* Mean RGB / thermal modality weights; both NaN for variants without
     * quality-aware aggregation. */
    double mean_a;
    double mean_b;
    int regressed;
    int short_term_update;
    int long_term_update;
} fanet_frame_result;

typedef struct fanet_train_record {
    int iteration;
    int domain;
    double l_cls;
    double l_inst;
    double total;
    double accuracy;
} fanet_train_record;

typedef void (*fanet_train_callback)(const fanet_train_record* record, void* user);

typedef struct fanet_eval_summary {
    double pr;
    double sr;
    double pr_threshold;
    size_t frames;
    size_t sequences;
} fanet_eval_summary;

FANET_API const char* fanet_version(void);
FANET_API const char* fanet_last_error(void);
FANET_API const char* fanet_status_name(fanet_status status);

/* ---- configuration ---------------------------------------------------- */

/* preset: "toy" or "paper-scale". */
FANET_API fanet_status fanet_config_create(const char* preset, fanet_config** out);
/* Parses a JSON config file; unknown keys are rejected. */
FANET_API fanet_status fanet_config_load(const char* path, fanet_config** out);
FANET_API fanet_status fanet_config_parse(const char* json_text, fanet_config** out);
/* Overrides one dotted key (e.g. "train.iterations_per_domain") with a JSON
 * value. "seed" also reseeds the synthetic generator. "preset" is rejected:
 * create a new config instead. */
FANET_API fanet_status fanet_config_set(fanet_config* config, const char* key, const char* json_value);
/* Writes the effective config as JSON. *needed receives the size including
 * the terminating NUL; FANET_BUFFER_TOO_SMALL if `capacity` is short. */
FANET_API fanet_status fanet_config_dump(const fanet_config* config, char* buffer, size_t capacity, size_t* needed);
FANET_API void fanet_config_destroy(fanet_config* config);

/* ---- sequences -------------------------------------------------------- */

FANET_API fanet_status fanet_sequence_load(const char* dir, fanet_sequence** out);
/* Renders the synthetic sequence described by the config's "synth" block. */
FANET_API fanet_status fanet_sequence_synthesize(const fanet_config* config, fanet_sequence** out);
FANET_API fanet_status fanet_sequence_write(const fanet_sequence* sequence, const char* dir);
FANET_API fanet_status fanet_sequence_frame_count(const fanet_sequence* sequence, size_t* out);
FANET_API fanet_status fanet_sequence_gt(const fanet_sequence* sequence, size_t frame, fanet_box* out);
/* Directory name for loaded sequences, synth.name for synthesized ones. */
FANET_API const char* fanet_sequence_name(const fanet_sequence* sequence);
FANET_API void fanet_sequence_destroy(fanet_sequence* sequence);

/* ---- models ----------------------------------------------------------- */

/* Offline training on every sequence directory below dataset_dir (one
 * domain per sequence). `init_weights` may be NULL; otherwise matching
 * tensors of that archive initialize the network. `callback` may be NULL. */
FANET_API fanet_status fanet_model_train(const fanet_config* config, const char* dataset_dir, const char* init_weights,
                                         fanet_train_callback callback, void* user, fanet_model** out);
/* Writes the per-iteration loss trace of the last training run as CSV. */
FANET_API fanet_status fanet_model_write_loss_trace(const fanet_model* model, const char* path);
FANET_API fanet_status fanet_model_save(const fanet_model* model, const char* path);
FANET_API fanet_status fanet_model_load(const char* path, fanet_model** out);
FANET_API fanet_status fanet_model_parameter_count(const fanet_model* model, size_t* out);
FANET_API fanet_status fanet_model_checksum(const fanet_model* model, uint64_t* out);
/* Variant name of the network, e.g. "full". */
FANET_API const char* fanet_model_variant(const fanet_model* model);
FANET_API void fanet_model_destroy(fanet_model* model);

/* ---- tracking --------------------------------------------------------- */

/* Initializes on frame 0 of the sequence using the config's online block
 * and seed. */
FANET_API fanet_status fanet_tracker_create(const fanet_model* model, const fanet_config* config,
                                            const fanet_sequence* sequence, fanet_tracker** out);
FANET_API fanet_status fanet_tracker_step(fanet_tracker* tracker, const fanet_sequence* sequence, size_t frame,
                                          fanet_frame_result* out);
FANET_API void fanet_tracker_destroy(fanet_tracker* tracker);

/* Tracks a whole sequence and writes one "x,y,w,h" line per frame.
 * `attention_path` may be NULL. */
FANET_API fanet_status fanet_track_sequence(const fanet_model* model, const fanet_config* config,
                                            const fanet_sequence* sequence, const char* results_path,
                                            const char* attention_path);

/* ---- evaluation ------------------------------------------------------- */

/* mode: "gtot" (PR at 5 px) or "rgbt234" (PR at 20 px). Writes report.csv,
 * curve CSVs and, if `plots` is non-zero, PNG plots into out_dir (which may
 * be NULL to skip emission). `summary` may be NULL. */
FANET_API fanet_status fanet_evaluate(const char* results_dir, const char* dataset_dir, const char* mode,
                                      int per_sequence_mean, const char* out_dir, int plots,
                                      fanet_eval_summary* summary);

#ifdef __cplusplus
}
#endif

#endif
