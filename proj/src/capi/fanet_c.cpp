#include "fanet/fanet.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <new>
#include <optional>
#include <string>

#include "core/config.hpp"
#include "core/error.hpp"
#include "core/metrics.hpp"
#include "core/tracker.hpp"
#include "core/trainer.hpp"

struct fanet_config {
    fanet::RunConfig value;
};

struct fanet_sequence {
    fanet::RGBTSequence value;
};

struct fanet_model {
    fanet::ModelParams value;
    std::vector<fanet::LossRecord> trace;
    std::string variant;
};

struct fanet_tracker {
    fanet::TrackerState state;
};

namespace {

thread_local std::string last_error;

fanet_status status_of(fanet::ErrorKind kind) {
    switch (kind) {
        case fanet::ErrorKind::InvalidArgument: return FANET_INVALID_ARGUMENT;
        case fanet::ErrorKind::Io: return FANET_IO;
        case fanet::ErrorKind::Format: return FANET_FORMAT;
        case fanet::ErrorKind::Runtime: return FANET_RUNTIME;
    }
    return FANET_RUNTIME;
}

fanet_status fail_with(fanet_status status, std::string message) {
    last_error = std::move(message);
    return status;
}

template <class F>
fanet_status guarded(F&& body) {
    try {
        last_error.clear();
        body();
        return FANET_OK;
    } catch (const fanet::Error& e) {
        return fail_with(status_of(e.kind()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail_with(FANET_FORMAT, e.what());
    } catch (const std::bad_alloc&) {
        return fail_with(FANET_RUNTIME, "out of memory");
    } catch (const std::exception& e) {
        return fail_with(FANET_RUNTIME, e.what());
    }
}

void need(const void* p, const char* what) {
    if (p == nullptr) {
        throw fanet::Error(fanet::ErrorKind::InvalidArgument, std::string(what) + " must not be NULL");
    }
}

fanet_box to_c(const fanet::Box& b) { return {b.x, b.y, b.w, b.h}; }

nlohmann::json nest(const std::string& key, nlohmann::json value) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
        return nlohmann::json{{key, std::move(value)}};
    }
    return nlohmann::json{{key.substr(0, dot), nest(key.substr(dot + 1), std::move(value))}};
}

}  // namespace

extern "C" {

const char* fanet_version(void) { return "0.1.0"; }

const char* fanet_last_error(void) { return last_error.c_str(); }

const char* fanet_status_name(fanet_status status) {
    switch (status) {
        case FANET_OK: return "ok";
        case FANET_INVALID_ARGUMENT: return "invalid argument";
        case FANET_IO: return "i/o error";
        case FANET_FORMAT: return "format error";
        case FANET_RUNTIME: return "runtime error";
        case FANET_BUFFER_TOO_SMALL: return "buffer too small";
    }
    return "unknown status";
}

fanet_status fanet_config_create(const char* preset, fanet_config** out) {
    return guarded([&] {
        need(preset, "preset");
        need(out, "out");
        *out = new fanet_config{fanet::default_run_config(preset)};
    });
}

fanet_status fanet_config_parse(const char* json_text, fanet_config** out) {
    return guarded([&] {
        need(json_text, "json_text");
        need(out, "out");
        *out = new fanet_config{fanet::parse_run_config(json_text)};
    });
}

fanet_status fanet_config_load(const char* path, fanet_config** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            fanet::fail(fanet::ErrorKind::Io, std::string("cannot open config ") + path);
        }
        const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        try {
            *out = new fanet_config{fanet::parse_run_config(text)};
        } catch (const fanet::Error& e) {
            fanet::fail(e.kind(), std::string(path) + ": " + e.what());
        }
    });
}

fanet_status fanet_config_set(fanet_config* config, const char* key, const char* json_value) {
    return guarded([&] {
        need(config, "config");
        need(key, "key");
        need(json_value, "json_value");
        nlohmann::json value;
        try {
            value = nlohmann::json::parse(json_value);
        } catch (const nlohmann::json::exception&) {
            fanet::fail(fanet::ErrorKind::InvalidArgument,
                        std::string("value for '") + key + "' is not valid JSON: " + json_value);
        }
        const std::string k = key;
        auto patch = nest(k, value);
        if (k == "seed") {
            patch["synth"] = {{"seed", value}};
        }
        config->value = fanet::patch_run_config(config->value, patch);
    });
}

fanet_status fanet_config_dump(const fanet_config* config, char* buffer, size_t capacity, size_t* needed) {
    std::string text;
    const auto st = guarded([&] {
        need(config, "config");
        text = fanet::dump_run_config(config->value);
    });
    if (st != FANET_OK) return st;
    if (needed) *needed = text.size() + 1;
    if (buffer == nullptr || capacity < text.size() + 1) {
        return fail_with(FANET_BUFFER_TOO_SMALL, "config dump needs " + std::to_string(text.size() + 1) + " bytes");
    }
    std::memcpy(buffer, text.c_str(), text.size() + 1);
    return FANET_OK;
}

void fanet_config_destroy(fanet_config* config) { delete config; }

fanet_status fanet_sequence_load(const char* dir, fanet_sequence** out) {
    return guarded([&] {
        need(dir, "dir");
        need(out, "out");
        *out = new fanet_sequence{fanet::load_sequence(dir)};
    });
}

fanet_status fanet_sequence_synthesize(const fanet_config* config, fanet_sequence** out) {
    return guarded([&] {
        need(config, "config");
        need(out, "out");
        *out = new fanet_sequence{fanet::generate_synthetic(config->value.synth)};
    });
}

fanet_status fanet_sequence_write(const fanet_sequence* sequence, const char* dir) {
    return guarded([&] {
        need(sequence, "sequence");
        need(dir, "dir");
        fanet::write_sequence(sequence->value, dir);
    });
}

fanet_status fanet_sequence_frame_count(const fanet_sequence* sequence, size_t* out) {
    return guarded([&] {
        need(sequence, "sequence");
        need(out, "out");
        *out = sequence->value.frame_count();
    });
}

fanet_status fanet_sequence_gt(const fanet_sequence* sequence, size_t frame, fanet_box* out) {
    return guarded([&] {
        need(sequence, "sequence");
        need(out, "out");
        fanet::require(frame < sequence->value.gt.size(), "frame index " + std::to_string(frame) + " out of range");
        *out = to_c(sequence->value.gt[frame]);
    });
}

const char* fanet_sequence_name(const fanet_sequence* sequence) {
    return sequence ? sequence->value.name.c_str() : "";
}

void fanet_sequence_destroy(fanet_sequence* sequence) { delete sequence; }

fanet_status fanet_model_train(const fanet_config* config, const char* dataset_dir, const char* init_weights,
                               fanet_train_callback callback, void* user, fanet_model** out) {
    return guarded([&] {
        need(config, "config");
        need(dataset_dir, "dataset_dir");
        need(out, "out");
        const auto& cfg = config->value;
        std::vector<fanet::RGBTSequence> dataset;
        for (const auto& dir : fanet::list_sequence_dirs(dataset_dir)) {
            dataset.push_back(fanet::load_sequence(dir));
        }
        if (dataset.empty()) {
            fanet::fail(fanet::ErrorKind::InvalidArgument,
                        std::string("no sequences (subdirectories with gt.txt) in ") + dataset_dir);
        }
        cfg.train.validate();
        auto model = fanet::make_model(cfg.network, static_cast<int>(dataset.size()), cfg.seed);
        if (init_weights != nullptr) {
            fanet::load_weights(model, init_weights);
        }
        fanet::Adam optimizer(cfg.train.adam());
        std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
        std::vector<fanet::LossRecord> trace;
        const fanet::TrainProgress progress = [&](const fanet::LossRecord& r) {
            if (callback) {
                const fanet_train_record rec{r.iteration, r.domain, r.stats.l_cls, r.stats.l_inst, r.stats.total,
                                             r.stats.accuracy};
                callback(&rec, user);
            }
        };
        fanet::train_iterations(model, optimizer, dataset, cfg.train,
                                cfg.train.iterations_per_domain * static_cast<int>(dataset.size()), rng, trace,
                                progress);
        const auto variant = fanet::variant_name(model.config.variant);
        *out = new fanet_model{std::move(model), std::move(trace), variant};
    });
}

fanet_status fanet_model_write_loss_trace(const fanet_model* model, const char* path) {
    return guarded([&] {
        need(model, "model");
        need(path, "path");
        std::ofstream os(path, std::ios::binary);
        if (!os) {
            fanet::fail(fanet::ErrorKind::Io, std::string("cannot open ") + path + " for writing");
        }
        os << fanet::loss_trace_csv(model->trace);
        if (!os) {
            fanet::fail(fanet::ErrorKind::Io, std::string("write failed for ") + path);
        }
    });
}

fanet_status fanet_model_save(const fanet_model* model, const char* path) {
    return guarded([&] {
        need(model, "model");
        need(path, "path");
        fanet::save_checkpoint(model->value, nullptr, path);
    });
}

fanet_status fanet_model_load(const char* path, fanet_model** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        auto ck = fanet::load_checkpoint(path);
        const auto variant = fanet::variant_name(ck.model.config.variant);
        *out = new fanet_model{std::move(ck.model), {}, variant};
    });
}

fanet_status fanet_model_parameter_count(const fanet_model* model, size_t* out) {
    return guarded([&] {
        need(model, "model");
        need(out, "out");
        *out = model->value.parameter_count();
    });
}

fanet_status fanet_model_checksum(const fanet_model* model, uint64_t* out) {
    return guarded([&] {
        need(model, "model");
        need(out, "out");
        *out = model->value.checksum();
    });
}

const char* fanet_model_variant(const fanet_model* model) { return model ? model->variant.c_str() : ""; }

void fanet_model_destroy(fanet_model* model) { delete model; }

fanet_status fanet_tracker_create(const fanet_model* model, const fanet_config* config, const fanet_sequence* sequence,
                                  fanet_tracker** out) {
    return guarded([&] {
        need(model, "model");
        need(config, "config");
        need(sequence, "sequence");
        need(out, "out");
        const auto& seq = sequence->value;
        seq.validate();
        fanet::require(seq.frame_count() >= 1, "cannot track an empty sequence");
        *out = new fanet_tracker{fanet::init_first_frame(seq.rgb[0], seq.thermal[0], seq.gt[0], model->value,
                                                         config->value.online, config->value.seed)};
    });
}

fanet_status fanet_tracker_step(fanet_tracker* tracker, const fanet_sequence* sequence, size_t frame,
                                fanet_frame_result* out) {
    return guarded([&] {
        need(tracker, "tracker");
        need(sequence, "sequence");
        need(out, "out");
        const auto& seq = sequence->value;
        fanet::require(frame < seq.frame_count(), "frame index " + std::to_string(frame) + " out of range");
        const auto r = fanet::track_frame(tracker->state, seq.rgb[frame], seq.thermal[frame]);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        *out = {to_c(r.box),
                r.f_plus,
                r.attention ? r.attention->mean_a() : nan,
                r.attention ? r.attention->mean_b() : nan,
                r.regressed ? 1 : 0,
                r.short_term_update ? 1 : 0,
                r.long_term_update ? 1 : 0};
    });
}

void fanet_tracker_destroy(fanet_tracker* tracker) { delete tracker; }

fanet_status fanet_track_sequence(const fanet_model* model, const fanet_config* config, const fanet_sequence* sequence,
                                  const char* results_path, const char* attention_path) {
    return guarded([&] {
        need(model, "model");
        need(config, "config");
        need(sequence, "sequence");
        need(results_path, "results_path");
        const auto run =
            fanet::track_sequence(sequence->value, model->value, config->value.online, config->value.seed);
        fanet::write_boxes(run.boxes, results_path);
        if (attention_path != nullptr) {
            std::ofstream os(attention_path, std::ios::binary);
            if (!os) {
                fanet::fail(fanet::ErrorKind::Io, std::string("cannot open ") + attention_path + " for writing");
            }
            os << fanet::attention_csv(run);
        }
    });
}

fanet_status fanet_evaluate(const char* results_dir, const char* dataset_dir, const char* mode, int per_sequence_mean,
                            const char* out_dir, int plots, fanet_eval_summary* summary) {
    return guarded([&] {
        need(results_dir, "results_dir");
        need(dataset_dir, "dataset_dir");
        need(mode, "mode");
        const auto report =
            fanet::evaluate_directory(results_dir, dataset_dir, fanet::parse_eval_mode(mode), per_sequence_mean != 0);
        if (out_dir != nullptr) {
            fanet::write_report(report, out_dir, plots != 0);
        }
        if (summary != nullptr) {
            *summary = {report.aggregate.pr, report.aggregate.sr, report.pr_threshold, report.aggregate.frames,
                        report.sequences.size()};
        }
    });
}

}  // extern "C"
