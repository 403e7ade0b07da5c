// fanet command-line front end. Talks to the library only through the C API.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fanet/fanet.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct Failure {
    int code;
    std::string message;
};

struct ConfigDeleter {
    void operator()(fanet_config* p) const { fanet_config_destroy(p); }
};
struct SequenceDeleter {
    void operator()(fanet_sequence* p) const { fanet_sequence_destroy(p); }
};
struct ModelDeleter {
    void operator()(fanet_model* p) const { fanet_model_destroy(p); }
};
using ConfigPtr = std::unique_ptr<fanet_config, ConfigDeleter>;
using SequencePtr = std::unique_ptr<fanet_sequence, SequenceDeleter>;
using ModelPtr = std::unique_ptr<fanet_model, ModelDeleter>;

// `stage` names the module the failure came from so the user can tell a bad
// config apart from a bad dataset.
void check(fanet_status st, const std::string& stage, int code = kExitRuntime) {
    if (st != FANET_OK) {
        throw Failure{code, stage + ": " + fanet_last_error()};
    }
}

struct ConfigOptions {
    std::string config_path;
    std::string preset;
    std::optional<unsigned long long> seed;
    std::string variant;
    std::vector<std::string> sets;
    std::string dump_path;
};

void add_config_options(CLI::App* sub, ConfigOptions& o) {
    sub->add_option("--config", o.config_path, "JSON run config (unknown keys are rejected)")->check(CLI::ExistingFile);
    sub->add_option("--preset", o.preset, "Network preset when no --config is given")
        ->check(CLI::IsMember({"toy", "paper-scale"}));
    sub->add_option("--seed", o.seed, "Run seed; also seeds the synthetic generator");
    sub->add_option("--variant", o.variant, "Network variant: full, fa, ma, early, mid, late");
    sub->add_option("--set", o.sets, "Override a config key, e.g. --set train.iterations_per_domain=20")
        ->take_all();
    sub->add_option("--dump-config", o.dump_path, "Write the effective config to this path ('-' for stdout)");
}

std::string json_literal(const std::string& raw) {
    if (nlohmann::json::accept(raw)) return raw;
    return nlohmann::json(raw).dump();
}

std::string dump_config(const fanet_config* cfg) {
    size_t needed = 0;
    fanet_config_dump(cfg, nullptr, 0, &needed);
    std::string text(needed, '\0');
    check(fanet_config_dump(cfg, text.data(), text.size(), &needed), "config");
    text.resize(needed - 1);
    return text;
}

void set_key(fanet_config* cfg, const std::string& key, const std::string& json_value) {
    check(fanet_config_set(cfg, key.c_str(), json_value.c_str()), "config: --set " + key, kExitUsage);
}

ConfigPtr build_config(const ConfigOptions& o) {
    fanet_config* raw = nullptr;
    if (!o.config_path.empty()) {
        if (!o.preset.empty()) {
            throw Failure{kExitUsage, "config: --preset cannot be combined with --config (the file names its preset)"};
        }
        check(fanet_config_load(o.config_path.c_str(), &raw), "config", kExitUsage);
    } else {
        check(fanet_config_create(o.preset.empty() ? "paper-scale" : o.preset.c_str(), &raw), "config", kExitUsage);
    }
    ConfigPtr cfg(raw);
    if (o.seed) set_key(cfg.get(), "seed", std::to_string(*o.seed));
    if (!o.variant.empty()) set_key(cfg.get(), "network.variant", nlohmann::json(o.variant).dump());
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw Failure{kExitUsage, "config: --set expects key=value, got '" + s + "'"};
        }
        set_key(cfg.get(), s.substr(0, eq), json_literal(s.substr(eq + 1)));
    }
    if (!o.dump_path.empty()) {
        const auto text = dump_config(cfg.get()) + "\n";
        if (o.dump_path == "-") {
            std::cout << text;
        } else {
            std::ofstream os(o.dump_path, std::ios::binary);
            os << text;
            if (!os) throw Failure{kExitRuntime, "config: cannot write " + o.dump_path};
        }
    }
    return cfg;
}

nlohmann::json config_json(const fanet_config* cfg) { return nlohmann::json::parse(dump_config(cfg)); }

std::vector<fs::path> sequence_dirs(const fs::path& root) {
    std::vector<fs::path> out;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(root, ec)) {
        if (entry.is_directory() && fs::exists(entry.path() / "gt.txt")) out.push_back(entry.path());
    }
    if (ec) throw Failure{kExitRuntime, "data: cannot list " + root.string() + ": " + ec.message()};
    std::sort(out.begin(), out.end());
    if (out.empty()) throw Failure{kExitRuntime, "data: no sequences (subdirectories with gt.txt) in " + root.string()};
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Failure{kExitRuntime, "io: cannot create " + dir.string() + ": " + ec.message()};
}

// ---- synth ----------------------------------------------------------------

// Sequence i uses synth.seed + offset + i and is named <synth.name>_<i>; a
// single sequence keeps the plain name.
std::vector<fs::path> synthesize(fanet_config* cfg, const fs::path& out, int count, unsigned long long offset) {
    const auto j = config_json(cfg)["synth"];
    const auto base_seed = j["seed"].get<unsigned long long>();
    const auto base_name = j["name"].get<std::string>();
    ensure_dir(out);
    std::vector<fs::path> written;
    for (int i = 0; i < count; ++i) {
        std::ostringstream name;
        name << base_name;
        if (count > 1) name << '_' << std::setw(2) << std::setfill('0') << i;
        set_key(cfg, "synth.seed", std::to_string(base_seed + offset + static_cast<unsigned long long>(i)));
        set_key(cfg, "synth.name", nlohmann::json(name.str()).dump());
        fanet_sequence* raw = nullptr;
        check(fanet_sequence_synthesize(cfg, &raw), "synth");
        SequencePtr seq(raw);
        const auto dir = out / name.str();
        check(fanet_sequence_write(seq.get(), dir.string().c_str()), "synth");
        written.push_back(dir);
    }
    set_key(cfg, "synth.seed", std::to_string(base_seed));
    set_key(cfg, "synth.name", nlohmann::json(base_name).dump());
    return written;
}

// ---- train ----------------------------------------------------------------

struct TrainLog {
    int every = 50;
    bool quiet = false;
    fanet_train_record last{};
};

void on_record(const fanet_train_record* r, void* user) {
    auto* log = static_cast<TrainLog*>(user);
    log->last = *r;
    if (!log->quiet && log->every > 0 && (r->iteration + 1) % log->every == 0) {
        std::fprintf(stderr, "iter %6d  domain %3d  loss %.6f  cls %.6f  inst %.6f  acc %.3f\n", r->iteration + 1,
                     r->domain, r->total, r->l_cls, r->l_inst, r->accuracy);
    }
}

ModelPtr train(const fanet_config* cfg, const fs::path& data, const std::string& init_weights, TrainLog& log) {
    fanet_model* raw = nullptr;
    check(fanet_model_train(cfg, data.string().c_str(), init_weights.empty() ? nullptr : init_weights.c_str(),
                            on_record, &log, &raw),
          "train");
    return ModelPtr(raw);
}

// ---- track ----------------------------------------------------------------

void track_one(const fanet_model* model, const fanet_config* cfg, const fs::path& seq_dir, const fs::path& results,
               const fs::path* attention) {
    fanet_sequence* raw = nullptr;
    check(fanet_sequence_load(seq_dir.string().c_str(), &raw), "track: " + seq_dir.string());
    SequencePtr seq(raw);
    const auto att = attention ? attention->string() : std::string();
    check(fanet_track_sequence(model, cfg, seq.get(), results.string().c_str(), attention ? att.c_str() : nullptr),
          "track: " + seq_dir.string());
}

void track_dataset(const fanet_model* model, const fanet_config* cfg, const fs::path& data, const fs::path& out,
                   const std::string& attention_dir) {
    ensure_dir(out);
    if (!attention_dir.empty()) ensure_dir(attention_dir);
    for (const auto& dir : sequence_dirs(data)) {
        const auto name = dir.filename().string();
        const fs::path att = fs::path(attention_dir) / (name + ".attention.csv");
        track_one(model, cfg, dir, out / (name + ".txt"), attention_dir.empty() ? nullptr : &att);
    }
}

ModelPtr load_model(const std::string& path) {
    fanet_model* raw = nullptr;
    check(fanet_model_load(path.c_str(), &raw), "model");
    return ModelPtr(raw);
}

fanet_eval_summary evaluate(const fs::path& results, const fs::path& data, const std::string& mode,
                            bool per_sequence_mean, const fs::path& out, bool plots) {
    fanet_eval_summary s{};
    const auto out_s = out.string();
    check(fanet_evaluate(results.string().c_str(), data.string().c_str(), mode.c_str(), per_sequence_mean ? 1 : 0,
                         out_s.empty() ? nullptr : out_s.c_str(), plots ? 1 : 0, &s),
          "eval");
    return s;
}

void print_summary(const fanet_eval_summary& s) {
    std::cout << "sequences " << s.sequences << "  frames " << s.frames << "  PR@" << s.pr_threshold << "px "
              << std::fixed << std::setprecision(6) << s.pr << "  SR " << s.sr << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FANet RGB-T tracker: synthesize data, train, track, evaluate and compare variants", "fanet"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(fanet_version()));

    // synth
    ConfigOptions synth_cfg;
    std::string synth_out;
    int synth_count = 1;
    auto* synth = app.add_subcommand("synth", "Render synthetic RGB-T sequences from the config's synth block");
    add_config_options(synth, synth_cfg);
    synth->add_option("--out", synth_out, "Dataset directory to write into")->required();
    synth->add_option("--count", synth_count, "Number of sequences (seeds synth.seed, synth.seed+1, ...)")
        ->check(CLI::PositiveNumber);

    // train
    ConfigOptions train_cfg;
    std::string train_data, train_out, train_loss, train_init;
    TrainLog train_log;
    auto* trn = app.add_subcommand("train", "Offline multi-domain training, one domain per sequence");
    add_config_options(trn, train_cfg);
    trn->add_option("--data", train_data, "Dataset directory of sequence folders")->required()->check(CLI::ExistingDirectory);
    trn->add_option("--out", train_out, "Checkpoint path")->required();
    trn->add_option("--loss-csv", train_loss, "Loss trace CSV (default: <out>.loss.csv)");
    trn->add_option("--init-weights", train_init, "Archive whose matching tensors initialize the network");
    trn->add_option("--log-every", train_log.every, "Progress line every N iterations (0: never)");
    trn->add_flag("--quiet", train_log.quiet, "No progress output");

    // track
    ConfigOptions track_cfg;
    std::string track_model, track_seq, track_data, track_out, track_att;
    auto* trk = app.add_subcommand("track", "Track sequences with a trained checkpoint");
    add_config_options(trk, track_cfg);
    trk->add_option("--model", track_model, "Checkpoint from 'train'")->required()->check(CLI::ExistingFile);
    auto* seq_opt = trk->add_option("--sequence", track_seq, "One sequence directory; --out is the results file")
                        ->check(CLI::ExistingDirectory);
    auto* data_opt = trk->add_option("--data", track_data, "Dataset directory; --out is a results directory")
                         ->check(CLI::ExistingDirectory);
    seq_opt->excludes(data_opt);
    trk->add_option("--out", track_out, "Results file or directory")->required();
    trk->add_option("--attention", track_att, "Attention log file (--sequence) or directory (--data)");

    // eval
    std::string eval_results, eval_data, eval_mode = "gtot", eval_out;
    bool eval_plots = false, eval_mean = false;
    auto* evl = app.add_subcommand("eval", "Precision and success rate of tracking results");
    evl->add_option("--results", eval_results, "Directory of <sequence>.txt results")->required();
    evl->add_option("--data", eval_data, "Dataset directory with ground truth")->required();
    evl->add_option("--mode", eval_mode, "gtot (PR at 5 px) or rgbt234 (PR at 20 px)")
        ->check(CLI::IsMember({"gtot", "rgbt234"}));
    evl->add_option("--out", eval_out, "Report directory (report.csv and curve CSVs)");
    evl->add_flag("--plots", eval_plots, "Also write PNG plots");
    evl->add_flag("--per-sequence-mean", eval_mean, "Average per-sequence curves instead of pooling frames");

    // ablate
    ConfigOptions abl_cfg;
    std::string abl_out, abl_mode = "gtot";
    std::vector<std::string> abl_variants{"full", "fa", "ma", "early", "mid", "late"};
    int abl_train = 3, abl_test = 2;
    bool abl_quiet = false;
    auto* abl = app.add_subcommand("ablate", "Train, track and evaluate each variant on one synthetic suite");
    add_config_options(abl, abl_cfg);
    abl->add_option("--out", abl_out, "Output directory; the comparison table is ablation.csv")->required();
    abl->add_option("--variants", abl_variants, "Variants to compare (default: all six)")->take_all();
    abl->add_option("--train-sequences", abl_train, "Training domains in the suite")->check(CLI::PositiveNumber);
    abl->add_option("--test-sequences", abl_test, "Held-out sequences to track")->check(CLI::PositiveNumber);
    abl->add_option("--mode", abl_mode, "Evaluation mode")->check(CLI::IsMember({"gtot", "rgbt234"}));
    abl->add_flag("--quiet", abl_quiet, "No progress output");

    if (argc > 1 && argv[1][0] != '-') {
        const std::string first = argv[1];
        const auto subs = app.get_subcommands([](const CLI::App*) { return true; });
        if (std::none_of(subs.begin(), subs.end(), [&](const CLI::App* a) { return a->get_name() == first; })) {
            std::cerr << "fanet: unknown subcommand '" << first << "'\n\n" << app.help();
            return kExitUsage;
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "fanet: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "synth") {
            auto cfg = build_config(synth_cfg);
            for (const auto& dir : synthesize(cfg.get(), synth_out, synth_count, 0)) {
                std::cout << dir.string() << '\n';
            }
        } else if (command == "train") {
            auto cfg = build_config(train_cfg);
            auto model = train(cfg.get(), train_data, train_init, train_log);
            check(fanet_model_save(model.get(), train_out.c_str()), "train: checkpoint");
            const auto loss = train_loss.empty() ? train_out + ".loss.csv" : train_loss;
            check(fanet_model_write_loss_trace(model.get(), loss.c_str()), "train: loss trace");
            size_t count = 0;
            uint64_t sum = 0;
            check(fanet_model_parameter_count(model.get(), &count), "train");
            check(fanet_model_checksum(model.get(), &sum), "train");
            std::cout << "variant " << fanet_model_variant(model.get()) << "  parameters " << count << "  checksum "
                      << std::hex << std::setw(16) << std::setfill('0') << sum << std::dec << '\n';
        } else if (command == "track") {
            if (track_seq.empty() == track_data.empty()) {
                throw Failure{kExitUsage, "track: give exactly one of --sequence or --data"};
            }
            auto cfg = build_config(track_cfg);
            auto model = load_model(track_model);
            if (!track_seq.empty()) {
                const fs::path att = track_att;
                track_one(model.get(), cfg.get(), track_seq, track_out, track_att.empty() ? nullptr : &att);
            } else {
                track_dataset(model.get(), cfg.get(), track_data, track_out, track_att);
            }
        } else if (command == "eval") {
            print_summary(evaluate(eval_results, eval_data, eval_mode, eval_mean, eval_out, eval_plots));
        } else if (command == "ablate") {
            auto cfg = build_config(abl_cfg);
            const fs::path out = abl_out;
            const auto train_dir = out / "suite" / "train";
            const auto test_dir = out / "suite" / "test";
            synthesize(cfg.get(), train_dir, abl_train, 0);
            synthesize(cfg.get(), test_dir, abl_test, 1000);

            std::ostringstream table;
            table << "variant,parameters,final_loss,final_accuracy,pr,sr\n";
            for (const auto& variant : abl_variants) {
                set_key(cfg.get(), "network.variant", nlohmann::json(variant).dump());
                if (!abl_quiet) std::cerr << "== " << variant << '\n';
                TrainLog log;
                log.quiet = abl_quiet;
                auto model = train(cfg.get(), train_dir, "", log);
                const auto vdir = out / variant;
                ensure_dir(vdir);
                check(fanet_model_save(model.get(), (vdir / "model.fanw").string().c_str()), "ablate: checkpoint");
                check(fanet_model_write_loss_trace(model.get(), (vdir / "loss.csv").string().c_str()),
                      "ablate: loss trace");
                track_dataset(model.get(), cfg.get(), test_dir, vdir / "results", "");
                const auto s = evaluate(vdir / "results", test_dir, abl_mode, false, vdir / "report", false);
                size_t count = 0;
                check(fanet_model_parameter_count(model.get(), &count), "ablate");
                table << variant << ',' << count << std::fixed << std::setprecision(6) << ',' << log.last.total << ','
                      << log.last.accuracy << ',' << s.pr << ',' << s.sr << '\n';
                table.unsetf(std::ios::floatfield);
            }
            std::ofstream os(out / "ablation.csv", std::ios::binary);
            os << table.str();
            if (!os) throw Failure{kExitRuntime, "ablate: cannot write " + (out / "ablation.csv").string()};
            std::cout << table.str();
        }
    } catch (const Failure& f) {
        std::cerr << "fanet " << command << ": " << f.message << '\n';
        return f.code;
    } catch (const std::exception& e) {
        std::cerr << "fanet " << command << ": " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
