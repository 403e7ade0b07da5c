// Acceptance criteria AC-1 .. AC-10. Prints one PASS/FAIL line per criterion
// and exits non-zero when any fails. Pass criterion ids (e.g. "AC-4 AC-6") to
// run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/hfa.hpp"
#include "core/losses.hpp"
#include "core/metrics.hpp"
#include "core/qaa.hpp"
#include "core/tracker.hpp"
#include "core/trainer.hpp"
#include "core/variant.hpp"

#include "composite_check.hpp"
#include "gradcheck.hpp"

using namespace fanet;
using namespace fanet::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

std::string sci(double v) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(2) << v;
    return os.str();
}

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("fanet_acceptance_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs `trial(seed)` for up to five seeds and stops once three agree.
struct Majority {
    int passed = 0;
    int failed = 0;
    std::vector<std::string> notes;

    template <class F>
    void run(F&& trial) {
        for (std::uint64_t seed = 1; seed <= 5 && passed < 3 && failed < 3; ++seed) {
            const auto r = trial(seed);
            (r.pass ? passed : failed) += 1;
            notes.push_back("seed " + std::to_string(seed) + (r.pass ? " ok" : " FAIL") + " [" + r.detail + "]");
            std::cerr << "    " << notes.back() << '\n';
        }
    }
    std::string summary() const {
        std::string s = std::to_string(passed) + "/" + std::to_string(passed + failed) + " seeds passed";
        for (const auto& n : notes) s += "; " + n;
        return s;
    }
};

// ---------------------------------------------------------------- AC-1

Outcome ac1_gradients() {
    const auto toy = NetworkConfig::toy();
    GradReport hfa_rep, qaa_rep, comp_rep;

    // (a) hierarchical aggregation at toy widths: 16/32/64 input channels,
    // C_agg = 32.
    for (const auto order : {HfaOrder::ConvReluLrn, HfaOrder::LrnConvRelu}) {
        std::mt19937_64 rng(11);
        HfaConfig cfg = toy.hfa;
        cfg.order = order;
        auto params = make_hfa_params(cfg, {16, 32, 64}, "hfa", rng);
        for (auto& b : params.bias) fill_uniform(b.value, 0.02, 0.2, rng);
        auto f1 = random_map(16, 12, 12, 0, 1, rng);
        auto f2 = random_map(32, 6, 6, 0, 1, rng);
        auto f3 = random_map(64, 6, 6, 0, 1, rng);
        HfaCache cache;
        const auto x = aggregate(f1, f2, f3, cfg, params, &cache);
        const auto r = random_map(x.channels, x.height, x.width, -1, 1, rng);
        const auto d = aggregate_backward(r, cfg, params, cache);
        auto loss = [&] { return dot(aggregate(f1, f2, f3, cfg, params), r); };
        for (std::size_t i = 0; i < 3; ++i) {
            check_entries(params.weight[i].value, params.weight[i].grad, loss, "hfa.w", 60, rng, hfa_rep);
            check_entries(params.bias[i].value, params.bias[i].grad, loss, "hfa.b", 20, rng, hfa_rep);
        }
        check_entries(f1.values, d[0].values, loss, "F1", 80, rng, hfa_rep);
        check_entries(f2.values, d[1].values, loss, "F2", 80, rng, hfa_rep);
        check_entries(f3.values, d[2].values, loss, "F3", 80, rng, hfa_rep);
    }

    // (b) quality-aware aggregation on toy aggregates (C' = 96, d = 64).
    for (bool bias : {false, true}) {
        std::mt19937_64 rng(12);
        auto p = make_qaa_params({toy.qaa.embed_dim, bias}, 96, rng);
        auto xr = random_map(96, 4, 4, 0, 2, rng);
        auto xt = random_map(96, 4, 4, 0, 2, rng);
        QaaCache cache;
        qaa_forward(xr, xt, p, &cache);
        const auto r = random_map(96, 4, 4, -1, 1, rng);
        const auto [dr, dt] = qaa_backward(r, p, cache);
        auto loss = [&] { return dot(qaa_forward(xr, xt, p).fused, r); };
        check_entries(p.embed.value, p.embed.grad, loss, "W", 150, rng, qaa_rep);
        check_entries(p.rgb_gate.value, p.rgb_gate.grad, loss, "W21", 150, rng, qaa_rep);
        check_entries(p.t_gate.value, p.t_gate.grad, loss, "W22", 150, rng, qaa_rep);
        if (bias) {
            check_entries(p.embed_bias->value, p.embed_bias->grad, loss, "b", 30, rng, qaa_rep);
            check_entries(p.rgb_bias->value, p.rgb_bias->grad, loss, "b21", 30, rng, qaa_rep);
            check_entries(p.t_bias->value, p.t_bias->grad, loss, "b22", 30, rng, qaa_rep);
        }
        check_entries(xr.values, dr.values, loss, "X_rgb", 150, rng, qaa_rep);
        check_entries(xt.values, dt.values, loss, "X_t", 150, rng, qaa_rep);
    }

    // (c) backbone -> HFA -> QAA -> head -> total loss.
    for (std::uint64_t seed : {3u, 4u}) comp_rep.merge(composite_gradcheck("full", seed, 16, 3));

    const bool ok = hfa_rep.max_rel_error < 1e-4 && qaa_rep.max_rel_error < 1e-4 && comp_rep.max_rel_error < 1e-4;
    std::string detail = "max rel err hfa " + sci(hfa_rep.max_rel_error) + " (" + std::to_string(hfa_rep.checked) +
                         " entries), qaa " + sci(qaa_rep.max_rel_error) + " (" + std::to_string(qaa_rep.checked) +
                         "), composite " + sci(comp_rep.max_rel_error) + " (" + std::to_string(comp_rep.checked) +
                         ", " + std::to_string(hfa_rep.kinks + qaa_rep.kinks + comp_rep.kinks) +
                         " kinks checked one-sided)";
    if (!ok) {
        for (const auto* r : {&hfa_rep, &qaa_rep, &comp_rep}) {
            if (r->max_rel_error >= 1e-4) detail += "; worst " + r->worst;
        }
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- AC-2, AC-3

QAAParams random_qaa(std::mt19937_64& rng, int channels, double scale) {
    auto p = make_qaa_params({16, false}, channels, rng);
    for (auto* param : {&p.embed, &p.rgb_gate, &p.t_gate}) {
        for (auto& v : param->value) v *= scale;
    }
    return p;
}

Outcome ac2_normalization() {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> log_scale(-2.0, 3.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const int c = 1 + static_cast<int>(rng() % 96);
        const double scale = std::pow(10.0, log_scale(rng));
        const auto p = random_qaa(rng, c, scale);
        const auto xr = random_map(c, 3, 3, -5, 5, rng);
        const auto xt = random_map(c, 3, 3, -5, 5, rng);
        const auto res = qaa_forward(xr, xt, p);
        for (int k = 0; k < c; ++k) {
            worst = std::max(worst, std::abs(res.attention.a[k] + res.attention.b[k] - 1.0));
        }
    }
    return {worst < 1e-12, "1000 inputs, max |a+b-1| = " + sci(worst)};
}

Outcome ac3_convexity() {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> log_scale(-2.0, 3.0);
    std::size_t violations = 0, values = 0;
    double identity_err = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const int c = 1 + static_cast<int>(rng() % 96);
        const auto p = random_qaa(rng, c, std::pow(10.0, log_scale(rng)));
        const auto xr = random_map(c, 3, 4, -50, 50, rng);
        const auto xt = random_map(c, 3, 4, -50, 50, rng);
        const auto fused = qaa_forward(xr, xt, p).fused;
        for (std::size_t k = 0; k < xr.size(); ++k) {
            ++values;
            const double lo = std::min(xr.values[k], xt.values[k]);
            const double hi = std::max(xr.values[k], xt.values[k]);
            violations += !(fused.values[k] >= lo && fused.values[k] <= hi);
        }
        const auto same = qaa_forward(xr, xr, p).fused;
        for (std::size_t k = 0; k < xr.size(); ++k) {
            identity_err = std::max(identity_err, std::abs(same.values[k] - xr.values[k]));
        }
    }
    return {violations == 0 && identity_err < 1e-9,
            std::to_string(violations) + " of " + std::to_string(values) +
                " fused values outside [min, max]; max |qaa(X,X) - X| = " + sci(identity_err)};
}

// ---------------------------------------------------------------- AC-4

RGBTSequence degraded(std::uint64_t seed, int frames, bool noisy_rgb, const std::string& name) {
    SynthConfig s;
    s.name = name;
    s.frames = frames;
    s.seed = seed;
    (noisy_rgb ? s.rgb_noise_sigma : s.t_noise_sigma) = 2.0;
    return generate_synthetic(s);
}

struct AttentionVote {
    int wins = 0;
    double mean_a = 0.0;
    double mean_b = 0.0;
};

AttentionVote attention_vote(const ModelParams& model, const RGBTSequence& held, bool expect_thermal) {
    AttentionVote v;
    const auto n = static_cast<double>(held.frame_count());
    for (std::size_t f = 0; f < held.frame_count(); ++f) {
        const auto r = forward_features(model, prepare_frame(held.rgb[f], held.thermal[f], model.config));
        const double a = r.attention->mean_a();
        const double b = r.attention->mean_b();
        v.mean_a += a / n;
        v.mean_b += b / n;
        v.wins += expect_thermal ? (b > a) : (a > b);
    }
    return v;
}

Outcome ac4_quality_awareness() {
    const int iterations = 100;
    double slowest = 0.0;
    Majority m;
    m.run([&](std::uint64_t seed) {
        Outcome o{true, ""};
        for (bool noisy_rgb : {false, true}) {
            const auto t0 = Clock::now();
            std::vector<RGBTSequence> ds;
            for (int k = 0; k < 3; ++k) ds.push_back(degraded(seed * 1000 + k, 30, noisy_rgb, "d" + std::to_string(k)));
            const auto held = degraded(seed * 1000 + 77, 20, noisy_rgb, "held");
            const auto untrained = attention_vote(make_model(NetworkConfig::toy(), 3, seed), held, noisy_rgb);
            TrainConfig tc;
            tc.iterations_per_domain = iterations;
            const auto trained = train_offline(ds, NetworkConfig::toy(), tc, seed);
            const auto v = attention_vote(trained.model, held, noisy_rgb);
            const double secs = seconds_since(t0);
            slowest = std::max(slowest, secs);
            const bool ok = v.wins >= 18 && secs < 300.0;
            o.pass = o.pass && ok;
            o.detail += std::string(o.detail.empty() ? "" : ", ") + (noisy_rgb ? "noisy rgb: b>a " : "noisy t: a>b ") +
                        std::to_string(v.wins) + "/20 (a " + fmt(v.mean_a, 3) + " b " + fmt(v.mean_b, 3) +
                        "; untrained a " + fmt(untrained.mean_a, 3) + " b " + fmt(untrained.mean_b, 3) + ", " +
                        fmt(secs, 3) + " s)";
        }
        return o;
    });
    return {m.passed >= 3, m.summary() + "; slowest run " + fmt(slowest, 3) + " s"};
}

// ---------------------------------------------------------------- AC-5

Outcome ac5_overfit() {
    const auto t0 = Clock::now();
    std::vector<RGBTSequence> ds;
    for (int k = 0; k < 3; ++k) {
        SynthConfig s;
        s.name = "d" + std::to_string(k);
        s.frames = 30;
        s.seed = 500 + k;
        ds.push_back(generate_synthetic(s));
    }
    TrainConfig tc;  // 200 x K iterations
    const auto r = train_offline(ds, NetworkConfig::toy(), tc, 5);
    // accuracy on the batches it trained on, measured just before each update
    const std::size_t tail = 30;
    double trace_acc = 0.0;
    for (std::size_t i = r.trace.size() - tail; i < r.trace.size(); ++i) trace_acc += r.trace[i].stats.accuracy / tail;
    // and after training, on freshly drawn batches of the same domains
    std::mt19937_64 rng(55);
    double fresh_acc = 0.0;
    for (int k = 0; k < 3; ++k) {
        fresh_acc += batch_accuracy(r.model, ds, build_minibatch(ds, k, tc, rng)) / 3.0;
    }
    const double secs = seconds_since(t0);
    const bool ok = trace_acc >= 0.95 && fresh_acc >= 0.95 && secs < 600.0;
    return {ok, std::to_string(r.trace.size()) + " iterations, accuracy over the last " + std::to_string(tail) +
                    " training batches " + fmt(trace_acc) + ", on fresh batches after training " + fmt(fresh_acc) +
                    ", " + fmt(secs, 3) + " s"};
}

// ---------------------------------------------------------------- AC-6

Outcome ac6_tracking() {
    double slowest = 0.0;
    Majority m;
    m.run([&](std::uint64_t seed) {
        const auto t0 = Clock::now();
        std::vector<RGBTSequence> ds;
        for (int k = 0; k < 3; ++k) {
            SynthConfig s;
            s.name = "d" + std::to_string(k);
            s.frames = 30;
            s.seed = seed * 1000 + k;
            ds.push_back(generate_synthetic(s));
        }
        TrainConfig tc;
        tc.iterations_per_domain = 100;
        const auto trained = train_offline(ds, NetworkConfig::toy(), tc, seed);
        SynthConfig s;
        s.name = "probe";
        s.frames = 50;
        s.seed = seed * 1000 + 99;
        const auto seq = generate_synthetic(s);
        const auto run = track_sequence(seq, trained.model, OnlineConfig{}, seed);
        double mean_iou = 0.0;
        for (std::size_t i = 0; i < seq.gt.size(); ++i) mean_iou += iou(run.boxes[i], seq.gt[i]) / seq.gt.size();
        const double secs = seconds_since(t0);
        slowest = std::max(slowest, secs);
        return Outcome{mean_iou >= 0.5 && secs < 600.0, "mean IoU " + fmt(mean_iou, 3) + ", " + fmt(secs, 3) + " s"};
    });
    return {m.passed >= 3, m.summary() + "; slowest " + fmt(slowest, 3) + " s"};
}

// ---------------------------------------------------------------- AC-7

Outcome ac7_metrics() {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> pos(0, 100), side(2, 40);
    std::normal_distribution<double> noise(0, 1);
    const auto taus = default_precision_thresholds();
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int n = 1 + t % 25;
        std::vector<Box> gt, res;
        const double sigma = 0.5 + t % 12;
        for (int i = 0; i < n; ++i) {
            const Box g{pos(rng), pos(rng), side(rng), side(rng)};
            gt.push_back(g);
            res.push_back({g.x + sigma * noise(rng), g.y + sigma * noise(rng), std::max(1.0, g.w + sigma * noise(rng)),
                           std::max(1.0, g.h + sigma * noise(rng))});
        }
        const auto pc = precision_curve(res, gt, taus);
        const auto sc = success_curve(res, gt);
        for (std::size_t k = 0; k < taus.size(); ++k) {
            int hit = 0;
            for (int i = 0; i < n; ++i) {
                const double dx = (res[i].x + res[i].w / 2) - (gt[i].x + gt[i].w / 2);
                const double dy = (res[i].y + res[i].h / 2) - (gt[i].y + gt[i].h / 2);
                hit += std::hypot(dx, dy) <= taus[k];
            }
            worst = std::max(worst, std::abs(pc[k].value - static_cast<double>(hit) / n));
        }
        for (int k = 0; k <= 20; ++k) {
            int hit = 0;
            for (int i = 0; i < n; ++i) {
                const double ix = std::max(0.0, std::min(res[i].x + res[i].w, gt[i].x + gt[i].w) - std::max(res[i].x, gt[i].x));
                const double iy = std::max(0.0, std::min(res[i].y + res[i].h, gt[i].y + gt[i].h) - std::max(res[i].y, gt[i].y));
                const double inter = ix * iy;
                hit += inter / (res[i].w * res[i].h + gt[i].w * gt[i].h - inter) > k / 20.0;
            }
            worst = std::max(worst, std::abs(sc[static_cast<std::size_t>(k)].value - static_cast<double>(hit) / n));
        }
    }
    const std::vector<Box> g{{10, 10, 10, 10}, {40, 20, 16, 8}};
    const double sr_exact = success_rate(success_curve(g, g));
    const std::vector<Box> g1{{0, 0, 10, 10}};
    const std::vector<Box> half{{0, 0, 10, 5}};
    const double sr_half = success_rate(success_curve(half, g1));
    const bool ok = worst <= 1e-12 && sr_exact == 20.0 / 21.0 && sr_half == 10.0 / 21.0;
    return {ok, "100 random pairs, max deviation from brute force " + sci(worst) + "; SR(gt, gt) = " +
                    fmt(sr_exact * 21, 6) + "/21, SR(iou 0.5) = " + fmt(sr_half * 21, 6) + "/21"};
}

// ---------------------------------------------------------------- AC-8

Outcome ac8_losses() {
    double worst = 0.0;
    auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };

    track(bce_loss({Eigen::MatrixXd::Zero(2, 1), {1}}), std::log(2.0));
    track(instance_embedding_loss({Eigen::MatrixXd::Constant(4, 1, 0.7), {2}, {1}}), std::log(4.0));
    track(total_loss(1.0, 2.0, 0.1), 1.2);
    // zero cases: a single domain, no instance term
    track(instance_embedding_loss({Eigen::MatrixXd::Constant(1, 3, -2.0), {0, 0, 0}, {1, 1, 1}}), 0.0);
    track(total_loss(0.8, 0.0, 0.1), 0.8);
    // a perfect prediction only reaches -ln(1 - eps) because of the clamp
    BatchScores sure{Eigen::MatrixXd(2, 2), {1, 0}};
    sure.logits << -30, 30, 30, -30;
    const double perfect = bce_loss(sure);

    double oracle_worst = 0.0;
    std::mt19937_64 rng(81);
    std::normal_distribution<double> n(0, 3);
    for (int t = 0; t < 200; ++t) {
        const int d = 1 + t % 8;
        const int count = 1 + t % 5;
        InstanceScores s{Eigen::MatrixXd(d, count), {}, {}};
        for (Eigen::Index i = 0; i < s.positive_logits.size(); ++i) s.positive_logits.data()[i] = n(rng);
        double oracle = 0.0;
        for (int j = 0; j < count; ++j) {
            const int own = static_cast<int>(rng() % d);
            s.domains.push_back(own);
            s.labels.push_back(1);
            double z = 0.0;
            for (int k = 0; k < d; ++k) z += std::exp(s.positive_logits(k, j));
            oracle += -std::log(std::exp(s.positive_logits(own, j)) / z) / count;
        }
        oracle_worst = std::max(oracle_worst, std::abs(instance_embedding_loss(s) - oracle));
    }
    return {worst < 1e-9 && oracle_worst < 1e-9 && perfect >= 0.0 && perfect <= 1e-6,
            "worked cases max error " + sci(worst) + "; perfect-prediction bce " + sci(perfect) +
                "; D-way softmax oracle max error " + sci(oracle_worst) + " over 200 batches"};
}

// ---------------------------------------------------------------- AC-9

RunConfig small_run(std::uint64_t seed) {
    auto cfg = default_run_config("toy");
    cfg.seed = seed;
    cfg.synth.frames = 15;
    cfg.synth.width = 64;
    cfg.synth.height = 64;
    cfg.train.iterations_per_domain = 10;
    cfg.online.init_iterations = 10;
    return cfg;
}

/// synth -> train -> track -> eval through files on disk; returns the report
/// directory.
fs::path file_pipeline(const fs::path& root, const RunConfig& cfg, int sequences) {
    const auto data = root / "data";
    for (int i = 0; i < sequences; ++i) {
        auto s = cfg.synth;
        s.seed = cfg.synth.seed + static_cast<std::uint64_t>(i);
        s.name = "seq" + std::to_string(i);
        write_sequence(generate_synthetic(s), data / s.name);
    }
    std::vector<RGBTSequence> ds;
    for (const auto& d : list_sequence_dirs(data)) ds.push_back(load_sequence(d));
    const auto trained = train_offline(ds, cfg.network, cfg.train, cfg.seed);
    save_checkpoint(trained.model, &trained.optimizer, root / "model.fanw");
    const auto ck = load_checkpoint(root / "model.fanw");
    fs::create_directories(root / "results");
    for (const auto& d : list_sequence_dirs(data)) {
        const auto seq = load_sequence(d);
        write_boxes(track_sequence(seq, ck.model, cfg.online, cfg.seed).boxes,
                    root / "results" / (seq.name + ".txt"));
    }
    const auto report = evaluate_directory(root / "results", data, EvalMode::Gtot);
    write_report(report, root / "report", false);
    return root / "report";
}

Outcome ac9_determinism() {
    const auto cfg = small_run(9);
    const auto a = file_pipeline(scratch("det_a"), cfg, 2);
    const auto b = file_pipeline(scratch("det_b"), cfg, 2);
    const auto ra = slurp(a / "report.csv");
    const auto rb = slurp(b / "report.csv");
    const bool same_ckpt = slurp(a.parent_path() / "model.fanw") == slurp(b.parent_path() / "model.fanw");
    std::size_t curves = 0, curves_same = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        ++curves;
        curves_same += slurp(e.path()) == slurp(b / fs::relative(e.path(), a));
    }
    const bool ok = !ra.empty() && ra == rb;
    return {ok, std::string("report.csv ") + (ra == rb ? "byte-identical" : "DIFFERS") + " (" +
                    std::to_string(ra.size()) + " bytes); checkpoints " + (same_ckpt ? "identical" : "differ") +
                    "; " + std::to_string(curves_same) + "/" + std::to_string(curves) + " report files identical"};
}

// ---------------------------------------------------------------- AC-10

Outcome ac10_variants() {
    const auto root = scratch("variants");
    auto cfg = small_run(10);
    cfg.synth.frames = 20;
    cfg.train.iterations_per_domain = 20;
    const auto train_dir = root / "suite" / "train";
    const auto test_dir = root / "suite" / "test";
    for (int i = 0; i < 3; ++i) {
        auto s = cfg.synth;
        s.seed = 100 + static_cast<std::uint64_t>(i);
        s.name = "train" + std::to_string(i);
        write_sequence(generate_synthetic(s), train_dir / s.name);
    }
    for (int i = 0; i < 2; ++i) {
        auto s = cfg.synth;
        s.seed = 200 + static_cast<std::uint64_t>(i);
        s.name = "test" + std::to_string(i);
        write_sequence(generate_synthetic(s), test_dir / s.name);
    }
    std::vector<RGBTSequence> train_set, test_set;
    for (const auto& d : list_sequence_dirs(train_dir)) train_set.push_back(load_sequence(d));
    for (const auto& d : list_sequence_dirs(test_dir)) test_set.push_back(load_sequence(d));

    std::ostringstream table;
    table << "variant,parameters,final_loss,pr,sr\n";
    std::vector<std::string> errors;
    int completed = 0;
    for (const auto& spec : all_variants()) {
        try {
            const auto net = build_variant(spec.name, cfg.network);
            const auto trained = train_offline(train_set, net, cfg.train, cfg.seed);
            std::vector<EvalInput> inputs;
            for (const auto& seq : test_set) {
                inputs.push_back({seq.name, track_sequence(seq, trained.model, cfg.online, cfg.seed).boxes, seq.gt,
                                  seq.attributes});
            }
            const auto rep = evaluate_boxes(inputs, EvalMode::Gtot);
            table << spec.name << ',' << trained.model.parameter_count() << ',' << std::fixed << std::setprecision(6)
                  << trained.trace.back().stats.total << ',' << rep.aggregate.pr << ',' << rep.aggregate.sr << '\n';
            table.unsetf(std::ios::floatfield);
            ++completed;
        } catch (const std::exception& e) {
            errors.push_back(spec.name + ": " + e.what());
        }
    }
    std::ofstream(root / "comparison.csv") << table.str();
    std::cerr << table.str();
    std::string detail = std::to_string(completed) + "/" + std::to_string(all_variants().size()) +
                         " variants completed train+track+eval; table at " + (root / "comparison.csv").string();
    for (const auto& e : errors) detail += "; " + e;
    return {completed == 6 && all_variants().size() == 6, detail};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC-1", ac1_gradients},   {"AC-2", ac2_normalization}, {"AC-3", ac3_convexity},
        {"AC-4", ac4_quality_awareness}, {"AC-5", ac5_overfit}, {"AC-6", ac6_tracking},
        {"AC-7", ac7_metrics},     {"AC-8", ac8_losses},        {"AC-9", ac9_determinism},
        {"AC-10", ac10_variants},
    };
    std::set<std::string> only(argv + 1, argv + argc);
    int failures = 0;
    for (const auto& [id, run] : criteria) {
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << id << (o.pass ? " PASS" : " FAIL") << " (" << fmt(seconds_since(t0), 3) << " s) " << o.detail
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
