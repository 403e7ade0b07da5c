#include "core/tracker.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "core/error.hpp"
#include "core/losses.hpp"

namespace fanet {

void OnlineConfig::validate() const {
    require(n_candidates >= 1, "online: n_candidates must be >= 1");
    require(init_pos >= 1 && init_neg >= 1 && update_pos >= 1 && update_neg >= 1, "online: sample counts must be >= 1");
    require(init_iterations >= 0 && update_iterations >= 0, "online: iteration counts must be >= 0");
    require(batch_pos >= 1 && batch_neg >= 1, "online: minibatch counts must be >= 1");
    require(short_term_frames >= 1 && long_term_frames >= 1 && negative_frames >= 1,
            "online: memory capacities must be >= 1");
    require(long_term_interval >= 1, "online: long_term_interval must be >= 1");
    require(std::isfinite(regression_gate) && std::isfinite(short_term_gate), "online: gates must be finite");
    require(lr_last_fc >= 0 && lr_other_fc >= 0 && weight_decay >= 0, "online: rates must be non-negative");
    require(bbreg_lambda >= 0 && bbreg_min_samples >= 1, "online: invalid regression settings");
}

namespace {

Eigen::MatrixXd roi_features(const ModelParams& model, const FeatureMap& fused, const std::vector<Box>& boxes) {
    const auto& cfg = model.config;
    return roi_align(fused, boxes, cfg.stride(), cfg.head.roi_size, cfg.head.roi_samples);
}

std::vector<Eigen::Index> pick(Eigen::Index available, int wanted, std::mt19937_64& rng) {
    std::vector<Eigen::Index> out;
    if (available >= wanted) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(available));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        for (int i = 0; i < wanted; ++i) {
            std::uniform_int_distribution<Eigen::Index> d(i, available - 1);
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(d(rng))]);
            out.push_back(order[static_cast<std::size_t>(i)]);
        }
    } else {
        std::uniform_int_distribution<Eigen::Index> d(0, available - 1);
        for (int i = 0; i < wanted; ++i) out.push_back(d(rng));
    }
    return out;
}

void finetune(TrackerState& s, const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg, int iterations) {
    if (pos.cols() == 0 || neg.cols() == 0 || iterations == 0) {
        return;
    }
    const auto& cfg = s.config;
    const auto params = s.model.head_parameters();
    std::vector<double> lrs;
    for (const Param* p : params) {
        lrs.push_back(p->name.rfind("head.fc3", 0) == 0 ? cfg.lr_last_fc : cfg.lr_other_fc);
    }
    const int np = cfg.batch_pos;
    const int nn = cfg.batch_neg;
    std::vector<int> labels(static_cast<std::size_t>(np), 1);
    labels.resize(static_cast<std::size_t>(np + nn), 0);
    Eigen::MatrixXd x(pos.rows(), np + nn);
    for (int it = 0; it < iterations; ++it) {
        const auto ip = pick(pos.cols(), np, s.rng);
        const auto in = pick(neg.cols(), nn, s.rng);
        for (int j = 0; j < np; ++j) x.col(j) = pos.col(ip[static_cast<std::size_t>(j)]);
        for (int j = 0; j < nn; ++j) x.col(np + j) = neg.col(in[static_cast<std::size_t>(j)]);
        for (Param* p : params) p->zero_grad();
        TrunkCache trunk;
        const Eigen::MatrixXd h = trunk_forward(x, s.model.head, true, &s.rng, &trunk);
        auto& branch = s.model.head.branches.front();
        Eigen::MatrixXd d_logits;
        bce_loss({branch_forward(h, branch), labels}, &d_logits);
        const Eigen::MatrixXd d_h = branch_backward(d_logits, h, branch);
        trunk_backward(d_h, s.model.head, trunk);
        s.optimizer.step(params, lrs);
    }
}

void push_bounded(std::deque<MemoryFrame>& q, int capacity, int frame, const Eigen::MatrixXd& features) {
    q.push_back({frame, features});
    while (static_cast<int>(q.size()) > capacity) q.pop_front();
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> labeled_features(const ModelParams& model, const FeatureMap& fused,
                                                             const std::vector<LabeledBox>& samples) {
    std::vector<Box> pos;
    std::vector<Box> neg;
    for (const auto& s : samples) (s.label == 1 ? pos : neg).push_back(s.box);
    return {roi_features(model, fused, pos), roi_features(model, fused, neg)};
}

}  // namespace

void remember(SampleMemory& memory, const OnlineConfig& cfg, int frame, const Eigen::MatrixXd& pos,
              const Eigen::MatrixXd& neg) {
    push_bounded(memory.short_term_pos, cfg.short_term_frames, frame, pos);
    push_bounded(memory.long_term_pos, cfg.long_term_frames, frame, pos);
    push_bounded(memory.negatives, cfg.negative_frames, frame, neg);
}

Eigen::MatrixXd stack_memory(const std::deque<MemoryFrame>& frames, int feature_dim) {
    Eigen::Index cols = 0;
    for (const auto& f : frames) cols += f.features.cols();
    Eigen::MatrixXd out(feature_dim, cols);
    Eigen::Index offset = 0;
    for (const auto& f : frames) {
        out.middleCols(offset, f.features.cols()) = f.features;
        offset += f.features.cols();
    }
    return out;
}

double memory_accuracy(const TrackerState& state, const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg) {
    const Eigen::Index total = pos.cols() + neg.cols();
    if (total == 0) return 0.0;
    Eigen::MatrixXd x(pos.rows(), total);
    x << pos, neg;
    const Eigen::MatrixXd logits = fc_forward(x, state.model.head, 0, false, nullptr);
    Eigen::Index correct = 0;
    for (Eigen::Index i = 0; i < total; ++i) {
        const bool positive = logits(1, i) > logits(0, i);
        correct += positive == (i < pos.cols());
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

TrackerState init_first_frame(const Image& rgb, const Image& thermal, const Box& gt, const ModelParams& offline,
                              const OnlineConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    require(gt.valid(), "init_first_frame: invalid ground-truth box");
    const FrameSize frame{rgb.width, rgb.height};
    require(gt.x >= -1.0 && gt.y >= -1.0 && gt.x + gt.w <= frame.width + 1.0 && gt.y + gt.h <= frame.height + 1.0,
            "init_first_frame: ground-truth box lies outside the frame");

    TrackerState s{offline,
                   Adam(AdamConfig{0.9, 0.999, 1e-8, cfg.weight_decay, true}),
                   identity_regressor(offline.config.roi_feature_dim()),
                   {},
                   gt,
                   0,
                   cfg,
                   std::mt19937_64(seed),
                   {}};
    s.model.head = replace_branches(offline.head, 1, s.rng);

    const auto fusion = forward_features(s.model, prepare_frame(rgb, thermal, s.model.config));
    const TrainingSampleConfig sampling{cfg.pos_iou, cfg.neg_iou, cfg.attempt_budget};
    const Box target = clip_to_frame(gt, frame, cfg.sampling.min_side);
    const auto samples = sample_training_boxes(target, cfg.init_pos, cfg.init_neg, frame, sampling, s.rng);
    const auto [pos, neg] = labeled_features(s.model, fusion.fused, samples);
    finetune(s, pos, neg, cfg.init_iterations);

    if (cfg.bbox_regression) {
        const auto boxes =
            sample_positive_boxes(target, cfg.bbreg_samples, cfg.bbreg_min_iou, frame, cfg.attempt_budget, s.rng);
        try {
            s.regressor = fit_box_regressor(roi_features(s.model, fusion.fused, boxes), boxes, target, cfg.bbreg_lambda,
                                            cfg.bbreg_min_samples);
        } catch (const Error&) {
            s.regressor = identity_regressor(offline.config.roi_feature_dim());
        }
    }

    const auto seed_pos = std::min<Eigen::Index>(cfg.memory_seed_pos, pos.cols());
    const auto seed_neg = std::min<Eigen::Index>(cfg.memory_seed_neg, neg.cols());
    remember(s.memory, cfg, 0, pos.leftCols(seed_pos), neg.leftCols(seed_neg));

    const std::vector<Box> gt_only{gt};
    s.initial.box = gt;
    s.initial.f_plus = fc_forward(roi_features(s.model, fusion.fused, gt_only), s.model.head, 0, false, nullptr)(1, 0);
    s.initial.attention = fusion.attention;
    return s;
}

std::vector<double> score_boxes(const TrackerState& state, const Image& rgb, const Image& thermal,
                                const std::vector<Box>& boxes) {
    const auto fusion = forward_features(state.model, prepare_frame(rgb, thermal, state.model.config));
    const Eigen::MatrixXd logits = fc_forward(roi_features(state.model, fusion.fused, boxes), state.model.head, 0,
                                              false, nullptr);
    std::vector<double> out(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) out[i] = logits(1, static_cast<Eigen::Index>(i));
    return out;
}

void short_term_update(TrackerState& state) {
    const int dim = state.model.config.roi_feature_dim();
    finetune(state, stack_memory(state.memory.short_term_pos, dim), stack_memory(state.memory.negatives, dim),
             state.config.update_iterations);
}

void long_term_update(TrackerState& state) {
    const int dim = state.model.config.roi_feature_dim();
    finetune(state, stack_memory(state.memory.long_term_pos, dim), stack_memory(state.memory.negatives, dim),
             state.config.update_iterations);
}

TrackResult track_frame(TrackerState& state, const Image& rgb, const Image& thermal) {
    const auto& cfg = state.config;
    const FrameSize frame{rgb.width, rgb.height};
    const int t = ++state.frame_index;

    const auto fusion = forward_features(state.model, prepare_frame(rgb, thermal, state.model.config));
    const Box& prev = state.previous;
    double r = cfg.ref_scale == RefScale::Size ? 0.5 * (prev.w + prev.h) : 0.5 * (prev.cx() + prev.cy());
    r = std::max(r, 1.0);
    const auto candidates = sample_candidates(prev, r, cfg.n_candidates, frame, cfg.sampling, state.rng);
    const Eigen::MatrixXd feats = roi_features(state.model, fusion.fused, candidates);
    const Eigen::MatrixXd logits = fc_forward(feats, state.model.head, 0, false, nullptr);

    int best = 0;
    for (int i = 1; i < static_cast<int>(candidates.size()); ++i) {
        if (logits(1, i) > logits(1, best)) best = i;
    }
    TrackResult res;
    res.candidate_index = best;
    res.f_plus = logits(1, best);
    res.box = candidates[static_cast<std::size_t>(best)];
    res.attention = fusion.attention;

    const bool success = res.f_plus > cfg.regression_gate;
    if (success && !state.regressor.is_identity()) {
        res.box = clip_to_frame(state.regressor.apply(res.box, feats.col(best)), frame, cfg.sampling.min_side);
        res.regressed = true;
    }
    if (success) {
        try {
            const TrainingSampleConfig sampling{cfg.pos_iou, cfg.neg_iou, cfg.attempt_budget};
            const auto samples =
                sample_training_boxes(res.box, cfg.update_pos, cfg.update_neg, frame, sampling, state.rng);
            const auto [pos, neg] = labeled_features(state.model, fusion.fused, samples);
            remember(state.memory, cfg, t, pos, neg);
        } catch (const Error&) {
        }
    }
    const bool failed = res.f_plus < cfg.short_term_gate;
    if (!failed || cfg.advance_on_failure) {
        state.previous = res.box;
    }
    if (failed) {
        short_term_update(state);
        res.short_term_update = true;
    }
    if (t % cfg.long_term_interval == 0) {
        long_term_update(state);
        res.long_term_update = true;
    }
    return res;
}

SequenceRun track_sequence(const RGBTSequence& seq, const ModelParams& offline, const OnlineConfig& cfg,
                           std::uint64_t seed) {
    seq.validate();
    require(seq.frame_count() >= 1, "cannot track an empty sequence");
    auto state = init_first_frame(seq.rgb[0], seq.thermal[0], seq.gt[0], offline, cfg, seed);
    SequenceRun run;
    run.boxes.push_back(seq.gt[0]);
    run.frames.push_back(state.initial);
    for (std::size_t i = 1; i < seq.frame_count(); ++i) {
        auto res = track_frame(state, seq.rgb[i], seq.thermal[i]);
        run.boxes.push_back(res.box);
        run.frames.push_back(std::move(res));
    }
    return run;
}

std::string attention_csv(const SequenceRun& run) {
    std::ostringstream os;
    os.precision(17);
    os << "frame,mean_a,mean_b\n";
    for (std::size_t i = 0; i < run.frames.size(); ++i) {
        const auto& att = run.frames[i].attention;
        if (att) {
            os << i + 1 << ',' << att->mean_a() << ',' << att->mean_b() << '\n';
        }
    }
    return os.str();
}

}  // namespace fanet
