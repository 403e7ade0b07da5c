#pragma once

#include <deque>
#include <optional>
#include <random>
#include <vector>

#include "core/data.hpp"
#include "core/network.hpp"
#include "core/optimizer.hpp"
#include "core/regressor.hpp"

namespace fanet {

enum class RefScale {
    Size,      ///< r = mean of the previous width and height
    Location,  ///< r = mean of the previous center coordinates
};

struct OnlineConfig {
    int n_candidates = 256;
    int init_pos = 500;
    int init_neg = 5000;
    int init_iterations = 30;
    double lr_last_fc = 1e-3;
    double lr_other_fc = 1e-4;
    double regression_gate = 0.5;
    double short_term_gate = 0.0;
    int long_term_interval = 10;

    int update_iterations = 10;
    int batch_pos = 32;
    int batch_neg = 96;
    int update_pos = 20;  ///< positives collected per successful frame
    int update_neg = 40;
    int memory_seed_pos = 50;  ///< first-frame samples placed in the memories
    int memory_seed_neg = 200;
    int short_term_frames = 20;
    int long_term_frames = 100;
    int negative_frames = 20;
    double pos_iou = 0.7;
    double neg_iou = 0.5;
    int attempt_budget = 2000;

    bool bbox_regression = true;
    int bbreg_samples = 1000;
    double bbreg_min_iou = 0.6;
    double bbreg_lambda = 1000.0;
    int bbreg_min_samples = 8;

    CandidateSampling sampling;
    RefScale ref_scale = RefScale::Size;
    bool advance_on_failure = true;
    double weight_decay = 5e-4;

    void validate() const;
};

/// RoI features of one frame's samples (feature_dim x n).
struct MemoryFrame {
    int frame = 0;
    Eigen::MatrixXd features;
};

struct SampleMemory {
    std::deque<MemoryFrame> short_term_pos;
    std::deque<MemoryFrame> long_term_pos;
    std::deque<MemoryFrame> negatives;
};

struct TrackResult {
    Box box;
    double f_plus = 0.0;
    int candidate_index = 0;
    std::optional<AttentionVectors> attention;
    bool regressed = false;
    bool short_term_update = false;
    bool long_term_update = false;
};

struct TrackerState {
    ModelParams model;  ///< single-branch head
    Adam optimizer;
    BoxRegressor regressor;
    SampleMemory memory;
    Box previous;
    int frame_index = 0;
    OnlineConfig config;
    std::mt19937_64 rng;
    TrackResult initial;  ///< gt box, its score and the first frame's attention
};

/// Installs one fresh branch, fine-tunes the FC layers on first-frame samples,
/// fits the box regressor and seeds the memories. Feature parameters are never
/// modified.
TrackerState init_first_frame(const Image& rgb, const Image& thermal, const Box& gt, const ModelParams& offline,
                              const OnlineConfig& cfg, std::uint64_t seed);

TrackResult track_frame(TrackerState& state, const Image& rgb, const Image& thermal);

/// Dropout-free f+ of each box on the given frame under the tracker's branch.
std::vector<double> score_boxes(const TrackerState& state, const Image& rgb, const Image& thermal,
                                const std::vector<Box>& boxes);

/// FC fine-tuning on short-term positives and recent negatives.
void short_term_update(TrackerState& state);
/// FC fine-tuning on long-term positives and recent negatives.
void long_term_update(TrackerState& state);

/// Adds one frame's samples, evicting the oldest frames beyond capacity.
void remember(SampleMemory& memory, const OnlineConfig& cfg, int frame, const Eigen::MatrixXd& pos,
              const Eigen::MatrixXd& neg);

/// Dropout-free accuracy of the tracker branch on the given features.
double memory_accuracy(const TrackerState& state, const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg);

/// Stacks the features of a memory slice into one matrix.
Eigen::MatrixXd stack_memory(const std::deque<MemoryFrame>& frames, int feature_dim);

struct SequenceRun {
    std::vector<Box> boxes;  ///< frame 0 is the given gt
    std::vector<TrackResult> frames;
};

/// Tracks a whole sequence from its first gt box.
SequenceRun track_sequence(const RGBTSequence& seq, const ModelParams& offline, const OnlineConfig& cfg,
                           std::uint64_t seed);

std::string attention_csv(const SequenceRun& run);

}  // namespace fanet
