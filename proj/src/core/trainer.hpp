#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "core/data.hpp"
#include "core/network.hpp"
#include "core/optimizer.hpp"

namespace fanet {

enum class QaaLearningRate { FullyConnected, Conv };

struct TrainConfig {
    int frames_per_batch = 8;
    int pos_per_frame = 32;
    int neg_per_frame = 96;
    int iterations_per_domain = 200;
    double lr_conv = 1e-4;
    double lr_fc = 1e-3;
    QaaLearningRate qaa_lr = QaaLearningRate::FullyConnected;
    double weight_decay = 5e-4;
    bool decoupled_weight_decay = true;
    double alpha = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    TrainingSampleConfig sampling;

    void validate() const;
    AdamConfig adam() const;
};

/// Boxes for one training frame.
struct FrameSamples {
    int frame = 0;
    std::vector<LabeledBox> boxes;  ///< positives first
};

struct SampleBatch {
    int domain = 0;
    std::vector<FrameSamples> frames;

    int positives() const;
    int negatives() const;
};

/// frames_per_batch frames of sequence `domain` (without replacement when the
/// sequence is long enough) with pos/neg boxes drawn around each frame's gt.
SampleBatch build_minibatch(const std::vector<RGBTSequence>& dataset, int domain, const TrainConfig& cfg,
                            std::mt19937_64& rng);

struct StepStats {
    double l_cls = 0.0;
    double l_inst = 0.0;
    double total = 0.0;
    double accuracy = 0.0;  ///< dropout-free accuracy on this batch before the update
};

struct LossRecord {
    int iteration = 0;
    int domain = 0;
    StepStats stats;
};

/// Learning rate of each entry of model.parameters().
std::vector<double> learning_rates(const ModelParams& model, const TrainConfig& cfg);

/// A prepared frame and the boxes sampled on it.
struct FrameBatch {
    FramePair input;
    std::vector<LabeledBox> boxes;
};

/// Classification plus weighted instance-embedding loss of one minibatch
/// through the whole network. Gradients are accumulated into `model` (the
/// caller zeroes them). Dropout is active only when `dropout_rng` is given.
StepStats loss_and_gradients(ModelParams& model, const std::vector<FrameBatch>& frames, int domain, double alpha,
                             std::mt19937_64* dropout_rng);

std::vector<FrameBatch> prepare_batch(const ModelParams& model, const std::vector<RGBTSequence>& dataset,
                                      const SampleBatch& batch);

/// Forward, loss, backward and one optimizer step on `batch`.
StepStats train_step(ModelParams& model, const std::vector<RGBTSequence>& dataset, const SampleBatch& batch,
                     Adam& optimizer, const TrainConfig& cfg, std::mt19937_64& rng);

/// Dropout-free classification accuracy of the domain branch on `batch`.
double batch_accuracy(const ModelParams& model, const std::vector<RGBTSequence>& dataset, const SampleBatch& batch);

struct TrainResult {
    ModelParams model;
    Adam optimizer;
    std::vector<LossRecord> trace;
};

using TrainProgress = std::function<void(const LossRecord&)>;

/// iterations_per_domain * K iterations; iteration t trains domain t mod K.
TrainResult train_offline(const std::vector<RGBTSequence>& dataset, const NetworkConfig& network,
                          const TrainConfig& cfg, std::uint64_t seed, const TrainProgress& progress = {});

/// Continues training an existing model (same round-robin schedule).
void train_iterations(ModelParams& model, Adam& optimizer, const std::vector<RGBTSequence>& dataset,
                      const TrainConfig& cfg, int iterations, std::mt19937_64& rng, std::vector<LossRecord>& trace,
                      const TrainProgress& progress = {});

std::string loss_trace_csv(const std::vector<LossRecord>& trace);

void save_checkpoint(const ModelParams& model, const Adam* optimizer, const std::filesystem::path& path);
struct Checkpoint {
    ModelParams model;
    std::optional<Adam> optimizer;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies every archive tensor whose name matches a model parameter. Throws on
/// a shape mismatch or when nothing matches. Returns the number copied.
int load_weights(ModelParams& model, const std::filesystem::path& path);

}  // namespace fanet
