#include "core/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "core/archive.hpp"
#include "core/config.hpp"
#include "core/error.hpp"
#include "core/losses.hpp"

namespace fanet {

void TrainConfig::validate() const {
    require(frames_per_batch > 0 && pos_per_frame > 0 && neg_per_frame > 0 && iterations_per_domain >= 0,
            "train: batch counts must be positive");
    require(lr_conv >= 0 && lr_fc >= 0 && weight_decay >= 0 && alpha >= 0, "train: rates must be non-negative");
    require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && epsilon > 0, "train: invalid Adam settings");
}

AdamConfig TrainConfig::adam() const {
    return {beta1, beta2, epsilon, weight_decay, decoupled_weight_decay};
}

int SampleBatch::positives() const {
    int n = 0;
    for (const auto& f : frames) {
        for (const auto& b : f.boxes) n += b.label;
    }
    return n;
}

int SampleBatch::negatives() const {
    int n = 0;
    for (const auto& f : frames) n += static_cast<int>(f.boxes.size());
    return n - positives();
}

SampleBatch build_minibatch(const std::vector<RGBTSequence>& dataset, int domain, const TrainConfig& cfg,
                            std::mt19937_64& rng) {
    require(domain >= 0 && domain < static_cast<int>(dataset.size()), "build_minibatch: domain out of range");
    const auto& seq = dataset[static_cast<std::size_t>(domain)];
    const int n = static_cast<int>(seq.frame_count());
    require(n >= 1, "build_minibatch: sequence '" + seq.name + "' has no frames");

    std::vector<int> chosen;
    if (n >= cfg.frames_per_batch) {
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        for (int i = 0; i < cfg.frames_per_batch; ++i) {
            std::uniform_int_distribution<int> pick(i, n - 1);
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
            chosen.push_back(order[static_cast<std::size_t>(i)]);
        }
    } else {
        std::uniform_int_distribution<int> pick(0, n - 1);
        for (int i = 0; i < cfg.frames_per_batch; ++i) chosen.push_back(pick(rng));
    }

    SampleBatch batch;
    batch.domain = domain;
    for (int f : chosen) {
        const Box& gt = seq.gt[static_cast<std::size_t>(f)];
        batch.frames.push_back(
            {f, sample_training_boxes(gt, cfg.pos_per_frame, cfg.neg_per_frame, seq.size, cfg.sampling, rng)});
    }
    return batch;
}

std::vector<double> learning_rates(const ModelParams& model, const TrainConfig& cfg) {
    std::vector<double> lrs;
    for (const Param* p : model.parameters()) {
        const bool qaa = p->name.rfind("qaa.", 0) == 0;
        if (qaa) {
            lrs.push_back(cfg.qaa_lr == QaaLearningRate::FullyConnected ? cfg.lr_fc : cfg.lr_conv);
        } else {
            lrs.push_back(p->group == ParamGroup::Conv ? cfg.lr_conv : cfg.lr_fc);
        }
    }
    return lrs;
}

namespace {

struct BatchFeatures {
    std::vector<FusionCache> caches;
    std::vector<FeatureMap> fused;
    std::vector<std::vector<Box>> boxes;
    RoiBatch x;
    std::vector<int> labels;
};

BatchFeatures batch_features(const ModelParams& model, const std::vector<FrameBatch>& frames, bool keep_cache) {
    const auto& cfg = model.config;
    BatchFeatures out;
    out.caches.resize(keep_cache ? frames.size() : 0);
    int total = 0;
    for (const auto& f : frames) total += static_cast<int>(f.boxes.size());
    out.x.resize(cfg.roi_feature_dim(), total);
    int offset = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        auto fused = forward_features(model, frames[i].input, keep_cache ? &out.caches[i] : nullptr).fused;
        std::vector<Box> boxes;
        for (const auto& lb : frames[i].boxes) {
            boxes.push_back(lb.box);
            out.labels.push_back(lb.label);
        }
        const int n = static_cast<int>(boxes.size());
        out.x.middleCols(offset, n) = roi_align(fused, boxes, cfg.stride(), cfg.head.roi_size, cfg.head.roi_samples);
        offset += n;
        out.boxes.push_back(std::move(boxes));
        if (keep_cache) out.fused.push_back(std::move(fused));
    }
    return out;
}

double accuracy_of(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
    int correct = 0;
    for (Eigen::Index i = 0; i < logits.cols(); ++i) {
        const int predicted = logits(1, i) > logits(0, i) ? 1 : 0;
        correct += predicted == labels[static_cast<std::size_t>(i)];
    }
    return logits.cols() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(logits.cols());
}

}  // namespace

std::vector<FrameBatch> prepare_batch(const ModelParams& model, const std::vector<RGBTSequence>& dataset,
                                      const SampleBatch& batch) {
    const auto& seq = dataset[static_cast<std::size_t>(batch.domain)];
    std::vector<FrameBatch> out;
    for (const auto& fs : batch.frames) {
        const auto f = static_cast<std::size_t>(fs.frame);
        out.push_back({prepare_frame(seq.rgb[f], seq.thermal[f], model.config), fs.boxes});
    }
    return out;
}

double batch_accuracy(const ModelParams& model, const std::vector<RGBTSequence>& dataset, const SampleBatch& batch) {
    const auto feats = batch_features(model, prepare_batch(model, dataset, batch), false);
    return accuracy_of(fc_forward(feats.x, model.head, batch.domain, false, nullptr), feats.labels);
}

StepStats loss_and_gradients(ModelParams& model, const std::vector<FrameBatch>& frames, int domain, double alpha,
                             std::mt19937_64* dropout_rng) {
    const auto& net = model.config;
    auto& head = model.head;
    require(domain >= 0 && domain < head.num_branches(), "loss_and_gradients: domain out of range");
    auto feats = batch_features(model, frames, true);

    StepStats stats;
    stats.accuracy = accuracy_of(fc_forward(feats.x, head, domain, false, nullptr), feats.labels);

    TrunkCache trunk;
    const Eigen::MatrixXd h = trunk_forward(feats.x, head, dropout_rng != nullptr, dropout_rng, &trunk);
    auto& branch = head.branches[static_cast<std::size_t>(domain)];
    const Eigen::MatrixXd logits = branch_forward(h, branch);
    Eigen::MatrixXd d_logits;
    stats.l_cls = bce_loss({logits, feats.labels}, &d_logits);

    std::vector<Eigen::Index> pos;
    for (std::size_t i = 0; i < feats.labels.size(); ++i) {
        if (feats.labels[i] == 1) pos.push_back(static_cast<Eigen::Index>(i));
    }
    const int num_pos = static_cast<int>(pos.size());
    const int num_branches = head.num_branches();
    Eigen::MatrixXd h_pos(h.rows(), num_pos);
    for (int j = 0; j < num_pos; ++j) h_pos.col(j) = h.col(pos[static_cast<std::size_t>(j)]);
    Eigen::MatrixXd pos_logits(num_branches, num_pos);
    for (int k = 0; k < num_branches; ++k) {
        pos_logits.row(k) = branch_forward(h_pos, head.branches[static_cast<std::size_t>(k)]).row(1);
    }
    Eigen::MatrixXd d_inst = Eigen::MatrixXd::Zero(num_branches, num_pos);
    if (num_pos > 0) {
        stats.l_inst = instance_embedding_loss(
            {pos_logits, std::vector<int>(static_cast<std::size_t>(num_pos), domain),
             std::vector<int>(static_cast<std::size_t>(num_pos), 1)},
            &d_inst);
    }
    stats.total = total_loss(stats.l_cls, stats.l_inst, alpha);
    if (!std::isfinite(stats.total)) {
        fail(ErrorKind::Runtime, "non-finite training loss (l_cls=" + std::to_string(stats.l_cls) +
                                     ", l_inst=" + std::to_string(stats.l_inst) + ")");
    }

    Eigen::MatrixXd d_h = branch_backward(d_logits, h, branch);
    for (int k = 0; k < num_branches && num_pos > 0; ++k) {
        Eigen::MatrixXd d_branch = Eigen::MatrixXd::Zero(2, num_pos);
        d_branch.row(1) = alpha * d_inst.row(k);
        const Eigen::MatrixXd d_hp = branch_backward(d_branch, h_pos, head.branches[static_cast<std::size_t>(k)]);
        for (int j = 0; j < num_pos; ++j) d_h.col(pos[static_cast<std::size_t>(j)]) += d_hp.col(j);
    }
    const RoiBatch d_x = trunk_backward(d_h, head, trunk);

    int offset = 0;
    for (std::size_t i = 0; i < feats.boxes.size(); ++i) {
        const auto& fused = feats.fused[i];
        const int n = static_cast<int>(feats.boxes[i].size());
        const auto d_fused = roi_align_backward(d_x.middleCols(offset, n), fused.channels, fused.height, fused.width,
                                                feats.boxes[i], net.stride(), net.head.roi_size,
                                                net.head.roi_samples);
        backward_features(model, d_fused, feats.caches[i]);
        offset += n;
    }
    return stats;
}

StepStats train_step(ModelParams& model, const std::vector<RGBTSequence>& dataset, const SampleBatch& batch,
                     Adam& optimizer, const TrainConfig& cfg, std::mt19937_64& rng) {
    model.zero_grad();
    const auto stats = loss_and_gradients(model, prepare_batch(model, dataset, batch), batch.domain, cfg.alpha, &rng);
    const auto params = model.parameters();
    const auto lrs = learning_rates(model, cfg);
    optimizer.step(params, lrs);
    return stats;
}

void train_iterations(ModelParams& model, Adam& optimizer, const std::vector<RGBTSequence>& dataset,
                      const TrainConfig& cfg, int iterations, std::mt19937_64& rng, std::vector<LossRecord>& trace,
                      const TrainProgress& progress) {
    const int k = static_cast<int>(dataset.size());
    require(k >= 1, "training needs at least one sequence");
    require(model.head.num_branches() == k, "model has " + std::to_string(model.head.num_branches()) +
                                                " branches for " + std::to_string(k) + " training sequences");
    const int start = trace.empty() ? 0 : trace.back().iteration + 1;
    for (int it = start; it < start + iterations; ++it) {
        const int domain = it % k;
        LossRecord rec;
        rec.iteration = it;
        rec.domain = domain;
        try {
            const auto batch = build_minibatch(dataset, domain, cfg, rng);
            rec.stats = train_step(model, dataset, batch, optimizer, cfg, rng);
        } catch (const Error& e) {
            fail(e.kind(), "training iteration " + std::to_string(it) + ", domain " + std::to_string(domain) + " ('" +
                               dataset[static_cast<std::size_t>(domain)].name + "'): " + e.what());
        }
        trace.push_back(rec);
        if (progress) progress(rec);
    }
}

TrainResult train_offline(const std::vector<RGBTSequence>& dataset, const NetworkConfig& network,
                          const TrainConfig& cfg, std::uint64_t seed, const TrainProgress& progress) {
    cfg.validate();
    require(!dataset.empty(), "training needs at least one sequence");
    for (const auto& seq : dataset) seq.validate();
    const int k = static_cast<int>(dataset.size());
    TrainResult result{make_model(network, k, seed), Adam(cfg.adam()), {}};
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    train_iterations(result.model, result.optimizer, dataset, cfg, cfg.iterations_per_domain * k, rng, result.trace,
                     progress);
    return result;
}

std::string loss_trace_csv(const std::vector<LossRecord>& trace) {
    std::ostringstream os;
    os.precision(17);
    os << "iteration,domain,l_cls,l_inst,total\n";
    for (const auto& r : trace) {
        os << r.iteration << ',' << r.domain << ',' << r.stats.l_cls << ',' << r.stats.l_inst << ','
           << r.stats.total << '\n';
    }
    return os.str();
}

namespace {

ArchiveEntry to_entry(const std::string& name, const std::vector<int>& shape, const Buffer& values) {
    ArchiveEntry e{name, shape, {}};
    e.values.assign(values.begin(), values.end());
    return e;
}

void copy_into(Param& p, const ArchiveEntry& e) {
    if (e.shape != p.shape || e.values.size() != p.size()) {
        fail(ErrorKind::Format, "tensor '" + e.name + "' has a shape that does not match the model");
    }
    p.value.assign(e.values.begin(), e.values.end());
}

}  // namespace

void save_checkpoint(const ModelParams& model, const Adam* optimizer, const std::filesystem::path& path) {
    nlohmann::json meta;
    meta["format"] = "fanet-checkpoint";
    meta["network"] = network_to_json(model.config);
    meta["num_domains"] = model.head.num_branches();
    Archive archive;
    for (const Param* p : model.parameters()) {
        archive.entries.push_back(to_entry(p->name, p->shape, p->value));
    }
    if (optimizer) {
        const auto& c = optimizer->config();
        meta["adam"] = {{"steps", optimizer->steps()},
                        {"beta1", c.beta1},
                        {"beta2", c.beta2},
                        {"epsilon", c.epsilon},
                        {"weight_decay", c.weight_decay},
                        {"decoupled_weight_decay", c.decoupled_weight_decay}};
        for (const auto& [name, mom] : optimizer->moments()) {
            const std::vector<int> shape{static_cast<int>(mom.m.size())};
            archive.entries.push_back(to_entry("adam.m:" + name, shape, mom.m));
            archive.entries.push_back(to_entry("adam.v:" + name, shape, mom.v));
        }
    }
    archive.meta = meta.dump();
    write_archive(archive, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const Archive archive = read_archive(path);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(archive.meta);
        if (meta.value("format", "") != "fanet-checkpoint") {
            fail(ErrorKind::Format, "not a checkpoint (missing format tag)");
        }
        Checkpoint ck{make_model(network_from_json(meta.at("network")), meta.at("num_domains").get<int>(), 0), {}};
        for (Param* p : ck.model.parameters()) {
            const auto* e = archive.find(p->name);
            if (!e) fail(ErrorKind::Format, "checkpoint lacks tensor '" + p->name + "'");
            copy_into(*p, *e);
        }
        if (meta.contains("adam")) {
            const auto& a = meta["adam"];
            Adam adam(AdamConfig{a.at("beta1").get<double>(), a.at("beta2").get<double>(),
                                 a.at("epsilon").get<double>(), a.at("weight_decay").get<double>(),
                                 a.at("decoupled_weight_decay").get<bool>()});
            std::map<std::string, Adam::Moments> moments;
            for (const auto& e : archive.entries) {
                if (e.name.rfind("adam.m:", 0) == 0) {
                    const auto name = e.name.substr(7);
                    const auto* v = archive.find("adam.v:" + name);
                    if (!v) fail(ErrorKind::Format, "checkpoint lacks second moment of '" + name + "'");
                    moments[name] = {Buffer(e.values.begin(), e.values.end()),
                                     Buffer(v->values.begin(), v->values.end())};
                }
            }
            adam.restore(a.at("steps").get<std::int64_t>(), std::move(moments));
            ck.optimizer = std::move(adam);
        }
        return ck;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, path.string() + ": malformed checkpoint metadata: " + e.what());
    } catch (const Error& e) {
        fail(e.kind(), path.string() + ": " + e.what());
    }
}

int load_weights(ModelParams& model, const std::filesystem::path& path) {
    const Archive archive = read_archive(path);
    int copied = 0;
    for (Param* p : model.parameters()) {
        if (const auto* e = archive.find(p->name)) {
            try {
                copy_into(*p, *e);
            } catch (const Error& err) {
                fail(err.kind(), path.string() + ": " + err.what());
            }
            ++copied;
        }
    }
    if (copied == 0) {
        fail(ErrorKind::Format, path.string() + ": no tensor matches a model parameter name");
    }
    return copied;
}

}  // namespace fanet
