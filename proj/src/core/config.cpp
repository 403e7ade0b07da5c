#include "core/config.hpp"

#include "core/error.hpp"

namespace fanet {

using nlohmann::json;

namespace {

const char* order_name(HfaOrder o) { return o == HfaOrder::ConvReluLrn ? "conv-relu-lrn" : "lrn-conv-relu"; }

HfaOrder parse_order(const std::string& s) {
    if (s == "conv-relu-lrn") return HfaOrder::ConvReluLrn;
    if (s == "lrn-conv-relu") return HfaOrder::LrnConvRelu;
    fail(ErrorKind::InvalidArgument, "network.hfa.order: expected conv-relu-lrn or lrn-conv-relu, got '" + s + "'");
}

json layer_to_json(const ConvLayerConfig& l) {
    return {{"out_channels", l.out_channels},
            {"kernel", l.kernel},
            {"stride", l.stride},
            {"dilation", l.dilation},
            {"pad", l.pad}};
}

json sampling_to_json(const TrainingSampleConfig& s) {
    return {{"pos_min_iou", s.pos_min_iou}, {"neg_max_iou", s.neg_max_iou}, {"attempt_budget", s.attempt_budget}};
}

json intervals_to_json(const std::vector<FrameInterval>& v) {
    json a = json::array();
    for (const auto& iv : v) a.push_back({{"start", iv.start}, {"end", iv.end}});
    return a;
}

/// Recursively overlays `patch` onto `base`; every patch key must exist in
/// base and keep its JSON kind.
void overlay(json& base, const json& patch, const std::string& path) {
    if (!patch.is_object()) {
        fail(ErrorKind::InvalidArgument, (path.empty() ? std::string("config") : path) + ": expected an object");
    }
    for (const auto& [key, value] : patch.items()) {
        const std::string where = path.empty() ? key : path + "." + key;
        if (!base.contains(key)) {
            fail(ErrorKind::InvalidArgument, "unknown config key '" + where + "'");
        }
        json& target = base[key];
        if (target.is_object()) {
            overlay(target, value, where);
            continue;
        }
        const bool both_numbers = target.is_number() && value.is_number();
        if (!both_numbers && target.type() != value.type()) {
            fail(ErrorKind::InvalidArgument, "config key '" + where + "' expects a " + std::string(target.type_name()) +
                                                 ", got a " + value.type_name());
        }
        if (target.is_number_integer() && !value.is_number_integer()) {
            fail(ErrorKind::InvalidArgument, "config key '" + where + "' expects an integer");
        }
        target = value;
    }
}

template <typename T>
T get(const json& j, const char* key, const std::string& path) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorKind::InvalidArgument, "config key '" + path + "." + key + "': " + e.what());
    }
}

std::vector<FrameInterval> intervals_from_json(const json& a, const std::string& path) {
    std::vector<FrameInterval> out;
    for (const auto& e : a) {
        if (!e.is_object() || e.size() != 2 || !e.contains("start") || !e.contains("end")) {
            fail(ErrorKind::InvalidArgument, path + ": each interval needs exactly 'start' and 'end'");
        }
        out.push_back({get<int>(e, "start", path), get<int>(e, "end", path)});
    }
    return out;
}

RunConfig from_json(const json& j) {
    RunConfig c;
    c.preset = get<std::string>(j, "preset", "");
    c.seed = get<std::uint64_t>(j, "seed", "");
    c.network = network_from_json(j.at("network"));

    const auto& t = j.at("train");
    c.train.frames_per_batch = get<int>(t, "frames_per_batch", "train");
    c.train.pos_per_frame = get<int>(t, "pos_per_frame", "train");
    c.train.neg_per_frame = get<int>(t, "neg_per_frame", "train");
    c.train.iterations_per_domain = get<int>(t, "iterations_per_domain", "train");
    c.train.lr_conv = get<double>(t, "lr_conv", "train");
    c.train.lr_fc = get<double>(t, "lr_fc", "train");
    const auto qaa_lr = get<std::string>(t, "qaa_lr_group", "train");
    if (qaa_lr == "fc") {
        c.train.qaa_lr = QaaLearningRate::FullyConnected;
    } else if (qaa_lr == "conv") {
        c.train.qaa_lr = QaaLearningRate::Conv;
    } else {
        fail(ErrorKind::InvalidArgument, "train.qaa_lr_group: expected fc or conv, got '" + qaa_lr + "'");
    }
    c.train.weight_decay = get<double>(t, "weight_decay", "train");
    c.train.decoupled_weight_decay = get<bool>(t, "decoupled_weight_decay", "train");
    c.train.alpha = get<double>(t, "alpha", "train");
    c.train.beta1 = get<double>(t, "beta1", "train");
    c.train.beta2 = get<double>(t, "beta2", "train");
    c.train.epsilon = get<double>(t, "epsilon", "train");
    const auto& ts = t.at("sampling");
    c.train.sampling.pos_min_iou = get<double>(ts, "pos_min_iou", "train.sampling");
    c.train.sampling.neg_max_iou = get<double>(ts, "neg_max_iou", "train.sampling");
    c.train.sampling.attempt_budget = get<int>(ts, "attempt_budget", "train.sampling");
    c.train.validate();

    const auto& o = j.at("online");
    auto& on = c.online;
    on.n_candidates = get<int>(o, "n_candidates", "online");
    on.init_pos = get<int>(o, "init_pos", "online");
    on.init_neg = get<int>(o, "init_neg", "online");
    on.init_iterations = get<int>(o, "init_iterations", "online");
    on.lr_last_fc = get<double>(o, "lr_last_fc", "online");
    on.lr_other_fc = get<double>(o, "lr_other_fc", "online");
    on.regression_gate = get<double>(o, "regression_gate", "online");
    on.short_term_gate = get<double>(o, "short_term_gate", "online");
    on.long_term_interval = get<int>(o, "long_term_interval", "online");
    on.update_iterations = get<int>(o, "update_iterations", "online");
    on.batch_pos = get<int>(o, "batch_pos", "online");
    on.batch_neg = get<int>(o, "batch_neg", "online");
    on.update_pos = get<int>(o, "update_pos", "online");
    on.update_neg = get<int>(o, "update_neg", "online");
    on.memory_seed_pos = get<int>(o, "memory_seed_pos", "online");
    on.memory_seed_neg = get<int>(o, "memory_seed_neg", "online");
    on.short_term_frames = get<int>(o, "short_term_frames", "online");
    on.long_term_frames = get<int>(o, "long_term_frames", "online");
    on.negative_frames = get<int>(o, "negative_frames", "online");
    on.pos_iou = get<double>(o, "pos_iou", "online");
    on.neg_iou = get<double>(o, "neg_iou", "online");
    on.attempt_budget = get<int>(o, "attempt_budget", "online");
    on.bbox_regression = get<bool>(o, "bbox_regression", "online");
    on.bbreg_samples = get<int>(o, "bbreg_samples", "online");
    on.bbreg_min_iou = get<double>(o, "bbreg_min_iou", "online");
    on.bbreg_lambda = get<double>(o, "bbreg_lambda", "online");
    on.bbreg_min_samples = get<int>(o, "bbreg_min_samples", "online");
    const auto& cs = o.at("candidates");
    on.sampling.translation_var = get<double>(cs, "translation_var", "online.candidates");
    on.sampling.scale_var = get<double>(cs, "scale_var", "online.candidates");
    on.sampling.scale_base = get<double>(cs, "scale_base", "online.candidates");
    on.sampling.min_side = get<double>(cs, "min_side", "online.candidates");
    const auto ref = get<std::string>(o, "ref_scale", "online");
    if (ref == "size") {
        on.ref_scale = RefScale::Size;
    } else if (ref == "location") {
        on.ref_scale = RefScale::Location;
    } else {
        fail(ErrorKind::InvalidArgument, "online.ref_scale: expected size or location, got '" + ref + "'");
    }
    on.advance_on_failure = get<bool>(o, "advance_on_failure", "online");
    on.weight_decay = get<double>(o, "weight_decay", "online");
    on.validate();

    const auto& s = j.at("synth");
    auto& sy = c.synth;
    sy.name = get<std::string>(s, "name", "synth");
    sy.frames = get<int>(s, "frames", "synth");
    sy.width = get<int>(s, "width", "synth");
    sy.height = get<int>(s, "height", "synth");
    sy.target_width = get<int>(s, "target_width", "synth");
    sy.target_height = get<int>(s, "target_height", "synth");
    sy.speed = get<double>(s, "speed", "synth");
    sy.jitter_sigma = get<double>(s, "jitter_sigma", "synth");
    sy.rgb_noise_sigma = get<double>(s, "rgb_noise_sigma", "synth");
    sy.t_noise_sigma = get<double>(s, "t_noise_sigma", "synth");
    for (const auto& e : s.at("rgb_illumination")) {
        if (!e.is_object() || e.size() != 3) {
            fail(ErrorKind::InvalidArgument, "synth.rgb_illumination: entries need 'start', 'end' and 'scale'");
        }
        sy.rgb_illumination.push_back({get<int>(e, "start", "synth.rgb_illumination"),
                                       get<int>(e, "end", "synth.rgb_illumination"),
                                       get<double>(e, "scale", "synth.rgb_illumination")});
    }
    sy.t_blackout = intervals_from_json(s.at("t_blackout"), "synth.t_blackout");
    sy.occluders = intervals_from_json(s.at("occluders"), "synth.occluders");
    sy.seed = get<std::uint64_t>(s, "seed", "synth");
    sy.validate();
    return c;
}

}  // namespace

json network_to_json(const NetworkConfig& n) {
    json layers = json::array();
    for (const auto& l : n.backbone.layers) layers.push_back(layer_to_json(l));
    return {
        {"variant", variant_name(n.variant)},
        {"input_mean", n.input_mean},
        {"backbone", {{"layers", layers}, {"pool", n.backbone.pool}}},
        {"hfa",
         {{"channels", n.hfa.channels},
          {"order", order_name(n.hfa.order)},
          {"lrn", {{"size", n.hfa.lrn.size}, {"k", n.hfa.lrn.k}, {"alpha", n.hfa.lrn.alpha}, {"beta", n.hfa.lrn.beta}}}}},
        {"qaa", {{"embed_dim", n.qaa.embed_dim}, {"bias", n.qaa.bias}}},
        {"head",
         {{"fc1", n.head.fc1},
          {"fc2", n.head.fc2},
          {"roi_size", n.head.roi_size},
          {"roi_samples", n.head.roi_samples},
          {"dropout1", n.head.dropout1},
          {"dropout2", n.head.dropout2}}},
    };
}

NetworkConfig network_from_json(const json& j) {
    NetworkConfig n;
    n.variant = parse_variant(get<std::string>(j, "variant", "network"));
    n.input_mean = get<std::array<double, 3>>(j, "input_mean", "network");
    const auto& b = j.at("backbone");
    const auto& layers = b.at("layers");
    if (!layers.is_array() || layers.size() != 3) {
        fail(ErrorKind::InvalidArgument, "network.backbone.layers must list exactly 3 conv layers");
    }
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& l = layers[i];
        const std::string path = "network.backbone.layers[" + std::to_string(i) + "]";
        for (const auto& [key, value] : l.items()) {
            if (key != "out_channels" && key != "kernel" && key != "stride" && key != "dilation" && key != "pad") {
                fail(ErrorKind::InvalidArgument, "unknown config key '" + path + "." + key + "'");
            }
        }
        n.backbone.layers[i] = {get<int>(l, "out_channels", path), get<int>(l, "kernel", path),
                                get<int>(l, "stride", path), get<int>(l, "dilation", path), get<int>(l, "pad", path)};
    }
    n.backbone.pool = get<int>(b, "pool", "network.backbone");
    n.backbone.validate();
    const auto& h = j.at("hfa");
    n.hfa.channels = get<int>(h, "channels", "network.hfa");
    n.hfa.order = parse_order(get<std::string>(h, "order", "network.hfa"));
    const auto& lrn = h.at("lrn");
    n.hfa.lrn = {get<int>(lrn, "size", "network.hfa.lrn"), get<double>(lrn, "k", "network.hfa.lrn"),
                 get<double>(lrn, "alpha", "network.hfa.lrn"), get<double>(lrn, "beta", "network.hfa.lrn")};
    const auto& q = j.at("qaa");
    n.qaa.embed_dim = get<int>(q, "embed_dim", "network.qaa");
    n.qaa.bias = get<bool>(q, "bias", "network.qaa");
    const auto& hd = j.at("head");
    n.head.fc1 = get<int>(hd, "fc1", "network.head");
    n.head.fc2 = get<int>(hd, "fc2", "network.head");
    n.head.roi_size = get<int>(hd, "roi_size", "network.head");
    n.head.roi_samples = get<int>(hd, "roi_samples", "network.head");
    n.head.dropout1 = get<double>(hd, "dropout1", "network.head");
    n.head.dropout2 = get<double>(hd, "dropout2", "network.head");
    require(n.hfa.channels > 0 && n.qaa.embed_dim > 0 && n.head.fc1 > 0 && n.head.fc2 > 0 && n.head.roi_size > 0 &&
                n.head.roi_samples > 0,
            "network widths must be positive");
    require(n.head.dropout1 >= 0 && n.head.dropout1 < 1 && n.head.dropout2 >= 0 && n.head.dropout2 < 1,
            "network.head dropout rates must lie in [0, 1)");
    return n;
}

json run_config_to_json(const RunConfig& c) {
    const auto& t = c.train;
    const auto& o = c.online;
    const auto& s = c.synth;
    json illum = json::array();
    for (const auto& seg : s.rgb_illumination) illum.push_back({{"start", seg.start}, {"end", seg.end}, {"scale", seg.scale}});
    return {
        {"preset", c.preset},
        {"seed", c.seed},
        {"network", network_to_json(c.network)},
        {"train",
         {{"frames_per_batch", t.frames_per_batch},
          {"pos_per_frame", t.pos_per_frame},
          {"neg_per_frame", t.neg_per_frame},
          {"iterations_per_domain", t.iterations_per_domain},
          {"lr_conv", t.lr_conv},
          {"lr_fc", t.lr_fc},
          {"qaa_lr_group", t.qaa_lr == QaaLearningRate::FullyConnected ? "fc" : "conv"},
          {"weight_decay", t.weight_decay},
          {"decoupled_weight_decay", t.decoupled_weight_decay},
          {"alpha", t.alpha},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"epsilon", t.epsilon},
          {"sampling", sampling_to_json(t.sampling)}}},
        {"online",
         {{"n_candidates", o.n_candidates},
          {"init_pos", o.init_pos},
          {"init_neg", o.init_neg},
          {"init_iterations", o.init_iterations},
          {"lr_last_fc", o.lr_last_fc},
          {"lr_other_fc", o.lr_other_fc},
          {"regression_gate", o.regression_gate},
          {"short_term_gate", o.short_term_gate},
          {"long_term_interval", o.long_term_interval},
          {"update_iterations", o.update_iterations},
          {"batch_pos", o.batch_pos},
          {"batch_neg", o.batch_neg},
          {"update_pos", o.update_pos},
          {"update_neg", o.update_neg},
          {"memory_seed_pos", o.memory_seed_pos},
          {"memory_seed_neg", o.memory_seed_neg},
          {"short_term_frames", o.short_term_frames},
          {"long_term_frames", o.long_term_frames},
          {"negative_frames", o.negative_frames},
          {"pos_iou", o.pos_iou},
          {"neg_iou", o.neg_iou},
          {"attempt_budget", o.attempt_budget},
          {"bbox_regression", o.bbox_regression},
          {"bbreg_samples", o.bbreg_samples},
          {"bbreg_min_iou", o.bbreg_min_iou},
          {"bbreg_lambda", o.bbreg_lambda},
          {"bbreg_min_samples", o.bbreg_min_samples},
          {"candidates",
           {{"translation_var", o.sampling.translation_var},
            {"scale_var", o.sampling.scale_var},
            {"scale_base", o.sampling.scale_base},
            {"min_side", o.sampling.min_side}}},
          {"ref_scale", o.ref_scale == RefScale::Size ? "size" : "location"},
          {"advance_on_failure", o.advance_on_failure},
          {"weight_decay", o.weight_decay}}},
        {"synth",
         {{"name", s.name},
          {"frames", s.frames},
          {"width", s.width},
          {"height", s.height},
          {"target_width", s.target_width},
          {"target_height", s.target_height},
          {"speed", s.speed},
          {"jitter_sigma", s.jitter_sigma},
          {"rgb_noise_sigma", s.rgb_noise_sigma},
          {"t_noise_sigma", s.t_noise_sigma},
          {"rgb_illumination", illum},
          {"t_blackout", intervals_to_json(s.t_blackout)},
          {"occluders", intervals_to_json(s.occluders)},
          {"seed", s.seed}}},
    };
}

std::string dump_run_config(const RunConfig& cfg) { return run_config_to_json(cfg).dump(2) + "\n"; }

RunConfig default_run_config(const std::string& preset) {
    RunConfig c;
    c.preset = preset;
    if (preset == "toy") {
        c.network = NetworkConfig::toy();
    } else if (preset == "paper-scale") {
        c.network = NetworkConfig::paper_scale();
    } else {
        fail(ErrorKind::InvalidArgument, "unknown preset '" + preset + "' (expected toy or paper-scale)");
    }
    return c;
}

RunConfig run_config_from_json(const json& doc) {
    if (!doc.is_object()) {
        fail(ErrorKind::InvalidArgument, "config: top level must be a JSON object");
    }
    std::string preset = "paper-scale";
    if (doc.contains("preset")) {
        if (!doc["preset"].is_string()) fail(ErrorKind::InvalidArgument, "config key 'preset' expects a string");
        preset = doc["preset"].get<std::string>();
    }
    json merged = run_config_to_json(default_run_config(preset));
    overlay(merged, doc, "");
    return from_json(merged);
}

RunConfig parse_run_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Format, std::string("config is not valid JSON: ") + e.what());
    }
    return run_config_from_json(doc);
}

RunConfig patch_run_config(const RunConfig& base, const json& patch) {
    if (patch.is_object() && patch.contains("preset")) {
        fail(ErrorKind::InvalidArgument, "'preset' can only be chosen when a config is first parsed");
    }
    json merged = run_config_to_json(base);
    overlay(merged, patch, "");
    return from_json(merged);
}

}  // namespace fanet
