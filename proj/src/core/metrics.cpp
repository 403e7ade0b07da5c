#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "core/data.hpp"
#include "core/error.hpp"

namespace fs = std::filesystem;

namespace fanet {

EvalMode parse_eval_mode(const std::string& name) {
    if (name == "gtot") return EvalMode::Gtot;
    if (name == "rgbt234") return EvalMode::Rgbt234;
    fail(ErrorKind::InvalidArgument, "unknown evaluation mode '" + name + "' (expected gtot or rgbt234)");
}

std::string eval_mode_name(EvalMode mode) { return mode == EvalMode::Gtot ? "gtot" : "rgbt234"; }

double pr_threshold(EvalMode mode) { return mode == EvalMode::Gtot ? 5.0 : 20.0; }

std::vector<double> default_precision_thresholds() {
    std::vector<double> t;
    for (int i = 0; i <= 50; ++i) {
        t.push_back(i);
    }
    return t;
}

std::vector<double> success_thresholds() {
    std::vector<double> t;
    for (int i = 0; i <= 20; ++i) {
        t.push_back(i / 20.0);
    }
    return t;
}

namespace {

void check_lengths(const std::vector<Box>& results, const std::vector<Box>& gt) {
    if (results.size() != gt.size()) {
        fail(ErrorKind::InvalidArgument, "result count " + std::to_string(results.size()) +
                                             " does not match ground-truth count " + std::to_string(gt.size()));
    }
    require(!gt.empty(), "metrics need at least one frame");
}

}  // namespace

Curve precision_curve(const std::vector<Box>& results, const std::vector<Box>& gt,
                      const std::vector<double>& thresholds) {
    check_lengths(results, gt);
    std::vector<double> dist(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
        dist[i] = center_distance(results[i], gt[i]);
    }
    std::sort(dist.begin(), dist.end());
    Curve curve;
    for (double tau : thresholds) {
        const auto hits = std::upper_bound(dist.begin(), dist.end(), tau) - dist.begin();
        curve.push_back({tau, static_cast<double>(hits) / static_cast<double>(dist.size())});
    }
    return curve;
}

Curve success_curve(const std::vector<Box>& results, const std::vector<Box>& gt) {
    check_lengths(results, gt);
    std::vector<double> overlaps(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
        overlaps[i] = iou(results[i], gt[i]);
    }
    std::sort(overlaps.begin(), overlaps.end());
    Curve curve;
    for (double t : success_thresholds()) {
        const auto above = overlaps.end() - std::upper_bound(overlaps.begin(), overlaps.end(), t);
        curve.push_back({t, static_cast<double>(above) / static_cast<double>(overlaps.size())});
    }
    return curve;
}

double success_rate(const Curve& success) {
    require(!success.empty(), "empty success curve");
    double sum = 0.0;
    for (const auto& p : success) {
        sum += p.value;
    }
    return sum / static_cast<double>(success.size());
}

double curve_value_at(const Curve& curve, double threshold) {
    for (const auto& p : curve) {
        if (std::abs(p.threshold - threshold) < 1e-12) {
            return p.value;
        }
    }
    fail(ErrorKind::InvalidArgument, "threshold " + std::to_string(threshold) + " is not on the curve");
}

namespace {

SequenceReport pool(const std::string& name, const std::vector<const EvalInput*>& members, EvalMode mode,
                    bool per_sequence_mean) {
    SequenceReport out;
    out.name = name;
    if (!per_sequence_mean) {
        std::vector<Box> results;
        std::vector<Box> gt;
        for (const auto* m : members) {
            results.insert(results.end(), m->results.begin(), m->results.end());
            gt.insert(gt.end(), m->gt.begin(), m->gt.end());
        }
        out.frames = gt.size();
        out.precision = precision_curve(results, gt, default_precision_thresholds());
        out.success = success_curve(results, gt);
    } else {
        for (const auto* m : members) {
            const auto p = precision_curve(m->results, m->gt, default_precision_thresholds());
            const auto s = success_curve(m->results, m->gt);
            if (out.precision.empty()) {
                out.precision = p;
                out.success = s;
                for (auto& q : out.precision) q.value = 0.0;
                for (auto& q : out.success) q.value = 0.0;
            }
            for (std::size_t i = 0; i < p.size(); ++i) out.precision[i].value += p[i].value / members.size();
            for (std::size_t i = 0; i < s.size(); ++i) out.success[i].value += s[i].value / members.size();
            out.frames += m->gt.size();
        }
    }
    out.pr = curve_value_at(out.precision, pr_threshold(mode));
    out.sr = success_rate(out.success);
    return out;
}

}  // namespace

EvalReport evaluate_boxes(const std::vector<EvalInput>& inputs, EvalMode mode, bool per_sequence_mean) {
    require(!inputs.empty(), "nothing to evaluate");
    EvalReport report;
    report.mode = mode;
    report.pr_threshold = pr_threshold(mode);
    std::vector<const EvalInput*> all;
    std::map<std::string, std::vector<const EvalInput*>> groups;
    for (const auto& in : inputs) {
        try {
            auto seq = pool(in.name, {&in}, mode, false);
            seq.attributes = in.attributes;
            report.sequences.push_back(std::move(seq));
        } catch (const Error& e) {
            fail(e.kind(), "sequence '" + in.name + "': " + e.what());
        }
        all.push_back(&in);
        for (const auto& a : in.attributes) {
            groups[a].push_back(&in);
        }
    }
    report.aggregate = pool("ALL", all, mode, per_sequence_mean);
    for (const auto& [attr, members] : groups) {
        report.by_attribute[attr] = pool(attr, members, mode, per_sequence_mean);
    }
    return report;
}

EvalReport evaluate_directory(const fs::path& results_dir, const fs::path& dataset_dir, EvalMode mode,
                              bool per_sequence_mean) {
    const auto dirs = list_sequence_dirs(dataset_dir);
    if (dirs.empty()) {
        fail(ErrorKind::Io, "no sequences (subdirectories with gt.txt) under " + dataset_dir.string());
    }
    std::vector<std::string> missing;
    for (const auto& d : dirs) {
        const auto file = results_dir / (d.filename().string() + ".txt");
        if (!fs::exists(file)) {
            missing.push_back(file.string());
        }
    }
    if (!missing.empty()) {
        std::string msg = std::to_string(missing.size()) + " result file(s) missing:";
        for (const auto& m : missing) {
            msg += "\n  " + m;
        }
        fail(ErrorKind::Io, msg);
    }
    std::vector<EvalInput> inputs;
    for (const auto& d : dirs) {
        EvalInput in;
        in.name = d.filename().string();
        in.gt = read_boxes(d / "gt.txt");
        in.results = read_boxes(results_dir / (in.name + ".txt"));
        if (in.results.size() != in.gt.size()) {
            fail(ErrorKind::Format, "sequence '" + in.name + "': " + std::to_string(in.results.size()) +
                                        " result boxes for " + std::to_string(in.gt.size()) + " frames");
        }
        if (fs::exists(d / "attributes.txt")) {
            std::ifstream attr(d / "attributes.txt");
            std::string tag;
            while (std::getline(attr, tag)) {
                if (!tag.empty() && tag.back() == '\r') tag.pop_back();
                if (!tag.empty()) in.attributes.push_back(tag);
            }
        }
        inputs.push_back(std::move(in));
    }
    return evaluate_boxes(inputs, mode, per_sequence_mean);
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed << v;
    return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        fail(ErrorKind::Io, "cannot write " + path.string());
    }
}

}  // namespace

std::string report_csv(const EvalReport& report) {
    std::string s = "sequence,frames,pr,sr\n";
    auto row = [&](const SequenceReport& r) {
        s += r.name + ',' + std::to_string(r.frames) + ',' + fmt(r.pr) + ',' + fmt(r.sr) + '\n';
    };
    for (const auto& r : report.sequences) row(r);
    row(report.aggregate);
    for (const auto& [attr, r] : report.by_attribute) {
        SequenceReport tagged = r;
        tagged.name = "attr:" + attr;
        row(tagged);
    }
    return s;
}

std::string curve_csv(const Curve& curve) {
    std::string s = "threshold,value\n";
    for (const auto& p : curve) {
        s += fmt(p.threshold) + ',' + fmt(p.value) + '\n';
    }
    return s;
}

void write_report(const EvalReport& report, const fs::path& out_dir, bool plots) {
    std::error_code ec;
    fs::create_directories(out_dir / "curves", ec);
    if (!fs::is_directory(out_dir / "curves")) {
        fail(ErrorKind::Io, "cannot create " + (out_dir / "curves").string());
    }
    write_text(out_dir / "report.csv", report_csv(report));
    write_text(out_dir / "curves" / "ALL_precision.csv", curve_csv(report.aggregate.precision));
    write_text(out_dir / "curves" / "ALL_success.csv", curve_csv(report.aggregate.success));
    for (const auto& r : report.sequences) {
        write_text(out_dir / "curves" / (r.name + "_precision.csv"), curve_csv(r.precision));
        write_text(out_dir / "curves" / (r.name + "_success.csv"), curve_csv(r.success));
    }
    if (plots) {
        plot_curves({{"ALL", report.aggregate.precision}}, 50.0, out_dir / "precision.png");
        plot_curves({{"ALL", report.aggregate.success}}, 1.0, out_dir / "success.png");
    }
}

}  // namespace fanet
