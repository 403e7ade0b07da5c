#include "core/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/error.hpp"

namespace fanet {

bool Box::valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) && w > 0.0 && h > 0.0;
}

Box TargetState::to_box(double w0, double h0, double scale_base) const {
    const double f = std::pow(scale_base, s);
    return Box::from_center(cx, cy, w0 * f, h0 * f);
}

TargetState TargetState::from_box(const Box& b, double w0, double scale_base) {
    return {b.cx(), b.cy(), std::log(b.w / w0) / std::log(scale_base)};
}

double iou(const Box& a, const Box& b) {
    // Extents come from corner differences so that identical boxes give
    // an intersection exactly equal to each area.
    const double ax2 = a.x + a.w, ay2 = a.y + a.h, bx2 = b.x + b.w, by2 = b.y + b.h;
    const double ix = std::max(0.0, std::min(ax2, bx2) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(ay2, by2) - std::max(a.y, b.y));
    const double inter = ix * iy;
    const double uni = (ax2 - a.x) * (ay2 - a.y) + (bx2 - b.x) * (by2 - b.y) - inter;
    if (uni <= 0.0) {
        return 0.0;
    }
    return std::clamp(inter / uni, 0.0, 1.0);
}

double center_distance(const Box& a, const Box& b) {
    return std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
}

Box clip_to_frame(const Box& b, FrameSize frame, double min_side) {
    const double fw = frame.width;
    const double fh = frame.height;
    Box out;
    out.w = std::clamp(b.w, std::min(min_side, fw), fw);
    out.h = std::clamp(b.h, std::min(min_side, fh), fh);
    out.x = std::clamp(b.cx() - 0.5 * out.w, 0.0, fw - out.w);
    out.y = std::clamp(b.cy() - 0.5 * out.h, 0.0, fh - out.h);
    return out;
}

std::vector<Box> sample_candidates(const Box& prev, double ref_scale, int n, FrameSize frame,
                                   const CandidateSampling& params, std::mt19937_64& rng) {
    require(n >= 1, "sample_candidates: n must be >= 1");
    require(ref_scale > 0.0, "sample_candidates: ref_scale must be positive");
    const double t_sd = std::sqrt(params.translation_var) * ref_scale;
    const double s_sd = std::sqrt(params.scale_var);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<Box> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double cx = prev.cx() + t_sd * unit(rng);
        const double cy = prev.cy() + t_sd * unit(rng);
        const double f = std::pow(params.scale_base, s_sd * unit(rng));
        out.push_back(clip_to_frame(Box::from_center(cx, cy, prev.w * f, prev.h * f), frame, params.min_side));
    }
    return out;
}

namespace {

std::string budget_message(const char* what, const Box& gt, FrameSize frame) {
    std::ostringstream os;
    os << "sample_training_boxes: attempt budget exhausted drawing " << what << " for gt (" << gt.x << ','
       << gt.y << ',' << gt.w << ',' << gt.h << ") in " << frame.width << 'x' << frame.height << " frame";
    return os.str();
}

}  // namespace

std::vector<Box> sample_positive_boxes(const Box& gt, int n, double min_iou, FrameSize frame,
                                       int attempt_budget, std::mt19937_64& rng) {
    require(gt.valid(), "sample_positive_boxes: invalid gt box");
    std::normal_distribution<double> unit(0.0, 1.0);
    const double r = 0.5 * (gt.w + gt.h);
    std::vector<Box> out;
    out.reserve(static_cast<std::size_t>(std::max(n, 0)));
    const long long budget = static_cast<long long>(attempt_budget) * std::max(n, 1);
    long long attempts = 0;
    while (static_cast<int>(out.size()) < n) {
        if (++attempts > budget) {
            fail(ErrorKind::Runtime, budget_message("positives", gt, frame));
        }
        const double cx = gt.cx() + 0.1 * r * unit(rng);
        const double cy = gt.cy() + 0.1 * r * unit(rng);
        const double f = std::pow(1.05, 1.5 * unit(rng));
        const double aspect = std::pow(1.05, 0.5 * unit(rng));
        const Box b = clip_to_frame(Box::from_center(cx, cy, gt.w * f * aspect, gt.h * f / aspect), frame);
        if (iou(b, gt) >= min_iou) {
            out.push_back(b);
        }
    }
    return out;
}

std::vector<LabeledBox> sample_training_boxes(const Box& gt, int n_pos, int n_neg, FrameSize frame,
                                              const TrainingSampleConfig& cfg, std::mt19937_64& rng) {
    require(gt.valid(), "sample_training_boxes: invalid gt box");
    require(gt.x >= 0 && gt.y >= 0 && gt.x + gt.w <= frame.width + 1e-9 && gt.y + gt.h <= frame.height + 1e-9,
            "sample_training_boxes: gt box lies outside the frame");
    std::vector<LabeledBox> out;
    out.reserve(static_cast<std::size_t>(n_pos + n_neg));
    for (const Box& b : sample_positive_boxes(gt, n_pos, cfg.pos_min_iou, frame, cfg.attempt_budget, rng)) {
        out.push_back({b, 1});
    }

    // Negatives alternate between uniform placement over the frame and wide
    // perturbations around the target.
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> ux(0.0, frame.width);
    std::uniform_real_distribution<double> uy(0.0, frame.height);
    const double r = 0.5 * (gt.w + gt.h);
    const long long budget = static_cast<long long>(cfg.attempt_budget) * std::max(n_neg, 1);
    long long attempts = 0;
    int drawn = 0;
    while (drawn < n_neg) {
        if (++attempts > budget) {
            fail(ErrorKind::Runtime, budget_message("negatives", gt, frame));
        }
        const double f = std::pow(1.05, 3.0 * unit(rng));
        double cx = 0.0;
        double cy = 0.0;
        if (attempts % 2 == 0) {
            cx = ux(rng);
            cy = uy(rng);
        } else {
            cx = gt.cx() + r * unit(rng);
            cy = gt.cy() + r * unit(rng);
        }
        const Box b = clip_to_frame(Box::from_center(cx, cy, gt.w * f, gt.h * f), frame);
        if (iou(b, gt) < cfg.neg_max_iou) {
            out.push_back({b, 0});
            ++drawn;
        }
    }
    return out;
}

BoxDeltas box_to_deltas(const Box& anchor, const Box& target) {
    return {(target.cx() - anchor.cx()) / anchor.w, (target.cy() - anchor.cy()) / anchor.h,
            std::log(target.w / anchor.w), std::log(target.h / anchor.h)};
}

Box deltas_to_box(const Box& anchor, const BoxDeltas& d) {
    const double cx = anchor.cx() + d[0] * anchor.w;
    const double cy = anchor.cy() + d[1] * anchor.h;
    return Box::from_center(cx, cy, anchor.w * std::exp(d[2]), anchor.h * std::exp(d[3]));
}

}  // namespace fanet
