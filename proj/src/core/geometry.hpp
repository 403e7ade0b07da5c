#pragma once

#include <array>
#include <random>
#include <vector>

namespace fanet {

/// Axis-aligned box in pixels; (x, y) is the top-left corner.
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double cx() const { return x + 0.5 * w; }
    double cy() const { return y + 0.5 * h; }
    double area() const { return w * h; }
    bool valid() const;

    static Box from_center(double cx, double cy, double w, double h) {
        return {cx - 0.5 * w, cy - 0.5 * h, w, h};
    }

    friend bool operator==(const Box&, const Box&) = default;
};

struct FrameSize {
    int width = 0;
    int height = 0;
};

/// (cx, cy, s) with target size (w0 * base^s, h0 * base^s).
struct TargetState {
    double cx = 0.0;
    double cy = 0.0;
    double s = 0.0;

    Box to_box(double w0, double h0, double scale_base = 1.05) const;
    static TargetState from_box(const Box& b, double w0, double scale_base = 1.05);
};

using BoxDeltas = std::array<double, 4>;

double iou(const Box& a, const Box& b);

/// Center distance in pixels.
double center_distance(const Box& a, const Box& b);

/// Keeps the box inside the frame: sides clamped to [min_side, frame], then
/// shifted so it lies entirely in bounds.
Box clip_to_frame(const Box& b, FrameSize frame, double min_side = 2.0);

struct CandidateSampling {
    double translation_var = 0.09;  ///< center variance = translation_var * r^2
    double scale_var = 0.25;        ///< variance of the log-scale offset
    double scale_base = 1.05;
    double min_side = 2.0;
};

/// Gaussian candidates around `prev`. Centers ~ N(prev center, translation_var * r^2),
/// scale offset ~ N(0, scale_var), size = prev size * base^offset.
std::vector<Box> sample_candidates(const Box& prev, double ref_scale, int n, FrameSize frame,
                                   const CandidateSampling& params, std::mt19937_64& rng);

struct TrainingSampleConfig {
    double pos_min_iou = 0.7;
    double neg_max_iou = 0.5;
    int attempt_budget = 2000;  ///< max draws per requested sample
};

struct LabeledBox {
    Box box;
    int label = 0;  ///< 1 positive, 0 negative
};

/// Exactly n_pos positives (iou >= pos_min_iou) followed by n_neg negatives
/// (iou < neg_max_iou). Throws fanet::Error when the attempt budget runs out.
std::vector<LabeledBox> sample_training_boxes(const Box& gt, int n_pos, int n_neg, FrameSize frame,
                                              const TrainingSampleConfig& cfg, std::mt19937_64& rng);

/// Perturb-and-reject positives with iou >= min_iou.
std::vector<Box> sample_positive_boxes(const Box& gt, int n, double min_iou, FrameSize frame,
                                       int attempt_budget, std::mt19937_64& rng);

BoxDeltas box_to_deltas(const Box& anchor, const Box& target);
Box deltas_to_box(const Box& anchor, const BoxDeltas& d);

}  // namespace fanet
