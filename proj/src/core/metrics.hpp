#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "core/geometry.hpp"

namespace fanet {

struct CurvePoint {
    double threshold = 0.0;
    double value = 0.0;
};
using Curve = std::vector<CurvePoint>;

enum class EvalMode { Gtot, Rgbt234 };

EvalMode parse_eval_mode(const std::string& name);
std::string eval_mode_name(EvalMode mode);
/// Pixel threshold at which PR is read: 5 for gtot, 20 for rgbt234.
double pr_threshold(EvalMode mode);

/// Integer pixel thresholds 0..50.
std::vector<double> default_precision_thresholds();
/// {0, 0.05, ..., 1.0}
std::vector<double> success_thresholds();

/// Fraction of frames with center distance <= tau, per threshold.
Curve precision_curve(const std::vector<Box>& results, const std::vector<Box>& gt,
                      const std::vector<double>& thresholds);
/// Fraction of frames with iou > t on the 21-point grid.
Curve success_curve(const std::vector<Box>& results, const std::vector<Box>& gt);
double success_rate(const Curve& success);
double curve_value_at(const Curve& curve, double threshold);

struct SequenceReport {
    std::string name;
    std::size_t frames = 0;
    double pr = 0.0;
    double sr = 0.0;
    Curve precision;
    Curve success;
    std::vector<std::string> attributes;
};

struct EvalReport {
    EvalMode mode = EvalMode::Gtot;
    double pr_threshold = 5.0;
    std::vector<SequenceReport> sequences;
    SequenceReport aggregate;
    std::map<std::string, SequenceReport> by_attribute;
};

struct EvalInput {
    std::string name;
    std::vector<Box> results;
    std::vector<Box> gt;
    std::vector<std::string> attributes;
};

/// Frame-weighted pooling by default; `per_sequence_mean` averages the
/// per-sequence curves instead.
EvalReport evaluate_boxes(const std::vector<EvalInput>& inputs, EvalMode mode, bool per_sequence_mean = false);

/// Reads <results_dir>/<sequence>.txt for every sequence of `dataset_dir`.
/// All missing files are reported in one error.
EvalReport evaluate_directory(const std::filesystem::path& results_dir, const std::filesystem::path& dataset_dir,
                              EvalMode mode, bool per_sequence_mean = false);

/// report.csv plus precision/success curve CSVs for the aggregate and each
/// sequence; PNG plots of the aggregate curves when `plots` is set.
void write_report(const EvalReport& report, const std::filesystem::path& out_dir, bool plots);
std::string report_csv(const EvalReport& report);
std::string curve_csv(const Curve& curve);

/// Minimal line plot of one or more curves, written as an RGB PNG.
void plot_curves(const std::vector<std::pair<std::string, Curve>>& curves, double x_max,
                 const std::filesystem::path& path);

}  // namespace fanet
