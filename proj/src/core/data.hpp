#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/geometry.hpp"
#include "core/image.hpp"

namespace fanet {

/// Aligned RGB / thermal frame pairs with one ground-truth box per frame.
/// Thermal frames are kept single-channel; prepare_frame replicates them.
struct RGBTSequence {
    std::string name;
    FrameSize size;
    std::vector<Image> rgb;
    std::vector<Image> thermal;
    std::vector<Box> gt;
    std::vector<std::string> attributes;

    std::size_t frame_count() const { return rgb.size(); }
    /// Throws fanet::Error describing the first violated invariant.
    void validate() const;
};

struct FrameInterval {
    int start = 0;  ///< inclusive
    int end = 0;    ///< exclusive
    bool contains(int f) const { return f >= start && f < end; }
};

struct IlluminationSegment {
    int start = 0;
    int end = 0;
    double scale = 1.0;
};

struct SynthConfig {
    std::string name = "synth";
    int frames = 50;
    int width = 96;
    int height = 96;
    int target_width = 20;
    int target_height = 20;
    double speed = 1.5;  ///< px per frame; direction drawn from the seed
    double jitter_sigma = 0.0;
    double rgb_noise_sigma = 0.0;  ///< on [0, 1] intensities
    double t_noise_sigma = 0.0;
    std::vector<IlluminationSegment> rgb_illumination;
    std::vector<FrameInterval> t_blackout;
    std::vector<FrameInterval> occluders;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Moving textured square (RGB) / hot blob (thermal) over a structured
/// background. Deterministic in `cfg.seed`; each modality's degradations use
/// their own random stream.
RGBTSequence generate_synthetic(const SynthConfig& cfg);

/// Reads <dir>/rgb/*.ppm, <dir>/t/*.pgm, <dir>/gt.txt and the optional
/// <dir>/attributes.txt. Frames are paired in sorted filename order.
RGBTSequence load_sequence(const std::filesystem::path& dir);
void write_sequence(const RGBTSequence& seq, const std::filesystem::path& dir);

/// Every immediate subdirectory of `root` that holds a gt.txt, sorted by name.
std::vector<std::filesystem::path> list_sequence_dirs(const std::filesystem::path& root);

/// "x,y,w,h" lines, LF terminated. Numbers use the shortest round-trip form.
std::vector<Box> read_boxes(const std::filesystem::path& path);
void write_boxes(const std::vector<Box>& boxes, const std::filesystem::path& path);
Box parse_box_line(const std::string& line);
std::string format_box_line(const Box& box);

/// Zero-padded 5-digit frame file stem, e.g. 7 -> "00007".
std::string frame_stem(int number);

}  // namespace fanet
