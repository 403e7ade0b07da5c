#include "core/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "core/error.hpp"

namespace fs = std::filesystem;

namespace fanet {

void RGBTSequence::validate() const {
    if (rgb.size() != thermal.size()) {
        fail(ErrorKind::Format, "sequence '" + name + "': " + std::to_string(rgb.size()) + " rgb frames but " +
                                    std::to_string(thermal.size()) + " thermal frames");
    }
    if (gt.size() != rgb.size()) {
        fail(ErrorKind::Format, "sequence '" + name + "': " + std::to_string(gt.size()) + " gt boxes for " +
                                    std::to_string(rgb.size()) + " frames");
    }
    for (std::size_t i = 0; i < rgb.size(); ++i) {
        const auto& r = rgb[i];
        const auto& t = thermal[i];
        if (r.width != size.width || r.height != size.height || t.width != size.width || t.height != size.height) {
            fail(ErrorKind::Format, "sequence '" + name + "': frame " + std::to_string(i + 1) +
                                        " differs from the sequence frame size");
        }
        const Box& b = gt[i];
        const bool inside = b.valid() && b.x >= -1.0 && b.y >= -1.0 && b.x + b.w <= size.width + 1.0 &&
                            b.y + b.h <= size.height + 1.0;
        if (!inside) {
            fail(ErrorKind::Format, "sequence '" + name + "': gt box of frame " + std::to_string(i + 1) +
                                        " is invalid or outside the frame");
        }
    }
}

void SynthConfig::validate() const {
    require(frames >= 1, "synth: frames must be >= 1");
    require(width >= 8 && height >= 8, "synth: frame size must be at least 8x8");
    require(target_width >= 2 && target_height >= 2 && target_width < width && target_height < height,
            "synth: target must be at least 2 px and smaller than the frame");
    require(rgb_noise_sigma >= 0 && t_noise_sigma >= 0 && jitter_sigma >= 0 && speed >= 0,
            "synth: sigmas and speed must be non-negative");
    auto in_range = [&](int s, int e) { return s >= 0 && e <= frames && s <= e; };
    for (const auto& seg : rgb_illumination) {
        require(in_range(seg.start, seg.end) && seg.scale >= 0, "synth: illumination segment outside [0, frames)");
    }
    for (const auto& iv : t_blackout) {
        require(in_range(iv.start, iv.end), "synth: blackout interval outside [0, frames)");
    }
    for (const auto& iv : occluders) {
        require(in_range(iv.start, iv.end), "synth: occluder interval outside [0, frames)");
    }
}

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(id)};
    return std::mt19937_64(seq);
}

std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

struct Wave {
    double fx;
    double fy;
    double phase;
    double amp;
};

struct Patch {
    int x;
    int y;
    int w;
    int h;
    double rgb[3];
    double thermal;
};

struct Scene {
    std::array<std::vector<Wave>, 3> rgb_waves;
    std::vector<Wave> t_waves;
    std::vector<Patch> patches;
};

Scene make_scene(const SynthConfig& cfg) {
    auto rng = stream(cfg.seed, 2);
    std::uniform_real_distribution<double> freq(0.02, 0.12);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Scene s;
    for (auto& waves : s.rgb_waves) {
        for (int k = 0; k < 2; ++k) {
            waves.push_back({freq(rng), freq(rng), phase(rng), 0.12});
        }
    }
    for (int k = 0; k < 2; ++k) {
        s.t_waves.push_back({freq(rng) * 0.5, freq(rng) * 0.5, phase(rng), 0.04});
    }
    std::uniform_int_distribution<int> px(0, cfg.width - 1);
    std::uniform_int_distribution<int> py(0, cfg.height - 1);
    for (int k = 0; k < 4; ++k) {
        Patch p;
        p.w = std::max(2, static_cast<int>(cfg.target_width * (0.6 + 0.8 * unit(rng))));
        p.h = std::max(2, static_cast<int>(cfg.target_height * (0.6 + 0.8 * unit(rng))));
        p.x = px(rng);
        p.y = py(rng);
        for (double& c : p.rgb) {
            c = 0.15 + 0.6 * unit(rng);
        }
        p.thermal = 0.35 + 0.15 * unit(rng);
        s.patches.push_back(p);
    }
    return s;
}

double wave_sum(const std::vector<Wave>& waves, int x, int y) {
    double v = 0.0;
    for (const auto& w : waves) {
        v += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
    }
    return v;
}

bool inside(int x, int y, int bx, int by, int bw, int bh) {
    return x >= bx && x < bx + bw && y >= by && y < by + bh;
}

std::string number_string(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

RGBTSequence generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    const Scene scene = make_scene(cfg);
    auto motion = stream(cfg.seed, 1);
    auto rgb_noise = stream(cfg.seed, 3);
    auto t_noise = stream(cfg.seed, 4);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double max_x = cfg.width - cfg.target_width;
    const double max_y = cfg.height - cfg.target_height;
    std::uniform_real_distribution<double> ux(0.2 * max_x, 0.8 * max_x);
    std::uniform_real_distribution<double> uy(0.2 * max_y, 0.8 * max_y);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    double px = ux(motion);
    double py = uy(motion);
    const double theta = angle(motion);
    double vx = cfg.speed * std::cos(theta);
    double vy = cfg.speed * std::sin(theta);

    RGBTSequence seq;
    seq.name = cfg.name;
    seq.size = {cfg.width, cfg.height};
    for (int f = 0; f < cfg.frames; ++f) {
        if (f > 0) {
            px += vx + cfg.jitter_sigma * gauss(motion);
            py += vy + cfg.jitter_sigma * gauss(motion);
            if (px < 0) { px = -px; vx = -vx; }
            if (px > max_x) { px = 2 * max_x - px; vx = -vx; }
            if (py < 0) { py = -py; vy = -vy; }
            if (py > max_y) { py = 2 * max_y - py; vy = -vy; }
            px = std::clamp(px, 0.0, max_x);
            py = std::clamp(py, 0.0, max_y);
        }
        const int bx = static_cast<int>(std::lround(px));
        const int by = static_cast<int>(std::lround(py));
        const int bw = cfg.target_width;
        const int bh = cfg.target_height;
        seq.gt.push_back({static_cast<double>(bx), static_cast<double>(by), static_cast<double>(bw),
                          static_cast<double>(bh)});

        double illum = 1.0;
        for (const auto& seg : cfg.rgb_illumination) {
            if (f >= seg.start && f < seg.end) {
                illum = seg.scale;
            }
        }
        const bool blackout = std::any_of(cfg.t_blackout.begin(), cfg.t_blackout.end(),
                                          [f](const FrameInterval& iv) { return iv.contains(f); });
        const bool occluded = std::any_of(cfg.occluders.begin(), cfg.occluders.end(),
                                          [f](const FrameInterval& iv) { return iv.contains(f); });

        Image rgb(cfg.width, cfg.height, 3);
        Image thermal(cfg.width, cfg.height, 1);
        for (int y = 0; y < cfg.height; ++y) {
            for (int x = 0; x < cfg.width; ++x) {
                double c[3];
                for (int k = 0; k < 3; ++k) {
                    c[k] = 0.45 + wave_sum(scene.rgb_waves[static_cast<std::size_t>(k)], x, y);
                }
                double t = 0.22 + wave_sum(scene.t_waves, x, y);
                for (const auto& p : scene.patches) {
                    if (inside(x, y, p.x, p.y, p.w, p.h)) {
                        std::copy(std::begin(p.rgb), std::end(p.rgb), c);
                        t = p.thermal;
                    }
                }
                if (inside(x, y, bx, by, bw, bh)) {
                    const bool check = (((x - bx) / 4) + ((y - by) / 4)) % 2 == 0;
                    c[0] = check ? 0.9 : 0.95;
                    c[1] = check ? 0.15 : 0.85;
                    c[2] = check ? 0.1 : 0.2;
                    t = 0.9;
                }
                if (occluded && inside(x, y, bx, by, (bw + 1) / 2, bh)) {
                    c[0] = c[1] = c[2] = 0.5;
                    t = 0.3;
                }
                for (int k = 0; k < 3; ++k) {
                    double v = c[k] * illum;
                    if (cfg.rgb_noise_sigma > 0) {
                        v += cfg.rgb_noise_sigma * gauss(rgb_noise);
                    }
                    rgb.at(x, y, k) = quantize(v);
                }
                if (cfg.t_noise_sigma > 0) {
                    t += cfg.t_noise_sigma * gauss(t_noise);
                }
                if (blackout) {
                    t = 0.0;
                }
                thermal.at(x, y) = quantize(t);
            }
        }
        seq.rgb.push_back(std::move(rgb));
        seq.thermal.push_back(std::move(thermal));
    }
    if (cfg.rgb_illumination.size() > 0) seq.attributes.push_back("illumination");
    if (cfg.rgb_noise_sigma > 0) seq.attributes.push_back("rgb-noise");
    if (cfg.t_noise_sigma > 0) seq.attributes.push_back("thermal-noise");
    if (!cfg.t_blackout.empty()) seq.attributes.push_back("thermal-blackout");
    if (!cfg.occluders.empty()) seq.attributes.push_back("occlusion");
    return seq;
}

std::string frame_stem(int number) {
    std::ostringstream os;
    os.width(5);
    os.fill('0');
    os << number;
    return os.str();
}

Box parse_box_line(const std::string& line) {
    std::string s = line;
    if (!s.empty() && s.back() == '\r') {
        s.pop_back();
    }
    double v[4] = {};
    std::size_t pos = 0;
    for (int k = 0; k < 4; ++k) {
        const auto next = k < 3 ? s.find(',', pos) : s.size();
        if (next == std::string::npos) {
            fail(ErrorKind::Format, "expected 4 comma-separated numbers in \"" + line + "\"");
        }
        std::string field = s.substr(pos, next - pos);
        const auto b = field.find_first_not_of(" \t");
        const auto e = field.find_last_not_of(" \t");
        field = b == std::string::npos ? "" : field.substr(b, e - b + 1);
        const auto res = std::from_chars(field.data(), field.data() + field.size(), v[k]);
        if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
            fail(ErrorKind::Format, "unparsable number \"" + field + "\" in \"" + line + "\"");
        }
        pos = next + 1;
    }
    return {v[0], v[1], v[2], v[3]};
}

std::string format_box_line(const Box& b) {
    return number_string(b.x) + ',' + number_string(b.y) + ',' + number_string(b.w) + ',' + number_string(b.h);
}

std::vector<Box> read_boxes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::Io, "cannot open " + path.string());
    }
    std::vector<Box> out;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty() || line == "\r") {
            continue;
        }
        try {
            out.push_back(parse_box_line(line));
        } catch (const Error& e) {
            fail(ErrorKind::Format, path.string() + ":" + std::to_string(number) + ": " + e.what());
        }
    }
    return out;
}

void write_boxes(const std::vector<Box>& boxes, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    }
    for (const auto& b : boxes) {
        out << format_box_line(b) << '\n';
    }
    if (!out) {
        fail(ErrorKind::Io, "write failed for " + path.string());
    }
}

namespace {

std::vector<fs::path> image_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        fail(ErrorKind::Io, "missing frame folder " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto ext = entry.path().extension().string();
        if (entry.is_regular_file() && (ext == ".ppm" || ext == ".pgm")) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace

RGBTSequence load_sequence(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        fail(ErrorKind::Io, "sequence directory " + dir.string() + " does not exist");
    }
    const auto rgb_files = image_files(dir / "rgb");
    const auto t_files = image_files(dir / "t");
    if (rgb_files.size() != t_files.size()) {
        fail(ErrorKind::Format, dir.string() + ": rgb/ has " + std::to_string(rgb_files.size()) +
                                    " frames but t/ has " + std::to_string(t_files.size()));
    }
    if (!fs::exists(dir / "gt.txt")) {
        fail(ErrorKind::Io, "missing ground-truth file " + (dir / "gt.txt").string());
    }
    RGBTSequence seq;
    seq.name = dir.filename().string();
    if (seq.name.empty()) {
        seq.name = dir.parent_path().filename().string();
    }
    seq.gt = read_boxes(dir / "gt.txt");
    if (seq.gt.size() != rgb_files.size()) {
        fail(ErrorKind::Format, (dir / "gt.txt").string() + " has " + std::to_string(seq.gt.size()) +
                                    " boxes for " + std::to_string(rgb_files.size()) + " frames");
    }
    for (std::size_t i = 0; i < rgb_files.size(); ++i) {
        seq.rgb.push_back(read_pnm(rgb_files[i]));
        seq.thermal.push_back(read_pnm(t_files[i]));
        if (seq.rgb.back().channels != 3) {
            fail(ErrorKind::Format, rgb_files[i].string() + " is not a 3-channel image");
        }
    }
    if (!seq.rgb.empty()) {
        seq.size = {seq.rgb.front().width, seq.rgb.front().height};
    }
    if (fs::exists(dir / "attributes.txt")) {
        std::ifstream in(dir / "attributes.txt");
        std::string tag;
        while (std::getline(in, tag)) {
            if (!tag.empty() && tag.back() == '\r') {
                tag.pop_back();
            }
            if (!tag.empty()) {
                seq.attributes.push_back(tag);
            }
        }
    }
    seq.validate();
    return seq;
}

void write_sequence(const RGBTSequence& seq, const fs::path& dir) {
    seq.validate();
    std::error_code ec;
    fs::create_directories(dir / "rgb", ec);
    fs::create_directories(dir / "t", ec);
    if (!fs::is_directory(dir / "rgb") || !fs::is_directory(dir / "t")) {
        fail(ErrorKind::Io, "cannot create sequence directory " + dir.string());
    }
    for (std::size_t i = 0; i < seq.frame_count(); ++i) {
        const auto stem = frame_stem(static_cast<int>(i + 1));
        write_pnm(seq.rgb[i], dir / "rgb" / (stem + ".ppm"));
        write_pnm(seq.thermal[i], dir / "t" / (stem + (seq.thermal[i].channels == 1 ? ".pgm" : ".ppm")));
    }
    write_boxes(seq.gt, dir / "gt.txt");
    if (!seq.attributes.empty()) {
        std::ofstream out(dir / "attributes.txt", std::ios::binary);
        for (const auto& a : seq.attributes) {
            out << a << '\n';
        }
        if (!out) {
            fail(ErrorKind::Io, "write failed for " + (dir / "attributes.txt").string());
        }
    }
}

std::vector<fs::path> list_sequence_dirs(const fs::path& root) {
    if (!fs::is_directory(root)) {
        fail(ErrorKind::Io, "dataset directory " + root.string() + " does not exist");
    }
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "gt.txt")) {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace fanet
