#include "core/image.hpp"

#include <fstream>
#include <string>

#include "core/error.hpp"

namespace fanet {

namespace {

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    char ch = 0;
    while (in.get(ch)) {
        if (ch == '#') {
            std::string ignored;
            std::getline(in, ignored);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!tok.empty()) {
                break;
            }
            continue;
        }
        tok.push_back(ch);
    }
    return tok;
}

}  // namespace

Image read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::Io, "cannot open image " + path.string());
    }
    const std::string magic = next_token(in);
    int channels = 0;
    if (magic == "P5") {
        channels = 1;
    } else if (magic == "P6") {
        channels = 3;
    } else {
        fail(ErrorKind::Format, "unsupported image format in " + path.string() + " (expected binary PGM/PPM)");
    }
    int w = 0;
    int h = 0;
    int maxval = 0;
    try {
        w = std::stoi(next_token(in));
        h = std::stoi(next_token(in));
        maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        fail(ErrorKind::Format, "malformed image header in " + path.string());
    }
    if (w <= 0 || h <= 0 || maxval != 255) {
        fail(ErrorKind::Format, "unsupported image dimensions or maxval in " + path.string());
    }
    Image img(w, h, channels);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        fail(ErrorKind::Format, "truncated pixel data in " + path.string());
    }
    return img;
}

void write_pnm(const Image& image, const std::filesystem::path& path) {
    require(image.channels == 1 || image.channels == 3, "write_pnm: only 1- or 3-channel images are supported");
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    }
    out << (image.channels == 1 ? "P5" : "P6") << '\n' << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
    if (!out) {
        fail(ErrorKind::Io, "write failed for " + path.string());
    }
}

}  // namespace fanet
