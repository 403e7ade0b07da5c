#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "core/error.hpp"
#include "core/metrics.hpp"

namespace fanet {

namespace {

constexpr int kWidth = 480;
constexpr int kHeight = 360;
constexpr int kMargin = 40;

struct Canvas {
    std::vector<png_byte> rgb = std::vector<png_byte>(static_cast<std::size_t>(kWidth) * kHeight * 3, 255);

    void set(int x, int y, const png_byte* color) {
        if (x < 0 || y < 0 || x >= kWidth || y >= kHeight) return;
        std::copy(color, color + 3, rgb.begin() + (static_cast<std::ptrdiff_t>(y) * kWidth + x) * 3);
    }

    void line(int x0, int y0, int x1, int y1, const png_byte* color) {
        const int dx = std::abs(x1 - x0);
        const int dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1;
        const int sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        while (true) {
            set(x0, y0, color);
            set(x0, y0 + 1, color);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) { err += dy; x0 += sx; }
            if (e2 <= dx) { err += dx; y0 += sy; }
        }
    }
};

constexpr png_byte kPalette[][3] = {{31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {148, 103, 189}, {255, 127, 14}};

}  // namespace

void plot_curves(const std::vector<std::pair<std::string, Curve>>& curves, double x_max,
                 const std::filesystem::path& path) {
    Canvas c;
    const png_byte black[3] = {0, 0, 0};
    const png_byte grey[3] = {210, 210, 210};
    const int x0 = kMargin;
    const int y0 = kHeight - kMargin;
    const int x1 = kWidth - kMargin / 2;
    const int y1 = kMargin / 2;
    auto to_px = [&](double x, double y) {
        const int px = x0 + static_cast<int>(std::lround(x / x_max * (x1 - x0)));
        const int py = y0 - static_cast<int>(std::lround(std::clamp(y, 0.0, 1.0) * (y0 - y1)));
        return std::pair{px, py};
    };
    for (int k = 1; k <= 4; ++k) {
        const int gy = y0 - k * (y0 - y1) / 4;
        c.line(x0, gy, x1, gy, grey);
    }
    c.line(x0, y0, x1, y0, black);
    c.line(x0, y0, x0, y1, black);
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto* color = kPalette[i % std::size(kPalette)];
        const auto& curve = curves[i].second;
        for (std::size_t j = 1; j < curve.size(); ++j) {
            const auto [ax, ay] = to_px(curve[j - 1].threshold, curve[j - 1].value);
            const auto [bx, by] = to_px(curve[j].threshold, curve[j].value);
            c.line(ax, ay, bx, by, color);
        }
    }

    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!file) {
        fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorKind::Runtime, "libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorKind::Io, "PNG encoding failed for " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, kWidth, kHeight, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < kHeight; ++y) {
        png_write_row(png, c.rgb.data() + static_cast<std::size_t>(y) * kWidth * 3);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace fanet
