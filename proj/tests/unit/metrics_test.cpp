#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "core/data.hpp"
#include "core/error.hpp"
#include "core/metrics.hpp"

using namespace fanet;
namespace fs = std::filesystem;

namespace {

std::vector<Box> random_boxes(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> pos(0, 100);
    std::uniform_real_distribution<double> side(2, 40);
    std::vector<Box> out;
    for (int i = 0; i < n; ++i) out.push_back({pos(rng), pos(rng), side(rng), side(rng)});
    return out;
}

std::vector<Box> jitter(const std::vector<Box>& gt, std::mt19937_64& rng, double sigma) {
    std::normal_distribution<double> n(0, sigma);
    std::vector<Box> out;
    for (const auto& b : gt) out.push_back({b.x + n(rng), b.y + n(rng), std::max(1.0, b.w + n(rng)), std::max(1.0, b.h + n(rng))});
    return out;
}

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("fanet_metrics_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("worked precision and success values") {
    const std::vector<Box> gt{{10, 10, 10, 10}, {50, 50, 10, 10}};
    const std::vector<Box> res{{13, 10, 10, 10}, {80, 50, 10, 10}};
    const auto pc = precision_curve(res, gt, {5.0, 20.0, 30.0});
    CHECK(pc[0].value == 0.5);
    CHECK(pc[1].value == 0.5);
    CHECK(pc[2].value == 1.0);

    const auto exact = success_curve(gt, gt);
    CHECK(exact.size() == 21);
    CHECK(std::abs(success_rate(exact) - 20.0 / 21.0) < 1e-12);
    CHECK(precision_curve(gt, gt, default_precision_thresholds()).front().value == 1.0);

    const std::vector<Box> far{{500, 500, 10, 10}, {900, 900, 10, 10}};
    CHECK(success_rate(success_curve(far, gt)) == 0.0);

    const std::vector<Box> g1{{0, 0, 10, 10}};
    const std::vector<Box> half{{0, 0, 10, 5}};
    REQUIRE(iou(half[0], g1[0]) == 0.5);
    const auto sc = success_curve(half, g1);
    for (const auto& p : sc) CHECK(p.value == (p.threshold < 0.5 ? 1.0 : 0.0));
    CHECK(std::abs(success_rate(sc) - 10.0 / 21.0) < 1e-12);
}

TEST_CASE("named thresholds") {
    CHECK(pr_threshold(EvalMode::Gtot) == 5.0);
    CHECK(pr_threshold(EvalMode::Rgbt234) == 20.0);
    CHECK(parse_eval_mode("gtot") == EvalMode::Gtot);
    CHECK(parse_eval_mode("rgbt234") == EvalMode::Rgbt234);
    CHECK_THROWS_AS(parse_eval_mode("otb"), Error);
    const auto grid = success_thresholds();
    CHECK(grid.size() == 21);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 1.0);
}

TEST_CASE("curves match brute-force counting") {
    std::mt19937_64 rng(1);
    const auto taus = default_precision_thresholds();
    for (int t = 0; t < 100; ++t) {
        const int n = 1 + t % 30;
        const auto gt = random_boxes(rng, n);
        const auto res = jitter(gt, rng, 1.0 + t % 10);
        const auto pc = precision_curve(res, gt, taus);
        const auto sc = success_curve(res, gt);
        for (std::size_t k = 0; k < taus.size(); ++k) {
            int hit = 0;
            for (int i = 0; i < n; ++i) {
                const double dx = (res[i].x + res[i].w / 2) - (gt[i].x + gt[i].w / 2);
                const double dy = (res[i].y + res[i].h / 2) - (gt[i].y + gt[i].h / 2);
                hit += std::sqrt(dx * dx + dy * dy) <= taus[k];
            }
            CHECK(std::abs(pc[k].value - double(hit) / n) <= 1e-12);
        }
        double sr = 0.0;
        for (int k = 0; k <= 20; ++k) {
            const double thr = k / 20.0;
            int hit = 0;
            for (int i = 0; i < n; ++i) {
                const double ix = std::max(0.0, std::min(res[i].x + res[i].w, gt[i].x + gt[i].w) - std::max(res[i].x, gt[i].x));
                const double iy = std::max(0.0, std::min(res[i].y + res[i].h, gt[i].y + gt[i].h) - std::max(res[i].y, gt[i].y));
                const double inter = ix * iy;
                const double v = inter / (res[i].w * res[i].h + gt[i].w * gt[i].h - inter);
                hit += v > thr;
            }
            CHECK(std::abs(sc[static_cast<std::size_t>(k)].value - double(hit) / n) <= 1e-12);
            sr += double(hit) / n;
        }
        CHECK(std::abs(success_rate(sc) - sr / 21.0) <= 1e-12);
        for (std::size_t k = 1; k < pc.size(); ++k) CHECK(pc[k].value >= pc[k - 1].value);
        for (std::size_t k = 1; k < sc.size(); ++k) CHECK(sc[k].value <= sc[k - 1].value);
    }
}

TEST_CASE("length mismatch raises") {
    const std::vector<Box> a{{0, 0, 1, 1}};
    const std::vector<Box> b{{0, 0, 1, 1}, {0, 0, 1, 1}};
    CHECK_THROWS_AS(precision_curve(a, b, {5.0}), Error);
    CHECK_THROWS_AS(success_curve(a, b), Error);
}

TEST_CASE("aggregation is frame weighted") {
    std::mt19937_64 rng(2);
    const auto g1 = random_boxes(rng, 10);
    const auto g2 = random_boxes(rng, 10);
    const auto g3 = random_boxes(rng, 30);
    const EvalInput s1{"a", jitter(g1, rng, 3), g1, {"OCC"}};
    const EvalInput s2{"b", jitter(g2, rng, 8), g2, {"OCC", "LI"}};
    const EvalInput s3{"c", jitter(g3, rng, 5), g3, {}};

    const auto one = evaluate_boxes({s1}, EvalMode::Gtot);
    CHECK(one.aggregate.pr == one.sequences[0].pr);
    CHECK(one.aggregate.sr == one.sequences[0].sr);

    const auto two = evaluate_boxes({s1, s2}, EvalMode::Rgbt234);
    CHECK(std::abs(two.aggregate.pr - (two.sequences[0].pr + two.sequences[1].pr) / 2) < 1e-12);
    CHECK(two.pr_threshold == 20.0);

    const auto three = evaluate_boxes({s1, s2, s3}, EvalMode::Gtot);
    const double weighted = (10 * three.sequences[0].pr + 10 * three.sequences[1].pr + 30 * three.sequences[2].pr) / 50;
    CHECK(std::abs(three.aggregate.pr - weighted) < 1e-12);
    const auto mean = evaluate_boxes({s1, s2, s3}, EvalMode::Gtot, true);
    CHECK(std::abs(mean.aggregate.pr - (three.sequences[0].pr + three.sequences[1].pr + three.sequences[2].pr) / 3) <
          1e-12);

    REQUIRE(three.by_attribute.count("OCC") == 1);
    CHECK(three.by_attribute.at("OCC").frames == 20);
    CHECK(three.by_attribute.at("LI").pr == three.sequences[1].pr);
    for (const auto& s : three.sequences) {
        CHECK(s.pr >= 0.0);
        CHECK(s.pr <= 1.0);
        CHECK(s.sr >= 0.0);
        CHECK(s.sr <= 1.0);
    }
}

TEST_CASE("report csv layout") {
    const std::vector<Box> gt{{0, 0, 10, 10}};
    const auto r = evaluate_boxes({{"seq", gt, gt, {}}}, EvalMode::Gtot);
    const auto csv = report_csv(r);
    CHECK(csv.rfind("sequence,frames,pr,sr\n", 0) == 0);
    CHECK(csv.find("seq,1,1.000000,0.952381\n") != std::string::npos);
    CHECK(csv.find("ALL,1,1.000000,0.952381\n") != std::string::npos);
    CHECK(curve_csv({{0.0, 1.0}, {0.5, 0.25}}).rfind("threshold,value\n", 0) == 0);
}

TEST_CASE("directory evaluation lists every missing result and writes outputs") {
    const auto root = fresh_dir("dir");
    SynthConfig sc;
    sc.frames = 4;
    sc.width = 40;
    sc.height = 40;
    sc.target_width = 8;
    sc.target_height = 8;
    for (const char* name : {"alpha", "beta", "gamma"}) {
        sc.name = name;
        write_sequence(generate_synthetic(sc), root / "data" / name);
    }
    fs::create_directories(root / "results");
    write_boxes(load_sequence(root / "data" / "alpha").gt, root / "results" / "alpha.txt");
    try {
        evaluate_directory(root / "results", root / "data", EvalMode::Gtot);
        FAIL("expected missing results");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("beta") != std::string::npos);
        CHECK(msg.find("gamma") != std::string::npos);
    }
    write_boxes(load_sequence(root / "data" / "beta").gt, root / "results" / "beta.txt");
    write_boxes(load_sequence(root / "data" / "gamma").gt, root / "results" / "gamma.txt");
    const auto rep = evaluate_directory(root / "results", root / "data", EvalMode::Gtot);
    CHECK(rep.sequences.size() == 3);
    CHECK(rep.aggregate.pr == 1.0);
    write_report(rep, root / "out", true);
    CHECK(fs::exists(root / "out" / "report.csv"));
    CHECK(fs::exists(root / "out" / "curves" / "ALL_precision.csv"));
    CHECK(fs::exists(root / "out" / "precision.png"));
    CHECK(fs::exists(root / "out" / "success.png"));
    fs::remove_all(root);
}
