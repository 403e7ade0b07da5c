#include "doctest.h"

#include <random>

#include "core/error.hpp"
#include "core/regressor.hpp"

using namespace fanet;

namespace {

struct Fixture {
    Box gt{40, 30, 24, 18};
    std::vector<Box> boxes;
    Eigen::MatrixXd features;
};

// Features carry the true deltas linearly plus distractor dimensions, the
// way RoI features correlate with misalignment.
Fixture make_fixture(std::uint64_t seed, int n = 300, int dim = 24) {
    Fixture f;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> shift(0, 3);
    std::normal_distribution<double> scale(0, 0.08);
    std::normal_distribution<double> noise(0, 1);
    const Eigen::MatrixXd mix = Eigen::MatrixXd::Random(dim, 4) * 200.0;
    f.features.resize(dim, n);
    for (int i = 0; i < n; ++i) {
        const double w = f.gt.w * std::exp(scale(rng));
        const double h = f.gt.h * std::exp(scale(rng));
        const Box b = Box::from_center(f.gt.cx() + shift(rng), f.gt.cy() + shift(rng), w, h);
        f.boxes.push_back(b);
        const auto d = box_to_deltas(b, f.gt);
        Eigen::Vector4d dv(d[0], d[1], d[2], d[3]);
        Eigen::VectorXd x = mix * dv;
        for (int k = 0; k < dim; ++k) x(k) += noise(rng) * 0.5;
        f.features.col(i) = x;
    }
    return f;
}

}  // namespace

TEST_CASE("identity regressor leaves boxes alone") {
    const auto r = identity_regressor(10);
    CHECK(r.is_identity());
    const Box b{3, 4, 5, 6};
    CHECK(r.apply(b, Eigen::VectorXd::Random(10)) == b);
}

TEST_CASE("fitted regressor moves training boxes toward the gt") {
    const auto f = make_fixture(1);
    const auto r = fit_box_regressor(f.features, f.boxes, f.gt);
    CHECK(!r.is_identity());
    int better = 0;
    for (std::size_t i = 0; i < f.boxes.size(); ++i) {
        const Box moved = r.apply(f.boxes[i], f.features.col(static_cast<Eigen::Index>(i)));
        better += iou(moved, f.gt) > iou(f.boxes[i], f.gt);
    }
    CHECK(better >= 0.9 * static_cast<double>(f.boxes.size()));
}

TEST_CASE("huge ridge penalty collapses to identity behaviour") {
    const auto f = make_fixture(2);
    const auto r = fit_box_regressor(f.features, f.boxes, f.gt, 1e18);
    CHECK(r.weights.cwiseAbs().maxCoeff() < 1e-9);
    const Box moved = r.apply(f.boxes[0], f.features.col(0));
    CHECK(std::abs(moved.x - f.boxes[0].x) < 1e-6);
    CHECK(std::abs(moved.w - f.boxes[0].w) < 1e-6);
}

TEST_CASE("too few samples raise") {
    const auto f = make_fixture(3, 7);
    CHECK_THROWS_AS(fit_box_regressor(f.features, f.boxes, f.gt), Error);
}
