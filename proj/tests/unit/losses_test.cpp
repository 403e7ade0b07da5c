#include "doctest.h"

#include <cmath>
#include <random>

#include "core/error.hpp"
#include "core/losses.hpp"
#include "gradcheck.hpp"

using namespace fanet;
using namespace fanet::testing;

TEST_CASE("bce worked values") {
    BatchScores one{Eigen::MatrixXd::Zero(2, 1), {1}};
    CHECK(std::abs(bce_loss(one) - std::log(2.0)) < 1e-9);

    BatchScores sure{Eigen::MatrixXd(2, 3), {1, 1, 1}};
    sure.logits << -40, -50, -60, 40, 50, 60;
    CHECK(bce_loss(sure) <= 1e-6);
    CHECK(bce_loss(sure) >= 0.0);

    BatchScores wrong{Eigen::MatrixXd(2, 1), {0}};
    wrong.logits << -500, 500;
    CHECK(std::abs(bce_loss(wrong) + std::log(kProbabilityEpsilon)) < 1e-9);
}

TEST_CASE("bce is shift invariant per sample and bounded") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0, 4);
    for (int t = 0; t < 200; ++t) {
        BatchScores b{Eigen::MatrixXd(2, 5), {0, 1, 1, 0, 1}};
        for (Eigen::Index i = 0; i < b.logits.size(); ++i) b.logits.data()[i] = n(rng);
        const double base = bce_loss(b);
        CHECK(base >= 0.0);
        CHECK(base <= -std::log(kProbabilityEpsilon) + 1e-12);
        BatchScores shifted = b;
        shifted.logits.col(2).array() += n(rng) * 10;
        CHECK(std::abs(bce_loss(shifted) - base) < 1e-12);
    }
}

TEST_CASE("bce rejects bad input") {
    BatchScores b{Eigen::MatrixXd::Zero(2, 2), {1, 2}};
    CHECK_THROWS_AS(bce_loss(b), Error);
    BatchScores empty{Eigen::MatrixXd::Zero(2, 0), {}};
    CHECK_THROWS_AS(bce_loss(empty), Error);
}

TEST_CASE("instance loss worked values") {
    InstanceScores d1{Eigen::MatrixXd::Constant(1, 3, 2.5), {0, 0, 0}, {1, 1, 1}};
    CHECK(std::abs(instance_embedding_loss(d1)) < 1e-9);
    InstanceScores d4{Eigen::MatrixXd::Constant(4, 2, -0.3), {1, 3}, {1, 1}};
    CHECK(std::abs(instance_embedding_loss(d4) - std::log(4.0)) < 1e-9);
    InstanceScores neg{Eigen::MatrixXd::Zero(3, 2), {0, 1}, {1, 0}};
    CHECK_THROWS_AS(instance_embedding_loss(neg), Error);
}

TEST_CASE("instance loss matches a brute-force softmax oracle") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0, 3);
    for (int t = 0; t < 100; ++t) {
        const int d = 1 + t % 6;
        const int own = t % d;
        InstanceScores s{Eigen::MatrixXd(d, 1), {own}, {1}};
        for (int k = 0; k < d; ++k) s.positive_logits(k, 0) = n(rng);
        double z = 0.0;
        for (int k = 0; k < d; ++k) z += std::exp(s.positive_logits(k, 0));
        const double oracle = -std::log(std::exp(s.positive_logits(own, 0)) / z);
        CHECK(std::abs(instance_embedding_loss(s) - oracle) < 1e-9);
    }
}

TEST_CASE("raising the own-domain logit lowers the instance loss") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0, 2);
    for (int t = 0; t < 100; ++t) {
        InstanceScores s{Eigen::MatrixXd(4, 1), {t % 4}, {1}};
        for (int k = 0; k < 4; ++k) s.positive_logits(k, 0) = n(rng);
        const double before = instance_embedding_loss(s);
        s.positive_logits(t % 4, 0) += 0.5;
        CHECK(instance_embedding_loss(s) < before);
    }
}

TEST_CASE("total loss") {
    CHECK(std::abs(total_loss(1.0, 2.0, 0.1) - 1.2) < 1e-9);
    CHECK(total_loss(0.7, 0.0, 0.1) == 0.7);
    CHECK(std::abs(total_loss(2.0, 4.0, 0.1) - 2.0 * total_loss(1.0, 2.0, 0.1)) < 1e-12);
}

TEST_CASE("loss gradients match central differences") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0, 2);
    GradReport rep;
    for (int t = 0; t < 20; ++t) {
        BatchScores b{Eigen::MatrixXd(2, 6), {0, 1, 0, 1, 1, 0}};
        for (Eigen::Index i = 0; i < b.logits.size(); ++i) b.logits.data()[i] = n(rng);
        Eigen::MatrixXd g;
        bce_loss(b, &g);
        Buffer v(b.logits.data(), b.logits.data() + b.logits.size());
        Buffer a(g.data(), g.data() + g.size());
        check_entries(v, a, [&] {
            BatchScores c{Eigen::Map<Eigen::MatrixXd>(v.data(), 2, 6), b.labels};
            return bce_loss(c);
        }, "bce", 12, rng, rep);

        InstanceScores s{Eigen::MatrixXd(3, 4), {0, 2, 1, 2}, {1, 1, 1, 1}};
        for (Eigen::Index i = 0; i < s.positive_logits.size(); ++i) s.positive_logits.data()[i] = n(rng);
        Eigen::MatrixXd gi;
        instance_embedding_loss(s, &gi);
        Buffer vi(s.positive_logits.data(), s.positive_logits.data() + s.positive_logits.size());
        Buffer ai(gi.data(), gi.data() + gi.size());
        check_entries(vi, ai, [&] {
            InstanceScores c{Eigen::Map<Eigen::MatrixXd>(vi.data(), 3, 4), s.domains, s.labels};
            return instance_embedding_loss(c);
        }, "inst", 12, rng, rep);
    }
    INFO(rep.worst);
    CHECK(rep.max_rel_error < 1e-5);
}
