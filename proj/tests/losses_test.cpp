#include <cmath>
#include <vector>

#include <doctest.h>

#include "l2d/error.hpp"
#include "l2d/losses.hpp"
#include "test_util.hpp"

using namespace l2d;

namespace {
LogitVector logits(std::vector<double> cls, double defer) {
    LogitVector g;
    g.class_scores = std::move(cls);
    g.defer_score = defer;
    return g;
}
} // namespace

TEST_CASE("softmax loss at zero scores, hand computed") {
    const LogitVector g = logits({0.0, 0.0}, 0.0);
    // Expert wrong: a single 3-way cross entropy at uniform scores.
    CHECK(softmax_l2d_loss(g, 0, 1) == doctest::Approx(1.0986122886681098).epsilon(1e-14));
    // Expert right: the deferral cross entropy is added.
    CHECK(softmax_l2d_loss(g, 0, 0) == doctest::Approx(2.1972245773362196).epsilon(1e-14));
}

TEST_CASE("softmax gradient at zero scores, hand computed") {
    const LogitVector g = logits({0.0, 0.0}, 0.0);
    const auto wrong = softmax_l2d_grad(g, 0, 1);
    REQUIRE(wrong.size() == 3);
    CHECK(wrong[0] == doctest::Approx(-2.0 / 3.0).epsilon(1e-14));
    CHECK(wrong[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(wrong[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    const auto right = softmax_l2d_grad(g, 0, 0);
    CHECK(right[0] == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
    CHECK(right[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(right[2] == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("one-vs-all loss fixtures, hand computed") {
    CHECK(ova_l2d_loss(logits({0.0, 0.0}, 0.0), 0, 1) ==
          doctest::Approx(2.0794415416798357).epsilon(1e-14));
    // phi(1) + phi(1) + phi(2) after the expert-correct correction flips the
    // deferral term's sign.
    CHECK(ova_l2d_loss(logits({1.0, -1.0}, 2.0), 0, 0) ==
          doctest::Approx(0.7534513860794182).epsilon(1e-14));
}

TEST_CASE("one-vs-all gradient at zero scores, hand computed") {
    const LogitVector g = logits({0.0, 0.0}, 0.0);
    const auto wrong = ova_l2d_grad(g, 0, 1);
    REQUIRE(wrong.size() == 3);
    CHECK(wrong[0] == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(wrong[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(wrong[2] == doctest::Approx(0.5).epsilon(1e-14));

    const auto right = ova_l2d_grad(g, 0, 0);
    CHECK(right[2] == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("analytic gradients match central finite differences") {
    auto gen = testutil::rng(42);
    std::uniform_int_distribution<int> k_dist(2, 6);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = k_dist(gen);
        std::uniform_int_distribution<int> label_dist(0, k - 1);
        const LogitVector g = testutil::random_logits(gen, k);
        const int y = label_dist(gen);
        const int m = label_dist(gen);
        const auto x = testutil::flatten(g);

        const double soft_err = testutil::max_gradient_error(
            [&](const std::vector<double>& v) {
                return softmax_l2d_loss(testutil::unflatten(v), y, m);
            },
            x, softmax_l2d_grad(g, y, m));
        CHECK(soft_err < 1e-6);

        const double ova_err = testutil::max_gradient_error(
            [&](const std::vector<double>& v) {
                return ova_l2d_loss(testutil::unflatten(v), y, m);
            },
            x, ova_l2d_grad(g, y, m));
        CHECK(ova_err < 1e-6);
    }
}

TEST_CASE("softmax gradient components sum to zero") {
    auto gen = testutil::rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const LogitVector g = testutil::random_logits(gen, 4);
        std::uniform_int_distribution<int> label_dist(0, 3);
        const auto grad = softmax_l2d_grad(g, label_dist(gen), label_dist(gen));
        double sum = 0.0;
        for (double v : grad)
            sum += v;
        CHECK(std::abs(sum) < 1e-12);
    }
}

TEST_CASE("softmax loss is shift invariant, one-vs-all is not") {
    auto gen = testutil::rng(8);
    const LogitVector g = testutil::random_logits(gen, 3);
    LogitVector shifted = g;
    for (double& s : shifted.class_scores)
        s += 1.75;
    shifted.defer_score += 1.75;
    CHECK(softmax_l2d_loss(shifted, 1, 2) ==
          doctest::Approx(softmax_l2d_loss(g, 1, 2)).epsilon(1e-9));
    CHECK(std::abs(ova_l2d_loss(shifted, 1, 2) - ova_l2d_loss(g, 1, 2)) > 1e-3);
}

TEST_CASE("both losses are midpoint convex in the scores") {
    auto gen = testutil::rng(9);
    std::uniform_int_distribution<int> label_dist(0, 2);
    for (int trial = 0; trial < 100; ++trial) {
        const LogitVector a = testutil::random_logits(gen, 3);
        const LogitVector b = testutil::random_logits(gen, 3);
        LogitVector mid;
        mid.class_scores.resize(3);
        for (int i = 0; i < 3; ++i)
            mid.class_scores[i] = 0.5 * (a.class_scores[i] + b.class_scores[i]);
        mid.defer_score = 0.5 * (a.defer_score + b.defer_score);
        const int y = label_dist(gen);
        const int m = label_dist(gen);
        CHECK(softmax_l2d_loss(mid, y, m) <=
              0.5 * (softmax_l2d_loss(a, y, m) + softmax_l2d_loss(b, y, m)) + 1e-9);
        CHECK(ova_l2d_loss(mid, y, m) <=
              0.5 * (ova_l2d_loss(a, y, m) + ova_l2d_loss(b, y, m)) + 1e-9);
    }
}

TEST_CASE("alpha scales only the classifier term on expert-correct instances") {
    const LogitVector g = logits({0.3, -0.2}, 0.5);
    const double base = softmax_l2d_loss(g, 0, 0);
    const double doubled = softmax_l2d_loss(g, 0, 0, AlphaWeight(2.0));
    // The difference is exactly one extra copy of the classification term.
    const double lse = std::log(std::exp(0.3) + std::exp(-0.2) + std::exp(0.5));
    CHECK(doubled - base == doctest::Approx(lse - 0.3).epsilon(1e-12));
    // Expert-wrong instances are untouched by alpha.
    CHECK(softmax_l2d_loss(g, 0, 1, AlphaWeight(2.0)) ==
          doctest::Approx(softmax_l2d_loss(g, 0, 1)).epsilon(1e-14));

    CHECK_THROWS_AS(AlphaWeight(0.0), ConfigError);
    CHECK_THROWS_AS(AlphaWeight(-1.0), ConfigError);
    CHECK(AlphaWeight().standard());
    CHECK_FALSE(AlphaWeight(2.0).standard());
}

TEST_CASE("coding matrix entries") {
    const CodingMatrix code = coding_matrix(3);
    CHECK(code.num_columns() == 4);
    CHECK(code.entry(0, 0, 1) == 1);
    CHECK(code.entry(1, 0, 1) == -1);
    CHECK(code.entry(2, 2, 1) == 1);
    // Last column flags expert agreement with the row label.
    CHECK(code.entry(1, 3, 1) == 1);
    CHECK(code.entry(0, 3, 1) == -1);
    CHECK(code.last_column(2) == std::vector<int>{-1, -1, 1});
    CHECK_THROWS_AS(coding_matrix(1), ConfigError);
}

TEST_CASE("output-code loss coincides with the one-vs-all loss") {
    auto gen = testutil::rng(10);
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<int> k_dist(2, 8);
        const int k = k_dist(gen);
        std::uniform_int_distribution<int> label_dist(0, k - 1);
        const LogitVector g = testutil::random_logits(gen, k);
        const int y = label_dist(gen);
        const int m = label_dist(gen);
        const CodingMatrix code = coding_matrix(k);
        CHECK(std::abs(ecoc_l2d_loss(code, g, y, m) - ova_l2d_loss(g, y, m)) <=
              1e-12);
    }
    CHECK_THROWS_AS(
        ecoc_l2d_loss(coding_matrix(3), logits({0.0, 0.0}, 0.0), 0, 0),
        ConfigError);
}

TEST_CASE("plain cross entropy fixture and gradient") {
    const std::vector<double> scores = {0.0, 0.0, 0.0};
    CHECK(cross_entropy_loss(scores, 0) ==
          doctest::Approx(1.0986122886681098).epsilon(1e-14));
    const auto grad = cross_entropy_grad(scores, 0);
    CHECK(grad[0] == doctest::Approx(-2.0 / 3.0).epsilon(1e-14));
    CHECK(grad[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    auto gen = testutil::rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = testutil::random_vector(gen, 4, -4.0, 4.0);
        const double err = testutil::max_gradient_error(
            [&](const std::vector<double>& v) { return cross_entropy_loss(v, 2); },
            s, cross_entropy_grad(s, 2));
        CHECK(err < 1e-6);
    }
}

TEST_CASE("losses validate the label and expert arguments") {
    const LogitVector g = logits({0.0, 0.0}, 0.0);
    CHECK_THROWS_AS(softmax_l2d_loss(g, -1, 0), ConfigError);
    CHECK_THROWS_AS(softmax_l2d_loss(g, 0, 2), ConfigError);
    CHECK_THROWS_AS(ova_l2d_grad(g, 2, 0), ConfigError);
    CHECK_THROWS_AS(cross_entropy_loss({0.0, 0.0}, 5), ConfigError);
}
