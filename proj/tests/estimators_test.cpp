#include <cmath>
#include <vector>

#include <doctest.h>

#include "l2d/error.hpp"
#include "l2d/estimators.hpp"
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

TEST_CASE("softmax expert estimate fixtures") {
    // Deferral score equal to the class log-sum gives odds exactly 1, and the
    // boundary value does not count as clamped.
    const LogitVector at_one = logits({0.0, 0.0}, std::log(2.0));
    CHECK(p_expert_softmax(at_one) == 1.0);
    const auto clamped = p_expert_softmax_clamped(at_one);
    CHECK(clamped.value == 1.0);
    CHECK_FALSE(clamped.clamped);

    const LogitVector above = logits({0.0, 0.0}, std::log(3.0));
    CHECK(p_expert_softmax(above) == doctest::Approx(1.5).epsilon(1e-12));
    const auto above_clamped = p_expert_softmax_clamped(above);
    CHECK(above_clamped.value == 1.0);
    CHECK(above_clamped.clamped);

    const LogitVector below = logits({0.0, 0.0}, std::log(2.0 / 3.0));
    CHECK(p_expert_softmax(below) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK_FALSE(p_expert_softmax_clamped(below).clamped);
}

TEST_CASE("softmax expert estimate is the odds of the deferral probability") {
    auto gen = testutil::rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const LogitVector g = testutil::random_logits(gen, 3);
        const double p = p_defer_softmax(g);
        CHECK(p_expert_softmax(g) == doctest::Approx(p / (1.0 - p)).epsilon(1e-12));
        // The threshold events coincide.
        CHECK((p_expert_softmax(g) > 1.0) == (p > 0.5));
    }
}

TEST_CASE("softmax class estimates ignore the deferral score and sum to one") {
    auto gen = testutil::rng(22);
    for (int trial = 0; trial < 100; ++trial) {
        LogitVector g = testutil::random_logits(gen, 4);
        const auto probs = p_class_softmax_all(g);
        double sum = 0.0;
        for (double p : probs)
            sum += p;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

        const double before = p_class_softmax(g, 2);
        g.defer_score += 5.0;
        CHECK(p_class_softmax(g, 2) == before);
    }
    CHECK_THROWS_AS(p_class_softmax(logits({0.0, 0.0}, 0.0), 2), ConfigError);
}

TEST_CASE("extreme deferral scores stay finite") {
    const LogitVector low = logits({0.0, 0.0}, -50.0);
    CHECK(p_defer_softmax(low) < 1e-20);
    CHECK(p_defer_softmax(low) > 0.0);
    const LogitVector high = logits({0.0, 0.0}, 60.0);
    CHECK(p_defer_softmax(high) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::isfinite(p_expert_softmax(high)));
}

TEST_CASE("one-vs-all estimates are per-head sigmoids") {
    auto gen = testutil::rng(23);
    auto sigmoid = [](double t) { return 1.0 / (1.0 + std::exp(-t)); };
    for (int trial = 0; trial < 100; ++trial) {
        LogitVector g = testutil::random_logits(gen, 3);
        CHECK(p_expert_ova(g) == doctest::Approx(sigmoid(g.defer_score)).epsilon(1e-14));
        CHECK(p_class_ova(g, 1) ==
              doctest::Approx(sigmoid(g.class_scores[1])).epsilon(1e-14));
        // Heads are decoupled: other scores do not matter.
        const double before = p_class_ova(g, 1);
        g.class_scores[0] += 3.0;
        g.defer_score -= 2.0;
        CHECK(p_class_ova(g, 1) == before);
    }
}

TEST_CASE("decision fixtures") {
    // Deferral score beats the best class.
    const SystemDecision defer = decide(logits({1.0, 2.0}, 3.0), SurrogateKind::softmax);
    CHECK(defer.predicted_class == 1);
    CHECK(defer.deferred);

    // Ties defer.
    CHECK(decide(logits({3.0, 2.0}, 3.0), SurrogateKind::softmax).deferred);

    // Classifier wins.
    const SystemDecision keep = decide(logits({3.0, 2.0}, 1.0), SurrogateKind::softmax);
    CHECK_FALSE(keep.deferred);
    CHECK(keep.predicted_class == 0);

    // Equal class scores resolve to the first maximum.
    CHECK(decide(logits({2.0, 1.0, 2.0}, 0.0), SurrogateKind::softmax).predicted_class == 0);

    CHECK(decide(logits({-1.0, -2.0}, -3.0), SurrogateKind::one_vs_all).all_scores_negative);
    CHECK_FALSE(decide(logits({1.0, -2.0}, -3.0), SurrogateKind::one_vs_all).all_scores_negative);
}

TEST_CASE("decision confidences follow the surrogate family") {
    const LogitVector g = logits({1.0, 0.0}, 2.0);
    const SystemDecision soft = decide(g, SurrogateKind::softmax);
    CHECK(soft.classifier_confidence ==
          doctest::Approx(p_class_softmax(g, 0)).epsilon(1e-14));
    CHECK(soft.expert_confidence_raw ==
          doctest::Approx(p_expert_softmax(g)).epsilon(1e-14));
    CHECK(soft.expert_confidence == 1.0); // raw exceeds 1 here
    CHECK(soft.expert_confidence_clamped);

    const SystemDecision ova = decide(g, SurrogateKind::one_vs_all);
    CHECK(ova.classifier_confidence == doctest::Approx(p_class_ova(g, 0)).epsilon(1e-14));
    CHECK(ova.expert_confidence == doctest::Approx(p_expert_ova(g)).epsilon(1e-14));
    CHECK_FALSE(ova.expert_confidence_clamped);
}
