#include <doctest.h>

#include <cmath>

#include "distill/errors.hpp"
#include "distill/tidal.hpp"
#include "testutil.hpp"

using namespace distill;

TEST_CASE("lambda_train endpoints and midpoint") {
    ScheduleConfig cfg;  // 0.1 -> 0.9
    CHECK(lambda_train(0.0, cfg) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(lambda_train(1.0, cfg) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(lambda_train(0.5, cfg) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(lambda_train(-0.1, cfg), PreconditionError);
    CHECK_THROWS_AS(lambda_train(1.1, cfg), PreconditionError);
}

TEST_CASE("lambda_t per mode") {
    ScheduleConfig cfg;
    SUBCASE("dual axis multiplies the two factors") {
        // lambda_train(0.5) = 0.5, so at t = 0.9 the value is 0.05.
        CHECK(lambda_t(0.9, 0.5, cfg) == doctest::Approx(0.05).epsilon(1e-12));
        CHECK(lambda_t(0.999999, 0.5, cfg) < 1e-5);  // t -> 1 kills the target
    }
    SUBCASE("train_only ignores t") {
        cfg.mode = ScheduleMode::train_only;
        CHECK(lambda_t(0.1, 1.0, cfg) == doctest::Approx(0.9).epsilon(1e-15));
        CHECK(lambda_t(0.99, 1.0, cfg) == doctest::Approx(0.9).epsilon(1e-15));
    }
    SUBCASE("timestep_only ignores p") {
        cfg.mode = ScheduleMode::timestep_only;
        cfg.const_lambda = 0.5;
        CHECK(lambda_t(0.2, 0.0, cfg) == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(lambda_t(0.2, 1.0, cfg) == doctest::Approx(0.4).epsilon(1e-12));
    }
    SUBCASE("constant ignores both") {
        cfg.mode = ScheduleMode::constant;
        cfg.const_lambda = 0.3;
        CHECK(lambda_t(0.2, 0.9, cfg) == doctest::Approx(0.3));
    }
}

TEST_CASE("lambda_t monotonicity on grids") {
    testutil::ReferenceSplitMix64 ref(4);
    for (int trial = 0; trial < 20; ++trial) {
        ScheduleConfig cfg;
        cfg.lambda_init = 0.5 * ref.u01();
        cfg.lambda_max = cfg.lambda_init + (1.0 - cfg.lambda_init) * ref.u01();
        cfg.const_lambda = ref.u01();
        for (ScheduleMode mode : {ScheduleMode::dual_axis, ScheduleMode::timestep_only}) {
            cfg.mode = mode;
            const double p = ref.u01();
            double prev = 2.0;
            for (int k = 0; k < 100; ++k) {
                const double t = 1e-3 + k * (1.0 - 1e-3) / 100.0;
                const double lam = lambda_t(t, p, cfg);
                CHECK(lam <= prev + 1e-15);
                CHECK(lam >= 0.0);
                CHECK(lam <= 1.0);
                prev = lam;
            }
        }
        for (ScheduleMode mode : {ScheduleMode::dual_axis, ScheduleMode::train_only}) {
            cfg.mode = mode;
            const double t = 1e-3 + ref.u01() * 0.99;
            double prev = -1.0;
            for (int i = 0; i <= 100; ++i) {
                const double lam = lambda_t(t, i / 100.0, cfg);
                CHECK(lam >= prev - 1e-15);
                prev = lam;
            }
        }
    }
}

TEST_CASE("midrange weight fixture and symmetry") {
    CHECK(midrange_weight(0.5, 0.15) == doctest::Approx(1.0).epsilon(1e-15));
    // (0.65 - 0.5)^2 / (2 * 0.15^2) = 0.5.
    CHECK(midrange_weight(0.65, 0.15) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    for (double delta : {0.05, 0.2, 0.4})
        CHECK(midrange_weight(0.5 + delta, 0.15) ==
              doctest::Approx(midrange_weight(0.5 - delta, 0.15)).epsilon(1e-15));
}

namespace {

PositionVectors single_position(std::vector<double> v) {
    PositionVectors out;
    out[0] = std::move(v);
    return out;
}

} // namespace

TEST_CASE("interpolated target endpoints") {
    const PositionVectors s = single_position({1.0, 0.0});
    const PositionVectors t = single_position({0.0, 1.0});

    const DistillTarget student_only = interpolated_target(s, t, 0.0, 2.0);
    const std::vector<double> expect0 = softmax({1.0, 0.0}, 2.0);
    CHECK(student_only.probabilities.at(0)[0] == doctest::Approx(expect0[0]));

    const DistillTarget teacher_only = interpolated_target(s, t, 1.0, 2.0);
    const std::vector<double> expect1 = softmax({0.0, 1.0}, 2.0);
    CHECK(teacher_only.probabilities.at(0)[0] == doctest::Approx(expect1[0]));

    // Even mix at T = 2: softmax([0.25, 0.25]) = [0.5, 0.5].
    const DistillTarget mid = interpolated_target(s, t, 0.5, 2.0);
    CHECK(mid.probabilities.at(0)[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mid.probabilities.at(0)[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("target vectors sum to one") {
    testutil::ReferenceSplitMix64 ref(8);
    for (int trial = 0; trial < 50; ++trial) {
        PositionVectors s, t;
        const int vocab = 2 + static_cast<int>(ref.below(6));
        for (int pos : {1, 4, 5}) {
            std::vector<double> sv(vocab), tv(vocab);
            for (int v = 0; v < vocab; ++v) {
                sv[v] = 4.0 * ref.u01() - 2.0;
                tv[v] = 4.0 * ref.u01() - 2.0;
            }
            s[pos] = sv;
            t[pos] = tv;
        }
        const DistillTarget target =
            interpolated_target(s, t, ref.u01(), 0.5 + 3.0 * ref.u01());
        for (const auto& [pos, probs] : target.probabilities) {
            double sum = 0.0;
            for (double p : probs) sum += p;
            CHECK(std::abs(sum - 1.0) <= 1e-10);
        }
    }
}

TEST_CASE("shape mismatch raises") {
    const PositionVectors s = single_position({1.0, 0.0});
    PositionVectors t = single_position({0.0, 1.0, 2.0});
    CHECK_THROWS_AS(interpolated_target(s, t, 0.5, 1.0), PreconditionError);
    PositionVectors other;
    other[3] = {0.0, 1.0};
    CHECK_THROWS_AS(interpolated_target(s, other, 0.5, 1.0), PreconditionError);
}

TEST_CASE("tidal loss zero cases") {
    ScheduleConfig cfg;
    const PositionVectors s = single_position({0.7, -0.4, 0.1});
    const PositionVectors t = single_position({2.0, 0.0, -1.0});

    // lambda = 0: target is the student's own tempered distribution.
    const DistillTarget self_target = interpolated_target(s, s, 0.0, 2.0);
    CHECK(tidal_loss(s, self_target, 2.0, 0.5, cfg) == doctest::Approx(0.0));

    // Student logits equal to teacher logits: the mixture collapses.
    const DistillTarget collapsed = interpolated_target(s, s, 0.6, 2.0);
    CHECK(tidal_loss(s, collapsed, 2.0, 0.5, cfg) ==
          doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("tidal loss hand fixture") {
    // s = [1, 0], teacher = [0, 1], lambda = 0.5, T = 2 at one position:
    // target = [0.5, 0.5], loss = KL([0.5,0.5] || softmax([0.5, 0])) * 4.
    ScheduleConfig cfg;
    const PositionVectors s = single_position({1.0, 0.0});
    const PositionVectors t = single_position({0.0, 1.0});
    const DistillTarget target = interpolated_target(s, t, 0.5, 2.0);
    const double loss = tidal_loss(s, target, 2.0, 0.5, cfg);

    // Independent evaluation of the hand formula: softmax(s/T) = softmax([0.5, 0]).
    const double e = std::exp(0.5);
    const std::vector<double> q{e / (e + 1.0), 1.0 / (e + 1.0)};
    const double expected =
        4.0 * (0.5 * std::log(0.5 / q[0]) + 0.5 * std::log(0.5 / q[1]));
    CHECK(loss == doctest::Approx(expected).epsilon(1e-12));
    CHECK(loss == doctest::Approx(0.12371921448).epsilon(1e-9));
}

TEST_CASE("temperature mismatch is a configuration error") {
    ScheduleConfig cfg;
    const PositionVectors s = single_position({1.0, 0.0});
    const DistillTarget target = interpolated_target(s, s, 0.5, 2.0);
    CHECK_THROWS_AS(tidal_loss(s, target, 1.0, 0.5, cfg), ConfigError);
    CHECK_THROWS_AS(tidal_loss_gradient(s, target, 1.0, 0.5, cfg), ConfigError);
}

TEST_CASE("gradient is zero at the stationary point and sums to zero") {
    ScheduleConfig cfg;
    const PositionVectors s = single_position({0.3, -0.3, 0.8});
    const DistillTarget self_target = interpolated_target(s, s, 0.0, 2.0);
    const PositionVectors g0 = tidal_loss_gradient(s, self_target, 2.0, 0.5, cfg);
    for (double g : g0.at(0)) CHECK(std::abs(g) <= 1e-14);

    testutil::ReferenceSplitMix64 ref(17);
    PositionVectors sr = single_position(
        {ref.u01(), ref.u01(), ref.u01(), ref.u01()});
    PositionVectors tr = single_position(
        {ref.u01(), ref.u01(), ref.u01(), ref.u01()});
    const DistillTarget target = interpolated_target(sr, tr, 0.4, 2.0);
    const PositionVectors grad = tidal_loss_gradient(sr, target, 2.0, 0.5, cfg);
    double sum = 0.0;
    for (double g : grad.at(0)) sum += g;
    CHECK(std::abs(sum) <= 1e-12);
}

TEST_CASE("gradient matches finite differences, with and without midrange") {
    testutil::ReferenceSplitMix64 ref(23);
    for (int trial = 0; trial < 120; ++trial) {
        ScheduleConfig cfg;
        cfg.midrange_enabled = trial % 2 == 1;
        const int vocab = 2 + static_cast<int>(ref.below(7));
        const int positions = 1 + static_cast<int>(ref.below(6));
        const double temperature = 0.5 + 2.5 * ref.u01();
        const double timestep = 0.05 + 0.9 * ref.u01();
        const double lam = ref.u01();

        PositionVectors s, t;
        for (int pos = 0; pos < positions; ++pos) {
            std::vector<double> sv(vocab), tv(vocab);
            for (int v = 0; v < vocab; ++v) {
                sv[v] = 3.0 * ref.u01() - 1.5;
                tv[v] = 3.0 * ref.u01() - 1.5;
            }
            s[pos] = sv;
            t[pos] = tv;
        }
        const DistillTarget target = interpolated_target(s, t, lam, temperature);
        const PositionVectors grad =
            tidal_loss_gradient(s, target, temperature, timestep, cfg);
        for (auto& [pos, sv] : s) {
            for (std::size_t v = 0; v < sv.size(); ++v) {
                const double fd = testutil::central_diff(
                    [&] { return tidal_loss(s, target, temperature, timestep, cfg); },
                    sv, v);
                CHECK(testutil::rel_err(fd, grad.at(pos)[v]) <= 1e-4);
            }
        }
    }
}
