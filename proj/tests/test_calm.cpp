#include <doctest.h>

#include <cmath>

#include "distill/calm.hpp"
#include "distill/errors.hpp"
#include "testutil.hpp"

using namespace distill;

TEST_CASE("forward BCE fixtures") {
    CHECK(fwd_calm(0.5, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(fwd_calm(0.1, 0.9) == doctest::Approx(2.0828626352604237).epsilon(1e-12));
    CHECK(fwd_calm(1.0 - 1e-9, 1.0) == doctest::Approx(0.0).epsilon(1e-8));
    // Minimized at p_s = p_t.
    CHECK(fwd_calm(0.3, 0.3) < fwd_calm(0.2, 0.3));
    CHECK(fwd_calm(0.3, 0.3) < fwd_calm(0.4, 0.3));
    CHECK(fwd_calm(0.5, 0.5) >= 0.0);
}

TEST_CASE("interpolated chunk BCE fixtures") {
    // lambda = 1 collapses to the forward loss.
    CHECK(calm_tidal(0.2, 0.8, 1.0) == doctest::Approx(fwd_calm(0.2, 0.8)));
    // lambda = 0 is the Bernoulli self-entropy with p_mix held constant.
    CHECK(calm_tidal(0.2, 0.8, 0.0) ==
          doctest::Approx(bernoulli_entropy(0.2)).epsilon(1e-12));
    // lambda = 0.5, p_s = 0.2, p_t = 0.8: p_mix = 0.5.
    CHECK(calm_tidal(0.2, 0.8, 0.5) ==
          doctest::Approx(0.9162907318741551).epsilon(1e-12));
    CHECK_THROWS_AS(calm_tidal(0.2, 0.8, 1.5), PreconditionError);
}

TEST_CASE("reverse BCE fixtures") {
    CHECK(rev_calm(0.5, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(rev_calm(1.0, 0.9) == doctest::Approx(-std::log(0.9)).epsilon(1e-12));
    // p_t = 0.5 makes the value independent of p_s.
    CHECK(rev_calm(0.01, 0.5) == doctest::Approx(rev_calm(0.99, 0.5)).epsilon(1e-15));
}

TEST_CASE("forward gradient fixtures and explosion") {
    CHECK(fwd_grad(0.1, 0.9) == doctest::Approx(-(9.0 - 0.1 / 0.9)).epsilon(1e-12));
    CHECK(fwd_grad(0.3, 0.3) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(fwd_grad(1e-6, 0.99)) ==
          doctest::Approx(989999.98999999).epsilon(1e-8));

    // Strictly increasing magnitude along the explosion sweep.
    double prev = 0.0;
    for (double p_s : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
        const double mag = std::abs(fwd_grad(p_s, 0.99));
        CHECK(mag > prev);
        prev = mag;
    }
    CHECK(prev > 1e5);
}

TEST_CASE("reverse gradient is bounded, constant in p_s, zero at 0.5") {
    CHECK(rev_grad(0.123, 0.5) == 0.0);
    CHECK(rev_grad(0.9, 0.5) == 0.0);
    CHECK(rev_grad(0.1, 0.9) == doctest::Approx(-std::log(9.0)).epsilon(1e-12));
    CHECK(rev_grad(0.7, 0.9) == doctest::Approx(-std::log(9.0)).epsilon(1e-12));
    const double log99 = std::log(99.0);
    for (double p_s : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6})
        CHECK(std::abs(std::abs(rev_grad(p_s, 0.99)) - log99) <= 1e-9);

    const double bound = std::abs(std::log((1.0 - 1e-9) / 1e-9));
    testutil::ReferenceSplitMix64 ref(3);
    for (int i = 0; i < 200; ++i)
        CHECK(std::abs(rev_grad(ref.u01(), ref.u01())) <= bound);
}

TEST_CASE("gradients match central finite differences") {
    testutil::ReferenceSplitMix64 ref(13);
    for (int trial = 0; trial < 150; ++trial) {
        const double p_s = 0.02 + 0.96 * ref.u01();
        const double p_t = 0.02 + 0.96 * ref.u01();
        const double lam = ref.u01();
        const double h = 1e-5;

        const double fd_f =
            (fwd_calm(p_s + h, p_t) - fwd_calm(p_s - h, p_t)) / (2 * h);
        CHECK(testutil::rel_err(fd_f, fwd_grad(p_s, p_t)) <= 1e-4);

        const double fd_r =
            (rev_calm(p_s + h, p_t) - rev_calm(p_s - h, p_t)) / (2 * h);
        CHECK(testutil::rel_err(fd_r, rev_grad(p_s, p_t)) <= 1e-4);

        // calm_tidal differentiates with p_mix frozen at the base point.
        const double p_mix = (1.0 - lam) * p_s + lam * p_t;
        const double fd_c =
            (fwd_calm(p_s + h, p_mix) - fwd_calm(p_s - h, p_mix)) / (2 * h);
        CHECK(testutil::rel_err(fd_c, calm_tidal_grad(p_s, p_t, lam)) <= 1e-4);
    }
}

TEST_CASE("Bernoulli KL fixtures") {
    CHECK(bernoulli_kl(0.3, 0.3) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(bernoulli_kl(0.5, 0.9) == doctest::Approx(0.5108256237659907).epsilon(1e-12));
    CHECK(bernoulli_kl(0.0, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bernoulli_kl(1.0, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    testutil::ReferenceSplitMix64 ref(29);
    for (int i = 0; i < 200; ++i) {
        const double p = ref.u01();
        const double q = 0.01 + 0.98 * ref.u01();
        CHECK(bernoulli_kl(p, q) >= 0.0);
    }
}

TEST_CASE("reverse loss decomposes into KL plus entropy") {
    testutil::ReferenceSplitMix64 ref(37);
    for (int i = 0; i < 1000; ++i) {
        const double p_s = 1e-6 + (1.0 - 2e-6) * ref.u01();
        const double p_t = 1e-6 + (1.0 - 2e-6) * ref.u01();
        const double lhs = rev_calm(p_s, p_t);
        const double rhs = bernoulli_kl(p_s, p_t) + bernoulli_entropy(p_s);
        CHECK(std::abs(lhs - rhs) <= 1e-10);
    }
}

TEST_CASE("curriculum factor at the late stage suppresses the reverse gradient") {
    // (1 - lambda_t) with lambda_max = 0.9 at p = 1, t -> 0 scales the
    // reverse gradient by exactly 0.1.
    const double lam = 0.9;  // lambda_t(t = 0, p = 1) with lambda_max = 0.9
    const double g = rev_grad(0.4, 0.9);
    CHECK(std::abs((1.0 - lam) * g) ==
          doctest::Approx(0.1 * std::abs(g)).epsilon(1e-12));
}

TEST_CASE("loss reports") {
    const LossReport zero_weight = loss_shared(1.3, 0.7, 0.0);
    CHECK(zero_weight.total == doctest::Approx(1.3));
    const LossReport combined = loss_shared(1.0, 0.5, 1.0);
    CHECK(combined.total == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(std::abs(combined.total - (combined.ce + combined.weight * combined.distill)) <=
          1e-12);
    const LossReport perfect = loss_shared(0.9, 0.0, 2.0);
    CHECK(perfect.total == doctest::Approx(0.9));

    const LossReport cross = loss_cross(1.0, 0.25, 2.0, CalmVariant::rev_calm);
    CHECK(cross.total == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(cross.variant == "rev_calm");
    CHECK_THROWS_AS(loss_shared(1.0, 1.0, -0.1), PreconditionError);
}

TEST_CASE("diagnostics rows satisfy their invariants") {
    testutil::ReferenceSplitMix64 ref(43);
    for (int i = 0; i < 100; ++i) {
        const double p_s = std::pow(10.0, -6.0 * ref.u01());
        const double p_t = 0.02 + 0.96 * ref.u01();
        const GradDiagnostics d = grad_diagnostics(p_s, p_t);
        CHECK(testutil::rel_err(d.fd_fwd, d.fwd_grad) <= 1e-4);
        CHECK(testutil::rel_err(d.fd_rev, d.rev_grad) <= 1e-4);
        CHECK(std::abs(d.rev_grad) <= d.rev_bound);
    }
}
