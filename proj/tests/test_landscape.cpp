#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "treeboot/dynamics.hpp"
#include "treeboot/landscape.hpp"

using namespace treeboot;

TEST_CASE("drift values") {
    const model_params m(3, 2);
    CHECK(w(m, 0.1, 1.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK(w(m, 0.1, 0.0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(w(m, 0.1, 0.5) == doctest::Approx(0.05).epsilon(1e-14));
    CHECK_THROWS_AS(w(m, -0.1, 0.5), domain_error);
    CHECK_THROWS_AS(w(m, 0.1, 1.5), domain_error);
}

TEST_CASE("drift slope values and endpoint identities") {
    const model_params m(3, 2);
    CHECK(w_dq(m, 0.1, 0.0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(w_dq(m, 0.1, 1.0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(w_dq(m, 0.1, 0.5) == doctest::Approx(0.35).epsilon(1e-14));
    const double fd = oracle::central_diff(
        [&](double q) { return w(m, 0.1, q); }, 0.5, 1e-6);
    CHECK(w_dq(m, 0.1, 0.5) == doctest::Approx(fd).epsilon(1e-7));
    // W'(0) = W'(1) = -1 for interior thresholds
    for (int b : {4, 6, 9})
        for (int theta = 2; theta <= b - 1; ++theta) {
            const model_params mm(b, theta);
            CHECK(w_dq(mm, 0.3, 0.0) == doctest::Approx(-1.0));
            CHECK(w_dq(mm, 0.3, 1.0) == doctest::Approx(-1.0));
        }
}

TEST_CASE("inflection point") {
    CHECK(q_tilde(model_params(3, 2)) == doctest::Approx(0.5));
    CHECK(q_tilde(model_params(5, 2)) == doctest::Approx(0.25));
    CHECK(q_tilde(model_params(5, 4)) == doctest::Approx(0.75));
    CHECK_THROWS_AS(q_tilde(model_params(3, 3)), degenerate_error);
    CHECK_THROWS_AS(q_tilde(model_params(3, 1)), degenerate_error);
    // q_tilde maximizes the tail derivative: grid scan confirmation
    for (auto [b, theta] : {std::pair{3, 2}, {5, 2}, {5, 4}, {7, 4}}) {
        const model_params m(b, theta);
        const double qt = q_tilde(m);
        double best_q = 0, best = -1;
        for (int i = 1; i < 1000; ++i) {
            const double q = i / 1000.0;
            const double v = bin_tail_dq(b, q, theta);
            if (v > best) {
                best = v;
                best_q = q;
            }
        }
        CHECK(std::fabs(best_q - qt) <= 1.1e-3);
    }
}

TEST_CASE("spinodal") {
    CHECK(p_tilde(model_params(3, 2)) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    {
        const model_params m(5, 3);
        const double a = bin_tail_dq(5, 0.5, 3);
        CHECK(p_tilde(m) == doctest::Approx(1.0 - 1.0 / a).epsilon(1e-14));
        // W'_{p~}(q~) = 0 numerically
        CHECK(std::fabs(w_dq(m, p_tilde(m), q_tilde(m))) < 1e-14);
    }
    CHECK_THROWS_AS(p_tilde(model_params(3, 1)), degenerate_error);
}

TEST_CASE("the interior minimum of the drift") {
    const model_params m(3, 2);
    CHECK_FALSE(q_min(m, 0.4).has_value()); // above the spinodal
    CHECK_FALSE(q_min(m, 1.0 / 3.0 + 1e-12).has_value());
    const auto qm = q_min(m, 0.05);
    REQUIRE(qm.has_value());
    CHECK(*qm > 0.0);
    CHECK(*qm < 0.5);
    CHECK(std::fabs(w_dq(m, 0.05, *qm)) < 1e-12);
    // the root solves 0.95 * 6 q (1-q) = 1 in (0, 1/2)
    CHECK(0.95 * 6.0 * *qm * (1.0 - *qm) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(q_min(m, 0.0), domain_error);
    CHECK_THROWS_AS(q_min(m, 1.0), domain_error);
}

TEST_CASE("critical pair for (3,2) against the exact fraction and the scan") {
    const landscape land = critical(model_params(3, 2));
    CHECK(land.p_T == doctest::Approx(1.0 / 9.0).epsilon(1e-13));
    CHECK(land.q_T == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(land.alpha ==
          doctest::Approx(2.0 * std::sqrt(2.0) * M_PI / 3.0).epsilon(1e-12));
    CHECK(land.residual_w < 1e-10);
    CHECK(land.residual_wq < 1e-10);
}

TEST_CASE("critical structure across parameter sets") {
    for (auto [b, theta] :
         {std::pair{3, 2}, {4, 2}, {5, 3}, {7, 4}, {6, 2}, {9, 5}, {10, 8}}) {
        const model_params m(b, theta);
        const landscape land = critical(m);
        CHECK(land.p_T > 0.0);
        CHECK(land.p_T < land.p_tilde);
        CHECK(land.p_tilde < 1.0);
        CHECK(land.q_T > land.p_T);      // q_min(p) > p at criticality
        CHECK(land.q_T < land.q_tilde);  // the well sits below the inflection
        CHECK(std::fabs(w(m, land.p_T, land.q_T)) < 1e-10);
        CHECK(std::fabs(w_dq(m, land.p_T, land.q_T)) < 1e-10);
        CHECK(w_d2q(m, land.p_T, land.q_T) > 0.0);
        CHECK(land.alpha > 0.0);
        CHECK(std::isfinite(land.alpha));
        const auto ref = oracle::critical_gridscan(b, theta);
        CHECK(std::fabs(land.p_T - ref.p_T) < 1e-8);
        CHECK(std::fabs(land.q_T - ref.q_T) < 1e-8);
    }
    CHECK_THROWS_AS(critical(model_params(3, 3)), degenerate_error);
    CHECK_THROWS_AS(critical(model_params(2, 2)), degenerate_error);
    CHECK_THROWS_AS(critical(model_params(5, 1)), degenerate_error);
}

TEST_CASE("convexity pattern: sign of the second derivative flips at q~") {
    const model_params m(5, 3);
    const double qt = q_tilde(m);
    for (double p : {0.05, 0.2, 0.5, 0.9})
        for (int i = 1; i < 1000; ++i) {
            const double q = i / 1000.0;
            const double v = w_d2q(m, p, q);
            if (q < qt) CHECK(v >= -1e-12);
            if (q > qt) CHECK(v <= 1e-12);
        }
}

TEST_CASE("spinodal dichotomy for the slope") {
    const model_params m(3, 2);
    const double pt = p_tilde(m);
    for (int i = 1; i < 1000; ++i)
        CHECK(w_dq(m, pt + 0.01, i / 1000.0) < 0.0);
    for (double p : {0.05, 0.15, 0.25}) {
        int flips = 0;
        double prev = w_dq(m, p, 1e-3);
        for (int i = 2; i < 1000; ++i) {
            const double cur = w_dq(m, p, i / 1000.0);
            if ((cur > 0) != (prev > 0)) ++flips;
            prev = cur;
        }
        CHECK(flips == 2);
    }
}

TEST_CASE("the well value is strictly increasing in p") {
    const model_params m(3, 2);
    double prev = -1e300;
    for (double p = 0.01; p < 0.33; p += 0.01) {
        const auto qm = q_min(m, p);
        REQUIRE(qm.has_value());
        const double v = w(m, p, *qm);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("convexity lower bound W_p(q) > p - q below the inflection") {
    const model_params m(3, 2);
    for (double p : {0.05, 0.111, 0.3})
        for (int i = 1; i < 500; ++i) {
            const double q = i / 1000.0; // (0, q~)
            CHECK(w(m, p, q) > p - q);
        }
}

TEST_CASE("terminal density") {
    const model_params m(3, 2);
    CHECK(terminal_density(m, 0.0) == 0.0);
    CHECK(terminal_density(m, 1.0) == 1.0);
    const landscape land = critical(m);
    CHECK(terminal_density(m, land.p_T + 1e-6) == 1.0);
    const double q_sub = terminal_density(m, 0.05);
    CHECK(q_sub > 0.05);
    CHECK(q_sub < land.q_T);
    CHECK(std::fabs(w(m, 0.05, q_sub)) < 1e-11);
    // smallest root: W stays positive strictly below it
    for (double q = 0.051; q < q_sub - 1e-9; q += 1e-3)
        CHECK(w(m, 0.05, q) > 0.0);
    // at the critical density the terminal value is the well bottom
    CHECK(terminal_density(m, land.p_T) ==
          doctest::Approx(land.q_T).epsilon(1e-9));
}

TEST_CASE("terminal density agrees with a long integration") {
    const model_params m(3, 2);
    const landscape land = critical(m);
    for (double p : {0.05, 0.09}) {
        const trajectory tr = ode_trace(m, p, 1e4, 1e-10, {});
        CHECK(std::fabs(tr.samples.back().Q - terminal_density(m, p)) < 1e-6);
    }
    // exactly at p_T the tangent approach is algebraic ~ 1/(a2 t), not
    // exponential; the band reflects that rate
    const double a2 = 0.5 * w_d2q(m, land.p_T, land.q_T);
    const trajectory tr = ode_trace(m, land.p_T, 1e4, 1e-10, {});
    CHECK(std::fabs(tr.samples.back().Q - land.q_T) < 2.0 / (a2 * 1e4));
}
