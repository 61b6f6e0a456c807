#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "treeboot/binom.hpp"
#include "treeboot/rng.hpp"

using namespace treeboot;

TEST_CASE("tail values at the corners") {
    CHECK(bin_tail(3, 0.0, 2) == 0.0);
    CHECK(bin_tail(3, 1.0, 2) == 1.0);
    CHECK(bin_tail(3, 0.5, 2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(bin_tail(3, 0.3, 2) == doctest::Approx(0.216).epsilon(1e-14));
    CHECK(bin_tail(5, 0.7, 0) == 1.0);
    CHECK(bin_tail(5, 0.7, -3) == 1.0);
    CHECK(bin_tail(5, 0.7, 6) == 0.0);
    // theta = b+1 names the empty tail
    CHECK(bin_tail(5, 0.999, 6) == 0.0);
}

TEST_CASE("tail matches brute-force summation to 1e-12") {
    for (int b = 1; b <= 20; ++b)
        for (int theta = 0; theta <= b + 1; ++theta)
            for (int i = 0; i <= 100; ++i) {
                const double q = i / 100.0;
                const double want = oracle::bin_tail_brute(b, q, theta);
                CHECK(std::fabs(bin_tail(b, q, theta) - want) < 1e-12);
            }
}

TEST_CASE("tail is monotone in q on the grid") {
    for (int b : {2, 3, 7, 20, 64})
        for (int theta = 1; theta <= std::min(b, 9); ++theta) {
            double prev = 0.0;
            for (int i = 0; i <= 100; ++i) {
                const double cur = bin_tail(b, i / 100.0, theta);
                CHECK(cur >= prev);
                prev = cur;
            }
        }
}

TEST_CASE("tail stays sane at extreme q for large b") {
    CHECK(bin_tail(64, 1.0 - 1e-12, 2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bin_tail(64, 1e-12, 63) <= 1e-100);
    CHECK(bin_tail(64, 1.0 - 1e-12, 2) <= 1.0);
}

TEST_CASE("first derivative: endpoints and closed form vs finite differences") {
    CHECK(bin_tail_dq(3, 0.0, 2) == 0.0);
    CHECK(bin_tail_dq(3, 1.0, 2) == 0.0);
    CHECK(bin_tail_dq(3, 0.5, 2) == doctest::Approx(1.5).epsilon(1e-14));
    for (int b = 1; b <= 10; ++b)
        for (int theta = 1; theta <= b; ++theta)
            for (int i = 1; i <= 99; ++i) {
                const double q = i / 100.0;
                const double fd = oracle::central_diff(
                    [&](double x) { return bin_tail(b, x, theta); }, q, 1e-6);
                CHECK(std::fabs(bin_tail_dq(b, q, theta) - fd) < 1e-6);
            }
}

TEST_CASE("second derivative: closed form vs finite differences of the first") {
    CHECK(std::fabs(bin_tail_d2q(3, 0.5, 2)) < 1e-13);
    CHECK(bin_tail_d2q(3, 0.25, 2) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(bin_tail_d2q(3, 0.75, 2) == doctest::Approx(-3.0).epsilon(1e-13));
    for (int b = 1; b <= 10; ++b)
        for (int theta = 1; theta <= b; ++theta)
            for (int i = 1; i <= 99; ++i) {
                const double q = i / 100.0;
                const double fd = oracle::central_diff(
                    [&](double x) { return bin_tail_dq(b, x, theta); }, q,
                    1e-6);
                CHECK(std::fabs(bin_tail_d2q(b, q, theta) - fd) < 1e-6);
            }
}

TEST_CASE("boundary-singular second-derivative limits are finite") {
    CHECK(std::isfinite(bin_tail_d2q(5, 0.0, 1)));
    CHECK(std::isfinite(bin_tail_d2q(5, 1.0, 5)));
    // theta = 1: d2 = -b(b-1)(1-q)^{b-2} at q = 0
    CHECK(bin_tail_d2q(5, 0.0, 1) == doctest::Approx(-20.0));
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(bin_tail(3, -0.1, 2), domain_error);
    CHECK_THROWS_AS(bin_tail(3, 1.1, 2), domain_error);
    CHECK_THROWS_AS(bin_tail(0, 0.5, 0), domain_error);
    CHECK_THROWS_AS(bin_tail(65, 0.5, 2), domain_error);
    CHECK_THROWS_AS(bin_tail_dq(3, 0.5, 0), domain_error);
    CHECK_THROWS_AS(bin_tail_dq(3, 0.5, 4), domain_error);
    CHECK_THROWS_AS(bin_tail_d2q(3, 0.5, 0), domain_error);
    CHECK_THROWS_AS(tail_spec(3, 5, 0.5), domain_error);
    CHECK_THROWS_AS(tail_spec(3, 2, 1.5), domain_error);
}

TEST_CASE("tail_spec delegates") {
    tail_spec ts(3, 2, 0.3);
    CHECK(ts.tail() == doctest::Approx(0.216).epsilon(1e-14));
    CHECK(ts.tail_dq() == doctest::Approx(bin_tail_dq(3, 0.3, 2)));
    CHECK(ts.tail_d2q() == doctest::Approx(bin_tail_d2q(3, 0.3, 2)));
}

TEST_CASE("random-parameter sweep against the oracle") {
    splitmix64 g(0xb10b);
    for (int it = 0; it < 2000; ++it) {
        const int b = 1 + int(g.next() % 64);
        const int theta = int(g.next() % std::uint64_t(b + 2));
        const double q = g.uniform01();
        const double want = oracle::bin_tail_brute(b, q, theta);
        CHECK(std::fabs(bin_tail(b, q, theta) - want) < 1e-11);
    }
}
