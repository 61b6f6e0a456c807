#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "treeboot/dynamics.hpp"
#include "treeboot/quadrature.hpp"

using namespace treeboot;

TEST_CASE("discrete recursion basics") {
    const model_params m(3, 2);
    const trajectory tr = discrete_trace(m, 0.3, 5);
    CHECK(tr.samples.size() == 6);
    CHECK(tr.samples[0].Q == 0.3);
    CHECK(tr.samples[0].P == 0.3);
    CHECK(tr.samples[1].Q == doctest::Approx(0.4512).epsilon(1e-14));
    // P(1) = p + (1-p) Bin(b+1, Q(0), theta)
    CHECK(tr.samples[1].P ==
          doctest::Approx(0.3 + 0.7 * bin_tail(4, 0.3, 2)).epsilon(1e-14));
    const trajectory ones = discrete_trace(m, 1.0, 4);
    for (const auto& s : ones.samples) {
        CHECK(s.Q == 1.0);
        CHECK(s.P == 1.0);
    }
    const trajectory zeros = discrete_trace(m, 0.0, 4);
    for (const auto& s : zeros.samples) CHECK(s.Q == 0.0);
}

TEST_CASE("trajectory invariants: monotone, bounded, increasing times") {
    const model_params m(3, 2);
    for (double p : {0.05, 0.1311, 0.3}) {
        for (const trajectory& tr :
             {discrete_trace(m, p, 40), ode_trace(m, p, 40.0, 1e-10, {})}) {
            double t_prev = -1.0, q_prev = 0.0, pp_prev = 0.0;
            for (const auto& s : tr.samples) {
                CHECK(s.t > t_prev);
                CHECK(s.Q >= q_prev);
                CHECK(s.P >= pp_prev);
                CHECK(s.Q >= p);
                CHECK(s.Q <= 1.0);
                CHECK(s.P >= p);
                CHECK(s.P <= 1.0);
                t_prev = s.t;
                q_prev = s.Q;
                pp_prev = s.P;
            }
        }
    }
}

TEST_CASE("fixed points of the flow") {
    const model_params m(3, 2);
    const trajectory tr = ode_trace(m, 1.0, 10.0, 1e-10, {});
    CHECK(tr.samples.back().Q == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tr.samples.back().P == doctest::Approx(1.0).epsilon(1e-12));
    const trajectory tz = ode_trace(m, 0.0, 10.0, 1e-10, {});
    CHECK(tz.samples.back().Q == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("initial slope of Q is W_p(p)") {
    const model_params m(3, 2);
    const double p = 0.3;
    const double t0 = 1e-5;
    const trajectory tr = ode_trace(m, p, 1.0, 1e-12, {{t0}});
    const double slope = (tr.q_at(t0) - p) / t0;
    CHECK(std::fabs(slope - w(m, p, p)) < 1e-6);
}

TEST_CASE("adaptive integration matches a fine fixed-step oracle") {
    const model_params m(3, 2);
    const double p = 0.3;
    const trajectory tr = ode_trace(m, p, 2.0, 1e-10, {});
    const double want = oracle::rk4_fixed(
        [&](double q) { return w(m, p, q); }, p, 2.0, 1e-4);
    CHECK(std::fabs(tr.samples.back().Q - want) < 1e-8);
}

TEST_CASE("P solves the exponential convolution of the rooted law") {
    // P(t) = p + (1-p) int_0^t e^{-(t-z)} Bin(b+1, Q(z), theta) dz; the
    // first-order equation integrated by ode_trace is its derivative.
    const model_params m(3, 2);
    const double p = 0.3;
    const trajectory tr = ode_trace(m, p, 6.0, 1e-12, {});
    for (double t : {0.5, 1.0, 2.0, 4.0, 6.0}) {
        const auto conv = integrate(
            [&](double z) {
                return std::exp(-(t - z)) * bin_tail(4, tr.q_at(z), 2);
            },
            0.0, t, quad_options{1e-13, 1e-12, 40, 2000000, 1e-10});
        const double want = p + (1.0 - p) * conv.value;
        CHECK(std::fabs(tr.p_at(t) - want) < 1e-8);
    }
}

TEST_CASE("monotone coupling of trajectories in p") {
    const model_params m(3, 2);
    std::vector<double> grid;
    for (double t = 0.0; t <= 8.0; t += 0.25) grid.push_back(t);
    const trajectory lo = ode_trace(m, 0.2, 8.0, 1e-10, grid);
    const trajectory hi = ode_trace(m, 0.25, 8.0, 1e-10, grid);
    for (double t : grid) {
        CHECK(lo.q_at(t) <= hi.q_at(t) + 1e-12);
        CHECK(lo.p_at(t) <= hi.p_at(t) + 1e-12);
    }
    const trajectory dlo = discrete_trace(m, 0.2, 20);
    const trajectory dhi = discrete_trace(m, 0.25, 20);
    for (std::size_t i = 0; i < dlo.samples.size(); ++i) {
        CHECK(dlo.samples[i].Q <= dhi.samples[i].Q + 1e-15);
        CHECK(dlo.samples[i].P <= dhi.samples[i].P + 1e-15);
    }
}

TEST_CASE("discrete and continuous flows share the terminal limit") {
    const model_params m(3, 2);
    for (double p : {0.05, 0.3}) { // at least 0.05 away from p_T = 1/9
        const trajectory d = discrete_trace(m, p, 4000);
        const trajectory c = ode_trace(m, p, 4000.0, 1e-10, {});
        CHECK(std::fabs(d.samples.back().Q - c.samples.back().Q) < 1e-6);
    }
}

TEST_CASE("hitting time: trivial and error cases") {
    const model_params m(3, 2);
    CHECK(hitting_time(m, 0.3, 0.3) == 0.0);
    CHECK_THROWS_AS(hitting_time(m, 0.3, 0.2), domain_error);
    CHECK_THROWS_AS(hitting_time(m, 0.3, 1.0), unreachable_error);
    // subcritical: the well blocks the passage
    CHECK_THROWS_AS(hitting_time(m, 1.0 / 9.0 - 0.01, 0.99),
                    unreachable_error);
    // theta above the degree freezes the dynamics entirely
    CHECK_THROWS_AS(hitting_time(model_params(3, 5), 0.3, 0.5),
                    unreachable_error);
}

TEST_CASE("hitting time agrees with the ODE crossing time") {
    const model_params m(3, 2);
    const double p = 1.0 / 9.0 + 1e-3;
    const double t9 = hitting_time(m, p, 0.9);
    const trajectory tr = ode_trace(m, p, t9 * 1.02, 1e-12, {});
    const double cross = tr.time_at_q_level(0.9);
    CHECK(std::fabs(t9 - cross) / t9 < 1e-6);
    // supercritical but far from critical: plain positive integrand
    const double t2 = hitting_time(m, 0.3, 0.9);
    const trajectory tr2 = ode_trace(m, 0.3, 6.0, 1e-12, {});
    CHECK(std::fabs(t2 - tr2.time_at_q_level(0.9)) / t2 < 1e-6);
}

TEST_CASE("quadrature-flow duality on a level grid") {
    const model_params m(3, 2);
    const double p = 0.2;
    const trajectory tr = ode_trace(m, p, 30.0, 1e-12, {});
    for (double q : {0.3, 0.45, 0.6, 0.75, 0.9, 0.97}) {
        const double t = hitting_time(m, p, q);
        CHECK(std::fabs(tr.q_at(t) - q) < 1e-6);
    }
}

TEST_CASE("subcritical flows converge to the terminal density") {
    const model_params m(3, 2);
    for (double p : {0.02, 0.05, 0.09}) {
        const trajectory tr = ode_trace(m, p, 1e4, 1e-10, {});
        CHECK(std::fabs(tr.samples.back().Q - terminal_density(m, p)) < 1e-6);
    }
}

TEST_CASE("requested sample times are materialized") {
    const model_params m(3, 2);
    const std::vector<double> want{0.1, 0.25, 1.0, 3.33};
    const trajectory tr = ode_trace(m, 0.3, 5.0, 1e-10, want);
    for (double t : want) {
        bool found = false;
        for (const auto& s : tr.samples) found = found || s.t == t;
        CHECK(found);
    }
}
