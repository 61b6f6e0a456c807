#pragma once

#include "treeboot/errors.hpp"

namespace treeboot {

/// P(X >= theta) for X ~ Binomial(b, q). theta <= 0 gives 1, theta > b
/// gives 0. Stable direct summation; see bin_tail in binom.cpp.
double bin_tail(int b, double q, int theta);

/// d/dq of bin_tail: b * C(b-1, theta-1) * q^(theta-1) * (1-q)^(b-theta).
/// Requires 1 <= theta <= b.
double bin_tail_dq(int b, double q, int theta);

/// Second q-derivative of bin_tail, with the theta=1 / theta=b boundary
/// singularities of the closed form removed by their limits.
double bin_tail_d2q(int b, double q, int theta);

/// Validated (trials, threshold, success probability) triple.
struct tail_spec {
    int trials;
    int threshold;
    double q;

    tail_spec(int trials_, int threshold_, double q_);

    double tail() const { return bin_tail(trials, q, threshold); }
    double tail_dq() const { return bin_tail_dq(trials, q, threshold); }
    double tail_d2q() const { return bin_tail_d2q(trials, q, threshold); }
};

} // namespace treeboot
