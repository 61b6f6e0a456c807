#include "treeboot/binom.hpp"

#include <cmath>

namespace treeboot {

namespace {

void check_args(int b, double q) {
    if (b < 1) throw domain_error("binom: b must be >= 1");
    if (b > 64) throw domain_error("binom: b > 64 unsupported");
    if (!(q >= 0.0 && q <= 1.0))
        throw domain_error("binom: q outside [0,1]");
}

double powi(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

// C(n, k) as a double; exact up to the 53-bit limit, relative error
// ~1e-16 beyond it, which is enough for b <= 64.
double choose(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    if (k > n - k) k = n - k;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r *= double(n - k + i) / double(i);
    return r;
}

// P(X >= theta) summed upward from the dominant boundary term at k = theta;
// valid when theta > b q so the terms decrease along the sum.
double upper_sum(int b, double q, int theta) {
    double term = 1.0; // C(b,theta) q^theta, factors interleaved
    for (int i = 1; i <= theta; ++i)
        term *= double(b - theta + i) / double(i) * q;
    term *= powi(1.0 - q, b - theta);
    double sum = term;
    const double ratio = q / (1.0 - q);
    for (int k = theta; k < b && term > 0.0; ++k) {
        term *= ratio * double(b - k) / double(k + 1);
        sum += term;
    }
    return sum;
}

// P(X <= theta-1) summed downward from the dominant boundary term at
// k = theta-1; valid when theta <= b q so the terms decrease downward.
double lower_sum(int b, double q, int theta) {
    double term = 1.0; // C(b,theta-1) (1-q)^{b-theta+1}, interleaved
    for (int i = 1; i <= b - theta + 1; ++i)
        term *= double(theta - 1 + i) / double(i) * (1.0 - q);
    term *= powi(q, theta - 1);
    double sum = term;
    const double ratio = (1.0 - q) / q;
    for (int k = theta - 1; k > 0 && term > 0.0; --k) {
        term *= ratio * double(k) / double(b - k + 1);
        sum += term;
    }
    return sum;
}

} // namespace

double bin_tail(int b, double q, int theta) {
    check_args(b, q);
    if (theta <= 0) return 1.0;
    if (theta > b) return 0.0;
    if (q == 0.0) return 0.0;
    if (q == 1.0) return 1.0;
    // sum whichever tail is the small one, largest term first; the roundoff
    // of the long sum near 1 would otherwise break monotonicity at the
    // 1e-15 level
    if (double(theta) <= double(b) * q) {
        const double lower = lower_sum(b, q, theta);
        return lower < 1.0 ? 1.0 - lower : 0.0;
    }
    const double upper = upper_sum(b, q, theta);
    return upper < 1.0 ? upper : 1.0;
}

double bin_tail_dq(int b, double q, int theta) {
    check_args(b, q);
    if (theta < 1 || theta > b)
        throw domain_error("bin_tail_dq: theta outside [1,b]");
    const double coeff = double(b) * choose(b - 1, theta - 1);
    return coeff * powi(q, theta - 1) * powi(1.0 - q, b - theta);
}

double bin_tail_d2q(int b, double q, int theta) {
    check_args(b, q);
    if (theta < 1 || theta > b)
        throw domain_error("bin_tail_d2q: theta outside [1,b]");
    const double coeff = double(b) * choose(b - 1, theta - 1);
    const double t1 = theta > 1 ? double(theta - 1) * powi(q, theta - 2) *
                                      powi(1.0 - q, b - theta)
                                : 0.0;
    const double t2 = theta < b ? double(b - theta) * powi(q, theta - 1) *
                                      powi(1.0 - q, b - theta - 1)
                                : 0.0;
    return coeff * (t1 - t2);
}

tail_spec::tail_spec(int trials_, int threshold_, double q_)
    : trials(trials_), threshold(threshold_), q(q_) {
    check_args(trials, q);
    if (threshold < 0 || threshold > trials + 1)
        throw domain_error("tail_spec: threshold outside [0, b+1]");
}

} // namespace treeboot
