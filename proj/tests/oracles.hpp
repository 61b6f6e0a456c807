#pragma once

// Test-only oracles, independent of the library implementation paths they
// check: brute-force sums, finite differences, grid scans and fixed-step
// integration.

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace oracle {

// C(n, k) in long double via the multiplicative formula.
inline long double choose_ld(int n, int k) {
    if (k < 0 || k > n) return 0.0L;
    if (k > n - k) k = n - k;
    long double r = 1.0L;
    for (int i = 1; i <= k; ++i)
        r = r * (long double)(n - k + i) / (long double)i;
    return r;
}

// Direct summation of P(X >= theta), X ~ Binomial(b, q).
inline double bin_tail_brute(int b, double q, int theta) {
    if (theta <= 0) return 1.0;
    if (theta > b) return 0.0;
    long double s = 0.0L;
    for (int k = theta; k <= b; ++k)
        s += choose_ld(b, k) * std::pow((long double)q, k) *
             std::pow((long double)(1.0 - q), b - k);
    return double(s);
}

inline double central_diff(const std::function<double(double)>& f, double x,
                           double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// W evaluated through the brute-force tail only.
inline double w_brute(int b, int theta, double p, double q) {
    return p + (1.0 - p) * bin_tail_brute(b, q, theta) - q;
}

// Golden-section minimizer for a unimodal function on [a, b].
inline double golden_min(const std::function<double(double)>& f, double a,
                         double b, int iters = 200) {
    const double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters && b - a > 1e-15; ++i) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

// Independent (p_T, q_T) oracle: dense grid scan of min_q W_p(q) with
// golden-section refinement, bisected in p. Uses only w_brute.
struct critical_pair {
    double p_T;
    double q_T;
};

inline critical_pair critical_gridscan(int b, int theta) {
    auto well = [&](double p) {
        double best_q = 0.0, best_w = 1e300;
        for (double q = 1e-3; q < 0.999; q += 1e-3) {
            const double v = w_brute(b, theta, p, q);
            if (v < best_w) {
                best_w = v;
                best_q = q;
            }
        }
        const double lo = std::max(1e-9, best_q - 2e-3);
        const double hi = std::min(1.0 - 1e-9, best_q + 2e-3);
        const double qm = golden_min(
            [&](double q) { return w_brute(b, theta, p, q); }, lo, hi);
        return std::pair<double, double>(qm, w_brute(b, theta, p, qm));
    };
    double lo = 1e-6, hi = 0.5;
    while (well(hi).second < 0.0) hi = 0.5 * (1.0 + hi);
    for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
        const double mid = 0.5 * (lo + hi);
        (well(mid).second > 0.0 ? hi : lo) = mid;
    }
    const double pT = 0.5 * (lo + hi);
    return {pT, well(pT).first};
}

// Fixed-step classic RK4 for dy/dt = f(y); independent of the adaptive path.
inline double rk4_fixed(const std::function<double(double)>& f, double y0,
                        double t_end, double dt) {
    double y = y0;
    double t = 0.0;
    while (t < t_end) {
        const double h = std::min(dt, t_end - t);
        const double k1 = f(y);
        const double k2 = f(y + 0.5 * h * k1);
        const double k3 = f(y + 0.5 * h * k2);
        const double k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
    return y;
}

// Kolmogorov-Smirnov statistic against a CDF.
inline double ks_statistic(std::vector<double> xs,
                           const std::function<double(double)>& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = double(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double F = cdf(xs[i]);
        d = std::max(d, std::fabs(F - double(i) / n));
        d = std::max(d, std::fabs(double(i + 1) / n - F));
    }
    return d;
}

} // namespace oracle
