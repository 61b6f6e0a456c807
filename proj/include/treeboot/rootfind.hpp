#pragma once

#include <cmath>
#include <utility>

#include "treeboot/errors.hpp"

namespace treeboot {

struct bisect_options {
    double xtol = 1e-12; // pass 0 to run down to floating-point resolution
    int max_iter = 200;
};

/// Plain bisection on [lo, hi]. f(lo) and f(hi) must have opposite signs
/// (an exact zero at an endpoint is accepted). Stops at xtol or when the
/// midpoint no longer separates the endpoints.
template <class F>
double bisect(F&& f, double lo, double hi, bisect_options opt = {}) {
    double flo = f(lo);
    if (flo == 0.0) return lo;
    double fhi = f(hi);
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw numerics_error("bisect: endpoints do not bracket a sign change");
    for (int i = 0; i < opt.max_iter && hi - lo > opt.xtol; ++i) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (fhi > 0.0)) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return lo + 0.5 * (hi - lo);
}

} // namespace treeboot
