#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "treeboot/errors.hpp"

namespace treeboot {

struct quad_options {
    double abs_tol = 1e-12;
    double rel_tol = 1e-11;
    int max_depth = 48;
    std::int64_t max_evaluations = 20000000;
    // Relative noise carried by one integrand evaluation. Near-cancelling
    // drift evaluations (W ~ 1e-8 from O(1) terms) leave the error estimate
    // of a panel stuck around this level times the panel value; subdividing
    // below it only burns evaluations.
    double eval_noise_rel = 1e-9;
};

struct quad_result {
    double value = 0.0;
    double err_estimate = 0.0;
    std::int64_t evaluations = 0;
};

namespace detail {

// 15-point Kronrod rule with the embedded 7-point Gauss rule (QUADPACK dqk15
// abscissae/weights). Nodes 1, 3, 5 and the centre form the Gauss rule.
inline constexpr double gk_x[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
inline void gk15(F& f, double a, double b, double& kronrod, double& err) {
    const double c = 0.5 * (a + b);
    const double hl = 0.5 * (b - a);
    const double fc = f(c);
    double resk = gk_wk[7] * fc;
    double resg = gk_wg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = hl * gk_x[i];
        const double s = f(c - dx) + f(c + dx);
        resk += gk_wk[i] * s;
        if (i % 2 == 1) resg += gk_wg[i / 2] * s;
    }
    kronrod = resk * hl;
    err = std::fabs((resk - resg) * hl);
}

template <class F>
void gk15_adaptive(F& f, double a, double b, double tol, int depth,
                   const quad_options& opt, quad_result& acc) {
    double k, e;
    gk15(f, a, b, k, e);
    acc.evaluations += 15;
    // the |K-G| estimate bottoms out at the evaluation noise level relative
    // to the panel value; below that floor subdividing cannot help
    const double floor_err = opt.eval_noise_rel * std::fabs(k);
    const double mid = a + 0.5 * (b - a);
    if (e <= std::fmax(tol, floor_err) || depth >= opt.max_depth ||
        mid <= a || mid >= b) {
        acc.value += k;
        acc.err_estimate += e;
        return;
    }
    if (acc.evaluations > opt.max_evaluations)
        throw numerics_error("quadrature: evaluation budget exhausted");
    gk15_adaptive(f, a, mid, 0.5 * tol, depth + 1, opt, acc);
    gk15_adaptive(f, mid, b, 0.5 * tol, depth + 1, opt, acc);
}

} // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [a, b]. Subdivision keeps
/// bisecting until the local error estimate meets the (absolute, relative)
/// budget; peaked but integrable integrands concentrate nodes automatically.
template <class F>
quad_result integrate(F&& f, double a, double b, quad_options opt = {}) {
    quad_result acc;
    if (a == b) return acc;
    double k0, e0;
    detail::gk15(f, a, b, k0, e0);
    acc.evaluations = 15;
    const double tol = std::fmax(opt.abs_tol, opt.rel_tol * std::fabs(k0));
    if (e0 <= tol) {
        acc.value = k0;
        acc.err_estimate = e0;
        return acc;
    }
    const double mid = a + 0.5 * (b - a);
    detail::gk15_adaptive(f, a, mid, 0.5 * tol, 1, opt, acc);
    detail::gk15_adaptive(f, mid, b, 0.5 * tol, 1, opt, acc);
    if (!(acc.err_estimate <= 1e6 * tol) || std::isnan(acc.value))
        throw numerics_error("quadrature failed to converge");
    return acc;
}

} // namespace treeboot
