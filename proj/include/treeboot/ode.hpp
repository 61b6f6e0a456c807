#pragma once

#include <array>
#include <cmath>
#include <limits>

#include "treeboot/errors.hpp"

namespace treeboot {

struct ode_options {
    double rtol = 1e-10;
    double atol = 1e-10;
    double h_max = std::numeric_limits<double>::infinity();
    double h_init = 0.0; // 0: start from a conservative guess
    long max_steps = 50000000;
};

/// One accepted Dormand-Prince step together with its quartic interpolant.
/// eval(t) is valid for t between t_begin and t_end (either direction).
template <int N>
struct dense_step {
    double t_begin = 0.0;
    double t_end = 0.0;
    std::array<std::array<double, N>, 5> rcont{};

    std::array<double, N> eval(double t) const {
        const double h = t_end - t_begin;
        const double th = (t - t_begin) / h;
        const double th1 = 1.0 - th;
        std::array<double, N> y;
        for (int i = 0; i < N; ++i)
            y[i] = rcont[0][i] +
                   th * (rcont[1][i] +
                         th1 * (rcont[2][i] +
                                th * (rcont[3][i] + th1 * rcont[4][i])));
        return y;
    }
};

// Adaptive Dormand-Prince 5(4) with FSAL and the classic dense-output
// polynomial. The systems integrated here are one- and two-dimensional and
// smooth; the controller is the standard err^(-1/5) rule with a 0.9 safety
// factor. Integrates in either time direction.
template <int N, class RHS, class StepCb>
std::array<double, N> integrate_ode(RHS&& rhs, std::array<double, N> y,
                                    double t0, double t1,
                                    const ode_options& opt, StepCb&& on_step) {
    using state = std::array<double, N>;
    if (t0 == t1) return y;
    const double dir = t1 > t0 ? 1.0 : -1.0;

    // Butcher tableau
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                     a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                     a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                     a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    constexpr double d1 = -12715105075.0 / 11282082432.0,
                     d3 = 87487479700.0 / 32700410799.0,
                     d4 = -10690763975.0 / 1880347072.0,
                     d5 = 701980252875.0 / 199316789632.0,
                     d6 = -1453857185.0 / 822651844.0,
                     d7 = 69997945.0 / 29380423.0;

    state k1, k2, k3, k4, k5, k6, k7, yt, ynew;
    rhs(t0, y, k1);

    double h;
    if (opt.h_init != 0.0) {
        h = std::fabs(opt.h_init);
    } else {
        double ny = 0.0, nf = 0.0;
        for (int i = 0; i < N; ++i) {
            ny += y[i] * y[i];
            nf += k1[i] * k1[i];
        }
        h = 0.01 * (std::sqrt(ny) + opt.atol) / (std::sqrt(nf) + 1e-12);
        h = std::fmin(h, std::fabs(t1 - t0));
        h = std::fmax(h, 1e-10);
    }
    h = std::fmin(h, opt.h_max) * dir;

    double t = t0;
    long nsteps = 0;
    while (dir * (t1 - t) > 0.0) {
        if (++nsteps > opt.max_steps)
            throw numerics_error("integrate_ode: step limit exceeded");
        if (dir * (t + h - t1) > 0.0) h = t1 - t;

        for (int i = 0; i < N; ++i) yt[i] = y[i] + h * a21 * k1[i];
        rhs(t + c2 * h, yt, k2);
        for (int i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * h, yt, k3);
        for (int i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * h, yt, k4);
        for (int i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] +
                                a54 * k4[i]);
        rhs(t + c5 * h, yt, k5);
        for (int i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                                a64 * k4[i] + a65 * k5[i]);
        rhs(t + h, yt, k6);
        for (int i = 0; i < N; ++i)
            ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] +
                                  a75 * k5[i] + a76 * k6[i]);
        rhs(t + h, ynew, k7);

        double err = 0.0;
        for (int i = 0; i < N; ++i) {
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                   e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc =
                opt.atol +
                opt.rtol * std::fmax(std::fabs(y[i]), std::fabs(ynew[i]));
            err += (ei / sc) * (ei / sc);
        }
        err = std::sqrt(err / N);

        if (err <= 1.0) {
            dense_step<N> seg;
            seg.t_begin = t;
            seg.t_end = t + h;
            for (int i = 0; i < N; ++i) {
                const double ydiff = ynew[i] - y[i];
                const double bspl = h * k1[i] - ydiff;
                seg.rcont[0][i] = y[i];
                seg.rcont[1][i] = ydiff;
                seg.rcont[2][i] = bspl;
                seg.rcont[3][i] = ydiff - h * k7[i] - bspl;
                seg.rcont[4][i] =
                    h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                         d6 * k6[i] + d7 * k7[i]);
            }
            t += h;
            y = ynew;
            k1 = k7; // FSAL
            on_step(seg, y);
            double fac = 0.9 * std::pow(std::fmax(err, 1e-300), -0.2);
            fac = std::fmin(5.0, std::fmax(0.2, fac));
            h = dir * std::fmin(std::fabs(h) * fac, opt.h_max);
        } else {
            const double fac =
                std::fmax(0.2, 0.9 * std::pow(err, -0.2));
            h *= fac;
            if (std::fabs(h) < 1e-15 * std::fmax(1.0, std::fabs(t)))
                throw numerics_error("integrate_ode: step size underflow");
        }
    }
    return y;
}

} // namespace treeboot
