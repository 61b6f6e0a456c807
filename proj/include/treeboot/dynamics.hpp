#pragma once

#include <span>
#include <vector>

#include "treeboot/landscape.hpp"

namespace treeboot {

enum class trace_mode { discrete, continuous };

struct trace_sample {
    double t;
    double Q; // rooted (directed) occupation probability
    double P; // full-tree occupation probability
};

/// Time-indexed (t, Q, P) series for one initial density. Samples are the
/// integrator's accepted points plus any caller-requested times; t is
/// strictly increasing and Q, P are nondecreasing in [p, 1].
struct trajectory {
    model_params params;
    double p;
    trace_mode mode;
    double atol; // continuous mode solver record (0 for discrete)
    double rtol;
    std::vector<trace_sample> samples;

    /// Value of Q at time t by monotone cubic Hermite interpolation between
    /// samples; node slopes are the exact right-hand sides.
    double q_at(double t) const;
    double p_at(double t) const;

    /// First time Q reaches level q (requires q within the sampled range).
    double time_at_q_level(double q) const;
};

/// One synchronous update of the rooted density: the fixed-point form of
/// Q(n+1) = Q(n) + W_p(Q(n)). Shared by the trace and the depth-indexed
/// exact recursion so the two agree bitwise where they coincide.
inline double discrete_step(const model_params& m, double p, double q) {
    const double next = p + (1.0 - p) * bin_tail(m.b, q, m.theta);
    return next < 1.0 ? next : 1.0;
}

/// Synchronous recursion Q(n+1) = Q(n) + W_p(Q(n)), with
/// P(n) = p + (1-p) Bin(b+1, Q(n-1), theta) for n >= 1. One sample per step.
trajectory discrete_trace(const model_params& m, double p, int n_steps);

/// Continuous-time laws: dQ/dt = W_p(Q) and
/// dP/dt = (1-p) Bin(b+1, Q, theta) - (P - p), both from p at t = 0.
/// The P equation is the differentiated form of the Exp(1) convolution
/// P(t) = p + (1-p) int_0^t e^{-(t-z)} Bin(b+1, Q(z), theta) dz.
trajectory ode_trace(const model_params& m, double p, double t_max,
                     double tol = 1e-10,
                     std::span<const double> sample_times = {});

/// Time at which Q_p first reaches q_target, as the quadrature
/// t = int_p^{q_target} ds / W_p(s) with bottleneck-aware splitting around
/// the interior minimum of W_p. Throws unreachable_error when the target
/// lies at or beyond the terminal density.
double hitting_time(const model_params& m, double p, double q_target);

} // namespace treeboot
