#include "treeboot/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "treeboot/ode.hpp"
#include "treeboot/quadrature.hpp"
#include "treeboot/rootfind.hpp"

namespace treeboot {

namespace {

void check_p(double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw domain_error("dynamics: p outside [0,1]");
}

// Hermite basis on one segment; slopes are exact derivatives, so the
// interpolant inherits the monotonicity of the sampled solution.
double hermite(double t0, double y0, double d0, double t1, double y1,
               double d1, double t) {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 +
           (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1;
}

double q_slope(const model_params& m, double p, double q) {
    return w(m, p, q);
}

double p_slope(const model_params& m, double p, double q, double pp) {
    return (1.0 - p) * bin_tail(m.b + 1, q, m.theta) - (pp - p);
}

} // namespace

double trajectory::q_at(double t) const {
    if (samples.empty()) throw domain_error("trajectory: empty");
    if (t <= samples.front().t) return samples.front().Q;
    if (t >= samples.back().t) return samples.back().Q;
    auto it = std::upper_bound(
        samples.begin(), samples.end(), t,
        [](double v, const trace_sample& s) { return v < s.t; });
    const trace_sample& s1 = *it;
    const trace_sample& s0 = *(it - 1);
    if (mode == trace_mode::discrete)
        return s0.Q; // piecewise-constant between integer steps
    return hermite(s0.t, s0.Q, q_slope(params, p, s0.Q), s1.t, s1.Q,
                   q_slope(params, p, s1.Q), t);
}

double trajectory::p_at(double t) const {
    if (samples.empty()) throw domain_error("trajectory: empty");
    if (t <= samples.front().t) return samples.front().P;
    if (t >= samples.back().t) return samples.back().P;
    auto it = std::upper_bound(
        samples.begin(), samples.end(), t,
        [](double v, const trace_sample& s) { return v < s.t; });
    const trace_sample& s1 = *it;
    const trace_sample& s0 = *(it - 1);
    if (mode == trace_mode::discrete) return s0.P;
    return hermite(s0.t, s0.P, p_slope(params, p, s0.Q, s0.P), s1.t, s1.P,
                   p_slope(params, p, s1.Q, s1.P), t);
}

double trajectory::time_at_q_level(double q) const {
    if (samples.empty()) throw domain_error("trajectory: empty");
    if (q < samples.front().Q || q > samples.back().Q)
        throw domain_error("trajectory: level outside sampled range");
    auto it = std::lower_bound(
        samples.begin(), samples.end(), q,
        [](const trace_sample& s, double v) { return s.Q < v; });
    if (it == samples.begin()) return samples.front().t;
    const trace_sample& s1 = *it;
    const trace_sample& s0 = *(it - 1);
    if (s1.Q == s0.Q || mode == trace_mode::discrete) return s1.t;
    return bisect(
        [&](double t) {
            return hermite(s0.t, s0.Q, q_slope(params, p, s0.Q), s1.t, s1.Q,
                           q_slope(params, p, s1.Q), t) -
                   q;
        },
        s0.t, s1.t, bisect_options{0.0, 200});
}

trajectory discrete_trace(const model_params& m, double p, int n_steps) {
    check_p(p);
    if (n_steps < 0) throw domain_error("discrete_trace: n_steps < 0");
    trajectory tr{m, p, trace_mode::discrete, 0.0, 0.0, {}};
    tr.samples.reserve(std::size_t(n_steps) + 1);
    double q = p;
    double q_prev = p;
    for (int n = 0; n <= n_steps; ++n) {
        const double pp =
            n == 0 ? p : p + (1.0 - p) * bin_tail(m.b + 1, q_prev, m.theta);
        tr.samples.push_back({double(n), q, pp});
        q_prev = q;
        q = discrete_step(m, p, q);
    }
    return tr;
}

trajectory ode_trace(const model_params& m, double p, double t_max,
                     double tol, std::span<const double> sample_times) {
    check_p(p);
    if (!(t_max >= 0.0)) throw domain_error("ode_trace: t_max < 0");
    trajectory tr{m, p, trace_mode::continuous, tol, tol, {}};
    tr.samples.push_back({0.0, p, p});
    if (t_max == 0.0) return tr;

    std::vector<double> wanted(sample_times.begin(), sample_times.end());
    std::sort(wanted.begin(), wanted.end());
    std::size_t next_wanted = 0;

    auto rhs = [&](double, const std::array<double, 2>& y,
                   std::array<double, 2>& dy) {
        const double q = std::clamp(y[0], 0.0, 1.0);
        dy[0] = w(m, p, q);
        dy[1] = (1.0 - p) * bin_tail(m.b + 1, q, m.theta) - (y[1] - p);
    };

    auto push = [&](double t, double q, double pp) {
        // flatten sub-tolerance interpolation wiggle; the solution itself
        // is monotone
        const trace_sample& last = tr.samples.back();
        if (t <= last.t) return;
        q = std::clamp(q, last.Q, 1.0);
        pp = std::clamp(pp, last.P, 1.0);
        tr.samples.push_back({t, q, pp});
    };

    ode_options opt;
    opt.atol = tol;
    opt.rtol = tol;
    integrate_ode<2>(
        rhs, {p, p}, 0.0, t_max, opt,
        [&](const dense_step<2>& seg, const std::array<double, 2>& y) {
            while (next_wanted < wanted.size() &&
                   wanted[next_wanted] <= seg.t_end) {
                const double tw = wanted[next_wanted];
                if (tw > seg.t_begin && tw < seg.t_end) {
                    const auto yv = seg.eval(tw);
                    push(tw, yv[0], yv[1]);
                }
                ++next_wanted;
            }
            push(seg.t_end, y[0], y[1]);
        });
    return tr;
}

double hitting_time(const model_params& m, double p, double q_target) {
    check_p(p);
    if (!(q_target >= 0.0 && q_target <= 1.0))
        throw domain_error("hitting_time: q_target outside [0,1]");
    if (q_target < p)
        throw domain_error("hitting_time: q_target below initial density");
    if (q_target == p) return 0.0;
    if (q_target >= 1.0)
        throw unreachable_error(
            "hitting_time: q = 1 is approached only asymptotically");

    // Reachability: the integrand 1/W_p must stay positive on (p, q_target].
    std::optional<double> qm;
    if (!m.degenerate()) {
        const double pt = p_tilde(m);
        if (p < pt) qm = q_min(m, p);
    }
    if (qm && *qm > p && *qm < q_target) {
        if (w(m, p, *qm) <= 0.0)
            throw unreachable_error(
                "hitting_time: target beyond the terminal density");
    } else if (w(m, p, q_target) <= 0.0) {
        throw unreachable_error(
            "hitting_time: target at or beyond the terminal density");
    }

    auto integrand = [&](double s) { return 1.0 / w(m, p, s); };
    quad_options qopt;
    qopt.abs_tol = 1e-12;
    qopt.rel_tol = 1e-11;

    // Split around the near-double-root at q_min where the integrand peaks
    // like 1/(a (s-q_T)^2 + c h).
    const double delta = 0.05;
    std::vector<double> cuts{p};
    if (qm) {
        for (double c : {*qm - delta, *qm, *qm + delta})
            if (c > p && c < q_target) cuts.push_back(c);
    }
    cuts.push_back(q_target);

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        total += integrate(integrand, cuts[i], cuts[i + 1], qopt).value;
    return total;
}

} // namespace treeboot
