#include "treeboot/metastability.hpp"

#include <algorithm>
#include <cmath>

#include "treeboot/ode.hpp"
#include "treeboot/quadrature.hpp"
#include "treeboot/rootfind.hpp"

namespace treeboot {

namespace {

double hermite(double x0, double y0, double d0, double x1, double y1,
               double d1, double x) {
    const double h = x1 - x0;
    const double s = (x - x0) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 +
           (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1;
}

// 3x3 linear solve with partial pivoting, for the Gauss-Newton step.
bool solve3(double A[3][3], double b[3], double x[3]) {
    int idx[3] = {0, 1, 2};
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::fabs(A[idx[r]][c]) > std::fabs(A[idx[piv]][c])) piv = r;
        std::swap(idx[c], idx[piv]);
        if (A[idx[c]][c] == 0.0) return false;
        for (int r = c + 1; r < 3; ++r) {
            const double f = A[idx[r]][c] / A[idx[c]][c];
            for (int k = c; k < 3; ++k) A[idx[r]][k] -= f * A[idx[c]][k];
            b[idx[r]] -= f * b[idx[c]];
        }
    }
    for (int c = 2; c >= 0; --c) {
        double s = b[idx[c]];
        for (int k = c + 1; k < 3; ++k) s -= A[idx[c]][k] * x[k];
        x[c] = s / A[idx[c]][c];
    }
    return true;
}

} // namespace

double cutoff_profile::value(double r) const {
    if (r < r_min() || r > r_max())
        throw domain_error("cutoff_profile: r outside sampled range");
    auto it = std::upper_bound(
        samples.begin(), samples.end(), r,
        [](double v, const std::pair<double, double>& s) {
            return v < s.first;
        });
    if (it == samples.begin()) return samples.front().second;
    if (it == samples.end()) return samples.back().second;
    const auto& s1 = *it;
    const auto& s0 = *(it - 1);
    const model_params& m = land.params;
    return hermite(s0.first, s0.second, w(m, land.p_T, s0.second), s1.first,
                   s1.second, w(m, land.p_T, s1.second), r);
}

double cutoff_profile::inverse(double q) const {
    if (!(q > land.q_T && q < 1.0))
        throw domain_error("cutoff_profile: level outside (q_T, 1)");
    if (q < phi_min() || q > phi_max())
        throw domain_error("cutoff_profile: level outside sampled range");
    auto it = std::lower_bound(
        samples.begin(), samples.end(), q,
        [](const std::pair<double, double>& s, double v) {
            return s.second < v;
        });
    if (it == samples.begin()) return samples.front().first;
    const auto& s1 = *it;
    const auto& s0 = *(it - 1);
    if (s1.second == s0.second) return s1.first;
    // interpolate r as a function of phi; dr/dphi = 1/W is positive
    const model_params& m = land.params;
    return hermite(s0.second, s0.first, 1.0 / w(m, land.p_T, s0.second),
                   s1.second, s1.first, 1.0 / w(m, land.p_T, s1.second), q);
}

double phi_inverse(const cutoff_profile& prof, double q) {
    return prof.inverse(q);
}

cutoff_profile profile_phi(const landscape& land, double r_lo, double r_hi,
                           double grid_step, double phi0, double tol) {
    if (!(r_lo < 0.0 && r_hi > 0.0))
        throw domain_error("profile_phi: range must contain r = 0");
    if (!(grid_step > 0.0)) throw domain_error("profile_phi: bad grid step");
    if (phi0 < 0.0) phi0 = 0.5 * (land.q_T + 1.0);
    if (!(phi0 > land.q_T && phi0 < 1.0))
        throw domain_error("profile_phi: phi(0) must lie in (q_T, 1)");

    const model_params& m = land.params;
    const double pT = land.p_T;
    auto rhs = [&](double, const std::array<double, 1>& y,
                   std::array<double, 1>& dy) {
        dy[0] = w(m, pT, std::clamp(y[0], 0.0, 1.0));
    };
    ode_options opt;
    opt.atol = tol;
    opt.rtol = tol;

    cutoff_profile prof{land, phi0, {}};
    std::vector<std::pair<double, double>> fwd, bwd;

    auto collect = [&](std::vector<std::pair<double, double>>& out,
                       double r_end) {
        std::vector<double> grid;
        for (double r = 0.0; (r_end > 0 ? r < r_end : r > r_end);
             r += (r_end > 0 ? grid_step : -grid_step))
            grid.push_back(r);
        grid.push_back(r_end);
        std::size_t next = 1; // grid[0] == 0 recorded by caller
        integrate_ode<1>(
            rhs, {phi0}, 0.0, r_end, opt,
            [&](const dense_step<1>& seg, const std::array<double, 1>& y) {
                const double lo = std::min(seg.t_begin, seg.t_end);
                const double hi = std::max(seg.t_begin, seg.t_end);
                while (next < grid.size() && grid[next] >= lo &&
                       grid[next] <= hi) {
                    if (grid[next] != seg.t_end)
                        out.emplace_back(grid[next],
                                         seg.eval(grid[next])[0]);
                    ++next;
                }
                out.emplace_back(seg.t_end, y[0]);
            });
    };

    collect(fwd, r_hi);
    collect(bwd, r_lo);

    auto& s = prof.samples;
    s.reserve(fwd.size() + bwd.size() + 1);
    for (auto it = bwd.rbegin(); it != bwd.rend(); ++it) s.push_back(*it);
    s.emplace_back(0.0, phi0);
    for (const auto& x : fwd) s.push_back(x);
    // clamp interpolation wiggle to the invariant band (q_T, 1)
    for (auto& pr : s)
        pr.second = std::clamp(pr.second, land.q_T, 1.0);
    for (std::size_t i = 1; i < s.size(); ++i)
        s[i].second = std::max(s[i].second, s[i - 1].second);
    return prof;
}

double window_offset(const landscape& land, double q, double h) {
    if (!(h > 0.0)) throw domain_error("window_offset: h must be positive");
    if (!(h < 1.0 - land.p_T))
        throw domain_error("window_offset: h too large (p_T + h >= 1)");
    if (!(q > land.q_T && q < 1.0))
        throw domain_error("window_offset: q outside (q_T, 1)");
    const double t = hitting_time(land.params, land.p_T + h, q);
    return t - land.alpha / std::sqrt(h);
}

window_scan scan_window(const landscape& land, double q,
                        std::span<const double> h_values) {
    window_scan out{land, q, {h_values.begin(), h_values.end()}, {}};
    out.offsets.reserve(h_values.size());
    for (double h : h_values) out.offsets.push_back(window_offset(land, q, h));
    return out;
}

double q_at_time(const landscape& land, double h, double t) {
    if (!(h > 0.0)) throw domain_error("q_at_time: h must be positive");
    if (!(t >= 0.0)) throw domain_error("q_at_time: t must be >= 0");
    const double p = land.p_T + h;
    if (t == 0.0) return p;
    // bracket the level from above; t_h(q) -> infinity only as q -> 1
    double hi = 0.0;
    bool have_hi = false;
    for (int k = 1; k <= 14; ++k) {
        hi = 1.0 - std::pow(10.0, -k);
        if (hi <= p) continue;
        if (hitting_time(land.params, p, hi) >= t) {
            have_hi = true;
            break;
        }
    }
    if (!have_hi)
        throw numerics_error("q_at_time: time beyond the resolvable window");
    return bisect(
        [&](double q) { return hitting_time(land.params, p, q) - t; }, p, hi,
        bisect_options{0.0, 200});
}

bottleneck_result bottleneck_integral(const landscape& land, double delta,
                                      double theta_small) {
    if (!(theta_small > 0.0))
        throw domain_error("bottleneck_integral: theta must be positive");
    const double qT = land.q_T;
    if (!(delta > 0.0 && qT - delta > 0.0 && qT + delta < 1.0))
        throw domain_error("bottleneck_integral: delta out of range");
    const model_params& m = land.params;
    const double pT = land.p_T;
    // W_{p_T} must vanish only at q_T inside the window
    if (!(w(m, pT, qT - delta) > 0.0 && w(m, pT, qT + delta) > 0.0))
        throw domain_error(
            "bottleneck_integral: drift not positive at the window edges");

    auto integrand = [&](double x) {
        return 1.0 / (w(m, pT, x) + theta_small * (1.0 - x));
    };
    quad_options qopt;
    qopt.abs_tol = 1e-12;
    qopt.rel_tol = 1e-12;
    const double raw = integrate(integrand, qT - delta, qT, qopt).value +
                       integrate(integrand, qT, qT + delta, qopt).value;
    const double beta =
        M_PI / std::sqrt(0.5 * w_d2q(m, pT, qT) * (1.0 - qT));
    return {theta_small, raw, raw - beta / std::sqrt(theta_small), beta};
}

double quadratic_bottleneck_control(double delta, double theta_small) {
    if (!(delta > 0.0 && theta_small > 0.0))
        throw domain_error("quadratic control: delta and theta must be > 0");
    auto integrand = [&](double x) { return 1.0 / (x * x + theta_small); };
    quad_options qopt;
    qopt.abs_tol = 1e-12;
    qopt.rel_tol = 1e-12;
    const double raw = integrate(integrand, -delta, 0.0, qopt).value +
                       integrate(integrand, 0.0, delta, qopt).value;
    return raw - M_PI / std::sqrt(theta_small);
}

tan_fit_report tan_profile_check(const landscape& land, double h,
                                 double lo_frac, double hi_frac,
                                 int n_points) {
    tan_fit_report rep;
    rep.h = h;
    if (!(h > 0.0 && h < 1.0 - land.p_T)) {
        rep.message = "h outside (0, 1-p_T)";
        return rep;
    }
    if (!(0.0 < lo_frac && lo_frac < hi_frac && hi_frac < 1.0) ||
        n_points < 4) {
        rep.message = "bad lambda grid";
        return rep;
    }

    const double sqh = std::sqrt(h);
    const double a2 = 0.5 * w_d2q(land.params, land.p_T, land.q_T);
    const double kappa = (1.0 - land.q_T) / (1.0 - land.p_T);
    rep.c1_hint = std::sqrt(kappa / a2);
    rep.c2_hint = std::sqrt(a2 * kappa);
    rep.c3_hint = M_PI / 2.0;

    for (int i = 0; i < n_points; ++i) {
        const double lam =
            land.alpha * (lo_frac + (hi_frac - lo_frac) * i / (n_points - 1));
        rep.lambda.push_back(lam);
        const double qv = q_at_time(land, h, lam / sqh);
        rep.lhs.push_back((qv - land.q_T) / sqh);
    }

    // damped Gauss-Newton from the analytic seed
    double c[3] = {rep.c1_hint, rep.c2_hint, rep.c3_hint};
    const int n = n_points;
    auto sum_sq = [&](const double cc[3]) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double wv = cc[1] * rep.lambda[i] - cc[2];
            const double r = cc[0] * std::tan(wv) - rep.lhs[i];
            s += r * r;
        }
        return s;
    };
    double fval = sum_sq(c);
    double mu = 1e-8;
    bool ok = false;
    for (int iter = 0; iter < 200; ++iter) {
        double JtJ[3][3] = {{0}}, Jtr[3] = {0};
        for (int i = 0; i < n; ++i) {
            const double wv = c[1] * rep.lambda[i] - c[2];
            const double cw = std::cos(wv);
            if (std::fabs(cw) < 1e-12) {
                rep.message = "tan pole inside the fit window";
                break;
            }
            const double tw = std::tan(wv);
            const double sec2 = 1.0 / (cw * cw);
            const double r = c[0] * tw - rep.lhs[i];
            const double J[3] = {tw, c[0] * rep.lambda[i] * sec2,
                                 -c[0] * sec2};
            for (int a = 0; a < 3; ++a) {
                Jtr[a] += J[a] * r;
                for (int bb = 0; bb < 3; ++bb) JtJ[a][bb] += J[a] * J[bb];
            }
        }
        double A[3][3], g[3], step[3];
        for (int a = 0; a < 3; ++a) {
            g[a] = -Jtr[a];
            for (int bb = 0; bb < 3; ++bb) A[a][bb] = JtJ[a][bb];
            A[a][a] += mu * (1.0 + JtJ[a][a]);
        }
        if (!solve3(A, g, step)) {
            mu *= 10.0;
            continue;
        }
        double cn[3] = {c[0] + step[0], c[1] + step[1], c[2] + step[2]};
        const double fn = sum_sq(cn);
        if (fn < fval) {
            const double rel_step =
                std::fabs(step[0]) + std::fabs(step[1]) + std::fabs(step[2]);
            c[0] = cn[0];
            c[1] = cn[1];
            c[2] = cn[2];
            fval = fn;
            mu = std::fmax(mu / 3.0, 1e-14);
            if (rel_step < 1e-12) {
                ok = true;
                break;
            }
        } else {
            mu *= 10.0;
            if (mu > 1e12) break;
        }
        if (iter == 199) ok = true; // converged by exhaustion; report as-is
    }

    double norm_y = 0.0;
    for (double v : rep.lhs) norm_y += v * v;
    rep.c1 = c[0];
    rep.c2 = c[1];
    rep.c3 = c[2];
    rep.rel_residual = std::sqrt(sum_sq(c) / std::fmax(norm_y, 1e-300));
    rep.converged = ok || rep.rel_residual < 0.05;
    if (rep.message.empty())
        rep.message = rep.converged ? "ok" : "fit did not converge";
    return rep;
}

} // namespace treeboot
