#include "treeboot/landscape.hpp"

#include <cmath>

#include "treeboot/rootfind.hpp"

namespace treeboot {

namespace {

void check_prob(double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0))
        throw domain_error(std::string("landscape: ") + name +
                           " outside [0,1]");
}

void require_nondegenerate(const model_params& m) {
    if (m.degenerate())
        throw degenerate_error(
            "landscape: critical structure requires b > theta >= 2");
}

// Machine-precision bisection used everywhere in this module.
constexpr bisect_options tight_bisect{0.0, 200};

} // namespace

model_params::model_params(int b_, int theta_) : b(b_), theta(theta_) {
    if (b < 1 || b > 63)
        throw domain_error("model_params: b must lie in [1, 63]");
    if (theta < 1) throw domain_error("model_params: theta must be >= 1");
}

double w(const model_params& m, double p, double q) {
    check_prob(p, "p");
    check_prob(q, "q");
    return p + (1.0 - p) * bin_tail(m.b, q, m.theta) - q;
}

double w_dq(const model_params& m, double p, double q) {
    check_prob(p, "p");
    check_prob(q, "q");
    return (1.0 - p) * bin_tail_dq(m.b, q, m.theta) - 1.0;
}

double w_d2q(const model_params& m, double p, double q) {
    check_prob(p, "p");
    check_prob(q, "q");
    return (1.0 - p) * bin_tail_d2q(m.b, q, m.theta);
}

double q_tilde(const model_params& m) {
    require_nondegenerate(m);
    return double(m.theta - 1) / double(m.b - 1);
}

double p_tilde(const model_params& m) {
    const double qt = q_tilde(m);
    const double a = bin_tail_dq(m.b, qt, m.theta);
    if (a <= 1.0)
        throw degenerate_error("landscape: no spinodal (Bin'(b,q~,theta) <= 1)");
    return 1.0 - 1.0 / a;
}

std::optional<double> q_min(const model_params& m, double p) {
    if (!(p > 0.0 && p < 1.0))
        throw domain_error("q_min: p outside (0,1)");
    const double qt = q_tilde(m);
    const double pt = p_tilde(m);
    if (p >= pt) return std::nullopt;
    // W'_p(0) = -1 and W'_p(q~) = a(1-p) - 1 > 0; W' is increasing on (0, q~).
    return bisect([&](double q) { return w_dq(m, p, q); }, 0.0, qt,
                  tight_bisect);
}

landscape critical(const model_params& m, double tol) {
    require_nondegenerate(m);
    const double qt = q_tilde(m);
    const double pt = p_tilde(m);

    const double eps = 1e-9;
    auto well_value = [&](double p) { return w(m, p, *q_min(m, p)); };
    // p -> W_p(q_min(p)) is increasing: negative for small p, positive near
    // the spinodal.
    const double p_T =
        bisect(well_value, eps, pt - eps, tight_bisect);
    const double q_T = *q_min(m, p_T);

    landscape out{m, qt, pt, p_T, q_T, 0.0, 0.0, 0.0, tol};
    out.residual_w = std::fabs(w(m, p_T, q_T));
    out.residual_wq = std::fabs(w_dq(m, p_T, q_T));
    const double wpp = w_d2q(m, p_T, q_T);
    if (out.residual_w > tol || out.residual_wq > tol || !(wpp > 0.0))
        throw numerics_error("critical: tangency residuals exceed tolerance");
    if (!(p_T < pt && q_T > p_T && q_T < qt))
        throw numerics_error("critical: structure invariants violated");
    out.alpha = M_PI / std::sqrt(0.5 * wpp) *
                std::sqrt((1.0 - p_T) / (1.0 - q_T));
    return out;
}

double terminal_density(const model_params& m, double p) {
    check_prob(p, "p");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    const landscape land = critical(m);
    if (p > land.p_T) return 1.0;
    const double qm = *q_min(m, p); // exists: p <= p_T < p_tilde
    const double wm = w(m, p, qm);
    // Tangency within roundoff of p_T: the well bottom is the limit.
    if (std::fabs(wm) <= 1e-13) return qm;
    if (wm > 0.0) return 1.0;
    // W_p(p) > 0 and W_p decreases to the well: the unique root in (p, qm)
    // is the smallest positive root of W_p above p.
    return bisect([&](double q) { return w(m, p, q); }, p, qm, tight_bisect);
}

} // namespace treeboot
