#pragma once

#include <span>
#include <string>
#include <vector>

#include "treeboot/dynamics.hpp"
#include "treeboot/landscape.hpp"

namespace treeboot {

/// Shift-normalized solution of phi' = W_{p_T}(phi) connecting q_T at
/// r -> -infinity to 1 at r -> +infinity. The approach to 1 is exponential;
/// the approach to q_T is only algebraic (~ 1/(a2 |r|)) because the
/// linearization vanishes at the double root.
struct cutoff_profile {
    landscape land;
    double phi0; // normalization phi(0); default (q_T+1)/2
    std::vector<std::pair<double, double>> samples; // (r, phi), r increasing

    double r_min() const { return samples.front().first; }
    double r_max() const { return samples.back().first; }
    double phi_min() const { return samples.front().second; }
    double phi_max() const { return samples.back().second; }

    /// phi(r) by cubic Hermite with exact slopes W_{p_T}(phi).
    double value(double r) const;
    /// phi^{-1}(q) by the monotone interpolation inverse of the samples.
    double inverse(double q) const;
};

cutoff_profile profile_phi(const landscape& land, double r_lo, double r_hi,
                           double grid_step = 0.05, double phi0 = -1.0,
                           double tol = 1e-12);

double phi_inverse(const cutoff_profile& prof, double q);

/// t_h(q) - alpha h^{-1/2} with t_h(q) = int_{p_T+h}^q ds / W_{p_T+h}(s).
double window_offset(const landscape& land, double q, double h);

struct window_scan {
    landscape land;
    double q_probe;
    std::vector<double> h_values;
    std::vector<double> offsets;
};

window_scan scan_window(const landscape& land, double q,
                        std::span<const double> h_values);

/// Density level reached at time t for initial density p_T + h, by
/// inverting the hitting-time quadrature (monotone in the level).
double q_at_time(const landscape& land, double h, double t);

struct bottleneck_result {
    double theta;       // the small parameter of the regularized integrand
    double raw;         // int_{q_T-delta}^{q_T+delta} dx/(W_{p_T}(x)+theta(1-x))
    double compensated; // raw - beta theta^{-1/2}
    double beta;        // pi / sqrt(W''_{p_T}(q_T)/2 (1-q_T))
};

/// The singular bottleneck integral across the double root, and the
/// compensated quantity whose theta -> 0 limit exists and is finite.
bottleneck_result bottleneck_integral(const landscape& land, double delta,
                                      double theta_small);

/// Control case w(x) = x^2 at q = 0: the compensated integral, evaluated by
/// the same quadrature; its exact theta -> 0 limit is -2/delta.
double quadratic_bottleneck_control(double delta, double theta_small);

struct tan_fit_report {
    bool converged = false;
    double h = 0.0;
    double c1 = 0.0, c2 = 0.0, c3 = 0.0; // fitted
    double c1_hint = 0.0, c2_hint = 0.0, c3_hint = 0.0; // analytic candidates
    double rel_residual = 0.0;
    std::vector<double> lambda;
    std::vector<double> lhs; // h^{-1/2} (Q_{p_h}(lambda h^{-1/2}) - q_T)
    std::string message;
};

/// Least-squares fit of c1 tan(c2 lambda - c3) to the rescaled inner
/// trajectory on lambda in [lo_frac, hi_frac] * alpha. The candidate
/// constants derived from the quadratic normal form seed the fit and are
/// reported as hypotheses only.
tan_fit_report tan_profile_check(const landscape& land, double h,
                                 double lo_frac = 0.2, double hi_frac = 0.8,
                                 int n_points = 13);

} // namespace treeboot
