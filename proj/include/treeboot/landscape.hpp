#pragma once

#include <optional>

#include "treeboot/binom.hpp"
#include "treeboot/errors.hpp"

namespace treeboot {

/// Forward branching number b and occupation threshold theta. The tree
/// degree is b+1. The full critical structure exists for b > theta >= 2;
/// other combinations construct fine but are flagged degenerate.
struct model_params {
    int b;
    int theta;

    model_params(int b_, int theta_);

    bool degenerate() const { return !(b > theta && theta >= 2); }
};

/// Drift of the single-vertex density: W_p(q) = p + (1-p) Bin(b,q,theta) - q.
double w(const model_params& m, double p, double q);
double w_dq(const model_params& m, double p, double q);
double w_d2q(const model_params& m, double p, double q);

/// Inflection point (theta-1)/(b-1) of q -> W_p(q); independent of p.
double q_tilde(const model_params& m);

/// Spinodal density 1 - 1/a with a = Bin'(b, q_tilde, theta). Above it the
/// drift is decreasing throughout [0,1] and no interior minimum exists.
double p_tilde(const model_params& m);

/// Location of the interior local minimum of q -> W_p(q), in (0, q_tilde);
/// empty for p >= p_tilde.
std::optional<double> q_min(const model_params& m, double p);

/// Critical structure at the first-order transition.
struct landscape {
    model_params params;
    double q_tilde; // inflection of the drift
    double p_tilde; // spinodal density
    double p_T;     // density at which min W_p = 0
    double q_T;     // double root of W_{p_T}
    double alpha;   // cutoff scale: t(h) = alpha h^{-1/2} + O(1)
    double residual_w;  // |W_{p_T}(q_T)| at the computed pair
    double residual_wq; // |W'_{p_T}(q_T)|
    double tol;         // residual bound requested of the solver
};

/// Solves min_q W_p(q) = 0 for the critical pair (p_T, q_T) by bisection in
/// p (the map p -> W_p(q_min(p)) is increasing) and assembles the cutoff
/// constant alpha = pi / sqrt(W''_{p_T}(q_T)/2) * sqrt((1-p_T)/(1-q_T)).
landscape critical(const model_params& m, double tol = 1e-10);

/// Limiting density of Q_p(t): the smallest root of W_p above p when
/// p <= p_T, and 1 when p > p_T.
double terminal_density(const model_params& m, double p);

} // namespace treeboot
