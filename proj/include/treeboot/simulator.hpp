#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "treeboot/landscape.hpp"
#include "treeboot/tree.hpp"

namespace treeboot {

enum class sim_mode { discrete, continuous };

/// Continuous-time engines. All three realize the same law: a vacant vertex
/// with at least theta occupied neighbors becomes occupied at rate 1.
///   lazy_exponential     draws the Exp(1) activation delay when a vertex
///                        first becomes eligible (event-driven, default);
///   predrawn_exponential fixes one Exp(1) delay per vertex up front, which
///                        makes runs with shared seeds monotone-couplable
///                        across initial densities;
///   poisson_rings        realizes the explicit rings-of-clocks picture; a
///                        vertex is examined at each of its ring times.
enum class engine_kind { lazy_exponential, predrawn_exponential, poisson_rings };

inline constexpr std::uint64_t default_seed = 0x5EEDBA5Eu;

struct sim_config {
    tree_config tree;
    model_params params{3, 2};
    double p = 0.0;
    sim_mode mode = sim_mode::discrete;
    int n_steps = 0;     // discrete horizon
    double t_max = 0.0;  // continuous horizon
    std::int64_t replicas = 1;
    std::uint64_t seed = default_seed;
    engine_kind engine = engine_kind::lazy_exponential;
    // Distance from the boundary shell below which vertices are excluded
    // from density statistics; -1 selects the light-cone default
    // (n_steps or ceil(t_max), clamped to the depth).
    int interior_margin = -1;
    std::vector<double> sample_times; // continuous mode; empty: 11 even points
    bool collect_root_times = false;  // per-replica root occupation times
    bool record_times = false;        // per-replica, per-vertex times (small runs)
    std::uint64_t max_vertices = std::uint64_t(1) << 27;
    int workers = 0; // 0: TREEBOOT_WORKERS env var, else hardware concurrency
};

struct density_point {
    double t;
    double mean;
    double std_err;
};

struct sim_result {
    std::int64_t replicas = 0;
    std::int64_t n_vertices = 0;
    std::int64_t interior_count = 0;
    int interior_margin = 0;
    std::vector<density_point> interior_density;
    std::vector<density_point> root_occupancy;
    // occupation time of the root per replica (collect_root_times); absent
    // means not occupied within the horizon
    std::vector<std::optional<double>> root_times;
    // per replica, per vertex (record_times)
    std::vector<std::vector<std::optional<double>>> occupation_times;
};

/// Synchronous cellular-automaton dynamics, replicas bit-sliced 64 to a
/// word. Replica lanes are deterministic and independent of worker count;
/// lane block j draws from the stream seeded replica_seed(seed, j).
sim_result simulate_discrete(const sim_config& cfg);

/// Event-driven continuous-time dynamics; replica i draws from the stream
/// seeded replica_seed(seed, i).
sim_result simulate_continuous(const sim_config& cfg);

sim_result simulate(const sim_config& cfg);

/// Exact root marginal of the depth-d rooted tree under the synchronous
/// dynamics with frozen leaves: M(0,n) = M(k,0) = p and
/// M(k,n+1) = p + (1-p) Bin(b, M(k-1,n), theta). Requires theta >= 2, where
/// frozen leaves are exact. Equals the infinite-tree recursion for n <= d.
double root_marginal_exact_discrete(const model_params& m, double p, int depth,
                                    int step);

struct coupling_report {
    std::int64_t runs = 0;
    std::int64_t mismatched_runs = 0;
    std::int64_t region_size = 0;
    std::int64_t boundary_size = 0;
    bool identical = false;
};

/// Boundary decoupling check on the region A formed by the first
/// region_size vertices in BFS order. Runs the global dynamics and
/// the boundary-driven dynamics (detached subtrees first, then A against
/// their trajectories) on identical clock rings (continuous) or the shared
/// sweep schedule (discrete) and compares the trajectories on A exactly.
coupling_report coupling_check(const sim_config& cfg,
                               std::int64_t region_size);

struct window_stats_report {
    double h = 0.0;
    double q = 0.0;
    double t_probe = 0.0; // t_h(q)
    double t_pre = 0.0;
    double r_h = 0.0; // h^{-1/4}, the two-scale split (experimental choice)
    std::int64_t replicas = 0;
    std::int64_t interior_count = 0;
    density_point density{};   // single-site density at t_probe
    double cand_tail = 0.0;    // Bin(b+1, q, theta)
    double cand_composed = 0.0; // p + (1-p) Bin(b+1, q, theta)
    double z_tail = 0.0;
    double z_composed = 0.0;
    std::string closer;
    density_point pre_density{}; // density at the fixed pre-window time
    double analytic_pre = 0.0;   // P_p(t_pre)
    double z_pre = 0.0;
    density_point pair_both{};  // adjacent interior pairs both occupied
    double marginal_product = 0.0;
    density_point two_scale{};  // occupation time in the two-scale union
};

/// Configuration statistics in the cutoff window: empirical density at the
/// analytic time t_h(q) compared against both candidate limit densities,
/// plus nearest-neighbor pair statistics. p must exceed p_T.
window_stats_report window_statistics(const sim_config& cfg, double q);

/// Worker count: cfg.workers, else TREEBOOT_WORKERS, else hardware.
int effective_workers(const sim_config& cfg);

} // namespace treeboot
