#include "treeboot/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <mutex>
#include <thread>

#include "treeboot/dynamics.hpp"
#include "treeboot/rng.hpp"

namespace treeboot {

namespace {

constexpr double never = std::numeric_limits<double>::infinity();

using u128 = unsigned __int128;

enum : std::uint8_t { st_vacant = 0, st_pending = 1, st_occupied = 2 };

void validate(const sim_config& cfg) {
    if (!(cfg.p >= 0.0 && cfg.p <= 1.0))
        throw domain_error("simulate: p outside [0,1]");
    if (cfg.replicas < 1) throw domain_error("simulate: replicas must be >= 1");
    if (cfg.mode == sim_mode::discrete && cfg.n_steps < 0)
        throw domain_error("simulate: n_steps must be >= 0");
    if (cfg.mode == sim_mode::continuous && !(cfg.t_max >= 0.0))
        throw domain_error("simulate: t_max must be >= 0");
}

int resolve_margin(const sim_config& cfg) {
    int m = cfg.interior_margin;
    if (m < 0)
        m = cfg.mode == sim_mode::discrete
                ? cfg.n_steps
                : int(std::ceil(cfg.t_max));
    return std::clamp(m, 0, cfg.tree.levels);
}

std::vector<double> resolve_times(const sim_config& cfg) {
    if (cfg.mode == sim_mode::discrete) {
        std::vector<double> t(std::size_t(cfg.n_steps) + 1);
        for (int n = 0; n <= cfg.n_steps; ++n) t[std::size_t(n)] = double(n);
        return t;
    }
    std::vector<double> t(cfg.sample_times.begin(), cfg.sample_times.end());
    if (t.empty())
        for (int j = 0; j <= 10; ++j) t.push_back(cfg.t_max * j / 10.0);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    for (double v : t)
        if (!(v >= 0.0 && v <= cfg.t_max))
            throw domain_error("simulate: sample time outside [0, t_max]");
    return t;
}

// Time-bucketed pending-event queue. Event times only move forward, so one
// active bucket (kept as a min-heap with a (time, vertex) tie-break) plus
// plain vectors for future buckets give near-O(1) scheduling.
class event_calendar {
public:
    void reset(double t_max, std::size_t expected) {
        t_max_ = t_max;
        n_buckets_ = std::clamp<std::size_t>(expected / 8, 64, 1u << 22);
        width_ = t_max > 0 ? t_max / double(n_buckets_) : 1.0;
        if (buckets_.size() < n_buckets_) buckets_.resize(n_buckets_);
        for (auto& b : buckets_) b.clear();
        active_.clear();
        cur_ = -1;
    }

    void push(double t, std::uint32_t v) {
        auto idx = std::min<std::int64_t>(std::int64_t(n_buckets_) - 1,
                                          std::int64_t(t / width_));
        if (idx <= cur_) {
            active_.emplace_back(t, v);
            std::push_heap(active_.begin(), active_.end(), cmp);
        } else {
            buckets_[std::size_t(idx)].emplace_back(t, v);
        }
    }

    bool pop(double& t, std::uint32_t& v) {
        while (active_.empty()) {
            if (++cur_ >= std::int64_t(n_buckets_)) return false;
            active_.swap(buckets_[std::size_t(cur_)]);
            std::make_heap(active_.begin(), active_.end(), cmp);
        }
        std::pop_heap(active_.begin(), active_.end(), cmp);
        t = active_.back().first;
        v = active_.back().second;
        active_.pop_back();
        return true;
    }

private:
    static bool cmp(const std::pair<double, std::uint32_t>& a,
                    const std::pair<double, std::uint32_t>& b) {
        return a > b; // min-heap, deterministic (time, vertex) order
    }
    double t_max_ = 0, width_ = 1;
    std::size_t n_buckets_ = 0;
    std::int64_t cur_ = -1;
    std::vector<std::vector<std::pair<double, std::uint32_t>>> buckets_;
    std::vector<std::pair<double, std::uint32_t>> active_;
};

// One replica of the event-driven continuous dynamics; scratch buffers are
// reused across replicas within a worker.
class continuous_runner {
public:
    continuous_runner(const tree_topology& topo, const sim_config& cfg,
                      std::int64_t interior_end)
        : topo_(topo), cfg_(cfg), ie_(interior_end),
          n_(topo.vertex_count()), lb_(topo.leaf_begin()),
          frozen_(cfg.tree.boundary == boundary_mode::frozen) {
        state_.resize(std::size_t(n_));
        cnt_.resize(std::size_t(n_));
        t_int_.resize(std::size_t(ie_));
        if (cfg.engine == engine_kind::predrawn_exponential)
            delays_.resize(std::size_t(n_));
        if (cfg.record_times) t_all_.resize(std::size_t(n_));
    }

    void run(std::uint64_t seed) {
        splitmix64 rng(seed);
        const double p = cfg_.p;
        const int theta = cfg_.params.theta;
        std::fill(state_.begin(), state_.end(), st_vacant);
        std::fill(cnt_.begin(), cnt_.end(), std::uint8_t(0));
        std::fill(t_int_.begin(), t_int_.end(), never);
        if (cfg_.record_times) std::fill(t_all_.begin(), t_all_.end(), never);
        t_root_ = never;
        calendar_.reset(cfg_.t_max, std::size_t(n_));

        // initial configuration; one uniform per vertex keeps the stream
        // aligned across boundary modes
        for (std::int64_t v = 0; v < n_; ++v) {
            bool occ = rng.uniform01() < p;
            if (!frozen_ && topo_.is_leaf(v)) occ = true;
            if (occ) mark_occupied(v, 0.0);
        }
        if (cfg_.engine == engine_kind::predrawn_exponential)
            for (std::int64_t v = 0; v < n_; ++v)
                delays_[std::size_t(v)] = rng.exp1();

        // neighbor counts in one gather pass, then initial eligibility
        for (std::int64_t v = 0; v < n_; ++v) {
            int c = 0;
            const std::int64_t par = topo_.parent(v);
            if (par >= 0 && state_[std::size_t(par)] == st_occupied) ++c;
            const auto [cb, ce] = topo_.children(v);
            for (std::int64_t u = cb; u < ce; ++u)
                if (state_[std::size_t(u)] == st_occupied) ++c;
            cnt_[std::size_t(v)] = std::uint8_t(c);
        }

        if (cfg_.engine == engine_kind::poisson_rings) {
            for (std::int64_t v = 0; v < n_; ++v) {
                if (!updatable(v)) continue;
                for (double t = rng.exp1(); t <= cfg_.t_max; t += rng.exp1())
                    calendar_.push(t, std::uint32_t(v));
            }
            double t;
            std::uint32_t v;
            while (calendar_.pop(t, v))
                if (state_[v] == st_vacant && cnt_[v] >= theta) occupy(v, t, rng);
        } else {
            for (std::int64_t v = 0; v < n_; ++v)
                if (state_[std::size_t(v)] == st_vacant && updatable(v) &&
                    cnt_[std::size_t(v)] >= theta)
                    schedule(v, 0.0, rng);
            double t;
            std::uint32_t v;
            while (calendar_.pop(t, v)) occupy(v, t, rng);
        }
    }

    // occupation times of the interior prefix (infinity: not occupied)
    const std::vector<double>& interior_times() const { return t_int_; }
    const std::vector<double>& all_times() const { return t_all_; }
    double root_time() const { return t_root_; }
    std::int64_t interior_end() const { return ie_; }

private:
    bool updatable(std::int64_t v) const {
        return !(frozen_ && topo_.is_leaf(v));
    }

    void mark_occupied(std::int64_t v, double t) {
        state_[std::size_t(v)] = st_occupied;
        if (v < ie_) t_int_[std::size_t(v)] = t;
        if (v == 0) t_root_ = t;
        if (cfg_.record_times) t_all_[std::size_t(v)] = t;
    }

    void schedule(std::int64_t v, double now, splitmix64& rng) {
        state_[std::size_t(v)] = st_pending;
        const double d = cfg_.engine == engine_kind::predrawn_exponential
                             ? delays_[std::size_t(v)]
                             : rng.exp1();
        const double te = now + d;
        if (te <= cfg_.t_max) calendar_.push(te, std::uint32_t(v));
    }

    void occupy(std::int64_t v, double t, splitmix64& rng) {
        mark_occupied(v, t);
        const int theta = cfg_.params.theta;
        const bool rings = cfg_.engine == engine_kind::poisson_rings;
        auto bump = [&](std::int64_t u) {
            const auto cu = ++cnt_[std::size_t(u)];
            if (!rings && cu == theta && state_[std::size_t(u)] == st_vacant &&
                updatable(u))
                schedule(u, t, rng);
        };
        const std::int64_t par = topo_.parent(v);
        if (par >= 0) bump(par);
        const auto [cb, ce] = topo_.children(v);
        for (std::int64_t u = cb; u < ce; ++u) bump(u);
    }

    const tree_topology& topo_;
    const sim_config& cfg_;
    std::int64_t ie_, n_, lb_;
    bool frozen_;
    std::vector<std::uint8_t> state_, cnt_;
    std::vector<double> t_int_, t_all_, delays_;
    double t_root_ = never;
    event_calendar calendar_;
};

struct accum {
    std::vector<std::int64_t> sum_c;
    std::vector<u128> sum_c2;
    std::vector<std::int64_t> sum_root;

    explicit accum(std::size_t m) : sum_c(m), sum_c2(m), sum_root(m) {}

    void merge(const accum& o) {
        for (std::size_t j = 0; j < sum_c.size(); ++j) {
            sum_c[j] += o.sum_c[j];
            sum_c2[j] += o.sum_c2[j];
            sum_root[j] += o.sum_root[j];
        }
    }
};

density_point make_density(double t, std::int64_t n, double scale,
                           std::int64_t s1, u128 s2) {
    density_point d{t, 0.0, 0.0};
    if (n <= 0 || scale <= 0) return d;
    const double mean = double(s1) / (double(n) * scale);
    d.mean = mean;
    if (n > 1) {
        const double sx2 = double(s2) / (scale * scale);
        double var = (sx2 - double(n) * mean * mean) / double(n - 1);
        d.std_err = std::sqrt(std::fmax(var, 0.0) / double(n));
    }
    return d;
}

// Runs fn(worker_index) on ws threads, propagating the first exception.
template <class Fn>
void run_workers(int ws, Fn&& fn) {
    if (ws <= 1) {
        fn(0);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (int w = 0; w < ws; ++w)
        pool.emplace_back([&, w] {
            try {
                fn(w);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

} // namespace

int effective_workers(const sim_config& cfg) {
    if (cfg.workers > 0) return std::min(cfg.workers, 256);
    if (const char* env = std::getenv("TREEBOOT_WORKERS")) {
        const long k = std::strtol(env, nullptr, 10);
        if (k >= 1) return int(std::min<long>(k, 256));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return int(std::clamp(hw, 1u, 256u));
}

sim_result simulate_continuous(const sim_config& cfg) {
    validate(cfg);
    if (cfg.mode != sim_mode::continuous)
        throw domain_error("simulate_continuous: config mode mismatch");
    const tree_topology topo(cfg.tree, cfg.max_vertices);
    if (topo.vertex_count() > (std::int64_t(1) << 31))
        throw resource_error("simulate: vertex index range exceeded",
                             std::uint64_t(topo.vertex_count()));
    const int margin = resolve_margin(cfg);
    const std::int64_t ie = topo.interior_end(margin);
    const std::vector<double> times = resolve_times(cfg);
    const std::size_t m = times.size();
    const std::int64_t N = cfg.replicas;

    if (cfg.record_times &&
        topo.vertex_count() * N > (std::int64_t(1) << 26))
        throw resource_error("simulate: record_times too large for this run",
                             std::uint64_t(topo.vertex_count()) *
                                 std::uint64_t(N));

    sim_result res;
    res.replicas = N;
    res.n_vertices = topo.vertex_count();
    res.interior_count = ie;
    res.interior_margin = margin;
    if (cfg.collect_root_times) res.root_times.resize(std::size_t(N));
    if (cfg.record_times) res.occupation_times.resize(std::size_t(N));

    accum total(m);
    std::mutex merge_mu;
    std::atomic<std::int64_t> next{0};
    const int ws =
        int(std::min<std::int64_t>(effective_workers(cfg), N));

    run_workers(ws, [&](int) {
        continuous_runner runner(topo, cfg, ie);
        accum local(m);
        std::vector<std::int64_t> delta(m + 1);
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= N) break;
            runner.run(replica_seed(cfg.seed, std::uint64_t(i)));

            std::fill(delta.begin(), delta.end(), 0);
            for (std::int64_t v = 0; v < ie; ++v) {
                const double t = runner.interior_times()[std::size_t(v)];
                if (t == never) continue;
                const auto j = std::size_t(
                    std::lower_bound(times.begin(), times.end(), t) -
                    times.begin());
                ++delta[j];
            }
            std::int64_t running = 0;
            for (std::size_t j = 0; j < m; ++j) {
                running += delta[j];
                local.sum_c[j] += running;
                local.sum_c2[j] +=
                    u128(running) * u128(running);
                if (runner.root_time() <= times[j]) ++local.sum_root[j];
            }
            if (cfg.collect_root_times)
                res.root_times[std::size_t(i)] =
                    runner.root_time() == never
                        ? std::optional<double>{}
                        : std::optional<double>{runner.root_time()};
            if (cfg.record_times) {
                auto& slot = res.occupation_times[std::size_t(i)];
                slot.resize(std::size_t(topo.vertex_count()));
                for (std::int64_t v = 0; v < topo.vertex_count(); ++v) {
                    const double t = runner.all_times()[std::size_t(v)];
                    slot[std::size_t(v)] =
                        t == never ? std::optional<double>{}
                                   : std::optional<double>{t};
                }
            }
        }
        std::lock_guard<std::mutex> lk(merge_mu);
        total.merge(local);
    });

    res.interior_density.reserve(m);
    res.root_occupancy.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        res.interior_density.push_back(make_density(
            times[j], N, double(ie), total.sum_c[j], total.sum_c2[j]));
        res.root_occupancy.push_back(
            make_density(times[j], N, 1.0, total.sum_root[j],
                         u128(total.sum_root[j])));
    }
    return res;
}

// ---------------------------------------------------------------------------
// discrete engine: replicas are bit-sliced 64 to a machine word; neighbor
// counts per lane run through a carry-save adder and a bitwise comparator
// against theta.

namespace {

struct bit_sweep {
    int wbits;           // counter width, covers counts up to b+1
    std::uint64_t theta; // threshold; theta > b+1 handled by the caller

    // lanewise (count >= theta) for up to 7 counter words
    inline std::uint64_t ge_theta(const std::uint64_t* c) const {
        std::uint64_t ge = 0, eq = ~0ULL;
        for (int j = wbits - 1; j >= 0; --j) {
            const std::uint64_t cj = c[j];
            if ((theta >> j) & 1u) {
                eq &= cj;
            } else {
                ge |= eq & cj;
                eq &= ~cj;
            }
        }
        return ge | eq;
    }
};

} // namespace

sim_result simulate_discrete(const sim_config& cfg) {
    validate(cfg);
    if (cfg.mode != sim_mode::discrete)
        throw domain_error("simulate_discrete: config mode mismatch");
    const tree_topology topo(cfg.tree, cfg.max_vertices);
    const int margin = resolve_margin(cfg);
    const std::int64_t ie = topo.interior_end(margin);
    const std::vector<double> times = resolve_times(cfg);
    const std::size_t m = times.size();
    const std::int64_t N = cfg.replicas;
    const std::int64_t n = topo.vertex_count();
    const std::int64_t lb = topo.leaf_begin();
    const int b = cfg.tree.branching;
    const bool frozen = cfg.tree.boundary == boundary_mode::frozen;
    const bool no_updates = cfg.params.theta > b + 1;

    if (cfg.record_times && n * N > (std::int64_t(1) << 26))
        throw resource_error("simulate: record_times too large for this run",
                             std::uint64_t(n) * std::uint64_t(N));

    sim_result res;
    res.replicas = N;
    res.n_vertices = n;
    res.interior_count = ie;
    res.interior_margin = margin;
    if (cfg.collect_root_times) res.root_times.resize(std::size_t(N));
    if (cfg.record_times) {
        res.occupation_times.resize(std::size_t(N));
        for (auto& slot : res.occupation_times)
            slot.resize(std::size_t(n));
    }

    const std::int64_t batches = (N + 63) / 64;
    accum total(m);
    std::mutex merge_mu;
    std::atomic<std::int64_t> next{0};
    const int ws =
        int(std::min<std::int64_t>(effective_workers(cfg), batches));

    bit_sweep sweep{std::max(1, int(std::bit_width(unsigned(b + 1)))),
                    std::uint64_t(std::max(cfg.params.theta, 0))};

    run_workers(ws, [&](int) {
        std::vector<std::uint64_t> cur(static_cast<std::size_t>(lb));
        std::vector<std::uint64_t> nxt(static_cast<std::size_t>(lb));
        std::vector<std::uint64_t> leafw(static_cast<std::size_t>(n - lb));
        std::vector<std::uint64_t> prev_interior; // record_times scratch
        accum local(m);
        int lane_counts[64];

        auto word_at = [&](std::int64_t u) -> std::uint64_t {
            return u < lb ? cur[std::size_t(u)] : leafw[std::size_t(u - lb)];
        };

        auto tally = [&](int lanes, std::size_t j) {
            std::memset(lane_counts, 0, sizeof lane_counts);
            for (std::int64_t v = 0; v < ie; ++v) {
                std::uint64_t w = word_at(v);
                while (w) {
                    ++lane_counts[std::countr_zero(w)];
                    w &= w - 1;
                }
            }
            const std::uint64_t rootw = lb > 0 ? cur[0] : leafw[0];
            for (int l = 0; l < lanes; ++l) {
                const std::int64_t c = lane_counts[l];
                local.sum_c[j] += c;
                local.sum_c2[j] +=
                    u128(c) * u128(c);
                local.sum_root[j] += (rootw >> l) & 1u;
            }
        };

        for (;;) {
            const std::int64_t batch = next.fetch_add(1);
            if (batch >= batches) break;
            const int lanes = int(std::min<std::int64_t>(64, N - batch * 64));
            splitmix64 rng(replica_seed(cfg.seed, std::uint64_t(batch)));

            for (std::int64_t v = 0; v < n; ++v) {
                std::uint64_t w = bernoulli_word(rng, cfg.p);
                if (!frozen && topo.is_leaf(v)) w = ~0ULL;
                if (v < lb)
                    cur[std::size_t(v)] = w;
                else
                    leafw[std::size_t(v - lb)] = w;
            }

            std::vector<std::uint64_t> root_prev(1, lb > 0 ? cur[0]
                                                           : leafw[0]);
            auto record_snapshot = [&](int step) {
                if (!cfg.record_times && !cfg.collect_root_times) return;
                const std::uint64_t rootw = lb > 0 ? cur[0] : leafw[0];
                if (cfg.collect_root_times) {
                    std::uint64_t fresh =
                        step == 0 ? rootw : (rootw & ~root_prev[0]);
                    while (fresh) {
                        const int l = std::countr_zero(fresh);
                        fresh &= fresh - 1;
                        const std::int64_t rep = batch * 64 + l;
                        if (rep < N)
                            res.root_times[std::size_t(rep)] = double(step);
                    }
                    root_prev[0] = rootw;
                }
                if (cfg.record_times) {
                    if (step == 0)
                        prev_interior.assign(std::size_t(n), 0);
                    for (std::int64_t v = 0; v < n; ++v) {
                        std::uint64_t fresh =
                            word_at(v) & ~prev_interior[std::size_t(v)];
                        prev_interior[std::size_t(v)] = word_at(v);
                        while (fresh) {
                            const int l = std::countr_zero(fresh);
                            fresh &= fresh - 1;
                            const std::int64_t rep = batch * 64 + l;
                            if (rep >= N) continue;
                            res.occupation_times[std::size_t(rep)]
                                [std::size_t(v)] = double(step);
                        }
                    }
                }
            };

            tally(lanes, 0);
            record_snapshot(0);

            for (int step = 1; step <= cfg.n_steps; ++step) {
                if (no_updates) {
                    tally(lanes, std::size_t(step));
                    record_snapshot(step);
                    continue;
                }
                for (std::int64_t v = 0; v < lb; ++v) {
                    std::uint64_t c[7] = {0, 0, 0, 0, 0, 0, 0};
                    auto add1 = [&](std::uint64_t x) {
                        for (int j = 0; j < sweep.wbits && x; ++j) {
                            const std::uint64_t carry = c[j] & x;
                            c[j] ^= x;
                            x = carry;
                        }
                    };
                    const std::int64_t par = topo.parent(v);
                    if (par >= 0) add1(cur[std::size_t(par)]);
                    const auto [cb, ce] = topo.children(v);
                    for (std::int64_t u = cb; u < ce; ++u) add1(word_at(u));
                    nxt[std::size_t(v)] =
                        cur[std::size_t(v)] | sweep.ge_theta(c);
                }
                cur.swap(nxt);
                tally(lanes, std::size_t(step));
                record_snapshot(step);
            }
        }
        std::lock_guard<std::mutex> lk(merge_mu);
        total.merge(local);
    });

    res.interior_density.reserve(m);
    res.root_occupancy.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        res.interior_density.push_back(make_density(
            times[j], N, double(ie), total.sum_c[j], total.sum_c2[j]));
        res.root_occupancy.push_back(
            make_density(times[j], N, 1.0, total.sum_root[j],
                         u128(total.sum_root[j])));
    }
    return res;
}

sim_result simulate(const sim_config& cfg) {
    return cfg.mode == sim_mode::discrete ? simulate_discrete(cfg)
                                          : simulate_continuous(cfg);
}

double root_marginal_exact_discrete(const model_params& m, double p, int depth,
                                    int step) {
    if (m.theta < 2)
        throw domain_error(
            "root_marginal_exact_discrete: theta < 2 unsupported (frozen "
            "leaves are not exact)");
    if (!(p >= 0.0 && p <= 1.0))
        throw domain_error("root_marginal_exact_discrete: p outside [0,1]");
    if (depth < 0 || step < 0)
        throw domain_error("root_marginal_exact_discrete: negative argument");
    std::vector<double> prev(static_cast<std::size_t>(depth) + 1, p);
    std::vector<double> curm(static_cast<std::size_t>(depth) + 1, p);
    for (int nstep = 1; nstep <= step; ++nstep) {
        curm[0] = p;
        for (int k = 1; k <= depth; ++k)
            curm[std::size_t(k)] =
                discrete_step(m, p, prev[std::size_t(k - 1)]);
        prev.swap(curm);
    }
    return prev[std::size_t(depth)];
}

// ---------------------------------------------------------------------------
// boundary-driven coupling check (shared clock rings / shared sweep schedule)

namespace {

struct rings_run {
    // occupation times for every vertex; `inert` vertices never update and
    // never count as occupied (used to detach the region from its subtrees)
    static void run(const tree_topology& topo, const sim_config& cfg,
                    const std::vector<std::uint8_t>& init,
                    const std::vector<std::pair<double, std::uint32_t>>& rings,
                    const std::vector<std::uint8_t>& inert,
                    std::vector<double>& T) {
        const std::int64_t n = topo.vertex_count();
        const int theta = cfg.params.theta;
        const bool frozen = cfg.tree.boundary == boundary_mode::frozen;
        T.assign(static_cast<std::size_t>(n), never);
        std::vector<std::uint8_t> occ(static_cast<std::size_t>(n), 0);
        std::vector<std::uint8_t> cnt(static_cast<std::size_t>(n), 0);
        auto occupy = [&](std::int64_t v, double t) {
            occ[std::size_t(v)] = 1;
            T[std::size_t(v)] = t;
            const std::int64_t par = topo.parent(v);
            if (par >= 0) ++cnt[std::size_t(par)];
            const auto [cb, ce] = topo.children(v);
            for (std::int64_t u = cb; u < ce; ++u) ++cnt[std::size_t(u)];
        };
        for (std::int64_t v = 0; v < n; ++v)
            if (init[std::size_t(v)] && !inert[std::size_t(v)]) occupy(v, 0.0);
        for (const auto& [t, v] : rings) {
            if (occ[v] || inert[v]) continue;
            if (frozen && topo.is_leaf(v)) continue;
            if (cnt[v] >= theta) occupy(v, t);
        }
    }
};

} // namespace

coupling_report coupling_check(const sim_config& cfg,
                               std::int64_t region_size) {
    validate(cfg);
    const tree_topology topo(cfg.tree, cfg.max_vertices);
    const std::int64_t n = topo.vertex_count();
    if (region_size < 1 || region_size > n)
        throw domain_error("coupling_check: bad region size");
    if (topo.level_of(region_size - 1) >= cfg.tree.levels)
        throw domain_error("coupling_check: region touches the boundary");

    // boundary of the BFS-prefix region: children of A outside A
    std::vector<std::int64_t> boundary;
    for (std::int64_t v = 0; v < region_size; ++v) {
        const auto [cb, ce] = topo.children(v);
        for (std::int64_t u = cb; u < ce; ++u)
            if (u >= region_size) boundary.push_back(u);
    }

    coupling_report rep;
    rep.runs = cfg.replicas;
    rep.region_size = region_size;
    rep.boundary_size = std::int64_t(boundary.size());

    std::vector<std::uint8_t> init(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> inert_none(static_cast<std::size_t>(n), 0);
    std::vector<std::uint8_t> inert_region(static_cast<std::size_t>(n), 0);
    for (std::int64_t v = 0; v < region_size; ++v)
        inert_region[std::size_t(v)] = 1;

    const bool frozen = cfg.tree.boundary == boundary_mode::frozen;
    const int theta = cfg.params.theta;

    for (std::int64_t run = 0; run < cfg.replicas; ++run) {
        splitmix64 rng(replica_seed(cfg.seed, std::uint64_t(run)));
        for (std::int64_t v = 0; v < n; ++v) {
            bool occ = rng.uniform01() < cfg.p;
            if (!frozen && topo.is_leaf(v)) occ = true;
            init[std::size_t(v)] = occ ? 1 : 0;
        }

        bool equal = true;
        if (cfg.mode == sim_mode::continuous) {
            // shared rings for every updatable vertex
            std::vector<std::pair<double, std::uint32_t>> rings;
            for (std::int64_t v = 0; v < n; ++v) {
                if (frozen && topo.is_leaf(v)) continue;
                for (double t = rng.exp1(); t <= cfg.t_max; t += rng.exp1())
                    rings.emplace_back(t, std::uint32_t(v));
            }
            std::sort(rings.begin(), rings.end());

            std::vector<double> T_global, T_sub;
            rings_run::run(topo, cfg, init, rings, inert_none, T_global);
            rings_run::run(topo, cfg, init, rings, inert_region, T_sub);

            // region dynamics against the detached boundary trajectories
            std::vector<std::pair<double, std::int64_t>> events;
            for (std::int64_t x : boundary)
                if (T_sub[std::size_t(x)] < never)
                    events.emplace_back(T_sub[std::size_t(x)], -x - 1);
            for (const auto& [t, v] : rings)
                if (v < region_size) events.emplace_back(t, std::int64_t(v));
            std::stable_sort(events.begin(), events.end(),
                             [](const auto& a, const auto& b) {
                                 return a.first < b.first;
                             });

            std::vector<double> T_A(static_cast<std::size_t>(n), never);
            std::vector<std::uint8_t> occ(static_cast<std::size_t>(region_size), 0);
            std::vector<std::uint8_t> cnt(static_cast<std::size_t>(region_size), 0);
            auto occupy_a = [&](std::int64_t v, double t) {
                occ[std::size_t(v)] = 1;
                T_A[std::size_t(v)] = t;
                const std::int64_t par = topo.parent(v);
                if (par >= 0 && par < region_size) ++cnt[std::size_t(par)];
                const auto [cb, ce] = topo.children(v);
                for (std::int64_t u = cb; u < ce && u < region_size; ++u)
                    ++cnt[std::size_t(u)];
            };
            for (std::int64_t v = 0; v < region_size; ++v)
                if (init[std::size_t(v)]) occupy_a(v, 0.0);
            for (const auto& [t, code] : events) {
                if (code < 0) {
                    const std::int64_t x = -code - 1; // boundary arrival
                    const std::int64_t nx = topo.parent(x);
                    if (nx >= 0 && nx < region_size) ++cnt[std::size_t(nx)];
                } else if (!occ[std::size_t(code)] &&
                           cnt[std::size_t(code)] >= theta) {
                    occupy_a(code, t);
                }
            }
            for (std::int64_t v = 0; v < region_size && equal; ++v)
                equal = T_global[std::size_t(v)] == T_A[std::size_t(v)];
        } else {
            // synchronous sweeps with the shared schedule
            auto sweep_T = [&](const std::vector<std::uint8_t>& inert,
                               std::vector<std::int64_t>& T) {
                T.assign(static_cast<std::size_t>(n), -1);
                std::vector<std::uint8_t> occ(static_cast<std::size_t>(n), 0);
                std::vector<std::uint8_t> nxt(static_cast<std::size_t>(n));
                for (std::int64_t v = 0; v < n; ++v)
                    if (init[std::size_t(v)] && !inert[std::size_t(v)]) {
                        occ[std::size_t(v)] = 1;
                        T[std::size_t(v)] = 0;
                    }
                for (int s = 1; s <= cfg.n_steps; ++s) {
                    nxt = occ;
                    for (std::int64_t v = 0; v < n; ++v) {
                        if (occ[std::size_t(v)] || inert[std::size_t(v)])
                            continue;
                        if (frozen && topo.is_leaf(v)) continue;
                        int c = 0;
                        const std::int64_t par = topo.parent(v);
                        if (par >= 0 && occ[std::size_t(par)]) ++c;
                        const auto [cb, ce] = topo.children(v);
                        for (std::int64_t u = cb; u < ce; ++u)
                            if (occ[std::size_t(u)]) ++c;
                        if (c >= theta) {
                            nxt[std::size_t(v)] = 1;
                            T[std::size_t(v)] = s;
                        }
                    }
                    occ.swap(nxt);
                }
            };
            std::vector<std::int64_t> T_global, T_sub;
            sweep_T(inert_none, T_global);
            sweep_T(inert_region, T_sub);

            std::vector<std::int64_t> T_A(static_cast<std::size_t>(n), -1);
            std::vector<std::uint8_t> occ(static_cast<std::size_t>(region_size), 0);
            std::vector<std::uint8_t> nxt(static_cast<std::size_t>(region_size));
            for (std::int64_t v = 0; v < region_size; ++v)
                if (init[std::size_t(v)]) {
                    occ[std::size_t(v)] = 1;
                    T_A[std::size_t(v)] = 0;
                }
            for (int s = 1; s <= cfg.n_steps; ++s) {
                nxt = occ;
                for (std::int64_t v = 0; v < region_size; ++v) {
                    if (occ[std::size_t(v)]) continue;
                    int c = 0;
                    const std::int64_t par = topo.parent(v);
                    if (par >= 0 && occ[std::size_t(par)]) ++c;
                    const auto [cb, ce] = topo.children(v);
                    for (std::int64_t u = cb; u < ce; ++u) {
                        if (u < region_size) {
                            if (occ[std::size_t(u)]) ++c;
                        } else {
                            const std::int64_t tx = T_sub[std::size_t(u)];
                            if (tx >= 0 && tx < s) ++c;
                        }
                    }
                    if (c >= theta) {
                        nxt[std::size_t(v)] = 1;
                        T_A[std::size_t(v)] = s;
                    }
                }
                occ.swap(nxt);
            }
            for (std::int64_t v = 0; v < region_size && equal; ++v)
                equal = T_global[std::size_t(v)] == T_A[std::size_t(v)];
        }
        if (!equal) ++rep.mismatched_runs;
    }
    rep.identical = rep.mismatched_runs == 0;
    return rep;
}

window_stats_report window_statistics(const sim_config& cfg, double q) {
    validate(cfg);
    if (cfg.mode != sim_mode::continuous)
        throw domain_error("window_statistics: continuous mode required");
    const landscape land = critical(cfg.params);
    const double h = cfg.p - land.p_T;
    if (!(h > 0.0))
        throw domain_error("window_statistics: p must exceed p_T");
    if (!(q > land.q_T && q < 1.0))
        throw domain_error("window_statistics: q outside (q_T, 1)");

    window_stats_report rep;
    rep.h = h;
    rep.q = q;
    rep.t_probe = hitting_time(cfg.params, cfg.p, q);
    if (rep.t_probe > cfg.t_max)
        throw domain_error("window_statistics: t_h(q) beyond the horizon");
    rep.t_pre = std::min(2.0, 0.25 * rep.t_probe);
    rep.r_h = std::pow(h, -0.25);
    rep.replicas = cfg.replicas;

    const tree_topology topo(cfg.tree, cfg.max_vertices);
    const int margin = resolve_margin(cfg);
    const std::int64_t ie = topo.interior_end(margin);
    if (ie < 2)
        throw domain_error("window_statistics: interior set too small");
    rep.interior_count = ie;

    const std::int64_t N = cfg.replicas;
    const double t_lo = land.alpha / std::sqrt(h) - rep.r_h;
    const double t_hi = land.alpha / std::sqrt(h) + rep.r_h;

    // per-replica integer counts; exact deterministic aggregation
    std::int64_t s_occ = 0, s_pre = 0, s_pair = 0, s_two = 0;
    u128 s2_occ = 0, s2_pre = 0, s2_pair = 0, s2_two = 0;
    std::mutex merge_mu;
    std::atomic<std::int64_t> next{0};
    const int ws = int(std::min<std::int64_t>(effective_workers(cfg), N));

    run_workers(ws, [&](int) {
        continuous_runner runner(topo, cfg, ie);
        std::int64_t l_occ = 0, l_pre = 0, l_pair = 0, l_two = 0;
        u128 l2_occ = 0, l2_pre = 0, l2_pair = 0, l2_two = 0;
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= N) break;
            runner.run(replica_seed(cfg.seed, std::uint64_t(i)));
            const auto& T = runner.interior_times();
            std::int64_t c_occ = 0, c_pre = 0, c_pair = 0, c_two = 0;
            for (std::int64_t v = 0; v < ie; ++v) {
                const double t = T[std::size_t(v)];
                const bool occ = t <= rep.t_probe;
                if (occ) ++c_occ;
                if (t <= rep.t_pre) ++c_pre;
                if (t <= rep.r_h || (t >= t_lo && t <= t_hi)) ++c_two;
                if (v >= 1 && occ &&
                    T[std::size_t(topo.parent(v))] <= rep.t_probe)
                    ++c_pair;
            }
            l_occ += c_occ;
            l2_occ += u128(c_occ) * u128(c_occ);
            l_pre += c_pre;
            l2_pre += u128(c_pre) * u128(c_pre);
            l_pair += c_pair;
            l2_pair += u128(c_pair) * u128(c_pair);
            l_two += c_two;
            l2_two += u128(c_two) * u128(c_two);
        }
        std::lock_guard<std::mutex> lk(merge_mu);
        s_occ += l_occ;
        s2_occ += l2_occ;
        s_pre += l_pre;
        s2_pre += l2_pre;
        s_pair += l_pair;
        s2_pair += l2_pair;
        s_two += l_two;
        s2_two += l2_two;
    });

    rep.density = make_density(rep.t_probe, N, double(ie), s_occ, s2_occ);
    rep.pre_density = make_density(rep.t_pre, N, double(ie), s_pre, s2_pre);
    rep.pair_both =
        make_density(rep.t_probe, N, double(ie - 1), s_pair, s2_pair);
    rep.two_scale = make_density(rep.t_probe, N, double(ie), s_two, s2_two);

    rep.cand_tail = bin_tail(cfg.params.b + 1, q, cfg.params.theta);
    rep.cand_composed = cfg.p + (1.0 - cfg.p) * rep.cand_tail;
    const double se = std::fmax(rep.density.std_err, 1e-300);
    rep.z_tail = (rep.density.mean - rep.cand_tail) / se;
    rep.z_composed = (rep.density.mean - rep.cand_composed) / se;
    rep.closer = std::fabs(rep.z_tail) <= std::fabs(rep.z_composed)
                     ? "tail"
                     : "composed";
    rep.marginal_product = rep.density.mean * rep.density.mean;

    const trajectory pre =
        ode_trace(cfg.params, cfg.p, rep.t_pre, 1e-10, {});
    rep.analytic_pre = pre.samples.back().P;
    rep.z_pre = (rep.pre_density.mean - rep.analytic_pre) /
                std::fmax(rep.pre_density.std_err, 1e-300);
    return rep;
}

} // namespace treeboot
