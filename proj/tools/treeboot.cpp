#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "treeboot/dynamics.hpp"
#include "treeboot/io.hpp"
#include "treeboot/landscape.hpp"
#include "treeboot/metastability.hpp"
#include "treeboot/simulator.hpp"
#include "treeboot/version.hpp"

using nlohmann::json;
using namespace treeboot;

namespace {

enum exit_code {
    exit_ok = 0,
    exit_io = 1,
    exit_usage = 2,
    exit_domain = 3,
    exit_resource = 4,
    exit_numerics = 5
};

std::string fmt(double v) { return format_number(v); }

run_manifest make_manifest(const std::string& command,
                           std::map<std::string, std::string> params) {
    run_manifest mf;
    mf.command = command;
    mf.parameters = std::move(params);
    mf.version = version_string;
    return mf;
}

void emit(const std::string& path, const std::string& payload,
          run_manifest mf) {
    write_artifact(path, payload, std::move(mf));
    std::printf("wrote %s (checksum %s)\n", path.c_str(),
                fnv1a_hex(payload).c_str());
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        out.push_back(std::stod(csv.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

struct sim_flags {
    std::string geometry = "rooted";
    std::string boundary = "frozen";
    std::string engine = "lazy";
    std::string mode = "discrete";
    int levels = 8;
    int b = 3;
    int theta = 2;
    double p = 0.1;
    int steps = 10;
    double t_max = 5.0;
    std::int64_t replicas = 1000;
    std::uint64_t seed = default_seed;
    int margin = -1;
    std::string samples; // comma list of times (continuous)
    std::uint64_t max_vertices = std::uint64_t(1) << 27;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--geometry", geometry, "rooted|ball")
            ->check(CLI::IsMember({"rooted", "ball"}));
        cmd->add_option("--levels", levels, "depth (rooted) or radius (ball)");
        cmd->add_option("--b", b, "forward branching number");
        cmd->add_option("--theta", theta, "occupation threshold");
        cmd->add_option("--p", p, "initial density");
        cmd->add_option("--boundary", boundary, "frozen|occupied")
            ->check(CLI::IsMember({"frozen", "occupied"}));
        cmd->add_option("--mode", mode, "discrete|continuous")
            ->check(CLI::IsMember({"discrete", "continuous"}));
        cmd->add_option("--steps", steps, "discrete horizon");
        cmd->add_option("--t-max", t_max, "continuous horizon");
        cmd->add_option("--replicas", replicas, "number of replicas");
        cmd->add_option("--seed", seed, "base seed (fixed default)");
        cmd->add_option("--engine", engine, "lazy|predrawn|rings")
            ->check(CLI::IsMember({"lazy", "predrawn", "rings"}));
        cmd->add_option("--interior-margin", margin,
                        "boundary distance cut for density statistics");
        cmd->add_option("--samples", samples,
                        "comma-separated sample times (continuous)");
        cmd->add_option("--max-vertices", max_vertices,
                        "resource bound on the tree size");
    }

    sim_config to_config() const {
        sim_config cfg;
        cfg.tree.geometry = geometry == "ball" ? tree_geometry::ball
                                               : tree_geometry::rooted;
        cfg.tree.levels = levels;
        cfg.tree.branching = b;
        cfg.tree.boundary = boundary == "occupied" ? boundary_mode::occupied
                                                   : boundary_mode::frozen;
        cfg.params = model_params(b, theta);
        cfg.p = p;
        cfg.mode = mode == "continuous" ? sim_mode::continuous
                                        : sim_mode::discrete;
        cfg.n_steps = steps;
        cfg.t_max = t_max;
        cfg.replicas = replicas;
        cfg.seed = seed;
        cfg.engine = engine == "rings" ? engine_kind::poisson_rings
                     : engine == "predrawn"
                         ? engine_kind::predrawn_exponential
                         : engine_kind::lazy_exponential;
        cfg.interior_margin = margin;
        if (!samples.empty()) cfg.sample_times = parse_list(samples);
        cfg.max_vertices = max_vertices;
        return cfg;
    }

    std::map<std::string, std::string> to_params() const {
        return {{"geometry", geometry},
                {"levels", std::to_string(levels)},
                {"b", std::to_string(b)},
                {"theta", std::to_string(theta)},
                {"p", fmt(p)},
                {"boundary", boundary},
                {"mode", mode},
                {"steps", std::to_string(steps)},
                {"t_max", fmt(t_max)},
                {"replicas", std::to_string(replicas)},
                {"seed", std::to_string(seed)},
                {"engine", engine},
                {"interior_margin", std::to_string(margin)},
                {"samples", samples},
                {"max_vertices", std::to_string(max_vertices)}};
    }
};

json sim_result_json(const sim_flags& fl, const sim_result& r) {
    json j;
    j["command"] = "simulate";
    j["b"] = fl.b;
    j["theta"] = fl.theta;
    j["p"] = fmt(fl.p);
    j["mode"] = fl.mode;
    j["geometry"] = fl.geometry;
    j["boundary"] = fl.boundary;
    j["engine"] = fl.engine;
    j["levels"] = fl.levels;
    j["n_steps"] = fl.steps;
    j["t_max"] = fmt(fl.t_max);
    j["replicas"] = r.replicas;
    j["seed"] = std::to_string(fl.seed);
    j["n_vertices"] = r.n_vertices;
    j["interior_count"] = r.interior_count;
    j["interior_margin"] = r.interior_margin;
    json samples = json::array();
    for (std::size_t i = 0; i < r.interior_density.size(); ++i) {
        json s;
        s["t"] = fmt(r.interior_density[i].t);
        s["interior_mean"] = fmt(r.interior_density[i].mean);
        s["interior_se"] = fmt(r.interior_density[i].std_err);
        s["root_mean"] = fmt(r.root_occupancy[i].mean);
        s["root_se"] = fmt(r.root_occupancy[i].std_err);
        samples.push_back(s);
    }
    j["samples"] = samples;
    return j;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bootstrap percolation on regular trees: critical structure, "
                 "metastable cutoff asymptotics and exact simulation"};
    app.set_config("--config", "", "flat key-value config file; command-line "
                                   "flags take precedence");
    app.require_subcommand(1);

    std::string out_path, format = "json";

    // ---- critical ----------------------------------------------------
    auto* c_crit = app.add_subcommand("critical",
                                      "critical pair (p_T, q_T) and alpha");
    int cb = 3, ctheta = 2;
    double ctol = 1e-10;
    c_crit->add_option("--b", cb)->required();
    c_crit->add_option("--theta", ctheta)->required();
    c_crit->add_option("--tol", ctol);
    c_crit->add_option("--out", out_path);
    c_crit->add_option("--format", format)
        ->check(CLI::IsMember({"csv", "json"}));

    // ---- trace -------------------------------------------------------
    auto* c_trace = app.add_subcommand("trace", "(t, Q, P) series");
    int tb = 3, ttheta = 2, tsteps = 50;
    double tp = 0.3, tmax = 10.0, ttol = 1e-10;
    std::string tmode = "continuous", tsamples;
    c_trace->add_option("--b", tb)->required();
    c_trace->add_option("--theta", ttheta)->required();
    c_trace->add_option("--p", tp)->required();
    c_trace->add_option("--mode", tmode)
        ->check(CLI::IsMember({"discrete", "continuous"}));
    c_trace->add_option("--steps", tsteps);
    c_trace->add_option("--t-max", tmax);
    c_trace->add_option("--tol", ttol);
    c_trace->add_option("--samples", tsamples, "extra sample times");
    c_trace->add_option("--out", out_path);
    c_trace->add_option("--format", format)
        ->check(CLI::IsMember({"csv", "json"}));

    // ---- profile -----------------------------------------------------
    auto* c_prof = app.add_subcommand("profile", "cutoff profile phi(r)");
    int pb = 3, ptheta = 2;
    double pr_min = -30.0, pr_max = 20.0, pstep = 0.1, pphi0 = -1.0;
    c_prof->add_option("--b", pb)->required();
    c_prof->add_option("--theta", ptheta)->required();
    c_prof->add_option("--r-min", pr_min);
    c_prof->add_option("--r-max", pr_max);
    c_prof->add_option("--step", pstep);
    c_prof->add_option("--phi0", pphi0, "normalization phi(0)");
    c_prof->add_option("--out", out_path);
    c_prof->add_option("--format", format)
        ->check(CLI::IsMember({"csv", "json"}));

    // ---- window ------------------------------------------------------
    auto* c_win = app.add_subcommand(
        "window", "cutoff window offsets t_h(q) - alpha h^{-1/2}");
    int wb = 3, wtheta = 2;
    double wq = -1.0;
    std::string wh_list = "1e-2,1e-3,1e-4,1e-5,1e-6";
    c_win->add_option("--b", wb)->required();
    c_win->add_option("--theta", wtheta)->required();
    c_win->add_option("--q", wq, "probe level; default (q_T+1)/2");
    c_win->add_option("--h-list", wh_list, "comma-separated h values");
    c_win->add_option("--out", out_path);
    c_win->add_option("--format", format)
        ->check(CLI::IsMember({"csv", "json"}));

    // ---- bottleneck ----------------------------------------------------
    auto* c_bot = app.add_subcommand(
        "bottleneck", "compensated singular integral across the double root");
    int bb = 3, btheta = 2;
    double bdelta = 0.05;
    std::string btheta_list = "";
    bool bselftest = false;
    c_bot->add_option("--b", bb)->required();
    c_bot->add_option("--theta", btheta)->required();
    c_bot->add_option("--delta", bdelta);
    c_bot->add_option("--theta-list", btheta_list,
                      "comma-separated regularization values; default 4^-j, "
                      "j=4..12");
    c_bot->add_flag("--quadratic-self-test", bselftest,
                    "also report the exactly solvable w(x)=x^2 case");
    c_bot->add_option("--out", out_path);
    c_bot->add_option("--format", format)
        ->check(CLI::IsMember({"csv", "json"}));

    // ---- simulate ------------------------------------------------------
    auto* c_sim = app.add_subcommand("simulate", "stochastic tree dynamics");
    sim_flags sfl;
    sfl.add_to(c_sim);
    c_sim->add_option("--out", out_path);
    c_sim->add_option("--format", format)
        ->check(CLI::IsMember({"csv", "json"}));

    // ---- compare -------------------------------------------------------
    auto* c_cmp = app.add_subcommand(
        "compare", "z-scores of a simulate artifact against the analytic law");
    std::string cmp_sim;
    c_cmp->add_option("--sim", cmp_sim, "simulate JSON artifact")->required();
    c_cmp->add_option("--out", out_path);

    // ---- window-stats ----------------------------------------------------
    auto* c_ws = app.add_subcommand(
        "window-stats", "configuration statistics at the window time t_h(q)");
    sim_flags wsfl;
    wsfl.mode = "continuous";
    wsfl.add_to(c_ws);
    double ws_q = 0.6;
    c_ws->add_option("--q", ws_q, "window density level")->required();
    c_ws->add_option("--out", out_path);

    // ---- coupling --------------------------------------------------------
    auto* c_cpl = app.add_subcommand(
        "coupling", "boundary-driven vs global trajectory identity");
    sim_flags cfl;
    cfl.replicas = 100;
    cfl.add_to(c_cpl);
    std::int64_t cpl_region = 20;
    c_cpl->add_option("--region", cpl_region, "region size (BFS prefix)");
    c_cpl->add_option("--out", out_path);

    // ---- tanfit ----------------------------------------------------------
    auto* c_tan = app.add_subcommand(
        "tanfit", "tan fit of the rescaled inner trajectory");
    int fb = 3, ftheta = 2, fpoints = 13;
    double fh = 1e-6, flo = 0.2, fhi = 0.8;
    c_tan->add_option("--b", fb)->required();
    c_tan->add_option("--theta", ftheta)->required();
    c_tan->add_option("--h-value", fh, "window parameter h");
    c_tan->add_option("--lo-frac", flo);
    c_tan->add_option("--hi-frac", fhi);
    c_tan->add_option("--points", fpoints);
    c_tan->add_option("--out", out_path);

    // ---- hit -------------------------------------------------------------
    auto* c_hit = app.add_subcommand("hit", "hitting time of a density level");
    int hb = 3, htheta = 2;
    double hp = 0.3, hq = 0.9;
    c_hit->add_option("--b", hb)->required();
    c_hit->add_option("--theta", htheta)->required();
    c_hit->add_option("--p", hp)->required();
    c_hit->add_option("--q-target", hq)->required();
    c_hit->add_option("--out", out_path);

    // ---- rootmarg ----------------------------------------------------------
    auto* c_rm = app.add_subcommand(
        "rootmarg", "exact root marginal of the depth-d tree, per step");
    int rb = 3, rtheta = 2, rdepth = 12, rsteps = 10;
    double rp = 0.3;
    c_rm->add_option("--b", rb)->required();
    c_rm->add_option("--theta", rtheta)->required();
    c_rm->add_option("--p", rp)->required();
    c_rm->add_option("--depth", rdepth);
    c_rm->add_option("--steps", rsteps);
    c_rm->add_option("--out", out_path);
    c_rm->add_option("--format", format)
        ->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (*c_crit) {
            const landscape land = critical(model_params(cb, ctheta), ctol);
            auto mf = make_manifest("critical", {{"b", std::to_string(cb)},
                                                 {"theta", std::to_string(ctheta)},
                                                 {"tol", fmt(ctol)}});
            if (out_path.empty())
                out_path = format == "csv" ? "critical.csv" : "critical.json";
            if (format == "csv") {
                emit(out_path,
                     csv_payload({"b", "theta", "p_T", "q_T", "q_tilde",
                                  "p_tilde", "alpha", "residual_w",
                                  "residual_wq"},
                                 {{double(cb), double(ctheta), land.p_T,
                                   land.q_T, land.q_tilde, land.p_tilde,
                                   land.alpha, land.residual_w,
                                   land.residual_wq}}),
                     mf);
            } else {
                json j;
                j["b"] = cb;
                j["theta"] = ctheta;
                j["p_T"] = fmt(land.p_T);
                j["q_T"] = fmt(land.q_T);
                j["q_tilde"] = fmt(land.q_tilde);
                j["p_tilde"] = fmt(land.p_tilde);
                j["alpha"] = fmt(land.alpha);
                j["residual_w"] = fmt(land.residual_w);
                j["residual_wq"] = fmt(land.residual_wq);
                j["tol"] = fmt(land.tol);
                emit(out_path, j.dump(2) + "\n", mf);
            }
            std::printf("p_T=%s q_T=%s alpha=%s\n", fmt(land.p_T).c_str(),
                        fmt(land.q_T).c_str(), fmt(land.alpha).c_str());
        } else if (*c_trace) {
            const model_params m(tb, ttheta);
            std::vector<double> extra;
            if (!tsamples.empty()) extra = parse_list(tsamples);
            const trajectory tr =
                tmode == "discrete" ? discrete_trace(m, tp, tsteps)
                                    : ode_trace(m, tp, tmax, ttol, extra);
            auto mf = make_manifest(
                "trace", {{"b", std::to_string(tb)},
                          {"theta", std::to_string(ttheta)},
                          {"p", fmt(tp)},
                          {"mode", tmode},
                          {"steps", std::to_string(tsteps)},
                          {"t_max", fmt(tmax)},
                          {"tol", fmt(ttol)}});
            if (out_path.empty())
                out_path = format == "csv" ? "trace.csv" : "trace.json";
            if (format == "csv") {
                std::vector<std::vector<double>> rows;
                rows.reserve(tr.samples.size());
                for (const auto& s : tr.samples)
                    rows.push_back({s.t, s.Q, s.P});
                emit(out_path, csv_payload({"t", "Q", "P"}, rows), mf);
            } else {
                json arr = json::array();
                for (const auto& s : tr.samples) {
                    json row;
                    row["t"] = fmt(s.t);
                    row["Q"] = fmt(s.Q);
                    row["P"] = fmt(s.P);
                    arr.push_back(row);
                }
                emit(out_path, arr.dump(2) + "\n", mf);
            }
        } else if (*c_prof) {
            const landscape land = critical(model_params(pb, ptheta));
            const cutoff_profile prof =
                profile_phi(land, pr_min, pr_max, pstep, pphi0);
            auto mf = make_manifest(
                "profile", {{"b", std::to_string(pb)},
                            {"theta", std::to_string(ptheta)},
                            {"r_min", fmt(pr_min)},
                            {"r_max", fmt(pr_max)},
                            {"step", fmt(pstep)},
                            {"phi0", fmt(prof.phi0)}});
            if (out_path.empty())
                out_path = format == "csv" ? "profile.csv" : "profile.json";
            if (format == "csv") {
                std::vector<std::vector<double>> rows;
                for (const auto& s : prof.samples)
                    rows.push_back({s.first, s.second});
                emit(out_path, csv_payload({"r", "phi"}, rows), mf);
            } else {
                json arr = json::array();
                for (const auto& s : prof.samples) {
                    json row;
                    row["r"] = fmt(s.first);
                    row["phi"] = fmt(s.second);
                    arr.push_back(row);
                }
                emit(out_path, arr.dump(2) + "\n", mf);
            }
        } else if (*c_win) {
            const landscape land = critical(model_params(wb, wtheta));
            if (wq < 0.0) wq = 0.5 * (land.q_T + 1.0);
            const std::vector<double> hs = parse_list(wh_list);
            const window_scan scan = scan_window(land, wq, hs);
            auto mf = make_manifest("window", {{"b", std::to_string(wb)},
                                               {"theta", std::to_string(wtheta)},
                                               {"q", fmt(wq)},
                                               {"h_list", wh_list}});
            if (out_path.empty())
                out_path = format == "csv" ? "window.csv" : "window.json";
            std::vector<std::vector<double>> rows;
            for (std::size_t i = 0; i < hs.size(); ++i)
                rows.push_back({hs[i],
                                scan.offsets[i] +
                                    land.alpha / std::sqrt(hs[i]),
                                scan.offsets[i]});
            if (format == "csv") {
                emit(out_path, csv_payload({"h", "t_h", "offset"}, rows), mf);
            } else {
                json arr = json::array();
                for (const auto& r : rows) {
                    json row;
                    row["h"] = fmt(r[0]);
                    row["t_h"] = fmt(r[1]);
                    row["offset"] = fmt(r[2]);
                    arr.push_back(row);
                }
                emit(out_path, arr.dump(2) + "\n", mf);
            }
        } else if (*c_bot) {
            const landscape land = critical(model_params(bb, btheta));
            std::vector<double> thetas;
            if (btheta_list.empty())
                for (int j = 4; j <= 12; ++j)
                    thetas.push_back(std::pow(4.0, -j));
            else
                thetas = parse_list(btheta_list);
            auto mf = make_manifest(
                "bottleneck", {{"b", std::to_string(bb)},
                               {"theta", std::to_string(btheta)},
                               {"delta", fmt(bdelta)},
                               {"theta_list", btheta_list},
                               {"self_test", bselftest ? "1" : "0"}});
            if (out_path.empty())
                out_path =
                    format == "csv" ? "bottleneck.csv" : "bottleneck.json";
            std::vector<std::vector<double>> rows;
            for (double th : thetas) {
                const auto r = bottleneck_integral(land, bdelta, th);
                std::vector<double> row{th, r.raw, r.compensated, r.beta};
                if (bselftest)
                    row.push_back(quadratic_bottleneck_control(bdelta, th));
                rows.push_back(row);
            }
            std::vector<std::string> header{"theta", "raw", "compensated",
                                            "beta"};
            if (bselftest) header.push_back("quadratic_compensated");
            if (format == "csv") {
                emit(out_path, csv_payload(header, rows), mf);
            } else {
                json arr = json::array();
                for (const auto& r : rows) {
                    json row;
                    for (std::size_t i = 0; i < header.size(); ++i)
                        row[header[i]] = fmt(r[i]);
                    arr.push_back(row);
                }
                emit(out_path, arr.dump(2) + "\n", mf);
            }
            if (bselftest)
                std::printf(
                    "quadratic control at theta=%s: %s (exact limit -2/delta "
                    "= %s)\n",
                    fmt(thetas.back()).c_str(),
                    fmt(quadratic_bottleneck_control(bdelta, thetas.back()))
                        .c_str(),
                    fmt(-2.0 / bdelta).c_str());
        } else if (*c_sim) {
            const sim_config cfg = sfl.to_config();
            const sim_result r = simulate(cfg);
            auto mf = make_manifest("simulate", sfl.to_params());
            if (out_path.empty())
                out_path = format == "csv" ? "simulate.csv" : "simulate.json";
            if (format == "csv") {
                std::vector<std::vector<double>> rows;
                for (std::size_t i = 0; i < r.interior_density.size(); ++i)
                    rows.push_back({r.interior_density[i].t,
                                    r.interior_density[i].mean,
                                    r.interior_density[i].std_err,
                                    r.root_occupancy[i].mean,
                                    r.root_occupancy[i].std_err});
                emit(out_path,
                     csv_payload({"t", "interior_mean", "interior_se",
                                  "root_mean", "root_se"},
                                 rows),
                     mf);
            } else {
                emit(out_path, sim_result_json(sfl, r).dump(2) + "\n", mf);
            }
        } else if (*c_cmp) {
            const json sim = json::parse(read_file(cmp_sim));
            const model_params m(sim.at("b").get<int>(),
                                 sim.at("theta").get<int>());
            const double p = std::stod(sim.at("p").get<std::string>());
            const std::string mode = sim.at("mode").get<std::string>();
            const std::int64_t n_rep = sim.at("replicas").get<std::int64_t>();
            const int levels = sim.at("levels").get<int>();
            json rows = json::array();
            double max_z = 0.0;
            if (mode == "discrete") {
                for (const auto& s : sim.at("samples")) {
                    const double t = std::stod(s.at("t").get<std::string>());
                    const double emp =
                        std::stod(s.at("root_mean").get<std::string>());
                    const double exact = root_marginal_exact_discrete(
                        m, p, levels, int(t));
                    const double se =
                        std::sqrt(exact * (1.0 - exact) / double(n_rep));
                    const double d = emp - exact;
                    const double z = d == 0.0 ? 0.0 : d / std::fmax(se, 1e-300);
                    max_z = std::fmax(max_z, std::fabs(z));
                    json row;
                    row["t"] = fmt(t);
                    row["empirical"] = fmt(emp);
                    row["expected"] = fmt(exact);
                    row["se"] = fmt(se);
                    row["z"] = fmt(z);
                    rows.push_back(row);
                }
            } else {
                std::vector<double> times;
                for (const auto& s : sim.at("samples"))
                    times.push_back(std::stod(s.at("t").get<std::string>()));
                const double t_last =
                    times.empty() ? 0.0 : times.back();
                const trajectory tr = ode_trace(m, p, t_last, 1e-10, times);
                for (const auto& s : sim.at("samples")) {
                    const double t = std::stod(s.at("t").get<std::string>());
                    const double emp =
                        std::stod(s.at("interior_mean").get<std::string>());
                    const double se =
                        std::stod(s.at("interior_se").get<std::string>());
                    const double expected = tr.p_at(t);
                    const double d = emp - expected;
                    const double z = d == 0.0 ? 0.0 : d / std::fmax(se, 1e-300);
                    max_z = std::fmax(max_z, std::fabs(z));
                    json row;
                    row["t"] = fmt(t);
                    row["empirical"] = fmt(emp);
                    row["expected"] = fmt(expected);
                    row["se"] = fmt(se);
                    row["z"] = fmt(z);
                    rows.push_back(row);
                }
            }
            json rep;
            rep["command"] = "compare";
            rep["mode"] = mode;
            rep["rows"] = rows;
            rep["max_abs_z"] = fmt(max_z);
            rep["pass"] = max_z < 3.0;
            auto mf = make_manifest("compare", {{"sim", cmp_sim}});
            if (out_path.empty()) out_path = "compare.json";
            emit(out_path, rep.dump(2) + "\n", mf);
            std::printf("max |z| = %s -> %s\n", fmt(max_z).c_str(),
                        max_z < 3.0 ? "pass" : "FAIL");
        } else if (*c_ws) {
            sim_config cfg = wsfl.to_config();
            cfg.mode = sim_mode::continuous;
            const window_stats_report rep = window_statistics(cfg, ws_q);
            json j;
            j["command"] = "window-stats";
            j["h"] = fmt(rep.h);
            j["q"] = fmt(rep.q);
            j["t_probe"] = fmt(rep.t_probe);
            j["t_pre"] = fmt(rep.t_pre);
            j["r_h"] = fmt(rep.r_h);
            j["replicas"] = rep.replicas;
            j["interior_count"] = rep.interior_count;
            j["density_mean"] = fmt(rep.density.mean);
            j["density_se"] = fmt(rep.density.std_err);
            j["candidate_tail"] = fmt(rep.cand_tail);
            j["candidate_composed"] = fmt(rep.cand_composed);
            j["z_tail"] = fmt(rep.z_tail);
            j["z_composed"] = fmt(rep.z_composed);
            j["closer"] = rep.closer;
            j["pre_time"] = fmt(rep.t_pre);
            j["pre_density_mean"] = fmt(rep.pre_density.mean);
            j["pre_density_se"] = fmt(rep.pre_density.std_err);
            j["analytic_pre"] = fmt(rep.analytic_pre);
            j["z_pre"] = fmt(rep.z_pre);
            j["pair_both_mean"] = fmt(rep.pair_both.mean);
            j["pair_both_se"] = fmt(rep.pair_both.std_err);
            j["marginal_product"] = fmt(rep.marginal_product);
            j["two_scale_mean"] = fmt(rep.two_scale.mean);
            j["two_scale_se"] = fmt(rep.two_scale.std_err);
            auto mf = make_manifest("window-stats", wsfl.to_params());
            mf.parameters["q"] = fmt(ws_q);
            if (out_path.empty()) out_path = "window_stats.json";
            emit(out_path, j.dump(2) + "\n", mf);
            std::printf("density %s vs tail %s (z=%s) / composed %s (z=%s): "
                        "closer to %s\n",
                        fmt(rep.density.mean).c_str(),
                        fmt(rep.cand_tail).c_str(), fmt(rep.z_tail).c_str(),
                        fmt(rep.cand_composed).c_str(),
                        fmt(rep.z_composed).c_str(), rep.closer.c_str());
        } else if (*c_cpl) {
            const sim_config cfg = cfl.to_config();
            const coupling_report rep = coupling_check(cfg, cpl_region);
            json j;
            j["command"] = "coupling";
            j["runs"] = rep.runs;
            j["region_size"] = rep.region_size;
            j["boundary_size"] = rep.boundary_size;
            j["mismatched_runs"] = rep.mismatched_runs;
            j["identical"] = rep.identical;
            auto mf = make_manifest("coupling", cfl.to_params());
            mf.parameters["region"] = std::to_string(cpl_region);
            if (out_path.empty()) out_path = "coupling.json";
            emit(out_path, j.dump(2) + "\n", mf);
            std::printf("%lld/%lld runs identical\n",
                        (long long)(rep.runs - rep.mismatched_runs),
                        (long long)rep.runs);
        } else if (*c_tan) {
            const landscape land = critical(model_params(fb, ftheta));
            const tan_fit_report rep =
                tan_profile_check(land, fh, flo, fhi, fpoints);
            json j;
            j["command"] = "tanfit";
            j["h"] = fmt(fh);
            j["converged"] = rep.converged;
            j["c1"] = fmt(rep.c1);
            j["c2"] = fmt(rep.c2);
            j["c3"] = fmt(rep.c3);
            j["c1_hint"] = fmt(rep.c1_hint);
            j["c2_hint"] = fmt(rep.c2_hint);
            j["c3_hint"] = fmt(rep.c3_hint);
            j["rel_residual"] = fmt(rep.rel_residual);
            j["message"] = rep.message;
            json pts = json::array();
            for (std::size_t i = 0; i < rep.lambda.size(); ++i) {
                json row;
                row["lambda"] = fmt(rep.lambda[i]);
                row["lhs"] = fmt(rep.lhs[i]);
                pts.push_back(row);
            }
            j["points"] = pts;
            auto mf = make_manifest(
                "tanfit", {{"b", std::to_string(fb)},
                           {"theta", std::to_string(ftheta)},
                           {"h", fmt(fh)},
                           {"lo_frac", fmt(flo)},
                           {"hi_frac", fmt(fhi)},
                           {"points", std::to_string(fpoints)}});
            if (out_path.empty()) out_path = "tanfit.json";
            emit(out_path, j.dump(2) + "\n", mf);
            std::printf("c1=%s c2=%s c3=%s rel_residual=%s\n",
                        fmt(rep.c1).c_str(), fmt(rep.c2).c_str(),
                        fmt(rep.c3).c_str(), fmt(rep.rel_residual).c_str());
        } else if (*c_hit) {
            const double t = hitting_time(model_params(hb, htheta), hp, hq);
            json j;
            j["command"] = "hit";
            j["t"] = fmt(t);
            auto mf = make_manifest("hit", {{"b", std::to_string(hb)},
                                            {"theta", std::to_string(htheta)},
                                            {"p", fmt(hp)},
                                            {"q_target", fmt(hq)}});
            if (out_path.empty()) out_path = "hit.json";
            emit(out_path, j.dump(2) + "\n", mf);
            std::printf("t = %s\n", fmt(t).c_str());
        } else if (*c_rm) {
            const model_params m(rb, rtheta);
            std::vector<std::vector<double>> rows;
            for (int n = 0; n <= rsteps; ++n)
                rows.push_back({double(n), root_marginal_exact_discrete(
                                               m, rp, rdepth, n)});
            auto mf = make_manifest(
                "rootmarg", {{"b", std::to_string(rb)},
                             {"theta", std::to_string(rtheta)},
                             {"p", fmt(rp)},
                             {"depth", std::to_string(rdepth)},
                             {"steps", std::to_string(rsteps)}});
            if (out_path.empty())
                out_path = format == "csv" ? "rootmarg.csv" : "rootmarg.json";
            if (format == "csv") {
                emit(out_path, csv_payload({"n", "Q"}, rows), mf);
            } else {
                json arr = json::array();
                for (const auto& r : rows) {
                    json row;
                    row["n"] = fmt(r[0]);
                    row["Q"] = fmt(r[1]);
                    arr.push_back(row);
                }
                emit(out_path, arr.dump(2) + "\n", mf);
            }
        }
    } catch (const degenerate_error& e) {
        std::fprintf(stderr, "degenerate parameters: %s\n", e.what());
        return exit_domain;
    } catch (const unreachable_error& e) {
        std::fprintf(stderr, "unreachable target: %s\n", e.what());
        return exit_domain;
    } catch (const domain_error& e) {
        std::fprintf(stderr, "domain error: %s\n", e.what());
        return exit_domain;
    } catch (const resource_error& e) {
        std::fprintf(stderr, "resource error: %s\n", e.what());
        return exit_resource;
    } catch (const numerics_error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return exit_numerics;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_io;
    }
    return exit_ok;
}
