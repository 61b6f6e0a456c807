#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "treeboot/io.hpp"

using nlohmann::json;

namespace {

struct run_result {
    int code;
    std::string out;
};

run_result run_cli(const std::string& args) {
    const std::string cmd =
        std::string(TREEBOOT_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    while (std::size_t got = std::fread(buf, 1, sizeof buf, pipe))
        out.append(buf, got);
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

std::string slurp(const std::string& path) {
    return treeboot::read_file(path);
}

} // namespace

TEST_CASE("critical command reports the pair with small residuals") {
    const auto r = run_cli("critical --b 3 --theta 2 --out /tmp/tb_crit.json");
    CHECK(r.code == 0);
    const json j = json::parse(slurp("/tmp/tb_crit.json"));
    CHECK(std::stod(j["p_T"].get<std::string>()) ==
          doctest::Approx(1.0 / 9.0).epsilon(1e-12));
    CHECK(std::stod(j["q_T"].get<std::string>()) ==
          doctest::Approx(0.25).epsilon(1e-12));
    CHECK(std::stod(j["residual_w"].get<std::string>()) < 1e-10);
    CHECK(std::stod(j["residual_wq"].get<std::string>()) < 1e-10);
    // manifest sidecar exists and carries the payload checksum
    const json mf = json::parse(slurp("/tmp/tb_crit.json.manifest.json"));
    CHECK(mf["command"] == "critical");
    CHECK(mf["checksum_fnv1a64"] ==
          treeboot::fnv1a_hex(slurp("/tmp/tb_crit.json")));
}

TEST_CASE("degenerate and invalid parameters exit with the domain code") {
    CHECK(run_cli("critical --b 3 --theta 3 --out /tmp/tb_x.json").code == 3);
    CHECK(run_cli("critical --b 2 --theta 2 --out /tmp/tb_x.json").code == 3);
    CHECK(run_cli("critical --b 3 --theta 1 --out /tmp/tb_x.json").code == 3);
    // usage errors exit 2
    CHECK(run_cli("critical --theta 2").code == 2);
    CHECK(run_cli("nonsense").code == 2);
    // resource bound exit 4
    CHECK(run_cli("simulate --geometry ball --levels 20 --b 3 --theta 2 "
                  "--p 0.2 --mode continuous --t-max 1 --replicas 1")
              .code == 4);
    // unreachable hitting target exits with the domain code
    CHECK(run_cli("hit --b 3 --theta 2 --p 0.05 --q-target 0.99").code == 3);
}

TEST_CASE("trace emits the exact CSV header and monotone columns") {
    const auto r = run_cli(
        "trace --b 3 --theta 2 --p 0.3 --mode continuous --t-max 5 "
        "--format csv --out /tmp/tb_trace.csv");
    CHECK(r.code == 0);
    std::istringstream in(slurp("/tmp/tb_trace.csv"));
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "t,Q,P");
    double pt = -1, pq = 0, pp = 0;
    int rows = 0;
    while (std::getline(in, line)) {
        double t, q, p;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &q, &p) == 3);
        CHECK(t > pt);
        CHECK(q >= pq);
        CHECK(p >= pp);
        pt = t;
        pq = q;
        pp = p;
        ++rows;
    }
    CHECK(rows > 10);
}

TEST_CASE("p=1 trace is constant one") {
    run_cli("trace --b 3 --theta 2 --p 1 --mode discrete --steps 5 "
            "--format csv --out /tmp/tb_ones.csv");
    std::istringstream in(slurp("/tmp/tb_ones.csv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        double t, q, p;
        std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &q, &p);
        CHECK(q == 1.0);
        CHECK(p == 1.0);
    }
}

TEST_CASE("discrete and continuous traces share the terminal limit") {
    run_cli("trace --b 3 --theta 2 --p 0.3 --mode discrete --steps 2000 "
            "--format csv --out /tmp/tb_d.csv");
    run_cli("trace --b 3 --theta 2 --p 0.3 --mode continuous --t-max 2000 "
            "--format csv --out /tmp/tb_c.csv");
    auto last_q = [](const std::string& path) {
        std::istringstream in(slurp(path));
        std::string line, last;
        std::getline(in, line);
        while (std::getline(in, line))
            if (!line.empty()) last = line;
        double t, q, p;
        REQUIRE(std::sscanf(last.c_str(), "%lf,%lf,%lf", &t, &q, &p) == 3);
        return q;
    };
    CHECK(std::fabs(last_q("/tmp/tb_d.csv") - last_q("/tmp/tb_c.csv")) < 1e-6);
}

TEST_CASE("identical invocations produce identical payload bytes") {
    run_cli("window --b 3 --theta 2 --h-list 1e-2,1e-3 --format csv "
            "--out /tmp/tb_w1.csv");
    run_cli("window --b 3 --theta 2 --h-list 1e-2,1e-3 --format csv "
            "--out /tmp/tb_w2.csv");
    CHECK(slurp("/tmp/tb_w1.csv") == slurp("/tmp/tb_w2.csv"));
    run_cli("simulate --geometry rooted --levels 5 --b 3 --theta 2 --p 0.3 "
            "--mode discrete --steps 5 --replicas 500 --out /tmp/tb_s1.json");
    run_cli("simulate --geometry rooted --levels 5 --b 3 --theta 2 --p 0.3 "
            "--mode discrete --steps 5 --replicas 500 --out /tmp/tb_s2.json");
    CHECK(slurp("/tmp/tb_s1.json") == slurp("/tmp/tb_s2.json"));
}

TEST_CASE("simulate then compare round trip passes the z gate") {
    const auto rs = run_cli(
        "simulate --geometry rooted --levels 8 --b 3 --theta 2 --p 0.3 "
        "--mode discrete --steps 8 --replicas 4000 --out /tmp/tb_sim.json");
    CHECK(rs.code == 0);
    const auto rc = run_cli(
        "compare --sim /tmp/tb_sim.json --out /tmp/tb_cmp.json");
    CHECK(rc.code == 0);
    const json rep = json::parse(slurp("/tmp/tb_cmp.json"));
    CHECK(rep["pass"].get<bool>());
    CHECK(std::stod(rep["max_abs_z"].get<std::string>()) < 3.0);
}

TEST_CASE("bottleneck self-test prints the exact quadratic limit") {
    const auto r = run_cli(
        "bottleneck --b 3 --theta 2 --delta 0.05 --quadratic-self-test "
        "--theta-list 1e-8 --format csv --out /tmp/tb_bot.csv");
    CHECK(r.code == 0);
    CHECK(r.out.find("-2/delta") != std::string::npos);
    std::istringstream in(slurp("/tmp/tb_bot.csv"));
    std::string header, row;
    std::getline(in, header);
    CHECK(header ==
          "theta,raw,compensated,beta,quadratic_compensated");
    std::getline(in, row);
    double th, raw, comp, beta, quad;
    REQUIRE(std::sscanf(row.c_str(), "%lf,%lf,%lf,%lf,%lf", &th, &raw, &comp,
                        &beta, &quad) == 5);
    CHECK(quad == doctest::Approx(-40.0).epsilon(1e-4));
}

TEST_CASE("window offsets shrink in gap magnitude down the h list") {
    run_cli("window --b 3 --theta 2 --h-list 1e-3,1e-4,1e-5,1e-6 "
            "--format csv --out /tmp/tb_win.csv");
    std::istringstream in(slurp("/tmp/tb_win.csv"));
    std::string line;
    std::getline(in, line);
    std::vector<double> offsets;
    while (std::getline(in, line)) {
        double h, th, off;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &h, &th, &off) == 3);
        offsets.push_back(off);
    }
    REQUIRE(offsets.size() == 4);
    double prev = 1e300;
    for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
        const double gap = std::fabs(offsets[i + 1] - offsets[i]);
        CHECK(gap < prev);
        prev = gap;
    }
}

TEST_CASE("config file supplies defaults, flags take precedence") {
    {
        std::ofstream cfg("/tmp/tb_cfg.ini");
        cfg << "[critical]\nb=3\ntheta=2\n";
    }
    const auto r = run_cli(
        "--config /tmp/tb_cfg.ini critical --out /tmp/tb_cfgout.json");
    CHECK(r.code == 0);
    const json j = json::parse(slurp("/tmp/tb_cfgout.json"));
    CHECK(j["b"].get<int>() == 3);
}
