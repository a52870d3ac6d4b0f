// End-to-end checks of the command-line tool: it is spawned as a subprocess
// with generated JSON configs, and its CSV outputs are read back through the
// library loaders. RH_CLI_PATH is injected by the build.

#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rh/analytic.hpp"
#include "rh/csv.hpp"
#include "rh/payoff.hpp"

namespace fs = std::filesystem;
using namespace rh;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path case_dir(const std::string& name) {
    static const fs::path base =
        fs::temp_directory_path() / ("rh_cli_" + std::to_string(static_cast<long>(::getpid())));
    const fs::path d = base / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    out << body;
    REQUIRE(out.good());
}

CliRun run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out_f = dir / "stdout.txt";
    const fs::path err_f = dir / "stderr.txt";
    const std::string cmd = std::string("\"") + RH_CLI_PATH + "\" " + args + " > \"" +
                            out_f.string() + "\" 2> \"" + err_f.string() + "\"";
    const int rc = std::system(cmd.c_str());
    CliRun r;
    if (rc != -1 && WIFEXITED(rc)) r.code = WEXITSTATUS(rc);
    r.out = slurp(out_f);
    r.err = slurp(err_f);
    return r;
}

// Shorthand: run a subcommand against a config written into `dir`, results in
// `dir / sub`.
CliRun run_cfg(const std::string& command, const fs::path& dir, const std::string& config,
               const std::string& extra = "") {
    const fs::path cfg = dir / (command + ".json");
    spit(cfg, config);
    return run_cli(command + " --config \"" + cfg.string() + "\" --out \"" +
                       (dir / "run").string() + "\" " + extra,
                   dir);
}

double cell(const CsvTable& t, std::size_t row, const std::string& col) {
    return t.rows.at(row).at(t.column(col));
}

const char* kBsConfig = R"({
  "model": {"spot": 100, "sigma": 0.2, "r": 0},
  "payoff": {"kind": "call", "strike": 100},
  "horizon": {"T": 1}
})";

}  // namespace

TEST_CASE("closed-form price command and its preamble") {
    const fs::path dir = case_dir("price_bs");
    const CliRun r = run_cfg("price-bs", dir, kBsConfig);
    CHECK(r.code == 0);
    CHECK(r.out.find("value") != std::string::npos);
    CHECK(r.out.find("wrote") != std::string::npos);

    const CsvTable t = read_csv((dir / "run" / "price_bs.csv").string());
    CHECK(t.meta("version") == "0.1.0");
    CHECK(t.meta("command") == "price-bs");
    CHECK(t.meta("seed") == "0");
    CHECK(t.meta("config_hash").size() == 16);
    REQUIRE(t.rows.size() == 1);
    CHECK(std::abs(cell(t, 0, "value") - bs_call(100, 100, 0, 0.2, 1)) <= 1e-12);

    // --quiet silences stdout entirely.
    const CliRun q = run_cfg("price-bs", dir, kBsConfig, "--quiet");
    CHECK(q.code == 0);
    CHECK(q.out.empty());
}

TEST_CASE("exchange closed form agrees with the zero-rate call oracle") {
    const fs::path dir = case_dir("price_exchange");
    const CliRun r = run_cfg("price-exchange", dir,
                             R"({"exchange": {"a": 100, "b": 100, "vol": 0.2, "tau": 1}})");
    CHECK(r.code == 0);
    const CsvTable t = read_csv((dir / "run" / "price_exchange.csv").string());
    REQUIRE(t.rows.size() == 1);
    CHECK(std::abs(cell(t, 0, "value") - bs_call(100, 100, 0, 0.2, 1)) <= 1e-12);
}

TEST_CASE("full-space face-lift reproduces the payoff table and loads back") {
    const fs::path dir = case_dir("facelift_identity");
    const CliRun r = run_cfg("facelift", dir, R"({
      "payoff": {"kind": "tabulated", "x": [80, 90, 100, 110], "value": [5, 1, 0, 2]},
      "constraint": {"kind": "full_space"},
      "facelift": {"x_lo": 80, "x_hi": 110, "points": 4}
    })");
    CHECK(r.code == 0);

    const fs::path out = dir / "run" / "facelift.csv";
    const CsvTable t = read_csv(out.string());
    REQUIRE(t.rows.size() == 4);
    const double xs[] = {80, 90, 100, 110};
    const double vs[] = {5, 1, 0, 2};
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(cell(t, i, "x") == xs[i]);
        CHECK(cell(t, i, "value") == vs[i]);
    }

    // The emitted table is itself a loadable claim.
    const Payoff g = Payoff::tabulated_from_csv(out.string());
    CHECK(g(95.0) == 0.5);
}

TEST_CASE("probability one reproduces the unconstrained price") {
    const fs::path dir = case_dir("quantile_p1");
    const CliRun a = run_cfg("price-bs", dir, kBsConfig);
    REQUIRE(a.code == 0);
    const CliRun b = run_cfg("quantile", dir, R"({
      "model": {"spot": 100, "mu": 0.1, "sigma": 0.2, "r": 0},
      "payoff": {"kind": "call", "strike": 100},
      "horizon": {"T": 1},
      "quantile": {"p": 1},
      "output": "q.csv"
    })");
    REQUIRE(b.code == 0);

    const CsvTable bs = read_csv((dir / "run" / "price_bs.csv").string());
    const CsvTable q = read_csv((dir / "run" / "q.csv").string());
    REQUIRE(q.rows.size() == 1);
    CHECK(std::abs(cell(q, 0, "price") - cell(bs, 0, "value")) <= 1e-12);
    CHECK(std::isinf(cell(q, 0, "q_bar")));
    CHECK(cell(q, 0, "atom") == 0.0);

    // Success region: everything. "inf" survives the CSV round trip.
    const CsvTable region = read_csv((dir / "run" / "q_region.csv").string());
    REQUIRE(region.rows.size() == 1);
    CHECK(cell(region, 0, "interval_lo") == 0.0);
    CHECK(std::isinf(cell(region, 0, "interval_hi")));
}

TEST_CASE("malformed configs exit with code two and name the file") {
    const fs::path dir = case_dir("validation");

    SUBCASE("unknown key inside a block") {
        const CliRun r = run_cfg("price-bs", dir, R"({
          "model": {"spot": 100, "sigma": 0.2, "volatility": 0.3},
          "payoff": {"kind": "call", "strike": 100},
          "horizon": {"T": 1}
        })");
        CHECK(r.code == 2);
        CHECK(r.err.find("price-bs.json") != std::string::npos);
        CHECK(r.err.find("unknown key") != std::string::npos);
    }
    SUBCASE("unknown top-level block") {
        const CliRun r = run_cfg("price-bs", dir, R"({
          "model": {"spot": 100, "sigma": 0.2},
          "payoff": {"kind": "call", "strike": 100},
          "horizon": {"T": 1},
          "extra": {}
        })");
        CHECK(r.code == 2);
        CHECK(r.err.find("unknown key \"extra\"") != std::string::npos);
    }
    SUBCASE("missing block") {
        const CliRun r = run_cfg("price-bs", dir, R"({"model": {"spot": 100, "sigma": 0.2}})");
        CHECK(r.code == 2);
        CHECK(r.err.find("missing") != std::string::npos);
    }
    SUBCASE("config is not JSON") {
        const CliRun r = run_cfg("price-bs", dir, "{oops");
        CHECK(r.code == 2);
        CHECK(r.err.find("not valid JSON") != std::string::npos);
    }
    SUBCASE("config file does not exist") {
        const CliRun r = run_cli("price-bs --config \"" + (dir / "nope.json").string() + "\"", dir);
        CHECK(r.code == 2);
        CHECK(r.err.find("nope.json") != std::string::npos);
    }
    SUBCASE("config names a different command") {
        std::string cfg = kBsConfig;
        cfg.insert(1, "\"command\": \"price-bs\",");
        const CliRun r = run_cfg("quantile", dir, cfg);
        CHECK(r.code == 2);
        CHECK(r.err.find("price-bs") != std::string::npos);
    }
    SUBCASE("missing required flag") {
        const CliRun r = run_cli("price-bs", dir);
        CHECK(r.code == 2);
    }
}

TEST_CASE("numeric failures exit with code three") {
    const fs::path dir = case_dir("numeric_failure");
    // A linear claim under an upward-bounded position constraint has no
    // finite lifted table.
    const CliRun r = run_cfg("facelift", dir, R"({
      "payoff": {"kind": "linear"},
      "constraint": {"kind": "box", "lo": [0], "hi": [0.1]},
      "facelift": {"x_lo": 50, "x_hi": 150, "points": 11}
    })");
    CHECK(r.code == 3);
    CHECK(r.err.find("facelift.json") != std::string::npos);
}

TEST_CASE("infinite prices are reported in-band with success") {
    const fs::path dir = case_dir("inf_price");
    // Proportion-mode lift of a linearly growing claim under a box capped at
    // 0.5 diverges; the surface is a legitimate +inf everywhere.
    const CliRun r = run_cfg("pde-constrained", dir, R"({
      "model": {"spot": 100, "sigma": 0.2, "r": 0},
      "payoff": {"kind": "call", "strike": 100},
      "constraint": {"kind": "box", "lo": [0], "hi": [0.5]},
      "horizon": {"T": 1},
      "grid": {"J": 16, "N": 8, "mode": "proportion", "range": "full_domain"}
    })");
    CHECK(r.code == 0);
    const CsvTable t = read_csv((dir / "run" / "pde_constrained.csv").string());
    CHECK(t.meta("value_at_spot") == "inf");
    REQUIRE(!t.rows.empty());
    for (const auto& row : t.rows) CHECK(std::isinf(row[t.column("value")]));
}

TEST_CASE("seed override flows into the run and its preamble") {
    const fs::path dir = case_dir("seed_override");
    const std::string cfg = R"({
      "model": {"spot": 100, "mu": 0.1, "sigma": 0.2, "r": 0},
      "payoff": {"kind": "call", "strike": 100},
      "constraint": {"kind": "box", "lo": [0], "hi": [0.1]},
      "horizon": {"T": 1},
      "mc": {"n": 2000, "steps": 16, "seed": 1},
      "controls": [{"kind": "constant", "value": 0}]
    })";
    const fs::path out = dir / "run" / "dual_bound.csv";

    const CliRun a = run_cfg("dual-bound", dir, cfg);
    REQUIRE(a.code == 0);
    const CsvTable ta = read_csv(out.string());
    CHECK(ta.meta("seed") == "1");
    const std::string bytes_a = slurp(out);

    const CliRun b = run_cfg("dual-bound", dir, cfg, "--seed 99");
    REQUIRE(b.code == 0);
    const CsvTable tb = read_csv(out.string());
    CHECK(tb.meta("seed") == "99");
    CHECK(tb.meta("config_hash") != ta.meta("config_hash"));
    CHECK(cell(tb, 0, "bound") != cell(ta, 0, "bound"));
    const std::string bytes_b = slurp(out);

    // Same override again: byte-identical output.
    const CliRun c = run_cfg("dual-bound", dir, cfg, "--seed 99");
    REQUIRE(c.code == 0);
    CHECK(slurp(out) == bytes_b);
    CHECK(bytes_a != bytes_b);
}

TEST_CASE("hedging simulation command re-runs byte-identically") {
    const fs::path dir = case_dir("hedge_sim");
    const std::string cfg = R"({
      "model": {"spot": 100, "mu": 0.08, "sigma": 0.2, "r": 0},
      "payoff": {"kind": "call", "strike": 100},
      "horizon": {"T": 1},
      "mc": {"n": 500, "steps": 50, "seed": 11},
      "hedge": {"rebalances": 50, "margin": 0.5}
    })";
    const fs::path out = dir / "run" / "hedge_sim.csv";

    const CliRun a = run_cfg("hedge-sim", dir, cfg);
    REQUIRE(a.code == 0);
    const CsvTable t = read_csv(out.string());
    CHECK(t.columns == std::vector<std::string>{"path_id", "x_T", "y_T", "error"});
    CHECK(t.rows.size() == 500);
    CHECK(std::abs(parse_double(t.meta("y0")) - bs_call(100, 100, 0, 0.2, 1)) <= 1e-12);
    // A tight closed-form delta hedge with a cash cushion succeeds often.
    CHECK(parse_double(t.meta("success_frequency")) > 0.5);

    const std::string bytes = slurp(out);
    const CliRun b = run_cfg("hedge-sim", dir, cfg);
    REQUIRE(b.code == 0);
    CHECK(slurp(out) == bytes);
}

TEST_CASE("scenario shortfall consumes CSV input written by the library") {
    const fs::path dir = case_dir("shortfall_scenarios");
    CsvTable scen;
    scen.columns = {"G", "density"};
    scen.rows = {{0, 1.2}, {1, 0.8}, {2, 1.1}, {4, 0.9}};
    write_csv((dir / "scenarios.csv").string(), scen);

    const CliRun r = run_cfg("shortfall", dir, R"({
      "scenarios": {"path": "scenarios.csv"},
      "loss": {"kind": "quadratic"},
      "shortfall": {"budget": 0.8}
    })");
    REQUIRE(r.code == 0);
    const CsvTable t = read_csv((dir / "run" / "shortfall.csv").string());
    REQUIRE(t.rows.size() == 4);
    CHECK(cell(t, 0, "phi") == 0.0);  // zero claims need no coverage
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(cell(t, i, "phi") >= 0.0);
        CHECK(cell(t, i, "phi") <= 1.0);
    }
    CHECK(std::abs(parse_double(t.meta("achieved_budget")) - 0.8) <= 1e-6);
    CHECK(!t.meta("c_hat").empty());
}

TEST_CASE("quadratic shortfall command reports the boundary values") {
    const fs::path dir = case_dir("shortfall_quadratic");
    const CliRun r = run_cfg("shortfall", dir, R"({
      "model": {"spot": 100, "mu": 0.05, "sigma": 0.2, "r": 0},
      "payoff": {"kind": "call", "strike": 100},
      "horizon": {"T": 1},
      "shortfall": {"target": 0}
    })");
    REQUIRE(r.code == 0);
    const CsvTable t = read_csv((dir / "run" / "shortfall.csv").string());
    REQUIRE(t.rows.size() == 1);
    CHECK(std::abs(cell(t, 0, "price") - bs_call(100, 100, 0, 0.2, 1)) <= 1e-9);
    CHECK(std::isinf(cell(t, 0, "q_bar")));
    CHECK(cell(t, 0, "achieved_risk") == 0.0);
}

TEST_CASE("liquidation boundary from the command line") {
    const fs::path dir = case_dir("liquidate");
    const CliRun r = run_cfg("liquidate", dir, R"({
      "liquidation": {"mu": 0.05, "sigma": 0.2, "beta": 0.01, "k_target": 90, "loss": "identity"},
      "state": {"x1": 100, "x2": 1},
      "horizon": {"T": 1},
      "target": {"p": 5},
      "schedules": [{"kind": "constant", "total": 0}],
      "mc": {"n": 500, "steps": 50, "seed": 3}
    })");
    REQUIRE(r.code == 0);
    const CsvTable t = read_csv((dir / "run" / "liquidate.csv").string());
    REQUIRE(t.rows.size() == 1);
    // Fully liquidated book: the premium is k_target + p with no noise.
    CHECK(std::abs(cell(t, 0, "y_star") - 95.0) <= 1e-11);
    CHECK(std::abs(parse_double(t.meta("best_y")) - 95.0) <= 1e-11);
}

TEST_CASE("grid solvers surface their spot value through the preamble") {
    const fs::path dir = case_dir("pde_commands");
    const double oracle = bs_call(100, 100, 0, 0.2, 1);

    const CliRun lin = run_cfg("pde-linear", dir, R"({
      "model": {"spot": 100, "sigma": 0.2, "r": 0},
      "payoff": {"kind": "call", "strike": 100},
      "horizon": {"T": 1},
      "grid": {"J": 64, "N": 32, "stride": 8}
    })");
    REQUIRE(lin.code == 0);
    const CsvTable tl = read_csv((dir / "run" / "pde_linear.csv").string());
    CHECK(std::abs(parse_double(tl.meta("value_at_spot")) - oracle) < 0.05);
    CHECK(tl.columns.size() == 5);

    const CliRun bsb = run_cfg("pde-bsb", dir, R"({
      "payoff": {"kind": "call", "strike": 100},
      "horizon": {"T": 1},
      "grid": {"J": 64, "N": 32, "stride": 8},
      "bsb": {"spot": 100, "sigma_lo": 0.2, "sigma_hi": 0.2}
    })");
    REQUIRE(bsb.code == 0);
    const CsvTable tb = read_csv((dir / "run" / "pde_bsb.csv").string());
    CHECK(std::abs(parse_double(tb.meta("value_at_spot")) - oracle) < 0.05);
}

TEST_CASE("gamma experiment command emits a decaying error table") {
    const fs::path dir = case_dir("gamma_exp");
    const CliRun r = run_cfg("gamma-exp", dir, R"({
      "sigma_fn": {"kind": "constant", "value": 0.2},
      "target": {"kind": "call", "strike": 100},
      "instrument": {"kind": "call", "strike": 100},
      "gamma": {"x0": 100, "t1": 0.25, "t2": 0.5, "rebalances": [4, 8],
                "grid_points": 201, "time_steps": 64},
      "mc": {"n": 128, "steps": 64, "seed": 7}
    })");
    REQUIRE(r.code == 0);
    const CsvTable t = read_csv((dir / "run" / "gamma_exp.csv").string());
    REQUIRE(t.rows.size() == 2);
    CHECK(cell(t, 0, "n") == 4.0);
    CHECK(cell(t, 1, "n") == 8.0);
    CHECK(cell(t, 1, "rms_error") < cell(t, 0, "rms_error"));
    CHECK(!t.meta("slope").empty());
}

TEST_CASE("convergence command tightens toward the oracle") {
    const fs::path dir = case_dir("convergence");
    const CliRun r = run_cfg("convergence", dir, R"({
      "model": {"spot": 100, "sigma": 0.2, "r": 0},
      "payoff": {"kind": "call", "strike": 100},
      "horizon": {"T": 1},
      "convergence": {"grids": [[32, 16], [64, 32], [128, 64]],
                      "oracle": 7.9655674554058038}
    })");
    REQUIRE(r.code == 0);
    const CsvTable t = read_csv((dir / "run" / "convergence.csv").string());
    CHECK(t.meta("against_oracle") == "1");
    REQUIRE(t.rows.size() == 3);
    CHECK(cell(t, 2, "error") < cell(t, 0, "error"));
}
