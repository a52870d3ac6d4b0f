#include <cmath>
#include <cstdio>
#include <vector>

#include "doctest.h"
#include "rh/liquidation.hpp"
#include "rh/rng.hpp"

using namespace rh;

namespace {

LiquidationModel make_model(double beta = 0.01, double sigma = 0.2, double mu = 0.05,
                            LossMap loss = LossMap::identity()) {
    LiquidationModel m;
    m.mu = mu;
    m.sigma = sigma;
    m.beta = beta;
    m.k_target = 90.0;
    m.loss = loss;
    return m;
}

McConfig liq_cfg(std::int64_t n = 2000, int steps = 100, std::uint64_t seed = 5) {
    McConfig cfg;
    cfg.n = n;
    cfg.steps = steps;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("terminal score matches hand arithmetic and its reductions") {
    const LiquidationModel m = make_model();
    // Half the book sold, impact 1%: the residual block trades at
    // 100 (1 - 0.01 * 0.5), so proceeds 40 + 49.75 miss the target by 0.25.
    CHECK(terminal_psi(100.0, 0.5, 40.0, m) == doctest::Approx(-0.25).epsilon(1e-14));
    // Independent evaluation path: the inverse recovers the proceeds start.
    CHECK(psi_inverse(100.0, 0.5, -0.25, m) == doctest::Approx(40.0).epsilon(1e-14));

    // Fully liquidated book: only proceeds vs target remain.
    CHECK(terminal_psi(123.0, 1.0, 95.0, m) == doctest::Approx(5.0));
    LiquidationModel cm = make_model(0.01, 0.2, 0.05, LossMap::cubic());
    CHECK(terminal_psi(123.0, 1.0, 92.0, cm) == doctest::Approx(8.0));

    // No impact, identity loss: affine in all arguments.
    const LiquidationModel flat = make_model(0.0);
    CHECK(terminal_psi(100.0, 0.25, 10.0, flat) ==
          doctest::Approx(10.0 + 100.0 * 0.75 - 90.0).epsilon(1e-14));
}

TEST_CASE("score inverse round-trips on random states") {
    for (LossMap loss : {LossMap::identity(), LossMap::cubic()}) {
        const LiquidationModel m = make_model(0.02, 0.2, 0.05, loss);
        Substream s(99, 0, 0);
        for (int i = 0; i < 1000; ++i) {
            const double x1 = 20.0 + 180.0 * s.uniform();
            const double x2 = s.uniform();
            const double p = -50.0 + 100.0 * s.uniform();
            const double y = psi_inverse(x1, x2, p, m);
            CHECK(terminal_psi(x1, x2, y, m) == doctest::Approx(p).epsilon(1e-10));
        }
    }
}

TEST_CASE("no trading leaves proceeds and inventory untouched") {
    const LiquidationModel m = make_model();
    LiquidationState x0{100.0, 0.3, 17.0};
    const LiquidationSim sim =
        simulate_schedule(m, Schedule::constant(0.0), 0.0, x0, 1.0, liq_cfg());
    for (std::int64_t i = 0; i < sim.y_T.size(); ++i) {
        CHECK(sim.y_T[i] == 17.0);
        CHECK(sim.x2_T[i] == 0.3);
    }
    CHECK(sim.rejection_rate == 0.0);
}

TEST_CASE("full liquidation at a constant price is deterministic") {
    const LiquidationModel m = make_model(0.0, 0.0, 0.0);
    LiquidationState x0{100.0, 0.2, 5.0};
    const LiquidationSim sim =
        simulate_schedule(m, Schedule::constant(0.8), 0.0, x0, 1.0, liq_cfg(500));
    for (std::int64_t i = 0; i < sim.y_T.size(); ++i) {
        CHECK(sim.y_T[i] == doctest::Approx(5.0 + 100.0 * 0.8).epsilon(1e-12));
        CHECK(sim.x2_T[i] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(sim.x1_T[i] == doctest::Approx(100.0).epsilon(1e-12));
    }
    CHECK(sim.e_psi.mean == doctest::Approx(5.0 + 80.0 - 90.0).epsilon(1e-10));
}

TEST_CASE("coarse and fine step runs agree within Monte Carlo error") {
    const LiquidationModel m = make_model(0.01, 0.2, 0.05);
    LiquidationState x0{100.0, 0.0, 0.0};
    const Schedule sched = Schedule::constant(0.8);
    const LiquidationSim coarse =
        simulate_schedule(m, sched, 0.0, x0, 1.0, liq_cfg(20000, 60, 3));
    const LiquidationSim fine =
        simulate_schedule(m, sched, 0.0, x0, 1.0, liq_cfg(20000, 600, 4));
    const double gap = std::abs(coarse.e_psi.mean - fine.e_psi.mean);
    const double band = 3.0 * std::hypot(coarse.e_psi.std_error, fine.e_psi.std_error);
    CHECK(gap <= band);
}

TEST_CASE("a step too coarse for the volatility raises a numeric error") {
    const LiquidationModel wild = make_model(0.0, 5.0, 0.0);
    LiquidationState x0{100.0, 0.0, 0.0};
    CHECK_THROWS_AS(
        simulate_schedule(wild, Schedule::constant(0.5), 0.0, x0, 1.0, liq_cfg(200, 50)),
        numeric_error);
}

TEST_CASE("premium at a fully liquidated book hits the boundary value exactly") {
    const LiquidationModel m = make_model();
    LiquidationState done{100.0, 1.0, 0.0};
    const PremiumReport rep =
        premium_upper_bound(m, 5.0, {Schedule::constant(0.0)}, 0.0, done, 1.0, liq_cfg(500));
    CHECK(rep.best_y == doctest::Approx(95.0).epsilon(1e-11));
    CHECK(rep.best_y == doctest::Approx(boundary_full_liquidated(m, 5.0)).epsilon(1e-11));
    CHECK(boundary_full_liquidated(m, 0.0) == doctest::Approx(90.0));

    // Odd-power loss: the inverse of 8 is 2, so the boundary sits at 92.
    const LiquidationModel cm = make_model(0.01, 0.2, 0.05, LossMap::cubic());
    CHECK(boundary_full_liquidated(cm, 8.0) == doctest::Approx(92.0).epsilon(1e-12));
    const PremiumReport crep =
        premium_upper_bound(cm, 8.0, {Schedule::constant(0.0)}, 0.0, done, 1.0, liq_cfg(500));
    CHECK(crep.best_y == doctest::Approx(92.0).epsilon(1e-9));
}

TEST_CASE("premium bound improves with a larger family and orders with the target") {
    const LiquidationModel m = make_model();
    LiquidationState x0{100.0, 0.0, 0.0};
    const McConfig cfg = liq_cfg(8000, 100, 12);
    const std::vector<Schedule> small = {Schedule::constant(1.0)};
    const std::vector<Schedule> large = {Schedule::constant(1.0),
                                         Schedule::front_loaded(1.0, 2.0),
                                         Schedule::front_loaded(1.0, 4.0)};
    const PremiumReport a = premium_upper_bound(m, 0.0, small, 0.0, x0, 1.0, cfg);
    const PremiumReport b = premium_upper_bound(m, 0.0, large, 0.0, x0, 1.0, cfg);
    CHECK(b.best_y <= a.best_y + 1e-12);
    REQUIRE(b.entries.size() == 3);
    for (const auto& e : b.entries) {
        CHECK(e.feasible);
        CHECK(e.e_psi == doctest::Approx(0.0).epsilon(1e-9));  // target binds
    }

    // Identity loss: raising the target by 5 shifts the bound by exactly 5.
    const PremiumReport c = premium_upper_bound(m, 5.0, small, 0.0, x0, 1.0, cfg);
    CHECK(c.best_y - a.best_y == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("mean score grows with the proceeds start") {
    const LiquidationModel m = make_model();
    LiquidationState lo{100.0, 0.0, 40.0}, hi{100.0, 0.0, 50.0};
    const Schedule sched = Schedule::constant(0.9);
    const LiquidationSim sim_lo = simulate_schedule(m, sched, 0.0, lo, 1.0, liq_cfg());
    const LiquidationSim sim_hi = simulate_schedule(m, sched, 0.0, hi, 1.0, liq_cfg());
    CHECK(sim_hi.e_psi.mean - sim_lo.e_psi.mean == doctest::Approx(10.0).epsilon(1e-10));

    const LiquidationModel cm = make_model(0.01, 0.2, 0.05, LossMap::cubic());
    const LiquidationSim cub_lo = simulate_schedule(cm, sched, 0.0, lo, 1.0, liq_cfg());
    const LiquidationSim cub_hi = simulate_schedule(cm, sched, 0.0, hi, 1.0, liq_cfg());
    CHECK(cub_hi.e_psi.mean > cub_lo.e_psi.mean);
}

TEST_CASE("zero impact makes the price law schedule-independent") {
    const LiquidationModel m = make_model(0.0);
    LiquidationState x0{100.0, 0.0, 0.0};
    const LiquidationSim sold =
        simulate_schedule(m, Schedule::constant(0.8), 0.0, x0, 1.0, liq_cfg(4000));
    const LiquidationSim idle =
        simulate_schedule(m, Schedule::constant(0.0), 0.0, x0, 1.0, liq_cfg(4000));
    for (std::int64_t i = 0; i < sold.x1_T.size(); ++i) CHECK(sold.x1_T[i] == idle.x1_T[i]);
}

TEST_CASE("time-grid schedules load from CSV and integrate their rates") {
    CsvTable t;
    t.columns = {"t", "rate"};
    t.rows = {{0.0, 0.5}, {0.5, 0.3}};
    const std::string path = "liq_grid_tmp.csv";
    write_csv(path, t);
    const Schedule sched = Schedule::time_grid_from_csv(path);
    std::remove(path.c_str());
    CHECK(sched.total_sold(0.0, 1.0) == doctest::Approx(0.4).epsilon(1e-14));

    const LiquidationModel m = make_model();
    LiquidationState x0{100.0, 0.0, 0.0};
    const LiquidationSim sim = simulate_schedule(m, sched, 0.0, x0, 1.0, liq_cfg(300));
    for (std::int64_t i = 0; i < sim.x2_T.size(); ++i)
        CHECK(sim.x2_T[i] == doctest::Approx(0.4).epsilon(1e-12));

    PiecewiseSchedule bad;
    bad.t.resize(1);
    bad.value.resize(1);
    bad.t << 0.0;
    bad.value << -0.1;
    CHECK_THROWS_AS(Schedule::time_grid(bad).validate(), validation_error);
}

TEST_CASE("premium reports mark infeasible schedules and serialize") {
    const LiquidationModel m = make_model();
    LiquidationState x0{100.0, 0.6, 0.0};  // only 0.4 left to sell
    const std::vector<Schedule> family = {Schedule::constant(0.3), Schedule::constant(2.0)};
    const PremiumReport rep = premium_upper_bound(m, 0.0, family, 0.0, x0, 1.0, liq_cfg(500));
    REQUIRE(rep.entries.size() == 2);
    CHECK(rep.entries[0].feasible);
    CHECK_FALSE(rep.entries[1].feasible);
    CHECK(std::isinf(rep.entries[1].y_star));
    CHECK(rep.best_index == 0);

    const CsvTable t = rep.to_csv_table();
    CHECK(t.columns == std::vector<std::string>{"schedule_id", "y_star", "e_psi", "stderr"});
    const std::string path = "liq_report_tmp.csv";
    write_csv(path, t);
    const CsvTable back = read_csv(path);
    std::remove(path.c_str());
    CHECK(std::isinf(back.rows[1][1]));
    CHECK(back.rows == t.rows);

    // Entirely infeasible families are a caller error.
    CHECK_THROWS_AS(
        premium_upper_bound(m, 0.0, {Schedule::constant(2.0)}, 0.0, x0, 1.0, liq_cfg(500)),
        validation_error);
}

TEST_CASE("liquidation inputs are validated") {
    const LiquidationModel m = make_model();
    LiquidationState x0{100.0, 0.0, 0.0};
    McConfig anti = liq_cfg();
    anti.antithetic = true;
    CHECK_THROWS_AS(simulate_schedule(m, Schedule::constant(0.5), 0.0, x0, 1.0, anti),
                    validation_error);
    CHECK_THROWS_AS(simulate_schedule(m, Schedule::constant(0.5), 0.0, x0, 1.0, liq_cfg(500, 40)),
                    validation_error);
    CHECK_THROWS_AS(simulate_schedule(m, Schedule::constant(1.5), 0.0, x0, 1.0, liq_cfg()),
                    validation_error);
    CHECK_THROWS_AS(simulate_schedule(m, Schedule::constant(0.5), 1.0, x0, 1.0, liq_cfg()),
                    validation_error);
    LiquidationState bad_x2{100.0, 1.2, 0.0};
    CHECK_THROWS_AS(simulate_schedule(m, Schedule::constant(0.0), 0.0, bad_x2, 1.0, liq_cfg()),
                    validation_error);
    LiquidationModel bad = m;
    bad.beta = -0.1;
    CHECK_THROWS_AS(bad.validate(), validation_error);
    bad = m;
    bad.k_target = 0.0;
    CHECK_THROWS_AS(bad.validate(), validation_error);
    CHECK_THROWS_AS(Schedule::front_loaded(0.5, 0.5).validate(), validation_error);
}
