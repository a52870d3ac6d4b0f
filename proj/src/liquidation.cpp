#include "rh/liquidation.hpp"

#include <algorithm>
#include <cmath>

#include "rh/numerics.hpp"
#include "rh/parallel.hpp"
#include "rh/rng.hpp"

namespace rh {

namespace {

constexpr std::uint64_t kSaltLiquidation = 4;  // resample attempts shift this
constexpr int kMaxAttempts = 128;

// Proceeds of the final block trade: the remaining inventory sells at the
// impacted price.
double block_value(double x1, double x2, double beta) {
    const double rem = 1.0 - x2;
    return (x1 - x1 * beta * rem) * rem;
}

}  // namespace

// ---------------------------------------------------------------------------
// Loss map
// ---------------------------------------------------------------------------

LossMap LossMap::identity() { return LossMap(Kind::Identity); }
LossMap LossMap::cubic() { return LossMap(Kind::Cubic); }

double LossMap::operator()(double z) const {
    return kind_ == Kind::Identity ? z : z * z * z;
}

double LossMap::inverse(double p) const {
    if (!is_finite(p)) throw numeric_error("loss-map inverse needs a finite target");
    return kind_ == Kind::Identity ? p : std::cbrt(p);
}

// ---------------------------------------------------------------------------
// Model and terminal functions
// ---------------------------------------------------------------------------

void LiquidationModel::validate() const {
    if (!is_finite(mu) || !is_finite(sigma) || !is_finite(beta) || !is_finite(k_target))
        throw validation_error("liquidation model fields must be finite");
    if (beta < 0.0) throw validation_error("price impact must be nonnegative");
    if (sigma < 0.0) throw validation_error("volatility must be nonnegative");
    if (!(k_target > 0.0)) throw validation_error("target mean price must be positive");
}

double terminal_psi(double x1, double x2, double y, const LiquidationModel& model) {
    model.validate();
    if (!(x1 > 0.0)) throw validation_error("terminal price must be positive");
    if (!(x2 >= 0.0 && x2 <= 1.0)) throw validation_error("sold fraction must lie in [0,1]");
    return model.loss(y + block_value(x1, x2, model.beta) - model.k_target);
}

double psi_inverse(double x1, double x2, double p, const LiquidationModel& model) {
    model.validate();
    if (!(x1 > 0.0)) throw validation_error("terminal price must be positive");
    if (!(x2 >= 0.0 && x2 <= 1.0)) throw validation_error("sold fraction must lie in [0,1]");
    return model.loss.inverse(p) - block_value(x1, x2, model.beta) + model.k_target;
}

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

Schedule Schedule::constant(double total) {
    Schedule s;
    s.kind = Kind::Constant;
    s.total = total;
    return s;
}

Schedule Schedule::front_loaded(double total, double power) {
    Schedule s;
    s.kind = Kind::FrontLoaded;
    s.total = total;
    s.power = power;
    return s;
}

Schedule Schedule::time_grid(PiecewiseSchedule rates) {
    Schedule s;
    s.kind = Kind::TimeGrid;
    s.grid = std::move(rates);
    return s;
}

Schedule Schedule::time_grid_from_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::size_t ti = t.column("t");
    const std::size_t ri = t.column("rate");
    PiecewiseSchedule ps;
    ps.t.resize(static_cast<Eigen::Index>(t.rows.size()));
    ps.value.resize(static_cast<Eigen::Index>(t.rows.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        ps.t[static_cast<Eigen::Index>(i)] = t.rows[i][ti];
        ps.value[static_cast<Eigen::Index>(i)] = t.rows[i][ri];
    }
    return time_grid(std::move(ps));
}

void Schedule::validate() const {
    switch (kind) {
        case Kind::Constant:
            if (!is_finite(total) || total < 0.0)
                throw validation_error("schedule total must be finite and nonnegative");
            break;
        case Kind::FrontLoaded:
            if (!is_finite(total) || total < 0.0)
                throw validation_error("schedule total must be finite and nonnegative");
            if (!is_finite(power) || power < 1.0)
                throw validation_error("front-loaded power must be at least 1");
            break;
        case Kind::TimeGrid:
            grid.validate();
            for (Eigen::Index i = 0; i < grid.value.size(); ++i)
                if (!is_finite(grid.value[i]) || grid.value[i] < 0.0)
                    throw validation_error("selling rates must be finite and nonnegative");
            break;
    }
}

double Schedule::rate(double s, double t0, double T) const {
    const double h = T - t0;
    switch (kind) {
        case Kind::Constant:
            return total / h;
        case Kind::FrontLoaded: {
            const double u = std::clamp((s - t0) / h, 0.0, 1.0);
            return total * power * std::pow(1.0 - u, power - 1.0) / h;
        }
        case Kind::TimeGrid:
            return grid.at(s);
    }
    return 0.0;
}

double Schedule::total_sold(double t0, double T) const {
    if (kind != Kind::TimeGrid) return total;
    double acc = 0.0;
    for (Eigen::Index k = 0; k < grid.t.size(); ++k) {
        const double seg_lo = std::max(grid.t[k], t0);
        const double seg_hi = (k + 1 < grid.t.size()) ? std::min(grid.t[k + 1], T) : T;
        if (seg_hi > seg_lo) acc += grid.value[k] * (seg_hi - seg_lo);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace {

struct PathOutcome {
    double x1, x2, y;
    int attempts;  // 1 = accepted on the first try
};

PathOutcome simulate_one(const LiquidationModel& model, const Schedule& schedule, double t0,
                         const LiquidationState& x0, double T, const McConfig& cfg,
                         std::int64_t path) {
    const int steps = cfg.steps;
    const double dt = (T - t0) / steps;
    const double sq = model.sigma * std::sqrt(dt);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Substream stream(cfg.seed, static_cast<std::uint64_t>(path),
                         kSaltLiquidation + static_cast<std::uint64_t>(attempt));
        double x1 = x0.x1, x2 = x0.x2, y = x0.y;
        bool rejected = false;
        for (int k = 0; k < steps; ++k) {
            const double s = t0 + k * dt;
            const double diffused = x1 * (1.0 + model.mu * dt + sq * stream.normal());
            if (!(diffused > 0.0)) {
                rejected = true;
                break;
            }
            // Sale of the step: booked at the post-diffusion price, then the
            // impact depresses the price and the inventory advances. No
            // within-step discount is applied to these intermediate trades
            // (only the final block carries the closing impact discount).
            const double dL = std::min(schedule.rate(s, t0, T) * dt, 1.0 - x2);
            y += diffused * dL;
            x1 = diffused - diffused * model.beta * dL;
            x2 += dL;
        }
        if (!rejected) return {x1, x2, y, attempt + 1};
    }
    throw numeric_error("liquidation path rejected " + std::to_string(kMaxAttempts) +
                        " times; the step size cannot support this volatility");
}

}  // namespace

LiquidationSim simulate_schedule(const LiquidationModel& model, const Schedule& schedule,
                                 double t0, const LiquidationState& x0, double T,
                                 const McConfig& cfg) {
    model.validate();
    schedule.validate();
    cfg.validate();
    if (cfg.antithetic)
        throw validation_error("liquidation simulation does not support antithetic pairing");
    if (!(T > t0) || !is_finite(T)) throw validation_error("horizon must satisfy T > t0");
    if (cfg.steps < 50) throw validation_error("liquidation simulation needs at least 50 steps");
    if (!(x0.x1 > 0.0)) throw validation_error("initial price must be positive");
    if (!(x0.x2 >= 0.0 && x0.x2 <= 1.0))
        throw validation_error("initial sold fraction must lie in [0,1]");
    const double cap = 1.0 - x0.x2;
    if (schedule.total_sold(t0, T) > cap * (1.0 + 1e-12) + 1e-15)
        throw validation_error("schedule sells more than the remaining inventory");

    LiquidationSim sim;
    sim.x1_T.resize(cfg.n);
    sim.x2_T.resize(cfg.n);
    sim.y_T.resize(cfg.n);
    sim.psi.resize(cfg.n);
    Eigen::VectorXi attempts(cfg.n);
    parallel_paths(cfg.n, cfg.workers, [&](std::int64_t i) {
        const PathOutcome out = simulate_one(model, schedule, t0, x0, T, cfg, i);
        sim.x1_T[i] = out.x1;
        sim.x2_T[i] = out.x2;
        sim.y_T[i] = out.y;
        sim.psi[i] = terminal_psi(out.x1, out.x2, out.y, model);
        attempts[i] = out.attempts;
    });
    const double total_attempts = static_cast<double>(attempts.sum());
    sim.rejection_rate = (total_attempts - static_cast<double>(cfg.n)) / total_attempts;
    if (sim.rejection_rate > 0.01)
        throw numeric_error("liquidation rejection rate " + format_double(sim.rejection_rate) +
                            " exceeds 1%; refine the time step");
    sim.e_psi = estimate(sim.psi);
    return sim;
}

// ---------------------------------------------------------------------------
// Premium upper bound
// ---------------------------------------------------------------------------

CsvTable PremiumReport::to_csv_table() const {
    CsvTable t;
    t.metadata = {{"best_index", format_double(best_index)},
                  {"best_y", format_double(best_y)}};
    t.columns = {"schedule_id", "y_star", "e_psi", "stderr"};
    for (std::size_t i = 0; i < entries.size(); ++i)
        t.rows.push_back({static_cast<double>(i), entries[i].y_star, entries[i].e_psi,
                          entries[i].std_error});
    return t;
}

PremiumReport premium_upper_bound(const LiquidationModel& model, double p,
                                  const std::vector<Schedule>& family, double t0,
                                  const LiquidationState& x0, double T, const McConfig& cfg) {
    if (family.empty()) throw validation_error("premium bound needs at least one schedule");
    if (!is_finite(p)) throw validation_error("target must be finite");

    PremiumReport rep;
    rep.entries.resize(family.size());
    const double cap = 1.0 - x0.x2;
    for (std::size_t c = 0; c < family.size(); ++c) {
        PremiumEntry& entry = rep.entries[c];
        family[c].validate();
        if (family[c].total_sold(t0, T) > cap * (1.0 + 1e-12) + 1e-15) {
            entry.feasible = false;
            continue;
        }
        // Terminal proceeds are affine in the start y with unit slope, so one
        // simulation from y = 0 prices every y: psi_i(y) = loss(y + m_i).
        LiquidationState base = x0;
        base.y = 0.0;
        const LiquidationSim sim = simulate_schedule(model, family[c], t0, base, T, cfg);
        Eigen::VectorXd margin(cfg.n);
        for (std::int64_t i = 0; i < cfg.n; ++i)
            margin[i] = sim.y_T[i] + block_value(sim.x1_T[i], sim.x2_T[i], model.beta) -
                        model.k_target;
        const auto mean_psi = [&](double yv) {
            Eigen::VectorXd vals(cfg.n);
            for (std::int64_t i = 0; i < cfg.n; ++i) vals[i] = model.loss(yv + margin[i]);
            return pairwise_sum({vals.data(), static_cast<std::size_t>(cfg.n)}) /
                   static_cast<double>(cfg.n);
        };
        const double p_inv = model.loss.inverse(p);
        double lo = p_inv - margin.maxCoeff();
        double hi = p_inv - margin.minCoeff();
        if (lo > hi) std::swap(lo, hi);
        for (int it = 0; it < 200 && (hi - lo) > 1e-12 * (1.0 + std::abs(hi)); ++it) {
            const double mid = 0.5 * (lo + hi);
            (mean_psi(mid) >= p ? hi : lo) = mid;
        }
        entry.y_star = hi;
        Eigen::VectorXd vals(cfg.n);
        for (std::int64_t i = 0; i < cfg.n; ++i) vals[i] = model.loss(hi + margin[i]);
        const McEstimate est = estimate(vals);
        entry.e_psi = est.mean;
        entry.std_error = est.std_error;
        if (entry.y_star < rep.best_y) {
            rep.best_y = entry.y_star;
            rep.best_index = static_cast<int>(c);
        }
    }
    if (rep.best_index < 0)
        throw validation_error("no feasible schedule in the family (inventory cap)");
    return rep;
}

double boundary_full_liquidated(const LiquidationModel& model, double p) {
    model.validate();
    return model.k_target + model.loss.inverse(p);
}

}  // namespace rh
