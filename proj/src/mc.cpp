#include "rh/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <span>
#include <string>
#include <thread>

#include "rh/common.hpp"
#include "rh/parallel.hpp"
#include "rh/numerics.hpp"
#include "rh/rng.hpp"

namespace rh {

namespace {

// Salts separating the independent draw purposes of one seed.
constexpr std::uint64_t kSaltPaths = 0;
constexpr std::uint64_t kSaltHedge = 1;
constexpr std::uint64_t kSaltGamma = 2;

// Fills z with the path's normal draws. Under antithetics, odd paths negate
// the draws of their even partner.
void draw_normals(const McConfig& cfg, std::uint64_t salt, std::int64_t path,
                  std::span<double> z) {
    const std::int64_t base = cfg.antithetic ? path / 2 : path;
    const double sign = (cfg.antithetic && (path % 2 == 1)) ? -1.0 : 1.0;
    Substream s(cfg.seed, static_cast<std::uint64_t>(base), salt);
    for (double& zi : z) zi = sign * s.normal();
}

double fold_min_positive(double x, double floor_value) {
    return x > floor_value ? x : floor_value;
}

// Path generation tolerates the degenerate sigma = 0 limit (deterministic
// paths), which pricing-model validation elsewhere rejects.
void validate_sim_model(const MarketModel& m) {
    if (m.sigma == 0.0) {
        MarketModel probe = m;
        probe.sigma = 1.0;
        probe.validate();
    } else {
        m.validate();
    }
}

}  // namespace

void McConfig::validate() const {
    if (n < 100) throw validation_error("path count must be at least 100");
    if (steps < 1) throw validation_error("step count must be positive");
    if (antithetic && n % 2 != 0)
        throw validation_error("antithetic sampling needs an even path count");
    if (workers < 0) throw validation_error("worker count must be nonnegative");
}

std::uint64_t McConfig::fingerprint() const {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "n=%lld;steps=%d;seed=%llu;antithetic=%d",
                  static_cast<long long>(n), steps, static_cast<unsigned long long>(seed),
                  antithetic ? 1 : 0);
    std::uint64_t h = 14695981039346656037ULL;
    for (const char* p = buf; *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 1099511628211ULL;
    }
    return h;
}

McEstimate estimate(const Eigen::VectorXd& samples) {
    if (samples.size() < 2) throw validation_error("estimate needs at least 2 samples");
    const MeanVar mv = mean_sd(std::span<const double>(samples.data(),
                                                       static_cast<std::size_t>(samples.size())));
    McEstimate e;
    e.mean = mv.mean;
    e.n = samples.size();
    e.std_error = mv.sd / std::sqrt(static_cast<double>(e.n));
    return e;
}

McEstimate estimate(const Eigen::VectorXd& samples, const McConfig& cfg) {
    McEstimate e;
    if (cfg.antithetic) {
        if (samples.size() % 2 != 0)
            throw validation_error("antithetic estimate needs an even sample count");
        const std::int64_t pairs = samples.size() / 2;
        Eigen::VectorXd folded(pairs);
        for (std::int64_t k = 0; k < pairs; ++k)
            folded[k] = 0.5 * (samples[2 * k] + samples[2 * k + 1]);
        e = estimate(folded);
    } else {
        e = estimate(samples);
    }
    e.config_fingerprint = cfg.fingerprint();
    return e;
}

PathBatch simulate_paths(const MarketModel& model, double t0, double x0, double T,
                         const McConfig& cfg) {
    validate_sim_model(model);
    cfg.validate();
    if (!is_finite(t0) || !is_finite(T) || T <= t0)
        throw validation_error("path horizon must satisfy T > t0");
    if (!is_finite(x0)) throw validation_error("starting point must be finite");
    if (model.flavor == Flavor::Geometric && x0 <= 0.0)
        throw validation_error("geometric paths need a positive starting point");

    const int steps = cfg.steps;
    const double dt = (T - t0) / steps;
    const double sq = std::sqrt(dt);
    PathBatch batch;
    batch.t = Eigen::VectorXd::LinSpaced(steps + 1, t0, T);
    batch.x.resize(cfg.n, steps + 1);

    const bool geo = model.flavor == Flavor::Geometric;
    const double drift = geo ? (model.mu - 0.5 * model.sigma * model.sigma) * dt
                             : model.mu * dt;
    const double vol = model.sigma * sq;

    parallel_paths(cfg.n, cfg.workers, [&](std::int64_t i) {
        std::vector<double> z(static_cast<std::size_t>(steps));
        draw_normals(cfg, kSaltPaths, i, z);
        double x = x0;
        batch.x(i, 0) = x;
        for (int k = 0; k < steps; ++k) {
            if (geo)
                x *= std::exp(drift + vol * z[static_cast<std::size_t>(k)]);
            else
                x += drift + vol * z[static_cast<std::size_t>(k)];
            batch.x(i, k + 1) = x;
        }
    });
    return batch;
}

PathBatch simulate_paths_localvol(const std::function<double(double)>& sigma, double x0,
                                  double T, const McConfig& cfg) {
    cfg.validate();
    if (!(x0 > 0.0) || !is_finite(x0))
        throw validation_error("level-dependent paths need a positive starting point");
    if (!(T > 0.0) || !is_finite(T)) throw validation_error("horizon must be positive");

    const int steps = cfg.steps;
    const double dt = T / steps;
    const double sq = std::sqrt(dt);
    const double floor_value = 1e-12 * x0;
    PathBatch batch;
    batch.t = Eigen::VectorXd::LinSpaced(steps + 1, 0.0, T);
    batch.x.resize(cfg.n, steps + 1);

    parallel_paths(cfg.n, cfg.workers, [&](std::int64_t i) {
        std::vector<double> z(static_cast<std::size_t>(steps));
        draw_normals(cfg, kSaltPaths, i, z);
        double x = x0;
        batch.x(i, 0) = x;
        for (int k = 0; k < steps; ++k) {
            const double s = sigma(x);
            if (!is_finite(s) || s < 0.0)
                throw validation_error("volatility function returned an invalid value");
            x = fold_min_positive(x + x * s * sq * z[static_cast<std::size_t>(k)], floor_value);
            batch.x(i, k + 1) = x;
        }
    });
    return batch;
}

DeltaSource delta_from_function(std::function<double(double, double)> fn) {
    DeltaSource d;
    d.fn = std::move(fn);
    return d;
}

DeltaSource delta_from_solution(const PdeSolution& sol) {
    auto held = std::make_shared<const PdeSolution>(sol);
    DeltaSource d;
    d.x_lo = held->x[0];
    d.x_hi = held->x[held->x.size() - 1];
    d.fn = [held](double t, double x) { return held->delta_at(t, x); };
    return d;
}

HedgeReport hedge_simulation(const DeltaSource& delta, const MarketModel& model,
                             const Payoff& claim, double y0, double T, int rebalances,
                             const McConfig& cfg, double success_margin) {
    validate_sim_model(model);
    cfg.validate();
    if (!delta.fn) throw validation_error("hedge simulation needs a position function");
    if (!(T > 0.0) || !is_finite(T)) throw validation_error("horizon must be positive");
    if (rebalances < 1) throw validation_error("rebalance count must be positive");
    if (!is_finite(y0)) throw validation_error("initial wealth must be finite");
    if (!is_finite(success_margin) || success_margin < 0.0)
        throw validation_error("success margin must be nonnegative");

    const int m = rebalances;
    const double dt = T / m;
    const double sq = std::sqrt(dt);
    const double accrual = std::exp(model.r * dt) - 1.0;
    const bool geo = model.flavor == Flavor::Geometric;
    const double drift = geo ? (model.mu - 0.5 * model.sigma * model.sigma) * dt
                             : model.mu * dt;
    const double vol = model.sigma * sq;

    HedgeReport rep;
    rep.success_margin = success_margin;
    rep.x_T.resize(cfg.n);
    rep.y_T.resize(cfg.n);
    rep.error.resize(cfg.n);
    std::vector<std::int64_t> clamps(static_cast<std::size_t>(cfg.n), 0);

    parallel_paths(cfg.n, cfg.workers, [&](std::int64_t i) {
        std::vector<double> z(static_cast<std::size_t>(m));
        draw_normals(cfg, kSaltHedge, i, z);
        double x = model.spot;
        double y = y0;
        std::int64_t clamped = 0;
        for (int k = 0; k < m; ++k) {
            double xq = x;
            if (xq < delta.x_lo) {
                xq = delta.x_lo;
                ++clamped;
            } else if (xq > delta.x_hi) {
                xq = delta.x_hi;
                ++clamped;
            }
            const double phi = delta.fn(k * dt, xq);
            const double x_next = geo ? x * std::exp(drift + vol * z[static_cast<std::size_t>(k)])
                                      : x + drift + vol * z[static_cast<std::size_t>(k)];
            y = y + phi * (x_next - x) + (y - phi * x) * accrual;
            x = x_next;
        }
        rep.x_T[i] = x;
        rep.y_T[i] = y;
        rep.error[i] = y - claim(x);
        clamps[static_cast<std::size_t>(i)] = clamped;
    });

    std::int64_t successes = 0;
    std::int64_t total_clamps = 0;
    double shortfall_acc = 0.0;
    {
        // Fixed-order reductions.
        Eigen::VectorXd sf(cfg.n);
        for (std::int64_t i = 0; i < cfg.n; ++i) {
            if (rep.error[i] >= -success_margin) ++successes;
            const double miss = rep.error[i] < 0.0 ? -rep.error[i] : 0.0;
            sf[i] = miss * miss;
            total_clamps += clamps[static_cast<std::size_t>(i)];
        }
        shortfall_acc = pairwise_sum(std::span<const double>(sf.data(),
                                                             static_cast<std::size_t>(sf.size())));
    }
    const double nn = static_cast<double>(cfg.n);
    rep.success_frequency = static_cast<double>(successes) / nn;
    rep.success_std_error =
        std::sqrt(std::max(0.0, rep.success_frequency * (1.0 - rep.success_frequency)) / nn);
    rep.expected_squared_shortfall = shortfall_acc / nn;
    rep.mean_error = estimate(rep.error, cfg);
    rep.clamp_fraction = static_cast<double>(total_clamps) / (nn * m);
    rep.coverage_warning = rep.clamp_fraction > 0.05;
    return rep;
}

CsvTable HedgeReport::to_csv_table() const {
    CsvTable t;
    t.metadata = {{"success_frequency", format_double(success_frequency)},
                  {"success_std_error", format_double(success_std_error)},
                  {"success_margin", format_double(success_margin)},
                  {"expected_squared_shortfall", format_double(expected_squared_shortfall)},
                  {"mean_error", format_double(mean_error.mean)},
                  {"mean_error_std_error", format_double(mean_error.std_error)},
                  {"clamp_fraction", format_double(clamp_fraction)}};
    t.columns = {"path_id", "x_T", "y_T", "error"};
    t.rows.reserve(static_cast<std::size_t>(x_T.size()));
    for (Eigen::Index i = 0; i < x_T.size(); ++i)
        t.rows.push_back({static_cast<double>(i), x_T[i], y_T[i], error[i]});
    return t;
}

namespace {

// Pricing surface lookup for the gamma experiment. The tradable-at-spot case
// (a linear claim under driftless dynamics) is exact, which keeps the
// zero-error baseline free of grid noise.
struct SurfaceEval {
    std::shared_ptr<const PdeSolution> sol;  // null for the exact linear claim
    double value(double t, double x) const { return sol ? sol->value_at(t, x) : x; }
    double delta(double t, double x) const { return sol ? sol->delta_at(t, x) : 1.0; }
    double gamma(double t, double x) const {
        if (!sol) return 0.0;
        const auto& xs = sol->x;
        const Eigen::Index J = xs.size();
        Eigen::Index j = std::upper_bound(xs.data(), xs.data() + J, x) - xs.data();
        if (j < 1) j = 1;
        if (j > J - 1) j = J - 1;
        const double h = xs[j] - xs[j - 1];
        return (sol->delta_at(t, x + h) - sol->delta_at(t, x - h)) / (2.0 * h);
    }
    bool exact_linear() const { return sol == nullptr; }
};

SurfaceEval build_surface(const std::function<double(double)>& sigma, const Payoff& claim,
                          const Grid1D& grid) {
    SurfaceEval s;
    if (claim.kind() == PayoffKind::Linear) return s;
    s.sol = std::make_shared<const PdeSolution>(
        solve_linear_localvol(sigma, 0.0, claim, grid, Scheme::CrankNicolson));
    return s;
}

}  // namespace

CsvTable GammaReport::to_csv_table() const {
    CsvTable t;
    t.metadata = {{"slope", format_double(slope)}};
    t.columns = {"n", "rms_error"};
    for (std::size_t i = 0; i < rebalances.size(); ++i)
        t.rows.push_back({static_cast<double>(rebalances[i]), rms_error[static_cast<Eigen::Index>(i)]});
    return t;
}

GammaReport gamma_hedge_experiment(const std::function<double(double)>& sigma,
                                   const Payoff& target, double T1, const Payoff& instrument,
                                   double T2, double x0, const std::vector<int>& rebalance_counts,
                                   const McConfig& cfg, const GammaConfig& gcfg) {
    cfg.validate();
    if (!(x0 > 0.0) || !is_finite(x0)) throw validation_error("starting point must be positive");
    if (!(T1 > 0.0) || !(T2 > T1))
        throw validation_error("maturities must satisfy 0 < T1 < T2");
    if (rebalance_counts.empty()) throw validation_error("need at least one rebalance count");
    for (int n : rebalance_counts)
        if (n < 1) throw validation_error("rebalance counts must be positive");

    // Spatial grid sized by the largest volatility the paths can plausibly see.
    double sig_max = 0.0;
    for (int k = 0; k <= 200; ++k) {
        const double xp = x0 * std::exp(-3.0 + 6.0 * k / 200.0);
        const double s = sigma(xp);
        if (!is_finite(s) || s <= 0.0)
            throw validation_error("volatility function must be positive on the path range");
        sig_max = std::max(sig_max, s);
    }
    Grid1D ggrid = Grid1D::log_uniform(x0, sig_max, 0.0, T2, gcfg.grid_points, gcfg.time_steps,
                                       gcfg.n_std);
    Grid1D fgrid = ggrid;
    fgrid.T = T1;
    fgrid.time_steps = std::max(8, static_cast<int>(std::lround(gcfg.time_steps * T1 / T2)));

    const SurfaceEval f = build_surface(sigma, target, fgrid);
    const SurfaceEval g = build_surface(sigma, instrument, ggrid);

    // One fine Euler grid serves every rebalance count (common random numbers).
    std::int64_t lcm_all = 1;
    for (int n : rebalance_counts) lcm_all = std::lcm(lcm_all, static_cast<std::int64_t>(n));
    std::int64_t fine = lcm_all;
    while (fine < cfg.steps) fine += lcm_all;
    const int steps_fine = static_cast<int>(fine);
    const double dt = T1 / steps_fine;
    const double sq = std::sqrt(dt);
    const double floor_value = 1e-12 * x0;

    const std::size_t n_counts = rebalance_counts.size();
    Eigen::MatrixXd sq_err(cfg.n, static_cast<Eigen::Index>(n_counts));
    std::vector<int> stride(n_counts);
    for (std::size_t c = 0; c < n_counts; ++c)
        stride[c] = steps_fine / rebalance_counts[c];

    struct Book {
        double v, phi, alpha, g_prev;
    };

    parallel_paths(cfg.n, cfg.workers, [&](std::int64_t i) {
        std::vector<double> z(static_cast<std::size_t>(steps_fine));
        draw_normals(cfg, kSaltGamma, i, z);
        std::vector<Book> book(n_counts);
        const double f0 = f.value(0.0, x0);
        const double g0 = g.value(0.0, x0);
        auto positions = [&](double t, double x, double& phi, double& alpha) {
            if (f.exact_linear()) {
                alpha = 0.0;
                phi = 1.0;
                return;
            }
            const double gg = g.gamma(t, x);
            if (std::abs(gg) < 1e-8)
                throw numeric_error("instrument second derivative below 1e-8 at x=" +
                                    std::to_string(x) + "; the position ratio is ill-conditioned");
            alpha = f.gamma(t, x) / gg;
            phi = f.delta(t, x) - alpha * g.delta(t, x);
        };
        for (std::size_t c = 0; c < n_counts; ++c) {
            book[c].v = f0;
            book[c].g_prev = g0;
            positions(0.0, x0, book[c].phi, book[c].alpha);
        }
        double x = x0;
        std::vector<double> xr(n_counts, x0);  // asset level at each book's last rebalance
        for (int k = 0; k < steps_fine; ++k) {
            const double s = sigma(x);
            x = fold_min_positive(x + x * s * sq * z[static_cast<std::size_t>(k)], floor_value);
            const int idx = k + 1;
            const double t = idx * dt;
            for (std::size_t c = 0; c < n_counts; ++c) {
                if (idx % stride[c] != 0) continue;
                const double g_now = g.value(t, x);
                book[c].v += book[c].phi * (x - xr[c]) + book[c].alpha * (g_now - book[c].g_prev);
                book[c].g_prev = g_now;
                xr[c] = x;
                if (idx < steps_fine) positions(t, x, book[c].phi, book[c].alpha);
            }
        }
        const double tgt = target(x);
        for (std::size_t c = 0; c < n_counts; ++c) {
            const double e = book[c].v - tgt;
            sq_err(i, static_cast<Eigen::Index>(c)) = e * e;
        }
    });

    GammaReport rep;
    rep.rebalances = rebalance_counts;
    rep.rms_error.resize(static_cast<Eigen::Index>(n_counts));
    std::vector<double> logn(n_counts), loge(n_counts);
    for (std::size_t c = 0; c < n_counts; ++c) {
        const Eigen::VectorXd col = sq_err.col(static_cast<Eigen::Index>(c));
        const double ms = pairwise_sum(std::span<const double>(
                              col.data(), static_cast<std::size_t>(col.size()))) /
                          static_cast<double>(cfg.n);
        rep.rms_error[static_cast<Eigen::Index>(c)] = std::sqrt(ms);
        logn[c] = std::log(static_cast<double>(rebalance_counts[c]));
        loge[c] = std::log(std::max(rep.rms_error[static_cast<Eigen::Index>(c)], 1e-300));
    }
    rep.slope = n_counts >= 2 ? ls_slope(logn, loge) : 0.0;
    return rep;
}

}  // namespace rh
