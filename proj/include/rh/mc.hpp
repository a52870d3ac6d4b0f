#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "rh/csv.hpp"
#include "rh/market.hpp"
#include "rh/payoff.hpp"
#include "rh/pde.hpp"

namespace rh {

// Monte Carlo engine: exact/Euler path generation, discrete hedging
// simulations used to verify pricing claims empirically, and the
// delta-gamma replication rate experiment.
//
// Determinism contract: every path draws from its own substream keyed by
// (seed, path index), so results are bit-identical for a fixed config no
// matter how many worker threads execute the batch.

struct McConfig {
    std::int64_t n = 10000;    // path count
    int steps = 100;           // time steps per path
    std::uint64_t seed = 1;
    bool antithetic = false;   // odd paths reuse the negated draws of their even partner
    int workers = 0;           // 0 = hardware concurrency; never affects results

    void validate() const;
    // Stable hash of (n, steps, seed, antithetic); workers excluded because
    // they cannot change any estimate.
    std::uint64_t fingerprint() const;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;     // sample std / sqrt(#independent samples)
    std::int64_t n = 0;         // independent samples (pairs count once under antithetics)
    std::uint64_t config_fingerprint = 0;
};

// Plain sample mean / standard error with fixed-order pairwise summation.
McEstimate estimate(const Eigen::VectorXd& samples);
// Same, but folds antithetic pairs (2k, 2k+1) into pair means first when the
// config says so, and stamps the config fingerprint.
McEstimate estimate(const Eigen::VectorXd& samples, const McConfig& cfg);

struct PathBatch {
    Eigen::VectorXd t;   // steps+1 time points
    Eigen::MatrixXd x;   // one row per path
};

// Exact stepping under the model's own drift mu: lognormal increments for
// Geometric, Gaussian increments for Arithmetic. Pass a model with mu = r to
// simulate under the pricing measure.
PathBatch simulate_paths(const MarketModel& model, double t0, double x0, double T,
                         const McConfig& cfg);

// Driftless level-dependent diffusion dX = X sigma(X) dW via Euler stepping
// (the dynamics of the gamma experiment). Paths are floored just above zero,
// where the diffusion coefficient vanishes.
PathBatch simulate_paths_localvol(const std::function<double(double)>& sigma, double x0,
                                  double T, const McConfig& cfg);

// A hedging position as a function of (t, x). Lookups outside [x_lo, x_hi]
// are clamped to the edge and counted toward the coverage statistic.
struct DeltaSource {
    std::function<double(double t, double x)> fn;
    double x_lo = -kInf;
    double x_hi = kInf;
};

DeltaSource delta_from_function(std::function<double(double, double)> fn);
// Holds a copy of the solved surface; lookups interpolate its delta columns.
DeltaSource delta_from_solution(const PdeSolution& sol);

struct HedgeReport {
    Eigen::VectorXd x_T;     // terminal asset per path
    Eigen::VectorXd y_T;     // terminal wealth per path
    Eigen::VectorXd error;   // y_T - g(x_T)
    double success_frequency = 0.0;   // freq of y_T >= g(x_T) - success_margin
    double success_std_error = 0.0;   // binomial
    double expected_squared_shortfall = 0.0;  // mean of ((g - y_T)^+)^2
    McEstimate mean_error;
    double success_margin = 0.0;
    double clamp_fraction = 0.0;      // share of delta lookups hit by edge clamping
    bool coverage_warning = false;    // clamp_fraction > 5%
    // Columns path_id, x_T, y_T, error; summary stats in the metadata.
    CsvTable to_csv_table() const;
};

// Discrete self-financing rebalancing at m uniform dates over [0, T]:
//   Y_{k+1} = Y_k + phi_k (X_{k+1} - X_k) + (Y_k - phi_k X_k)(e^{r dt} - 1).
// success_margin relaxes the success count by a fixed cash cushion, for
// verifying strategies that replicate with equality on part of the sample.
HedgeReport hedge_simulation(const DeltaSource& delta, const MarketModel& model,
                             const Payoff& claim, double y0, double T, int rebalances,
                             const McConfig& cfg, double success_margin = 0.0);

struct GammaConfig {
    int grid_points = 401;   // spatial nodes for the two pricing surfaces
    int time_steps = 256;    // time steps for the instrument-surface solve
    double n_std = 8.0;
};

struct GammaReport {
    std::vector<int> rebalances;
    Eigen::VectorXd rms_error;   // terminal L2 replication error per rebalance count
    double slope = 0.0;          // least-squares slope of log error vs log n
    CsvTable to_csv_table() const;  // columns n, rms_error
};

// Replicates the target claim (maturity T1) by trading the asset plus a
// second traded claim (maturity T2 > T1), holding the ratio of second
// derivatives as the instrument position and the delta remainder in the
// asset, rebalanced at t_i = i T1 / n. Both value surfaces come from
// zero-rate solves under the same level-dependent volatility. The terminal
// root-mean-square error decays like 1/n.
GammaReport gamma_hedge_experiment(const std::function<double(double)>& sigma,
                                   const Payoff& target, double T1, const Payoff& instrument,
                                   double T2, double x0, const std::vector<int>& rebalance_counts,
                                   const McConfig& cfg, const GammaConfig& gcfg = {});

}  // namespace rh
