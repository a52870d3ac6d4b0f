#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rh/constraints.hpp"
#include "rh/csv.hpp"
#include "rh/market.hpp"
#include "rh/payoff.hpp"

namespace rh {

enum class Scheme { Explicit, Implicit, CrankNicolson };

// One-dimensional spatial grid plus a uniform time partition of [0, T].
// Geometric dynamics use a grid uniform in log-space (x = exp(xi), so x = 0
// is never a node and the left far-field plays the role of the pinned
// origin); arithmetic dynamics use a uniform level grid.
struct Grid1D {
    Eigen::VectorXd x;   // strictly increasing levels, size J >= 16
    Eigen::VectorXd xi;  // log levels when log_space
    bool log_space = false;
    int time_steps = 0;  // N >= 8
    double T = 0.0;

    // Covers center * exp(+- width) resp. center +- width where width
    // combines n_std standard deviations with the drift displacement.
    static Grid1D log_uniform(double center, double sigma, double r, double T, int J, int N,
                              double n_std = 8.0);
    static Grid1D linear_uniform(double center, double sigma, double T, int J, int N,
                                 double n_std = 8.0);
    void validate() const;
    int J() const { return static_cast<int>(x.size()); }
};

// Backward-solved value surface on a Grid1D. Row n holds the slice at
// t[n]; row N is the terminal slice.
struct PdeSolution {
    Eigen::VectorXd t;       // N+1 ascending times, t[0] = 0, t[N] = T
    Eigen::VectorXd x;       // J levels
    Eigen::MatrixXd value;   // (N+1) x J
    Eigen::MatrixXd delta;   // d value / d x, central differences
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> active;  // projection bound
    Scheme scheme = Scheme::Implicit;

    // Bilinear interpolation (linear in t and in the grid coordinate),
    // clamped to the domain.
    double value_at(double ti, double xi) const;
    double delta_at(double ti, double xi) const;

    // Long-format table t,x,value,delta,constraint_active; `time_stride`
    // thins the time axis (1 = all slices; the terminal slice is always
    // included).
    CsvTable to_csv_table(int time_stride = 1) const;
};

// Linear backward pricing equation for the model's flavor; terminal data g
// sampled on the grid, Dirichlet far-field values from the discounted
// terminal payoff. The explicit scheme sub-steps internally to stay inside
// its stability bound.
PdeSolution solve_linear(const MarketModel& m, const Payoff& g, const Grid1D& grid,
                         Scheme scheme);

// Same equation driven by a level-dependent volatility x -> sigma(x) on a
// log-space grid (geometric-style dynamics), discount rate r.
PdeSolution solve_linear_localvol(const std::function<double(double)>& sigma_of_x, double r,
                                  const Payoff& g, const Grid1D& grid, Scheme scheme);

// Position constraints act on currency amounts (additive lift) or on wealth
// proportions (multiplicative lift).
enum class ConstraintMode { Amount, Proportion };

// Super-hedging price under a one-dimensional constraint set: each backward
// step is followed by the exact slice projection matching `mode`, the
// terminal slice carries the pointwise lift of g, and `active` marks nodes
// the projection moved. When the lift diverges (payoff growth escapes the
// constraint's penalty) every value is +inf: the price is infinite, which is
// a value, not an error.
PdeSolution solve_constrained(const MarketModel& m, const Payoff& g, const ConstraintSet& K,
                              const Grid1D& grid, Scheme scheme,
                              ConstraintMode mode = ConstraintMode::Amount,
                              ProportionRange range = ProportionRange::AsWritten);

// Uncertain-volatility valuation: the generator takes the upper volatility
// where the second-order term (in log-space, D2 - D1) is non-negative and
// the lower one elsewhere. Explicit: monotone sub-stepped scheme; Implicit /
// CrankNicolson: policy iteration on the frozen-coefficient tridiagonal
// systems (tolerance 1e-10, cap 200 sweeps).
PdeSolution solve_bsb(const Payoff& g, double sigma_lo, double sigma_hi, double r,
                      const Grid1D& grid, Scheme scheme);

// Observed-order report: refines through `grids` (J, N pairs), reads the
// value at (t = 0, x = eval_x), and measures errors against the oracle when
// given, else against the finest grid. order[k] = log2(e[k-1]/e[k]).
struct ConvergencePoint {
    int J = 0, N = 0;
    double value = 0.0;
    double error = 0.0;  // NaN where undefined (no reference)
    double order = 0.0;  // NaN on the first point / undefined pairs
};
struct ConvergenceReport {
    std::vector<ConvergencePoint> points;
    bool against_oracle = false;
    bool monotone = false;  // errors non-increasing along the sequence
};
ConvergenceReport estimate_convergence_order(
    const std::function<double(int J, int N)>& price_at,
    const std::vector<std::pair<int, int>>& grids, std::optional<double> oracle,
    double rel_floor = 1e-14);

}  // namespace rh
