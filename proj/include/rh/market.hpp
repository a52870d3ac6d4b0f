#pragma once

#include <span>

#include <Eigen/Dense>

#include "rh/common.hpp"

namespace rh {

// Single risky asset with constant coefficients, in one of two flavors:
//   Geometric:   dX = mu X dt + sigma X dW   (X > 0)
//   Arithmetic:  dX = mu dt + sigma dW       (X real)
// plus a money market account growing at rate r.
enum class Flavor { Geometric, Arithmetic };

struct MarketModel {
    double spot = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    double r = 0.0;
    Flavor flavor = Flavor::Geometric;

    // Raises validation_error on non-finite fields, sigma <= 0 (singular
    // volatility), or non-positive spot in the geometric flavor.
    void validate() const;
};

// Instantaneous market price of risk at asset level x:
//   Geometric:  (mu - r)/sigma          (state-independent)
//   Arithmetic: (mu - r x)/sigma
double risk_premium(const MarketModel& m, double x);

// exp(-r t); t must be non-negative and finite.
double discount_factor(double r, double t);

// Right-continuous piecewise-constant function of time: value[i] applies on
// [t[i], t[i+1]), the last value extending to +inf. Breakpoints start at 0
// and increase strictly.
struct PiecewiseSchedule {
    Eigen::VectorXd t;
    Eigen::VectorXd value;

    static PiecewiseSchedule constant(double v);
    void validate() const;
    double at(double s) const;
};

// Exponential change of measure removing a drift tilt nu from the dynamics:
// the shifted premium lambda^nu(s) = lambda - nu(s)/sigma_tilde drives the
// stochastic exponential whose terminal value reweights paths.
struct MeasureChange {
    double lambda = 0.0;       // base risk premium
    double sigma_tilde = 0.0;  // diffusion coefficient scaling the tilt
    PiecewiseSchedule nu = PiecewiseSchedule::constant(0.0);

    void validate() const;
    double lambda_at(double s) const;
};

// Terminal density of the changed measure along one discretized Brownian
// path with increments dW on a uniform grid of spacing dt, evaluating the
// premium at the left endpoint of each step:
//   exp( -sum_k lambda_k dW_k - 1/2 sum_k lambda_k^2 dt ).
double density_along_path(const MeasureChange& mc, std::span<const double> dW, double dt);

// Time integral of per-step penalty values on a uniform grid: sum(v_k) * dt.
// Propagates +inf; raises validation_error on NaN or negative entries.
double dual_penalty(std::span<const double> penalty_values, double dt);

}  // namespace rh
