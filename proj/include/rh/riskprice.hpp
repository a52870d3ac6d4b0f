#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rh/constraints.hpp"
#include "rh/csv.hpp"
#include "rh/market.hpp"
#include "rh/mc.hpp"
#include "rh/payoff.hpp"

namespace rh {

// Risk-constrained pricing: covering a claim with a prescribed probability
// (quantile hedging), bounding expected shortfall under convex losses, and an
// evaluable dual lower bound for super-hedging under position constraints.
//
// The probability-constrained and shortfall operations work in a geometric
// model with constant coefficients, where the terminal asset and the
// auxiliary martingale are joint lognormals driven by one standard normal
// draw. All expectations reduce to one-dimensional integrals in that draw.

// ---------------------------------------------------------------------------
// Dual objective for the probability-of-success constraint
// ---------------------------------------------------------------------------

// w(t, x, q) = E[(Q_T - discounted claim)^+] under the pricing measure, with
// Q starting at q and driven by the risk premium. The positive part is split
// at its sign changes in the driving draw; analytic payoffs then integrate
// exactly piece by piece, and tabulated payoffs use adaptive quadrature with
// the given tolerance.
double dual_objective_w(const MarketModel& model, const Payoff& claim, double t, double x,
                        double q, double T, double tol = 3e-4);

// ---------------------------------------------------------------------------
// Quantile hedging
// ---------------------------------------------------------------------------

struct QuantileResult {
    double price = 0.0;        // minimal capital covering the claim with probability p
    double q_bar = 0.0;        // root of the success-probability condition
    double achieved_p = 0.0;   // success probability at q_bar (quadrature)
    bool atom_flag = false;    // probability jumped across the root: use success_ratio_price
    // Success region in terminal asset space: the claim is covered exactly on
    // these intervals. Used by the hedge verification.
    std::vector<std::pair<double, double>> success_x;
};

// Minimal initial capital y such that some admissible strategy achieves
// Y_T >= claim with probability at least p. Root-finds the auxiliary start q
// on the monotone success-probability map, then prices the claim restricted
// to the success set. p = 0 and p = 1 return their exact boundary values.
QuantileResult quantile_price(const MarketModel& model, const Payoff& claim, double T, double p);

// Price at (t, x) of the claim restricted to a union of terminal intervals,
// i.e. E[discount * claim(X_T) 1{X_T in region} | X_t = x] under the pricing
// measure. Closed Gaussian pieces for analytic payoffs; quadrature otherwise.
double restricted_claim_price(const MarketModel& model, const Payoff& claim,
                              const std::vector<std::pair<double, double>>& region, double t,
                              double x, double T);

// Hedging position (finite-difference delta of restricted_claim_price) for
// verifying the quantile solution by simulation.
DeltaSource restricted_claim_delta(const MarketModel& model, const Payoff& claim,
                                   const std::vector<std::pair<double, double>>& region,
                                   double T);

// Terminal value of the restricted claim (what the quantile hedge delivers).
double restricted_claim_payoff(const Payoff& claim,
                               const std::vector<std::pair<double, double>>& region, double x);

// ---------------------------------------------------------------------------
// Optimal success ratio under a budget (Neyman-Pearson structure)
// ---------------------------------------------------------------------------

struct SuccessRatioResult {
    double c_hat = 0.0;         // likelihood-ratio threshold
    double gamma_hat = 0.0;     // randomization on the threshold atom (0 when atomless)
    double attained_ratio = 0.0;  // expected success ratio under the physical measure
    double used_budget = 0.0;
    bool degenerate = false;    // budget covered the full price: ratio 1, no threshold
};

// Maximizes the expected success ratio subject to the hedging budget y.
// Bisection on the threshold of the likelihood-ratio test between the
// physical measure and the claim-weighted pricing measure; the randomization
// weight makes the budget bind when the threshold event carries mass.
SuccessRatioResult success_ratio_price(const MarketModel& model, const Payoff& claim, double T,
                                       double y);

// ---------------------------------------------------------------------------
// Quadratic expected-shortfall pricing
// ---------------------------------------------------------------------------

struct ShortfallQuadResult {
    double price = 0.0;
    double q_bar = 0.0;          // auxiliary root; +inf at p = 0, 0 at the lower endpoint
    double achieved_risk = 0.0;  // E[((claim - Y_T)^+)^2] at the optimum (quadrature)
};

// Minimal capital subject to E[((claim - Y_T)^+)^2] <= -p, for p in
// [-E[claim^2], 0] (zero-rate model). The auxiliary root q solves
// -p = E[ (2 Q_q(T))^{-2} ∧ claim(X_T)^2 ] under the physical measure; the
// price is the pricing-measure value of (claim - (2 Q_q)^{-1})^+.
ShortfallQuadResult shortfall_price_quadratic(const MarketModel& model, const Payoff& claim,
                                              double T, double p);

// Terminal wealth attained by the optimal quadratic-shortfall hedge, as a
// function of the terminal asset level (for verification simulations).
double shortfall_quadratic_attained(const MarketModel& model, const Payoff& claim, double T,
                                    double q_bar, double x_T);

// ---------------------------------------------------------------------------
// General convex-loss shortfall on scenario samples
// ---------------------------------------------------------------------------

class LossFunction {
  public:
    enum class Kind { Quadratic, PowerP };

    static LossFunction quadratic();          // l(z) = z^2
    static LossFunction power(double p);      // l(z) = z^p, p > 1

    Kind kind() const { return kind_; }
    double exponent() const { return exponent_; }
    double operator()(double z) const;        // loss value, z >= 0
    double grad(double z) const;              // l'(z)
    double inv_grad(double y) const;          // (l')^{-1}(y), y >= 0

  private:
    LossFunction(Kind k, double e) : kind_(k), exponent_(e) {}
    Kind kind_;
    double exponent_;
};

// Equally weighted scenario samples of the claim G >= 0 and the discounted
// pricing density beta_T dQ/dP, both under the physical measure.
struct ScenarioSet {
    Eigen::VectorXd claim;     // G per scenario
    Eigen::VectorXd density;   // beta_T dQ/dP per scenario

    void validate() const;
    static ScenarioSet from_csv(const std::string& path);  // columns G, density
};

struct ShortfallSolution {
    double c_hat = 0.0;
    Eigen::VectorXd phi;       // optimal covered fraction per scenario, in [0,1]
    double achieved_budget = 0.0;
    double achieved_risk = 0.0;  // E[l((1 - phi) G)]
};

// Cheapest partial hedge meeting budget y: covers the fraction
// phi(c) = 1{G>0} (1 - I(c * density)/G ∧ 1) per scenario, with the
// multiplier c chosen so the pricing cost of the covered part equals y.
ShortfallSolution shortfall_optimal_ratio(const LossFunction& loss, const ScenarioSet& scenarios,
                                          double y);

// ---------------------------------------------------------------------------
// Dual lower bound for constrained super-hedging
// ---------------------------------------------------------------------------

struct DualBoundEntry {
    double bound = 0.0;      // E[discounted claim under the shifted measure] - penalty
    double std_error = 0.0;  // MC error of the expectation term
    double penalty = 0.0;    // exact time integral of the support function
};

struct DualBoundReport {
    std::vector<DualBoundEntry> entries;  // one per candidate control schedule
    int best_index = -1;
    double best_bound = -kInf;
    // Columns schedule_id, bound, stderr, penalty.
    CsvTable to_csv_table() const;
};

// Evaluates the penalized dual objective for each candidate drift control:
// simulate the discounted asset with drift shifted by the schedule, take the
// sample mean of the discounted claim, subtract the exact support-function
// penalty. Every entry is a valid lower bound on the constrained price;
// the report singles out the largest. Controls must have finite penalty.
DualBoundReport dual_lower_bound(const MarketModel& model, const Payoff& claim,
                                 const ConstraintSet& K,
                                 const std::vector<PiecewiseSchedule>& controls, double T,
                                 const McConfig& cfg);

}  // namespace rh
