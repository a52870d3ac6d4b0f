#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rh/common.hpp"
#include "rh/csv.hpp"
#include "rh/market.hpp"
#include "rh/mc.hpp"

namespace rh {

// Book liquidation: selling one unit of inventory through a nondecreasing
// schedule while the sale itself depresses the price. State (x1, x2, y) =
// (impacted price, fraction already sold, proceeds so far); the final block
// trade closes the position at maturity and a strictly increasing loss map
// scores the proceeds against a mean-price target.

// Strictly increasing map with full range, so every target is attainable.
class LossMap {
  public:
    enum class Kind { Identity, Cubic };

    static LossMap identity();
    static LossMap cubic();  // z^3 (odd power keeps the full range)

    Kind kind() const { return kind_; }
    double operator()(double z) const;
    double inverse(double p) const;

  private:
    explicit LossMap(Kind k) : kind_(k) {}
    Kind kind_ = Kind::Identity;
};

// Constant-coefficient impact model: dX1 = X1 mu dt + X1 sigma dW - X1 beta dL,
// with beta >= 0 the per-unit price depression of selling.
struct LiquidationModel {
    double mu = 0.0;
    double sigma = 0.0;
    double beta = 0.0;
    double k_target = 0.0;  // target mean sale price, > 0
    LossMap loss = LossMap::identity();

    void validate() const;
};

// Score of the final state: the remaining block (1 - x2) trades at the
// impacted price x1 (1 - beta (1 - x2)), and the loss map is applied to the
// total proceeds measured against the target.
double terminal_psi(double x1, double x2, double y, const LiquidationModel& model);

// Inverse of terminal_psi in the proceeds variable y (used as a boundary
// value): terminal_psi(x1, x2, psi_inverse(x1, x2, p), .) == p.
double psi_inverse(double x1, double x2, double p, const LiquidationModel& model);

// Deterministic selling schedule on a horizon [t0, T], given by its rate.
struct Schedule {
    enum class Kind { Constant, FrontLoaded, TimeGrid };

    Kind kind = Kind::Constant;
    double total = 0.0;       // amount sold over the horizon (Constant/FrontLoaded)
    double power = 1.0;       // FrontLoaded shape; 1 = uniform, larger = earlier
    PiecewiseSchedule grid;   // TimeGrid rates in absolute time

    static Schedule constant(double total);
    static Schedule front_loaded(double total, double power);
    static Schedule time_grid(PiecewiseSchedule rates);
    static Schedule time_grid_from_csv(const std::string& path);  // columns t, rate

    void validate() const;
    // Selling rate at absolute time s for a run on [t0, T].
    double rate(double s, double t0, double T) const;
    // Integral of the rate over [t0, T].
    double total_sold(double t0, double T) const;
};

struct LiquidationState {
    double x1 = 0.0;  // price
    double x2 = 0.0;  // fraction sold, in [0, 1]
    double y = 0.0;   // proceeds so far
};

struct LiquidationSim {
    Eigen::VectorXd x1_T, x2_T, y_T;  // terminal samples per path
    Eigen::VectorXd psi;              // terminal score per path
    McEstimate e_psi;
    double rejection_rate = 0.0;  // share of Euler attempts discarded for negative prices
};

// Euler simulation of the impacted price under the schedule: per step, the
// price diffuses first, the step's sale X1 dL books proceeds at that
// post-diffusion pre-impact price, then the impact knocks the price down and
// the inventory advances. Paths hitting a non-positive price are resampled
// with fresh draws; a rejection rate above 1% aborts with a numeric error.
// Antithetic pairing is not supported here (resampling would break it).
LiquidationSim simulate_schedule(const LiquidationModel& model, const Schedule& schedule,
                                 double t0, const LiquidationState& x0, double T,
                                 const McConfig& cfg);

struct PremiumEntry {
    double y_star = kInf;    // minimal proceeds start meeting the target
    double e_psi = 0.0;      // achieved E[psi] at y_star
    double std_error = 0.0;  // MC error of the psi mean at y_star
    bool feasible = true;    // schedule respected the inventory cap
};

struct PremiumReport {
    std::vector<PremiumEntry> entries;  // one per schedule
    int best_index = -1;
    double best_y = kInf;
    // Columns schedule_id, y_star, e_psi, stderr (infeasible rows carry inf).
    CsvTable to_csv_table() const;
};

// Upper bound on the liquidation premium over a parametric schedule family:
// for each feasible schedule, bisection in the proceeds start y on the
// monotone map y -> E[psi] (the terminal proceeds are affine in y, so one
// simulation per schedule is reused across the bisection), then the minimum
// over the family. Schedules selling more than the remaining inventory are
// skipped and reported infeasible.
PremiumReport premium_upper_bound(const LiquidationModel& model, double p,
                                  const std::vector<Schedule>& family, double t0,
                                  const LiquidationState& x0, double T, const McConfig& cfg);

// Boundary value at a fully liquidated book: the terminal score is
// deterministic in y there, so the bound is k_target + loss^{-1}(p) exactly.
double boundary_full_liquidated(const LiquidationModel& model, double p);

}  // namespace rh
