#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rh/common.hpp"

namespace rh {

enum class PayoffKind { Call, Put, Digital, Linear, Tabulated };

// Terminal claim g as a scalar function on the real line.
//
//   call(k):     (x - k)^+          put(k): (k - x)^+
//   digital(k):  1_{x >= k}         linear: x
//   tabulated:   piecewise-linear through given nodes, constant outside
//
// Tabulated claims clamp to their end values outside the grid so that their
// growth is bounded; analytic kinds extend by their natural formulas.
class Payoff {
public:
    static Payoff call(double strike);
    static Payoff put(double strike);
    static Payoff digital(double strike);
    static Payoff linear();
    static Payoff tabulated(Eigen::VectorXd x, Eigen::VectorXd value);
    // Loads columns x,value (strictly increasing x) from a CSV file.
    static Payoff tabulated_from_csv(const std::string& path);

    double operator()(double x) const;

    PayoffKind kind() const { return kind_; }
    double strike() const;
    const Eigen::VectorXd& grid() const;
    const Eigen::VectorXd& values() const;

    // Asymptotic linear growth rates: g(x) ~ slope_pos()*x as x -> +inf and
    // g(x) ~ slope_neg()*x as x -> -inf. Bounded payoffs report 0.
    double slope_pos() const;
    double slope_neg() const;
    // 0 when g is bounded on (0, inf), 1 when it grows linearly; drives
    // divergence tests for multiplicative (proportion-mode) lifts.
    double growth_exponent() const;
    // Abscissae where g kinks or jumps; candidates for sup searches.
    std::vector<double> kinks() const;

private:
    Payoff(PayoffKind kind, double strike) : kind_(kind), strike_(strike) {}
    PayoffKind kind_;
    double strike_ = 0.0;
    Eigen::VectorXd grid_;
    Eigen::VectorXd values_;
};

}  // namespace rh
