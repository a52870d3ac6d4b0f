#include "rh/payoff.hpp"

#include <cmath>
#include <utility>

#include "rh/csv.hpp"
#include "rh/numerics.hpp"

namespace rh {

namespace {
void check_strike(double k) {
    if (!std::isfinite(k)) throw validation_error("payoff: strike must be finite");
}
}  // namespace

Payoff Payoff::call(double strike) {
    check_strike(strike);
    return Payoff(PayoffKind::Call, strike);
}

Payoff Payoff::put(double strike) {
    check_strike(strike);
    return Payoff(PayoffKind::Put, strike);
}

Payoff Payoff::digital(double strike) {
    check_strike(strike);
    return Payoff(PayoffKind::Digital, strike);
}

Payoff Payoff::linear() { return Payoff(PayoffKind::Linear, 0.0); }

Payoff Payoff::tabulated(Eigen::VectorXd x, Eigen::VectorXd value) {
    if (x.size() != value.size() || x.size() < 2)
        throw validation_error("payoff: tabulated claim needs >= 2 nodes with matching values");
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(value[i]))
            throw validation_error("payoff: tabulated nodes must be finite");
        if (i > 0 && !(x[i] > x[i - 1]))
            throw validation_error("payoff: tabulated abscissae must be strictly increasing");
    }
    Payoff p(PayoffKind::Tabulated, 0.0);
    p.grid_ = std::move(x);
    p.values_ = std::move(value);
    return p;
}

Payoff Payoff::tabulated_from_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::size_t cx = t.column("x"), cv = t.column("value");
    const Eigen::Index n = static_cast<Eigen::Index>(t.rows.size());
    Eigen::VectorXd x(n), v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x[i] = t.rows[static_cast<std::size_t>(i)][cx];
        v[i] = t.rows[static_cast<std::size_t>(i)][cv];
    }
    return tabulated(std::move(x), std::move(v));
}

double Payoff::operator()(double x) const {
    switch (kind_) {
        case PayoffKind::Call:
            return std::max(x - strike_, 0.0);
        case PayoffKind::Put:
            return std::max(strike_ - x, 0.0);
        case PayoffKind::Digital:
            return x >= strike_ ? 1.0 : 0.0;
        case PayoffKind::Linear:
            return x;
        case PayoffKind::Tabulated:
            return interp_linear(grid_, values_, x);
    }
    throw validation_error("payoff: unknown kind");
}

double Payoff::strike() const {
    if (kind_ == PayoffKind::Tabulated || kind_ == PayoffKind::Linear)
        throw validation_error("payoff: kind has no strike");
    return strike_;
}

const Eigen::VectorXd& Payoff::grid() const {
    if (kind_ != PayoffKind::Tabulated) throw validation_error("payoff: not tabulated");
    return grid_;
}

const Eigen::VectorXd& Payoff::values() const {
    if (kind_ != PayoffKind::Tabulated) throw validation_error("payoff: not tabulated");
    return values_;
}

double Payoff::slope_pos() const {
    switch (kind_) {
        case PayoffKind::Call:
        case PayoffKind::Linear:
            return 1.0;
        default:
            return 0.0;
    }
}

double Payoff::slope_neg() const {
    switch (kind_) {
        case PayoffKind::Put:
            return -1.0;
        case PayoffKind::Linear:
            return 1.0;
        default:
            return 0.0;
    }
}

double Payoff::growth_exponent() const {
    switch (kind_) {
        case PayoffKind::Call:
        case PayoffKind::Linear:
            return 1.0;
        default:
            return 0.0;
    }
}

std::vector<double> Payoff::kinks() const {
    switch (kind_) {
        case PayoffKind::Call:
        case PayoffKind::Put:
        case PayoffKind::Digital:
            return {strike_};
        case PayoffKind::Linear:
            return {};
        case PayoffKind::Tabulated: {
            std::vector<double> k(grid_.data(), grid_.data() + grid_.size());
            return k;
        }
    }
    return {};
}

}  // namespace rh
