#include "rh/market.hpp"

#include <cmath>

#include "rh/numerics.hpp"

namespace rh {

void MarketModel::validate() const {
    if (!std::isfinite(spot) || !std::isfinite(mu) || !std::isfinite(sigma) || !std::isfinite(r))
        throw validation_error("market: coefficients must be finite");
    if (!(sigma > 0.0))
        throw validation_error("market: singular volatility (sigma must be positive)");
    if (flavor == Flavor::Geometric && !(spot > 0.0))
        throw validation_error("market: geometric flavor requires positive spot");
}

double risk_premium(const MarketModel& m, double x) {
    m.validate();
    if (m.flavor == Flavor::Geometric) return (m.mu - m.r) / m.sigma;
    return (m.mu - m.r * x) / m.sigma;
}

double discount_factor(double r, double t) {
    if (!std::isfinite(r) || !std::isfinite(t) || t < 0.0)
        throw validation_error("discount_factor: need finite r and t >= 0");
    return std::exp(-r * t);
}

PiecewiseSchedule PiecewiseSchedule::constant(double v) {
    PiecewiseSchedule s;
    s.t = Eigen::VectorXd::Zero(1);
    s.value = Eigen::VectorXd::Constant(1, v);
    return s;
}

void PiecewiseSchedule::validate() const {
    if (t.size() == 0 || t.size() != value.size())
        throw validation_error("schedule: need matching, non-empty breakpoints and values");
    if (t[0] != 0.0) throw validation_error("schedule: first breakpoint must be 0");
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || !std::isfinite(value[i]))
            throw validation_error("schedule: entries must be finite");
        if (i > 0 && !(t[i] > t[i - 1]))
            throw validation_error("schedule: breakpoints must increase strictly");
    }
}

double PiecewiseSchedule::at(double s) const {
    if (!(s >= 0.0)) throw validation_error("schedule: negative time");
    Eigen::Index i = t.size() - 1;
    while (i > 0 && t[i] > s) --i;
    return value[i];
}

void MeasureChange::validate() const {
    if (!std::isfinite(lambda)) throw validation_error("measure change: premium must be finite");
    if (!(sigma_tilde > 0.0) || !std::isfinite(sigma_tilde))
        throw validation_error("measure change: singular volatility (sigma_tilde must be positive)");
    nu.validate();
}

double MeasureChange::lambda_at(double s) const { return lambda - nu.at(s) / sigma_tilde; }

double density_along_path(const MeasureChange& mc, std::span<const double> dW, double dt) {
    mc.validate();
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw validation_error("density_along_path: need positive finite dt");
    // Accumulate the log-density; exponentiate once for stability.
    double log_density = 0.0;
    for (std::size_t k = 0; k < dW.size(); ++k) {
        const double lam = mc.lambda_at(static_cast<double>(k) * dt);
        log_density += -lam * dW[k] - 0.5 * lam * lam * dt;
    }
    return std::exp(log_density);
}

double dual_penalty(std::span<const double> penalty_values, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw validation_error("dual_penalty: need positive finite dt");
    double sum = 0.0;
    for (double v : penalty_values) {
        if (std::isnan(v) || v < 0.0)
            throw validation_error("dual_penalty: penalty values must be >= 0");
        sum += v;  // +inf propagates
    }
    return sum * dt;
}

}  // namespace rh
