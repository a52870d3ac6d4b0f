#include "rh/analytic.hpp"

#include <cmath>

#include "rh/numerics.hpp"

namespace rh {

namespace {
void check_bs_args(double x, double strike, double sigma, double tau) {
    if (!(x > 0.0) || !(strike > 0.0))
        throw validation_error("analytic: lognormal forms need positive spot and strike");
    if (!(sigma >= 0.0)) throw validation_error("analytic: negative volatility");
    if (!(tau >= 0.0)) throw validation_error("analytic: negative time to maturity");
}
}  // namespace

double bs_call(double x, double strike, double r, double sigma, double tau) {
    check_bs_args(x, strike, sigma, tau);
    const double sq = sigma * std::sqrt(tau);
    // Deterministic limit (tau = 0 or sigma = 0): discounted forward intrinsic.
    if (sq == 0.0) return std::max(x - strike * std::exp(-r * tau), 0.0);
    const double d1 = (std::log(x / strike) + (r + 0.5 * sigma * sigma) * tau) / sq;
    const double d2 = d1 - sq;
    return x * norm_cdf(d1) - strike * std::exp(-r * tau) * norm_cdf(d2);
}

double bs_put(double x, double strike, double r, double sigma, double tau) {
    // Parity keeps the two forms consistent to machine precision.
    return bs_call(x, strike, r, sigma, tau) - x + strike * std::exp(-r * tau);
}

double bs_digital(double x, double strike, double r, double sigma, double tau) {
    check_bs_args(x, strike, sigma, tau);
    const double sq = sigma * std::sqrt(tau);
    if (sq == 0.0) return x * std::exp(r * tau) >= strike ? std::exp(-r * tau) : 0.0;
    const double d2 = (std::log(x / strike) + (r - 0.5 * sigma * sigma) * tau) / sq;
    return std::exp(-r * tau) * norm_cdf(d2);
}

double bs_call_delta(double x, double strike, double r, double sigma, double tau) {
    check_bs_args(x, strike, sigma, tau);
    const double sq = sigma * std::sqrt(tau);
    if (sq == 0.0) return x * std::exp(r * tau) >= strike ? 1.0 : 0.0;
    const double d1 = (std::log(x / strike) + (r + 0.5 * sigma * sigma) * tau) / sq;
    return norm_cdf(d1);
}

double bachelier_call(double x, double strike, double sigma, double tau) {
    if (!(sigma >= 0.0)) throw validation_error("analytic: negative volatility");
    if (!(tau >= 0.0)) throw validation_error("analytic: negative time to maturity");
    if (sigma == 0.0 || tau == 0.0) return std::max(x - strike, 0.0);
    const double s = sigma * std::sqrt(tau);
    const double d = (x - strike) / s;
    return (x - strike) * norm_cdf(d) + s * norm_pdf(d);
}

double margrabe_exchange(double a, double b, double vol, double tau) {
    if (!(a > 0.0) || !(b > 0.0))
        throw validation_error("analytic: exchange form needs positive asset values");
    if (!(vol >= 0.0) || !(tau >= 0.0))
        throw validation_error("analytic: exchange form needs vol, tau >= 0");
    if (vol == 0.0 || tau == 0.0) return std::max(a - b, 0.0);
    const double sq = vol * std::sqrt(tau);
    const double d1 = std::log(a / b) / sq + 0.5 * sq;
    const double d2 = d1 - sq;
    return a * norm_cdf(d1) - b * norm_cdf(d2);
}

double brownian_constrained_price(const Payoff& g, const ConstraintSet& K, double x0,
                                  double sigma, double T) {
    if (K.dim() != 1) throw validation_error("analytic: constraint must be one-dimensional");
    if (!(sigma > 0.0)) throw validation_error("analytic: singular volatility");
    if (!(T >= 0.0)) throw validation_error("analytic: negative horizon");
    if (!std::isfinite(x0)) throw validation_error("analytic: spot must be finite");

    // Divergence of the lift is x-independent; detect it before integrating.
    if (g.slope_pos() > K.hi1() || g.slope_neg() < K.lo1()) return kInf;
    if (T == 0.0) return facelift_amount(g, K, x0);

    const double s = sigma * std::sqrt(T);
    const auto integrand = [&](double z) {
        return facelift_amount(g, K, x0 + s * z) * norm_pdf(z);
    };
    // The lift grows at most linearly, so +-12 standard deviations truncate
    // far below any tolerance in play here.
    const double scale = 1.0 + std::abs(facelift_amount(g, K, x0));
    return integrate(integrand, -12.0, 12.0, 1e-12 * scale);
}

}  // namespace rh
