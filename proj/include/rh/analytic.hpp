#pragma once

#include "rh/constraints.hpp"
#include "rh/payoff.hpp"

namespace rh {

// European closed forms in the geometric flavor (lognormal terminal law).
// sigma = 0 or tau = 0 returns the deterministic limit; strike must be positive.
double bs_call(double x, double strike, double r, double sigma, double tau);
double bs_put(double x, double strike, double r, double sigma, double tau);
// Cash digital paying 1_{X_T >= strike}.
double bs_digital(double x, double strike, double r, double sigma, double tau);
// Call hedge ratio d/dx of bs_call.
double bs_call_delta(double x, double strike, double r, double sigma, double tau);

// Arithmetic-flavor call E[(X_T - strike)^+] with X_T ~ N(x, sigma^2 tau)
// (zero rates): (x-k) Phi(d) + sigma sqrt(tau) phi(d), d = (x-k)/(sigma sqrt(tau)).
double bachelier_call(double x, double strike, double sigma, double tau);

// Price of an option to exchange one driftless lognormal asset for another
// when a single Brownian factor drives both, so only the volatility spread
// matters: a Phi(d1) - b Phi(d2) with d1,2 = [ln(a/b) +- vol^2 tau/2]/(vol sqrt(tau)).
double margrabe_exchange(double a, double b, double vol, double tau);

// Super-hedging price of g under a one-dimensional position constraint in
// the driftless arithmetic model X_T = x0 + sigma W_T with zero rates: the
// expectation of the additive lift, E[ gHat(x0 + sigma sqrt(T) Z) ], by
// adaptive quadrature. Returns +inf when the lift diverges.
double brownian_constrained_price(const Payoff& g, const ConstraintSet& K, double x0,
                                  double sigma, double T);

}  // namespace rh
