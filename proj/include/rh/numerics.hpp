#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rh/common.hpp"

namespace rh {

// ---------------------------------------------------------------------------
// Normal distribution
// ---------------------------------------------------------------------------

double norm_pdf(double x);
// Phi(x) via erfc; absolute error near machine precision across the real line.
double norm_cdf(double x);
// Inverse of norm_cdf on (0,1); rational initial guess polished by one
// Halley step, accurate to ~1e-15 in the bulk. Used for sampling.
double inv_norm_cdf(double p);

// E[e^{c Z} 1_{a <= Z <= b}] for Z ~ N(0,1)  =  e^{c^2/2} (Phi(b-c) - Phi(a-c)).
// Accepts infinite endpoints.
double exp_moment(double c, double a, double b);

// ---------------------------------------------------------------------------
// Deterministic reductions
// ---------------------------------------------------------------------------

// Fixed-order pairwise (tree) summation. The reduction order depends only on
// the element count, never on chunking or thread count, so accumulated sums
// are bit-identical across worker configurations.
double pairwise_sum(std::span<const double> v);

// Mean and (n-1)-denominator standard deviation via pairwise sums.
struct MeanVar {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation
};
MeanVar mean_sd(std::span<const double> v);

// ---------------------------------------------------------------------------
// Interpolation
// ---------------------------------------------------------------------------

// Piecewise-linear interpolation on a strictly increasing grid, clamped to
// the end values outside the grid. `x` and `y` must have equal size >= 1.
double interp_linear(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double xq);

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

struct BracketOptions {
    double lo = 1e-4;         // initial bracket
    double hi = 1e4;
    double lo_min = 1e-10;    // doubling stops at these limits
    double hi_max = 1e10;
    double rel_tol = 1e-8;    // relative tolerance on the root
    int max_iter = 400;
    const char* what = "root";  // used in error messages
};

// Finds a zero of a continuous function by sign-change bisection. The initial
// bracket [lo, hi] is widened geometrically (lo halved, hi doubled) until the
// sign changes; failure to bracket raises numeric_error naming `what` and the
// searched range. Works for monotone and piecewise-monotone inputs alike as
// long as a sign change exists; lands on jump locations of discontinuous
// inputs, which callers may detect via the residual.
double bisect_root(const std::function<double(double)>& f, const BracketOptions& opt = {});

// Bisection on an explicitly supplied bracket [lo, hi] with f(lo), f(hi) of
// opposite sign (absolute tolerance on the argument).
double bisect_on(const std::function<double(double)>& f, double lo, double hi,
                 double abs_tol, int max_iter = 200);

// ---------------------------------------------------------------------------
// Scalar maximization
// ---------------------------------------------------------------------------

// Maximizes f on [a, b]: coarse scan over `n_scan` uniform points plus the
// supplied candidate abscissae, then golden-section refinement around the
// incumbent. Returns the value and the maximizer. Robust for piecewise-smooth
// objectives whose kink locations are passed as candidates.
struct MaxResult {
    double value = -kInf;
    double arg = 0.0;
};
MaxResult max_on_interval(const std::function<double(double)>& f, double a, double b,
                          std::span<const double> candidates = {}, int n_scan = 129);

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

// Gauss-Hermite rule in probabilists' normalization: E[f(Z)] ~ sum w_i f(z_i)
// for Z ~ N(0,1); weights sum to 1. Nodes/weights from the symmetric
// tridiagonal Jacobi matrix (Golub-Welsch) via Eigen's eigensolver; rules are
// cached per node count.
struct GaussHermite {
    Eigen::VectorXd z;  // nodes
    Eigen::VectorXd w;  // weights, sum to 1
};
const GaussHermite& gauss_hermite(int n);

// Adaptive Gauss-Hermite estimate of E[f(Z)], doubling the node count from 31
// up to `max_nodes` until successive estimates agree to `tol` (relative to
// scale 1+|estimate|). On failure raises numeric_error carrying the achieved
// estimate and gap in its message. Returns the converged estimate.
double gh_expect(const std::function<double(double)>& f, double tol = 1e-7,
                 int max_nodes = 511);

// Adaptive Simpson integral of f over finite [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-10, int max_depth = 48);

// ---------------------------------------------------------------------------
// Regression helper
// ---------------------------------------------------------------------------

// Least-squares slope of y against x.
double ls_slope(std::span<const double> x, std::span<const double> y);

}  // namespace rh
