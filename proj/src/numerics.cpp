#include "rh/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace rh {

// ---------------------------------------------------------------------------
// Normal distribution
// ---------------------------------------------------------------------------

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kSqrt2Pi = 2.5066282746310002;
}  // namespace

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double inv_norm_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -kInf;
        if (p == 1.0) return kInf;
        throw validation_error("inv_norm_cdf: argument must lie in [0,1]");
    }
    // Rational approximations (relative error ~1e-9), then one Halley step.
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley polish against the forward CDF.
    const double e = norm_cdf(x) - p;
    const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

double exp_moment(double c, double a, double b) {
    if (!(b > a)) return 0.0;
    return std::exp(0.5 * c * c) * (norm_cdf(b - c) - norm_cdf(a - c));
}

// ---------------------------------------------------------------------------
// Deterministic reductions
// ---------------------------------------------------------------------------

namespace {
double pairwise_sum_impl(const double* v, std::size_t n) {
    if (n <= 32) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum_impl(v, half) + pairwise_sum_impl(v + half, n - half);
}
}  // namespace

double pairwise_sum(std::span<const double> v) {
    return pairwise_sum_impl(v.data(), v.size());
}

MeanVar mean_sd(std::span<const double> v) {
    MeanVar r;
    const std::size_t n = v.size();
    if (n == 0) return r;
    r.mean = pairwise_sum(v) / static_cast<double>(n);
    if (n == 1) return r;
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = v[i] - r.mean;
        dev[i] = d * d;
    }
    r.sd = std::sqrt(pairwise_sum(dev) / static_cast<double>(n - 1));
    return r;
}

// ---------------------------------------------------------------------------
// Interpolation
// ---------------------------------------------------------------------------

double interp_linear(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double xq) {
    const Eigen::Index n = x.size();
    if (n == 0 || y.size() != n) throw validation_error("interp_linear: bad table sizes");
    if (n == 1 || xq <= x[0]) return y[0];
    if (xq >= x[n - 1]) return y[n - 1];
    const double* first = x.data();
    const double* it = std::upper_bound(first, first + n, xq);
    const Eigen::Index j = static_cast<Eigen::Index>(it - first);  // x[j-1] <= xq < x[j]
    const double t = (xq - x[j - 1]) / (x[j] - x[j - 1]);
    const double y0 = y[j - 1], y1 = y[j];
    // Infinite table values are legitimate (diverging prices); a query strictly
    // inside a segment touching an infinite node reports that infinity instead
    // of the 0 * inf = nan the blend would produce.
    if (y0 == y1) return y0;
    if (std::isinf(y0) && !std::isinf(y1)) return t < 1.0 ? y0 : y1;
    if (std::isinf(y1) && !std::isinf(y0)) return t > 0.0 ? y1 : y0;
    return y0 + t * (y1 - y0);
}

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

double bisect_root(const std::function<double(double)>& f, const BracketOptions& opt) {
    double lo = opt.lo, hi = opt.hi;
    if (!(lo > 0.0 && hi > lo)) throw validation_error("bisect_root: bracket must satisfy 0 < lo < hi");
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    // Widen geometrically until a sign change appears.
    while (flo * fhi > 0.0) {
        bool moved = false;
        if (lo > opt.lo_min) {
            lo = std::max(opt.lo_min, lo * 0.5);
            flo = f(lo);
            moved = true;
            if (flo == 0.0) return lo;
            if (flo * fhi <= 0.0) break;
        }
        if (hi < opt.hi_max) {
            hi = std::min(opt.hi_max, hi * 2.0);
            fhi = f(hi);
            moved = true;
            if (fhi == 0.0) return hi;
        }
        if (!moved) {
            std::ostringstream os;
            os << "bisect_root: no sign change for " << opt.what << " in ["
               << opt.lo_min << ", " << opt.hi_max << "]";
            throw numeric_error(os.str());
        }
    }
    for (int it = 0; it < opt.max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= opt.rel_tol * std::max(std::abs(mid), opt.lo_min)) return mid;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

double bisect_on(const std::function<double(double)>& f, double lo, double hi,
                 double abs_tol, int max_iter) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) throw numeric_error("bisect_on: endpoints do not bracket a sign change");
    for (int it = 0; it < max_iter && hi - lo > abs_tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Scalar maximization
// ---------------------------------------------------------------------------

MaxResult max_on_interval(const std::function<double(double)>& f, double a, double b,
                          std::span<const double> candidates, int n_scan) {
    if (!(b >= a)) throw validation_error("max_on_interval: empty interval");
    MaxResult best;
    auto consider = [&](double u) {
        const double v = f(u);
        if (v > best.value) {
            best.value = v;
            best.arg = u;
        }
    };
    n_scan = std::max(n_scan, 3);
    const double h = (b - a) / static_cast<double>(n_scan - 1);
    for (int i = 0; i < n_scan; ++i) consider(a + h * i);
    for (double u : candidates)
        if (u >= a && u <= b) consider(u);
    if (h == 0.0) return best;

    // Golden-section refinement around the incumbent.
    double lo = std::max(a, best.arg - h);
    double hi = std::min(b, best.arg + h);
    const double phi = 0.6180339887498949;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 90 && hi - lo > 1e-14 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        }
    }
    consider(x1);
    consider(x2);
    consider(0.5 * (lo + hi));
    return best;
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

const GaussHermite& gauss_hermite(int n) {
    if (n < 1) throw validation_error("gauss_hermite: node count must be positive");
    static std::map<int, GaussHermite> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    // Probabilists' Hermite recurrence: diagonal 0, off-diagonal sqrt(k).
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n > 1 ? n - 1 : 0);
    for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success)
        throw numeric_error("gauss_hermite: tridiagonal eigensolve failed");

    GaussHermite rule;
    rule.z = es.eigenvalues();
    rule.w.resize(n);
    for (int i = 0; i < n; ++i) {
        const double q0 = es.eigenvectors()(0, i);
        rule.w[i] = q0 * q0;  // total mass 1 in the probabilists' normalization
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

double gh_expect(const std::function<double(double)>& f, double tol, int max_nodes) {
    double prev = 0.0;
    bool have_prev = false;
    double achieved_gap = kInf;
    for (int n = 31; n <= max_nodes; n = 2 * n + 1) {
        const GaussHermite& rule = gauss_hermite(n);
        std::vector<double> terms(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) terms[static_cast<std::size_t>(i)] = rule.w[i] * f(rule.z[i]);
        const double cur = pairwise_sum(terms);
        if (have_prev) {
            achieved_gap = std::abs(cur - prev);
            if (achieved_gap <= tol * (1.0 + std::abs(cur))) return cur;
        }
        prev = cur;
        have_prev = true;
    }
    std::ostringstream os;
    os << "gh_expect: quadrature did not reach tolerance " << tol << " at " << max_nodes
       << " nodes; achieved estimate " << prev << " with successive gap " << achieved_gap;
    throw numeric_error(os.str());
}

namespace {
double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                   double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol,
                 int max_depth) {
    if (a == b) return 0.0;
    if (!(std::isfinite(a) && std::isfinite(b)))
        throw validation_error("integrate: endpoints must be finite");
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// ---------------------------------------------------------------------------
// Regression helper
// ---------------------------------------------------------------------------

double ls_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw validation_error("ls_slope: need two or more points");
    const double n = static_cast<double>(x.size());
    const double mx = pairwise_sum(x) / n, my = pairwise_sum(y) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw validation_error("ls_slope: degenerate abscissae");
    return sxy / sxx;
}

}  // namespace rh
