#include "rh/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rh/numerics.hpp"

namespace rh {

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

ConstraintSet ConstraintSet::full_space(int dim) {
    if (dim < 1) throw validation_error("constraints: dimension must be positive");
    return ConstraintSet(ConstraintKind::FullSpace, dim);
}

ConstraintSet ConstraintSet::box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
    if (lo.size() != hi.size() || lo.size() < 1)
        throw validation_error("constraints: box bounds must match and be non-empty");
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        if (std::isnan(lo[i]) || std::isnan(hi[i]))
            throw validation_error("constraints: box bounds must not be NaN");
        if (!(lo[i] <= 0.0 && 0.0 <= hi[i]))
            throw validation_error("constraints: box must contain the origin (lo <= 0 <= hi)");
    }
    ConstraintSet k(ConstraintKind::Box, static_cast<int>(lo.size()));
    k.lo_ = std::move(lo);
    k.hi_ = std::move(hi);
    return k;
}

ConstraintSet ConstraintSet::cone(std::vector<SignPattern> pattern) {
    if (pattern.empty()) throw validation_error("constraints: cone pattern must be non-empty");
    ConstraintSet k(ConstraintKind::Cone, static_cast<int>(pattern.size()));
    k.pattern_ = std::move(pattern);
    return k;
}

ConstraintSet ConstraintSet::subspace(std::vector<bool> zeroed) {
    if (zeroed.empty()) throw validation_error("constraints: subspace mask must be non-empty");
    ConstraintSet k(ConstraintKind::Subspace, static_cast<int>(zeroed.size()));
    k.zeroed_ = std::move(zeroed);
    return k;
}

// ---------------------------------------------------------------------------
// Support function and membership
// ---------------------------------------------------------------------------

double ConstraintSet::support(const Eigen::VectorXd& zeta) const {
    if (zeta.size() != dim_) throw validation_error("constraints: direction has wrong dimension");
    for (Eigen::Index i = 0; i < zeta.size(); ++i)
        if (std::isnan(zeta[i])) throw validation_error("constraints: direction must not be NaN");
    switch (kind_) {
        case ConstraintKind::FullSpace: {
            for (Eigen::Index i = 0; i < zeta.size(); ++i)
                if (zeta[i] != 0.0) return kInf;
            return 0.0;
        }
        case ConstraintKind::Box: {
            double s = 0.0;
            for (Eigen::Index i = 0; i < zeta.size(); ++i) {
                // 0 * inf counts as 0: a zero component never probes the bound.
                if (zeta[i] > 0.0) {
                    if (hi_[i] == kInf) return kInf;
                    s += hi_[i] * zeta[i];
                } else if (zeta[i] < 0.0) {
                    if (lo_[i] == -kInf) return kInf;
                    s += lo_[i] * zeta[i];
                }
            }
            return s;
        }
        case ConstraintKind::Cone: {
            for (Eigen::Index i = 0; i < zeta.size(); ++i) {
                switch (pattern_[static_cast<std::size_t>(i)]) {
                    case SignPattern::Free:
                        if (zeta[i] != 0.0) return kInf;
                        break;
                    case SignPattern::NonNeg:
                        if (zeta[i] > 0.0) return kInf;
                        break;
                    case SignPattern::NonPos:
                        if (zeta[i] < 0.0) return kInf;
                        break;
                    case SignPattern::Zero:
                        break;
                }
            }
            return 0.0;
        }
        case ConstraintKind::Subspace: {
            for (Eigen::Index i = 0; i < zeta.size(); ++i)
                if (!zeroed_[static_cast<std::size_t>(i)] && zeta[i] != 0.0) return kInf;
            return 0.0;
        }
    }
    throw validation_error("constraints: unknown kind");
}

ConstraintSet::Membership ConstraintSet::contains(const Eigen::VectorXd& eta) const {
    if (eta.size() != dim_) throw validation_error("constraints: point has wrong dimension");
    Membership m;
    m.margin = kInf;
    m.direction = Eigen::VectorXd::Zero(dim_);
    auto tighten = [&](double coord_margin, Eigen::Index i, double sign) {
        if (coord_margin < m.margin) {
            m.margin = coord_margin;
            m.direction.setZero();
            m.direction[i] = sign;
        }
    };
    switch (kind_) {
        case ConstraintKind::FullSpace:
            break;
        case ConstraintKind::Box:
            for (Eigen::Index i = 0; i < dim_; ++i) {
                if (hi_[i] != kInf) tighten(hi_[i] - eta[i], i, +1.0);
                if (lo_[i] != -kInf) tighten(eta[i] - lo_[i], i, -1.0);
            }
            break;
        case ConstraintKind::Cone:
            for (Eigen::Index i = 0; i < dim_; ++i) {
                switch (pattern_[static_cast<std::size_t>(i)]) {
                    case SignPattern::Free:
                        break;
                    case SignPattern::NonNeg:
                        tighten(eta[i], i, -1.0);
                        break;
                    case SignPattern::NonPos:
                        tighten(-eta[i], i, +1.0);
                        break;
                    case SignPattern::Zero:
                        tighten(-std::abs(eta[i]), i, eta[i] > 0 ? +1.0 : -1.0);
                        break;
                }
            }
            break;
        case ConstraintKind::Subspace:
            for (Eigen::Index i = 0; i < dim_; ++i)
                if (zeroed_[static_cast<std::size_t>(i)])
                    tighten(-std::abs(eta[i]), i, eta[i] > 0 ? +1.0 : -1.0);
            break;
    }
    m.inside = m.margin >= 0.0;
    return m;
}

// ---------------------------------------------------------------------------
// Interval view of one-dimensional sets
// ---------------------------------------------------------------------------

double ConstraintSet::lo1() const {
    if (dim_ != 1) throw validation_error("constraints: interval view needs dimension 1");
    switch (kind_) {
        case ConstraintKind::FullSpace:
            return -kInf;
        case ConstraintKind::Box:
            return lo_[0];
        case ConstraintKind::Cone:
            switch (pattern_[0]) {
                case SignPattern::Free:
                    return -kInf;
                case SignPattern::NonNeg:
                    return 0.0;
                case SignPattern::NonPos:
                    return -kInf;
                case SignPattern::Zero:
                    return 0.0;
            }
            break;
        case ConstraintKind::Subspace:
            return zeroed_[0] ? 0.0 : -kInf;
    }
    throw validation_error("constraints: unknown kind");
}

double ConstraintSet::hi1() const {
    if (dim_ != 1) throw validation_error("constraints: interval view needs dimension 1");
    switch (kind_) {
        case ConstraintKind::FullSpace:
            return kInf;
        case ConstraintKind::Box:
            return hi_[0];
        case ConstraintKind::Cone:
            switch (pattern_[0]) {
                case SignPattern::Free:
                    return kInf;
                case SignPattern::NonNeg:
                    return kInf;
                case SignPattern::NonPos:
                    return 0.0;
                case SignPattern::Zero:
                    return 0.0;
            }
            break;
        case ConstraintKind::Subspace:
            return zeroed_[0] ? 0.0 : kInf;
    }
    throw validation_error("constraints: unknown kind");
}

// ---------------------------------------------------------------------------
// Additive lift
// ---------------------------------------------------------------------------

double facelift_amount(const Payoff& g, const ConstraintSet& K, double x) {
    if (K.dim() != 1) throw validation_error("facelift: constraint must be one-dimensional");
    if (!std::isfinite(x)) throw validation_error("facelift: evaluation point must be finite");
    const double lo = K.lo1(), hi = K.hi1();

    // Tail slopes of u -> g(x+u) - delta(u) are slope_pos - hi on the right
    // and slope_neg - lo on the left; a positive escape direction means the
    // sup is +inf.
    if (g.slope_pos() > hi) return kInf;
    if (g.slope_neg() < lo) return kInf;

    // Feasible shifts: u > 0 needs hi < inf, u < 0 needs lo > -inf.
    const bool up = hi != kInf;
    const bool down = lo != -kInf;
    if (!up && !down) return g(x);

    std::vector<double> cand{0.0};
    double span = 1.0 + std::abs(x);
    for (double k : g.kinks()) {
        cand.push_back(k - x);
        span = std::max(span, std::abs(k - x));
    }
    const double pad = 1.0 + 0.5 * span;
    double umin = 0.0, umax = 0.0;
    for (double c : cand) {
        umin = std::min(umin, c);
        umax = std::max(umax, c);
    }
    umin = down ? umin - pad : 0.0;
    umax = up ? umax + pad : 0.0;

    const auto h = [&](double u) {
        const double pen = u >= 0.0 ? hi * u : lo * u;
        return g(x + u) - pen;
    };
    const MaxResult r = max_on_interval(h, umin, umax, cand);
    return std::max(r.value, g(x));
}

// ---------------------------------------------------------------------------
// Multiplicative lift
// ---------------------------------------------------------------------------

double facelift_proportion(const Payoff& g, const ConstraintSet& K, double x,
                           ProportionRange range) {
    if (K.dim() != 1) throw validation_error("facelift: constraint must be one-dimensional");
    if (!(x > 0.0) || !std::isfinite(x))
        throw validation_error("facelift: multiplicative lift needs x > 0");
    const double lo = K.lo1(), hi = K.hi1();

    // Log-shift domain. The support function is finite for zeta > 0 only if
    // hi < inf, and for zeta < 0 only if lo > -inf; AsWritten additionally
    // clips to [lo, hi] itself.
    constexpr double kZCap = 40.0;  // exp(40) ~ 2.4e17: numerically "infinite"
    double zmin = (lo == -kInf) ? 0.0 : -kZCap;
    double zmax = (hi == kInf) ? 0.0 : kZCap;
    if (range == ProportionRange::AsWritten) {
        zmin = std::max(zmin, lo);
        zmax = std::min(zmax, hi);
    }
    if (zmin > zmax) return g(x);

    // Escape test: g(x e^z) e^{-hi z} ~ c x^a e^{(a-hi) z} for large z.
    if (zmax == kZCap && g.growth_exponent() > hi) return kInf;

    std::vector<double> cand{0.0};
    for (double k : g.kinks())
        if (k > 0.0) cand.push_back(std::log(k / x));
    const auto h = [&](double z) {
        const double pen = z >= 0.0 ? hi * z : lo * z;
        return std::exp(-pen) * g(x * std::exp(z));
    };
    const MaxResult r = max_on_interval(h, zmin, zmax, cand, 257);
    return std::max(r.value, g(x) * (zmin <= 0.0 && 0.0 <= zmax ? 1.0 : 0.0));
}

// ---------------------------------------------------------------------------
// Concave envelope
// ---------------------------------------------------------------------------

Eigen::VectorXd concave_envelope(const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    const Eigen::Index n = x.size();
    if (v.size() != n || n < 1) throw validation_error("concave_envelope: bad table sizes");
    for (Eigen::Index i = 1; i < n; ++i)
        if (!(x[i] > x[i - 1]))
            throw validation_error("concave_envelope: abscissae must increase strictly");

    // Upper hull by monotone chain: keep vertices with strictly decreasing
    // chord slopes; pop while the middle vertex lies on or below the chord.
    std::vector<Eigen::Index> hull;
    for (Eigen::Index i = 0; i < n; ++i) {
        while (hull.size() >= 2) {
            const Eigen::Index a = hull[hull.size() - 2], b = hull.back();
            const double cross =
                (x[b] - x[a]) * (v[i] - v[a]) - (x[i] - x[a]) * (v[b] - v[a]);
            if (cross >= 0.0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }

    Eigen::VectorXd env(n);
    std::size_t seg = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        while (seg + 1 < hull.size() && x[hull[seg + 1]] < x[i]) ++seg;
        if (seg + 1 >= hull.size()) {
            env[i] = v[hull.back()];
            continue;
        }
        const Eigen::Index a = hull[seg], b = hull[seg + 1];
        const double t = (x[i] - x[a]) / (x[b] - x[a]);
        env[i] = v[a] + t * (v[b] - v[a]);
    }
    return env;
}

// ---------------------------------------------------------------------------
// Tabulated transform claims
// ---------------------------------------------------------------------------

namespace {
Payoff make_claim(const Eigen::VectorXd& grid, Eigen::VectorXd values, const char* what) {
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw numeric_error(std::string(what) + ": transform diverges on the grid; no finite claim exists");
    return Payoff::tabulated(grid, std::move(values));
}
}  // namespace

Payoff facelift_amount_claim(const Payoff& g, const ConstraintSet& K, const Eigen::VectorXd& grid) {
    Eigen::VectorXd v(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) v[i] = facelift_amount(g, K, grid[i]);
    return make_claim(grid, std::move(v), "facelift_amount_claim");
}

Payoff facelift_proportion_claim(const Payoff& g, const ConstraintSet& K, const Eigen::VectorXd& grid,
                                 ProportionRange range) {
    Eigen::VectorXd v(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) v[i] = facelift_proportion(g, K, grid[i], range);
    return make_claim(grid, std::move(v), "facelift_proportion_claim");
}

Payoff concave_envelope_claim(const Payoff& g, const Eigen::VectorXd& grid) {
    Eigen::VectorXd v(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) v[i] = g(grid[i]);
    return Payoff::tabulated(grid, concave_envelope(grid, v));
}

}  // namespace rh
