#include "rh/riskprice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rh/numerics.hpp"
#include "rh/rng.hpp"

namespace rh {

namespace {

constexpr double kZMax = 12.0;   // scan range in the driving draw; the mass
                                 // beyond carries ~1e-32 and closed pieces
                                 // integrate the tails exactly anyway
constexpr int kScanPoints = 4097;

// One-dimensional lognormal engine under the pricing measure: the terminal
// asset X and the auxiliary martingale Q are exponentials of the same
// standard normal draw z. The physical measure shifts z by the risk premium.
struct LogEngine {
    double x;      // asset level at time t
    double tau;    // T - t
    double sigma;
    double r;
    double lambda;  // risk premium (mu - r) / sigma
    const Payoff* claim;

    double sq;       // sigma sqrt(tau)
    double lam_sq;   // lambda sqrt(tau)
    double drift;    // (r - sigma^2/2) tau
    double disc;     // e^{-r tau}

    LogEngine(const MarketModel& m, const Payoff& g, double t, double x_at_t, double T)
        : x(x_at_t), tau(T - t), sigma(m.sigma), r(m.r), claim(&g) {
        m.validate();
        if (m.flavor != Flavor::Geometric)
            throw validation_error("risk-constrained pricing needs the geometric flavor");
        if (!(x > 0.0) || !is_finite(x))
            throw validation_error("risk-constrained pricing needs a positive asset level");
        if (!(tau > 0.0) || !is_finite(tau))
            throw validation_error("risk-constrained pricing needs T > t");
        lambda = risk_premium(m, x);
        sq = sigma * std::sqrt(tau);
        lam_sq = lambda * std::sqrt(tau);
        drift = (r - 0.5 * sigma * sigma) * tau;
        disc = std::exp(-r * tau);
    }

    double X(double z) const { return x * std::exp(drift + sq * z); }
    // Auxiliary martingale factor with unit start: pricing-measure mean 1.
    double Q1(double z) const { return std::exp(-0.5 * lam_sq * lam_sq + lam_sq * z); }
    // Success indicator root function for auxiliary start q.
    double h(double q, double z) const { return q * Q1(z) - disc * (*claim)(X(z)); }

    double z_of_x(double level) const {
        if (level <= 0.0) return -kInf;
        if (std::isinf(level)) return kInf;
        return (std::log(level / x) - drift) / sq;
    }

    // E^Q[ disc * claim(X(z)) * 1{a <= z <= b} ] by closed Gaussian pieces;
    // deterministic quadrature for tabulated claims.
    double piece_price(double a, double b) const {
        if (!(a < b)) return 0.0;
        switch (claim->kind()) {
            case PayoffKind::Call: {
                const double zk = z_of_x(claim->strike());
                const double lo = std::max(a, zk);
                if (!(lo < b)) return 0.0;
                return x * (norm_cdf(b - sq) - norm_cdf(lo - sq)) -
                       disc * claim->strike() * (norm_cdf(b) - norm_cdf(lo));
            }
            case PayoffKind::Put: {
                const double zk = z_of_x(claim->strike());
                const double hi = std::min(b, zk);
                if (!(a < hi)) return 0.0;
                return disc * claim->strike() * (norm_cdf(hi) - norm_cdf(a)) -
                       x * (norm_cdf(hi - sq) - norm_cdf(a - sq));
            }
            case PayoffKind::Digital: {
                const double lo = std::max(a, z_of_x(claim->strike()));
                if (!(lo < b)) return 0.0;
                return disc * (norm_cdf(b) - norm_cdf(lo));
            }
            case PayoffKind::Linear:
                return x * (norm_cdf(b - sq) - norm_cdf(a - sq));
            case PayoffKind::Tabulated: {
                const double lo = std::max(a, -kZMax - 2.0);
                const double hi = std::min(b, kZMax + 2.0);
                if (!(lo < hi)) return 0.0;
                const double scale = 1.0 + std::abs((*claim)(x));
                return integrate(
                    [this](double z) { return disc * (*claim)(X(z)) * norm_pdf(z); }, lo, hi,
                    1e-11 * scale);
            }
        }
        return 0.0;
    }

    double full_price() const { return piece_price(-kInf, kInf); }

    // Success region {h(q, .) >= 0} as z-intervals: sign scan plus bisection
    // refinement of each crossing.
    std::vector<std::pair<double, double>> intervals(double q) const {
        std::vector<std::pair<double, double>> out;
        const double dz = 2.0 * kZMax / (kScanPoints - 1);
        bool inside = false;
        double start = 0.0;
        double prev_z = -kZMax;
        double prev_h = h(q, prev_z);
        if (prev_h >= 0.0) {
            inside = true;
            start = -kInf;
        }
        for (int i = 1; i < kScanPoints; ++i) {
            const double zi = -kZMax + i * dz;
            const double hi = h(q, zi);
            if (!inside && hi >= 0.0) {
                start = refine(q, prev_z, zi, false);
                inside = true;
            } else if (inside && hi < 0.0) {
                out.emplace_back(start, refine(q, prev_z, zi, true));
                inside = false;
            }
            prev_z = zi;
            prev_h = hi;
        }
        (void)prev_h;
        if (inside) out.emplace_back(start, kInf);
        return out;
    }

    // Physical-measure probability of the region (z shifts by the premium).
    double p_of(const std::vector<std::pair<double, double>>& region) const {
        double p = 0.0;
        for (const auto& [a, b] : region) p += norm_cdf(b - lam_sq) - norm_cdf(a - lam_sq);
        return p;
    }

    double p_success(double q) const { return p_of(intervals(q)); }

    double restricted_price(const std::vector<std::pair<double, double>>& region) const {
        double v = 0.0;
        for (const auto& [a, b] : region) v += piece_price(a, b);
        return v;
    }

  private:
    double refine(double q, double lo, double hi, bool leaving) const {
        // Invariant: sign differs between lo and hi; orient so we return the
        // boundary of the nonnegative side.
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            const bool nonneg = h(q, mid) >= 0.0;
            if (nonneg == leaving)
                lo = mid;
            else
                hi = mid;
            if (hi - lo < 1e-13) break;
        }
        return 0.5 * (lo + hi);
    }
};

}  // namespace

// ---------------------------------------------------------------------------
// Dual objective
// ---------------------------------------------------------------------------

double dual_objective_w(const MarketModel& model, const Payoff& claim, double t, double x,
                        double q, double T, double tol) {
    if (!(q > 0.0) || !is_finite(q))
        throw validation_error("auxiliary start q must be positive");
    if (T == t) return std::max(q - claim(x), 0.0);
    const LogEngine e(model, claim, t, x, T);
    if (claim.kind() == PayoffKind::Tabulated) {
        // Kinked table payoffs: adaptive quadrature in the driving draw.
        const double scale = 1.0 + q + std::abs(claim(x));
        return integrate(
            [&](double z) { return std::max(e.h(q, z), 0.0) * norm_pdf(z); }, -kZMax - 2.0,
            kZMax + 2.0, std::min(tol, 1e-8) * scale);
    }
    // Split the positive part at its sign changes; on each piece both the
    // auxiliary martingale and the discounted claim integrate in closed form
    // against the Gaussian, so the value is exact.
    double w = 0.0;
    for (const auto& [a, b] : e.intervals(q))
        w += q * (norm_cdf(b - e.lam_sq) - norm_cdf(a - e.lam_sq)) - e.piece_price(a, b);
    return std::max(w, 0.0);
}

// ---------------------------------------------------------------------------
// Quantile hedging
// ---------------------------------------------------------------------------

QuantileResult quantile_price(const MarketModel& model, const Payoff& claim, double T, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw validation_error("coverage probability must lie in [0,1]");
    QuantileResult res;
    if (p == 0.0) return res;  // zero capital, empty success region

    const LogEngine e(model, claim, 0.0, model.spot, T);
    const double full = e.full_price();
    if (full <= 0.0)
        throw validation_error("claim prices to zero; the coverage problem is degenerate");

    if (p == 1.0) {
        res.price = full;
        res.q_bar = kInf;
        res.achieved_p = 1.0;
        res.success_x = {{0.0, kInf}};
        return res;
    }

    const double q_lo_edge = 1e-8, q_hi_edge = 1e8;
    const double p_lo = e.p_success(q_lo_edge);
    const double p_hi = e.p_success(q_hi_edge);
    double q_bar;
    bool free_coverage = false;
    if (p <= p_lo) {
        // The claim is covered with this probability by free mass (e.g. where
        // it pays nothing); the cheapest success set is the q -> 0 limit.
        q_bar = q_lo_edge;
        free_coverage = true;
    } else if (p > p_hi) {
        throw numeric_error("success-probability root not bracketed in q within [1e-8, 1e8]");
    } else {
        double lo = q_lo_edge, hi = q_hi_edge;
        for (int it = 0; it < 400 && (hi - lo) > 1e-10 * hi; ++it) {
            const double mid = std::sqrt(lo * hi);  // geometric: q spans 16 decades
            (e.p_success(mid) >= p ? hi : lo) = mid;
        }
        q_bar = hi;  // the cheapest q meeting the target from above
    }

    // Probing both sides of the root detects a jump in the success
    // probability (an atom at the threshold) and keeps the evaluation off the
    // razor edge, where the root function is floating-point noise.
    double q_eval = q_bar;
    if (!free_coverage) {
        const double p_minus = e.p_success(q_bar * (1.0 - 1e-7));
        const double p_plus = e.p_success(q_bar * (1.0 + 1e-7));
        res.atom_flag = (p_plus - p_minus) > 1e-6;
        if (res.atom_flag) q_eval = q_bar * (1.0 + 1e-7);
    }
    const auto region = e.intervals(q_eval);
    res.q_bar = q_bar;
    res.achieved_p = e.p_of(region);
    res.price = std::max(e.restricted_price(region), 0.0);
    res.success_x.reserve(region.size());
    for (const auto& [a, b] : region)
        res.success_x.emplace_back(std::isinf(a) ? 0.0 : e.X(a), std::isinf(b) ? kInf : e.X(b));
    return res;
}

double restricted_claim_price(const MarketModel& model, const Payoff& claim,
                              const std::vector<std::pair<double, double>>& region, double t,
                              double x, double T) {
    if (t == T) return restricted_claim_payoff(claim, region, x);
    const LogEngine e(model, claim, t, x, T);
    double v = 0.0;
    for (const auto& [xa, xb] : region) {
        if (!(xa < xb)) continue;
        v += e.piece_price(e.z_of_x(xa), e.z_of_x(xb));
    }
    return v;
}

DeltaSource restricted_claim_delta(const MarketModel& model, const Payoff& claim,
                                   const std::vector<std::pair<double, double>>& region,
                                   double T) {
    MarketModel m = model;
    Payoff g = claim;
    auto reg = region;
    return delta_from_function([m, g, reg, T](double t, double x) {
        const double h = 1e-5 * x;
        const double up = restricted_claim_price(m, g, reg, t, x + h, T);
        const double dn = restricted_claim_price(m, g, reg, t, x - h, T);
        return (up - dn) / (2.0 * h);
    });
}

double restricted_claim_payoff(const Payoff& claim,
                               const std::vector<std::pair<double, double>>& region, double x) {
    for (const auto& [a, b] : region)
        if (x >= a && x <= b) return claim(x);
    return 0.0;
}

// ---------------------------------------------------------------------------
// Optimal success ratio
// ---------------------------------------------------------------------------

SuccessRatioResult success_ratio_price(const MarketModel& model, const Payoff& claim, double T,
                                       double y) {
    if (!(y > 0.0) || !is_finite(y)) throw validation_error("budget must be positive");
    const LogEngine e(model, claim, 0.0, model.spot, T);
    const double full = e.full_price();
    if (full <= 0.0)
        throw validation_error("claim prices to zero; the success-ratio problem is degenerate");

    SuccessRatioResult res;
    if (y >= full * (1.0 - 1e-12)) {
        res.degenerate = true;
        res.attained_ratio = 1.0;
        res.used_budget = full;
        return res;
    }

    // Threshold test between the physical measure and the claim-weighted
    // pricing measure: success on {Q1 > c * disc * claim(X) / full}. The
    // covered-part budget is decreasing in c.
    const auto region_at = [&](double c) { return e.intervals(full / c); };
    const auto budget_at = [&](double c) { return e.restricted_price(region_at(c)); };

    double lo = 1e-8, hi = 1.0;
    while (budget_at(hi) > y) {
        hi *= 2.0;
        if (hi > 1e12) throw numeric_error("success-ratio threshold not bracketed below 1e12");
    }
    for (int it = 0; it < 300 && (hi - lo) > 1e-11 * hi; ++it) {
        const double mid = std::sqrt(lo * hi);
        (budget_at(mid) <= y ? hi : lo) = mid;
    }
    // Evaluate the bracket sides with a relative nudge: when the bisection
    // lands bit-exactly on a threshold atom, the root function there is
    // floating-point noise.
    const double cl = lo * (1.0 - 1e-9), ch = hi * (1.0 + 1e-9);
    const double b_lo = budget_at(cl), b_hi = budget_at(ch);
    const double p_side_lo = e.p_of(region_at(cl)), p_side_hi = e.p_of(region_at(ch));
    res.c_hat = hi;
    const double gap = b_lo - b_hi;
    if (gap > 1e-6 * (1.0 + full)) {
        // The threshold event carries mass: randomize so the budget binds.
        res.gamma_hat = std::clamp((y - b_hi) / gap, 0.0, 1.0);
    }
    res.attained_ratio = p_side_hi + res.gamma_hat * (p_side_lo - p_side_hi);
    res.used_budget = b_hi + res.gamma_hat * gap;
    return res;
}

// ---------------------------------------------------------------------------
// Quadratic shortfall
// ---------------------------------------------------------------------------

namespace {

// Physical-measure expectation of a function of the driving draw.
double p_expect(const std::function<double(double)>& f, double tol) {
    return integrate([&](double z) { return f(z) * norm_pdf(z); }, -kZMax - 2.0, kZMax + 2.0,
                     tol);
}

}  // namespace

ShortfallQuadResult shortfall_price_quadratic(const MarketModel& model, const Payoff& claim,
                                              double T, double p) {
    model.validate();
    if (model.r != 0.0)
        throw validation_error("quadratic shortfall pricing needs a zero rate");
    if (!(p <= 0.0) || !is_finite(p))
        throw validation_error("shortfall target must be nonpositive");
    const LogEngine e(model, claim, 0.0, model.spot, T);
    const double lambda = e.lambda;
    const double mu_drift = (model.mu - 0.5 * model.sigma * model.sigma) * T;
    const double sq = model.sigma * std::sqrt(T);
    const double lam_sq = lambda * std::sqrt(T);
    const auto x_phys = [&](double z) { return model.spot * std::exp(mu_drift + sq * z); };
    // Q under the physical measure grows by the premium.
    const auto q_phys = [&](double q, double z) {
        return q * std::exp(0.5 * lam_sq * lam_sq + lam_sq * z);
    };

    const double g_scale = 1.0 + std::abs(claim(model.spot));
    const double bound = p_expect(
        [&](double z) {
            const double g = claim(x_phys(z));
            return g * g;
        },
        1e-11 * g_scale * g_scale);

    ShortfallQuadResult res;
    if (p < -bound * (1.0 + 1e-9))
        throw validation_error("shortfall target below the do-nothing risk " +
                               format_double(-bound));
    if (p == 0.0) {
        res.price = e.full_price();
        res.q_bar = kInf;
        res.achieved_risk = 0.0;
        return res;
    }
    if (p <= -bound * (1.0 - 1e-9)) {
        res.price = 0.0;
        res.q_bar = 0.0;
        res.achieved_risk = bound;
        return res;
    }

    const auto risk_of = [&](double q) {
        return p_expect(
            [&](double z) {
                const double inv = 1.0 / (2.0 * q_phys(q, z));
                const double g = claim(x_phys(z));
                return std::min(inv * inv, g * g);
            },
            1e-11 * g_scale * g_scale);
    };

    BracketOptions opt;
    opt.what = "quadratic-shortfall auxiliary root";
    res.q_bar = bisect_root([&](double q) { return risk_of(q) - (-p); }, opt);
    res.achieved_risk = risk_of(res.q_bar);

    // Price of the optimally reduced claim under the pricing measure.
    const double q_bar = res.q_bar;
    res.price = integrate(
        [&](double z) {
            const double red = claim(e.X(z)) - 1.0 / (2.0 * q_bar * e.Q1(z));
            return std::max(red, 0.0) * norm_pdf(z);
        },
        -kZMax - 2.0, kZMax + 2.0, 1e-11 * g_scale);
    return res;
}

double shortfall_quadratic_attained(const MarketModel& model, const Payoff& claim, double T,
                                    double q_bar, double x_T) {
    if (q_bar == 0.0) return 0.0;
    const double g = claim(x_T);
    if (std::isinf(q_bar)) return g;
    const double sq = model.sigma * std::sqrt(T);
    const double lambda = (model.mu - model.r) / model.sigma;
    const double lam_sq = lambda * std::sqrt(T);
    const double z = (std::log(x_T / model.spot) - (model.r - 0.5 * model.sigma * model.sigma) * T) / sq;
    const double q_T = q_bar * std::exp(-0.5 * lam_sq * lam_sq + lam_sq * z);
    return std::max(g - 1.0 / (2.0 * q_T), 0.0);
}

// ---------------------------------------------------------------------------
// General convex-loss shortfall on scenarios
// ---------------------------------------------------------------------------

LossFunction LossFunction::quadratic() { return LossFunction(Kind::Quadratic, 2.0); }

LossFunction LossFunction::power(double p) {
    if (!(p > 1.0) || !is_finite(p))
        throw validation_error("power loss needs an exponent greater than 1");
    return LossFunction(Kind::PowerP, p);
}

double LossFunction::operator()(double z) const {
    if (z < 0.0) throw validation_error("loss is defined on nonnegative shortfalls");
    return kind_ == Kind::Quadratic ? z * z : std::pow(z, exponent_);
}

double LossFunction::grad(double z) const {
    if (z < 0.0) throw validation_error("loss gradient is defined on nonnegative shortfalls");
    return kind_ == Kind::Quadratic ? 2.0 * z : exponent_ * std::pow(z, exponent_ - 1.0);
}

double LossFunction::inv_grad(double y) const {
    if (y < 0.0) throw validation_error("loss gradient inverse needs a nonnegative argument");
    return kind_ == Kind::Quadratic ? 0.5 * y : std::pow(y / exponent_, 1.0 / (exponent_ - 1.0));
}

void ScenarioSet::validate() const {
    if (claim.size() == 0 || claim.size() != density.size())
        throw validation_error("scenario set needs matching nonempty G and density columns");
    bool any_positive = false;
    for (Eigen::Index i = 0; i < claim.size(); ++i) {
        if (!is_finite(claim[i]) || claim[i] < 0.0)
            throw validation_error("scenario claims must be finite and nonnegative");
        if (!is_finite(density[i]) || !(density[i] > 0.0))
            throw validation_error("scenario densities must be finite and positive");
        any_positive = any_positive || claim[i] > 0.0;
    }
    if (!any_positive) throw validation_error("scenario set needs some positive claim mass");
}

ScenarioSet ScenarioSet::from_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::size_t gi = t.column("G");
    const std::size_t di = t.column("density");
    ScenarioSet s;
    s.claim.resize(static_cast<Eigen::Index>(t.rows.size()));
    s.density.resize(static_cast<Eigen::Index>(t.rows.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        s.claim[static_cast<Eigen::Index>(i)] = t.rows[i][gi];
        s.density[static_cast<Eigen::Index>(i)] = t.rows[i][di];
    }
    s.validate();
    return s;
}

ShortfallSolution shortfall_optimal_ratio(const LossFunction& loss, const ScenarioSet& scenarios,
                                          double y) {
    scenarios.validate();
    const Eigen::Index n = scenarios.claim.size();
    const auto phi_at = [&](double c, Eigen::Index i) {
        const double g = scenarios.claim[i];
        if (!(g > 0.0)) return 0.0;
        const double eaten = loss.inv_grad(c * scenarios.density[i]);
        return 1.0 - std::min(eaten / g, 1.0);
    };
    // Pricing cost of the covered fraction (equal scenario weights).
    const auto budget_at = [&](double c) {
        Eigen::VectorXd terms(n);
        for (Eigen::Index i = 0; i < n; ++i)
            terms[i] = scenarios.density[i] * phi_at(c, i) * scenarios.claim[i];
        return pairwise_sum({terms.data(), static_cast<std::size_t>(n)}) /
               static_cast<double>(n);
    };
    const double full = budget_at(0.0);
    if (!(y > 0.0) || !(y < full))
        throw validation_error("budget must lie strictly between 0 and the full price " +
                               format_double(full));

    BracketOptions opt;
    opt.what = "shortfall multiplier";
    ShortfallSolution sol;
    sol.c_hat = bisect_root([&](double c) { return budget_at(c) - y; }, opt);
    sol.phi.resize(n);
    Eigen::VectorXd risk_terms(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        sol.phi[i] = phi_at(sol.c_hat, i);
        risk_terms[i] = loss((1.0 - sol.phi[i]) * scenarios.claim[i]);
    }
    sol.achieved_budget = budget_at(sol.c_hat);
    sol.achieved_risk = pairwise_sum({risk_terms.data(), static_cast<std::size_t>(n)}) /
                        static_cast<double>(n);
    return sol;
}

// ---------------------------------------------------------------------------
// Dual lower bound
// ---------------------------------------------------------------------------

CsvTable DualBoundReport::to_csv_table() const {
    CsvTable t;
    t.metadata = {{"best_index", format_double(best_index)},
                  {"best_bound", format_double(best_bound)}};
    t.columns = {"schedule_id", "bound", "stderr", "penalty"};
    for (std::size_t i = 0; i < entries.size(); ++i)
        t.rows.push_back({static_cast<double>(i), entries[i].bound, entries[i].std_error,
                          entries[i].penalty});
    return t;
}

DualBoundReport dual_lower_bound(const MarketModel& model, const Payoff& claim,
                                 const ConstraintSet& K,
                                 const std::vector<PiecewiseSchedule>& controls, double T,
                                 const McConfig& cfg) {
    model.validate();
    cfg.validate();
    if (K.dim() != 1)
        throw validation_error("dual bound needs a one-dimensional constraint set");
    if (controls.empty()) throw validation_error("dual bound needs at least one control");
    if (!(T > 0.0) || !is_finite(T)) throw validation_error("horizon must be positive");
    if (model.flavor == Flavor::Arithmetic && model.r != 0.0)
        throw validation_error("arithmetic dual bounds are implemented at zero rate");

    // Exact support-function penalties per control (piecewise-constant time
    // integral); infeasible controls are a caller error per the contract.
    const std::size_t m = controls.size();
    std::vector<double> penalty(m);
    for (std::size_t c = 0; c < m; ++c) {
        const PiecewiseSchedule& nu = controls[c];
        nu.validate();
        if (nu.t[nu.t.size() - 1] >= T)
            throw validation_error("control schedule extends past the horizon");
        double acc = 0.0;
        for (Eigen::Index k = 0; k < nu.t.size(); ++k) {
            const double seg_end = (k + 1 < nu.t.size()) ? nu.t[k + 1] : T;
            Eigen::VectorXd u(1);
            u << nu.value[k];
            const double d = K.support(u);
            if (std::isinf(d))
                throw validation_error(
                    "control leaves the support-function domain (infinite penalty)");
            acc += d * (seg_end - nu.t[k]);
        }
        penalty[c] = acc;
    }

    const double beta_T = discount_factor(model.r, T);
    const int steps = cfg.steps;
    const double dt = T / steps;
    Eigen::MatrixXd samples(cfg.n, static_cast<Eigen::Index>(m));

    // Common draws across controls make the family comparable path by path.
    for (std::int64_t i = 0; i < cfg.n; ++i) {
        const std::int64_t base = cfg.antithetic ? i / 2 : i;
        const double sign = (cfg.antithetic && (i % 2 == 1)) ? -1.0 : 1.0;
        Substream s(cfg.seed, static_cast<std::uint64_t>(base), 3);
        if (model.flavor == Flavor::Arithmetic) {
            const double z = sign * s.normal();
            for (std::size_t c = 0; c < m; ++c) {
                const PiecewiseSchedule& nu = controls[c];
                double shift = 0.0;
                for (Eigen::Index k = 0; k < nu.t.size(); ++k) {
                    const double seg_end = (k + 1 < nu.t.size()) ? nu.t[k + 1] : T;
                    shift += nu.value[k] * (seg_end - nu.t[k]);
                }
                const double xT = model.spot + shift + model.sigma * std::sqrt(T) * z;
                samples(i, static_cast<Eigen::Index>(c)) = claim(xT);
            }
        } else {
            std::vector<double> z(static_cast<std::size_t>(steps));
            for (double& zi : z) zi = sign * s.normal();
            for (std::size_t c = 0; c < m; ++c) {
                const PiecewiseSchedule& nu = controls[c];
                double xt = model.spot;  // discounted level
                for (int k = 0; k < steps; ++k) {
                    const double drift = nu.at(k * dt);
                    xt += drift * dt +
                          model.sigma * xt * std::sqrt(dt) * z[static_cast<std::size_t>(k)];
                }
                samples(i, static_cast<Eigen::Index>(c)) =
                    beta_T * claim(xt / beta_T);  // undiscount the level, discount the claim
            }
        }
    }

    DualBoundReport rep;
    rep.entries.resize(m);
    for (std::size_t c = 0; c < m; ++c) {
        Eigen::VectorXd col = samples.col(static_cast<Eigen::Index>(c));
        if (model.flavor == Flavor::Arithmetic) col *= beta_T;  // beta_T = 1 at zero rate
        const McEstimate est = estimate(col, cfg);
        rep.entries[c].bound = est.mean - penalty[c];
        rep.entries[c].std_error = est.std_error;
        rep.entries[c].penalty = penalty[c];
        if (rep.entries[c].bound > rep.best_bound) {
            rep.best_bound = rep.entries[c].bound;
            rep.best_index = static_cast<int>(c);
        }
    }
    return rep;
}

}  // namespace rh
