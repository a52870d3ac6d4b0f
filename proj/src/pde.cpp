#include "rh/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rh/numerics.hpp"

namespace rh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Tridiagonal (Thomas) solve: sub/diag/super are the interior system bands.
// ---------------------------------------------------------------------------
void solve_tridiag(Eigen::VectorXd& sub, Eigen::VectorXd& diag, Eigen::VectorXd& super,
                   Eigen::VectorXd& rhs) {
    const Eigen::Index n = diag.size();
    for (Eigen::Index i = 1; i < n; ++i) {
        const double w = sub[i] / diag[i - 1];
        diag[i] -= w * super[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (Eigen::Index i = n - 2; i >= 0; --i)
        rhs[i] = (rhs[i] - super[i] * rhs[i + 1]) / diag[i];
}

// Spatially varying generator L = a D2 + b D1 - r I on a uniform grid
// coordinate with spacing h (log-levels or levels).
struct Operator {
    Eigen::VectorXd a;  // diffusion, per node
    Eigen::VectorXd b;  // convection, per node
    double r = 0.0;
    double h = 0.0;

    double lower(Eigen::Index j) const { return a[j] / (h * h) - b[j] / (2.0 * h); }
    double upper(Eigen::Index j) const { return a[j] / (h * h) + b[j] / (2.0 * h); }
    double center(Eigen::Index j) const { return -2.0 * a[j] / (h * h) - r; }
};

// L v at interior nodes; edge entries left untouched (zero).
Eigen::VectorXd apply_L(const Operator& op, const Eigen::VectorXd& v) {
    const Eigen::Index J = v.size();
    Eigen::VectorXd Lv = Eigen::VectorXd::Zero(J);
    for (Eigen::Index j = 1; j + 1 < J; ++j)
        Lv[j] = op.lower(j) * v[j - 1] + op.center(j) * v[j] + op.upper(j) * v[j + 1];
    return Lv;
}

// One theta-weighted step of size dt backward in time: given the slice
// v_next at the later time and Dirichlet values at the new time, produce the
// new slice. theta = 0 explicit, 1 implicit, 1/2 Crank-Nicolson.
Eigen::VectorXd step_theta(const Operator& op, double dt, double theta,
                           const Eigen::VectorXd& v_next, double bc_lo, double bc_hi) {
    const Eigen::Index J = v_next.size();
    Eigen::VectorXd out(J);
    out[0] = bc_lo;
    out[J - 1] = bc_hi;
    const Eigen::VectorXd Lv = apply_L(op, v_next);
    if (theta == 0.0) {
        for (Eigen::Index j = 1; j + 1 < J; ++j) out[j] = v_next[j] + dt * Lv[j];
        return out;
    }
    const Eigen::Index n = J - 2;
    Eigen::VectorXd sub(n), diag(n), super(n), rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index j = i + 1;
        sub[i] = -theta * dt * op.lower(j);
        diag[i] = 1.0 - theta * dt * op.center(j);
        super[i] = -theta * dt * op.upper(j);
        rhs[i] = v_next[j] + (1.0 - theta) * dt * Lv[j];
    }
    rhs[0] += theta * dt * op.lower(1) * bc_lo;
    rhs[n - 1] += theta * dt * op.upper(J - 2) * bc_hi;
    solve_tridiag(sub, diag, super, rhs);
    for (Eigen::Index i = 0; i < n; ++i) out[i + 1] = rhs[i];
    return out;
}

// Largest stable explicit step (positive-coefficient / monotone bound).
double explicit_dt_max(const Operator& op) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < op.a.size(); ++j)
        worst = std::max(worst, 2.0 * op.a[j] / (op.h * op.h) + op.r);
    if (worst <= 0.0) return kInf;
    return 0.95 / worst;
}

double theta_of(Scheme s) {
    switch (s) {
        case Scheme::Explicit:
            return 0.0;
        case Scheme::Implicit:
            return 1.0;
        case Scheme::CrankNicolson:
            return 0.5;
    }
    throw validation_error("pde: unknown scheme");
}

// Shared backward driver: steps the operator from the terminal slice to
// t = 0, calling `post` on every produced slice (projection hook), and
// `bc(tau)` for the Dirichlet pair at remaining maturity tau... bc takes the
// slice time t and returns {lo, hi}.
struct BackwardResult {
    Eigen::MatrixXd value;
};

template <typename BcFn, typename PostFn>
Eigen::MatrixXd run_backward(const Operator& op, const Grid1D& grid, Scheme scheme,
                             Eigen::VectorXd terminal, const BcFn& bc, const PostFn& post) {
    const int N = grid.time_steps;
    const int J = grid.J();
    const double dt = grid.T / N;
    const double theta = theta_of(scheme);
    Eigen::MatrixXd value(N + 1, J);
    post(terminal, N);  // hook may lift the terminal slice
    value.row(N) = terminal.transpose();

    int sub_steps = 1;
    if (scheme == Scheme::Explicit) {
        const double dt_max = explicit_dt_max(op);
        sub_steps = std::max(1, static_cast<int>(std::ceil(dt / dt_max)));
    }

    Eigen::VectorXd cur = std::move(terminal);
    for (int n = N - 1; n >= 0; --n) {
        const double t_new = grid.T * n / N;
        if (sub_steps == 1) {
            const auto [lo, hi] = bc(t_new);
            cur = step_theta(op, dt, theta, cur, lo, hi);
        } else {
            const double dts = dt / sub_steps;
            for (int k = 1; k <= sub_steps; ++k) {
                const double tk = grid.T * (n + 1) / N - dts * k;
                const auto [lo, hi] = bc(tk);
                cur = step_theta(op, dts, theta, cur, lo, hi);
            }
        }
        post(cur, n);
        value.row(n) = cur.transpose();
    }
    return value;
}

// Central-difference hedge ratios in the level variable.
Eigen::MatrixXd make_delta(const Eigen::VectorXd& x, const Eigen::MatrixXd& value) {
    const Eigen::Index R = value.rows(), J = value.cols();
    Eigen::MatrixXd d(R, J);
    for (Eigen::Index n = 0; n < R; ++n) {
        for (Eigen::Index j = 0; j < J; ++j) {
            const Eigen::Index jl = std::max<Eigen::Index>(j - 1, 0);
            const Eigen::Index jr = std::min<Eigen::Index>(j + 1, J - 1);
            d(n, j) = (value(n, jr) - value(n, jl)) / (x[jr] - x[jl]);
        }
    }
    return d;
}

Operator make_operator(const MarketModel& m, const Grid1D& grid) {
    const int J = grid.J();
    Operator op;
    op.r = m.r;
    op.a.resize(J);
    op.b.resize(J);
    if (m.flavor == Flavor::Geometric) {
        if (!grid.log_space)
            throw validation_error("pde: geometric flavor requires a log-space grid");
        op.h = grid.xi[1] - grid.xi[0];
        op.a.setConstant(0.5 * m.sigma * m.sigma);
        op.b.setConstant(m.r - 0.5 * m.sigma * m.sigma);
    } else {
        if (grid.log_space)
            throw validation_error("pde: arithmetic flavor requires a level-space grid");
        op.h = grid.x[1] - grid.x[0];
        op.a.setConstant(0.5 * m.sigma * m.sigma);
        for (int j = 0; j < J; ++j) op.b[j] = m.r * grid.x[j];
    }
    return op;
}

PdeSolution assemble(const Grid1D& grid, Scheme scheme, Eigen::MatrixXd value) {
    PdeSolution sol;
    const int N = grid.time_steps;
    sol.t = Eigen::VectorXd::LinSpaced(N + 1, 0.0, grid.T);
    sol.x = grid.x;
    sol.delta = make_delta(grid.x, value);
    sol.value = std::move(value);
    sol.active = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(N + 1, grid.J());
    sol.scheme = scheme;
    return sol;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid construction
// ---------------------------------------------------------------------------

Grid1D Grid1D::log_uniform(double center, double sigma, double r, double T, int J, int N,
                           double n_std) {
    if (!(center > 0.0)) throw validation_error("grid: log-space center must be positive");
    if (!(sigma > 0.0)) throw validation_error("grid: singular volatility");
    if (!(T > 0.0)) throw validation_error("grid: horizon must be positive");
    Grid1D g;
    g.log_space = true;
    g.time_steps = N;
    g.T = T;
    const double width = n_std * sigma * std::sqrt(T) + (std::abs(r) + 0.5 * sigma * sigma) * T;
    g.xi = Eigen::VectorXd::LinSpaced(J, std::log(center) - width, std::log(center) + width);
    g.x = g.xi.array().exp();
    g.validate();
    return g;
}

Grid1D Grid1D::linear_uniform(double center, double sigma, double T, int J, int N,
                              double n_std) {
    if (!(sigma > 0.0)) throw validation_error("grid: singular volatility");
    if (!(T > 0.0)) throw validation_error("grid: horizon must be positive");
    Grid1D g;
    g.log_space = false;
    g.time_steps = N;
    g.T = T;
    const double width = n_std * sigma * std::sqrt(T);
    g.x = Eigen::VectorXd::LinSpaced(J, center - width, center + width);
    g.validate();
    return g;
}

void Grid1D::validate() const {
    if (x.size() < 16) throw validation_error("grid: need at least 16 space nodes");
    if (time_steps < 8) throw validation_error("grid: need at least 8 time steps");
    if (!(T > 0.0)) throw validation_error("grid: horizon must be positive");
    for (Eigen::Index j = 1; j < x.size(); ++j)
        if (!(x[j] > x[j - 1])) throw validation_error("grid: levels must increase strictly");
    if (log_space) {
        if (xi.size() != x.size()) throw validation_error("grid: log levels missing");
        const double h = xi[1] - xi[0];
        for (Eigen::Index j = 1; j < xi.size(); ++j)
            if (std::abs(xi[j] - xi[j - 1] - h) > 1e-9 * std::max(1.0, std::abs(h)))
                throw validation_error("grid: log spacing must be uniform");
    } else {
        const double h = x[1] - x[0];
        for (Eigen::Index j = 1; j < x.size(); ++j)
            if (std::abs(x[j] - x[j - 1] - h) > 1e-9 * std::max(1.0, std::abs(h)))
                throw validation_error("grid: level spacing must be uniform");
    }
}

// ---------------------------------------------------------------------------
// Solution surface
// ---------------------------------------------------------------------------

namespace {
double surface_at(const Eigen::VectorXd& t, const Eigen::VectorXd& x,
                  const Eigen::MatrixXd& m, double ti, double xq) {
    const Eigen::Index N = t.size() - 1;
    const double dt = t[N] > t[0] ? (t[N] - t[0]) / static_cast<double>(N) : 1.0;
    double s = (ti - t[0]) / dt;
    s = std::clamp(s, 0.0, static_cast<double>(N));
    const Eigen::Index n0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(s), N - 1);
    const double w = s - static_cast<double>(n0);
    const Eigen::VectorXd row0 = m.row(n0), row1 = m.row(n0 + 1);
    const double v0 = interp_linear(x, row0, xq);
    const double v1 = interp_linear(x, row1, xq);
    // Same convention as interp_linear: a blend touching an infinite slice is
    // that infinity, not 0 * inf = nan.
    if (w == 0.0 || v0 == v1) return v0;
    if (w == 1.0) return v1;
    if (std::isinf(v0) || std::isinf(v1)) return std::isinf(v0) ? v0 : v1;
    return (1.0 - w) * v0 + w * v1;
}
}  // namespace

double PdeSolution::value_at(double ti, double xq) const {
    return surface_at(t, x, value, ti, xq);
}

double PdeSolution::delta_at(double ti, double xq) const {
    return surface_at(t, x, delta, ti, xq);
}

CsvTable PdeSolution::to_csv_table(int time_stride) const {
    if (time_stride < 1) throw validation_error("pde: time stride must be >= 1");
    CsvTable out;
    out.columns = {"t", "x", "value", "delta", "constraint_active"};
    const Eigen::Index N = t.size() - 1;
    auto emit = [&](Eigen::Index n) {
        for (Eigen::Index j = 0; j < x.size(); ++j)
            out.rows.push_back({t[n], x[j], value(n, j), delta(n, j),
                                static_cast<double>(active(n, j))});
    };
    Eigen::Index last = -1;
    for (Eigen::Index n = 0; n <= N; n += time_stride) {
        emit(n);
        last = n;
    }
    if (last != N) emit(N);  // terminal slice always present
    return out;
}

// ---------------------------------------------------------------------------
// Linear solvers
// ---------------------------------------------------------------------------

PdeSolution solve_linear(const MarketModel& m, const Payoff& g, const Grid1D& grid,
                         Scheme scheme) {
    m.validate();
    grid.validate();
    const Operator op = make_operator(m, grid);
    const int J = grid.J();
    Eigen::VectorXd terminal(J);
    for (int j = 0; j < J; ++j) terminal[j] = g(grid.x[j]);
    const double glo = g(grid.x[0]), ghi = g(grid.x[J - 1]);
    auto bc = [&](double tn) {
        const double df = std::exp(-m.r * (grid.T - tn));
        return std::pair<double, double>{df * glo, df * ghi};
    };
    Eigen::MatrixXd value =
        run_backward(op, grid, scheme, std::move(terminal), bc, [](Eigen::VectorXd&, int) {});
    return assemble(grid, scheme, std::move(value));
}

PdeSolution solve_linear_localvol(const std::function<double(double)>& sigma_of_x, double r,
                                  const Payoff& g, const Grid1D& grid, Scheme scheme) {
    grid.validate();
    if (!grid.log_space)
        throw validation_error("pde: level-dependent volatility solver needs a log-space grid");
    const int J = grid.J();
    Operator op;
    op.r = r;
    op.h = grid.xi[1] - grid.xi[0];
    op.a.resize(J);
    op.b.resize(J);
    for (int j = 0; j < J; ++j) {
        const double s = sigma_of_x(grid.x[j]);
        if (!(s > 0.0) || !std::isfinite(s))
            throw validation_error("pde: volatility function must be positive and finite");
        op.a[j] = 0.5 * s * s;
        op.b[j] = r - 0.5 * s * s;
    }
    Eigen::VectorXd terminal(J);
    for (int j = 0; j < J; ++j) terminal[j] = g(grid.x[j]);
    const double glo = g(grid.x[0]), ghi = g(grid.x[J - 1]);
    auto bc = [&](double tn) {
        const double df = std::exp(-r * (grid.T - tn));
        return std::pair<double, double>{df * glo, df * ghi};
    };
    Eigen::MatrixXd value =
        run_backward(op, grid, scheme, std::move(terminal), bc, [](Eigen::VectorXd&, int) {});
    return assemble(grid, scheme, std::move(value));
}

// ---------------------------------------------------------------------------
// Constrained solver
// ---------------------------------------------------------------------------

namespace {

// Exact additive-lift projection restricted to grid shifts: two running-max
// sweeps, O(J). Infinite bounds drop their sweep (that direction only admits
// the zero shift).
void project_amount(const Eigen::VectorXd& x, double lo, double hi, Eigen::VectorXd& v) {
    const Eigen::Index J = v.size();
    Eigen::VectorXd out = v;
    if (hi != kInf) {
        double run = -kInf;  // max over j >= k of v_j - hi x_j
        for (Eigen::Index k = J - 1; k >= 0; --k) {
            run = std::max(run, v[k] - hi * x[k]);
            out[k] = std::max(out[k], run + hi * x[k]);
        }
    }
    if (lo != -kInf) {
        double run = -kInf;  // max over j <= k of v_j - lo x_j
        for (Eigen::Index k = 0; k < J; ++k) {
            run = std::max(run, v[k] - lo * x[k]);
            out[k] = std::max(out[k], run + lo * x[k]);
        }
    }
    v = std::move(out);
}

// Multiplicative-lift projection on the log grid: maximize over node shifts
// m with penalty factor exp(-delta(m h)); shifts beyond the grid clamp to
// the edge value (far-field pollution is negligible at +-8 stddev).
void project_proportion(double h, double lo, double hi, ProportionRange range,
                        Eigen::VectorXd& v) {
    const Eigen::Index J = v.size();
    Eigen::Index m_lo, m_hi;
    if (range == ProportionRange::AsWritten) {
        m_lo = (lo == -kInf) ? 0 : static_cast<Eigen::Index>(std::ceil(lo / h - 1e-12));
        m_hi = (hi == kInf) ? 0 : static_cast<Eigen::Index>(std::floor(hi / h + 1e-12));
        // Directions whose penalty is infinite are infeasible regardless of K.
        if (lo == -kInf) m_lo = 0;
        if (hi == kInf) m_hi = 0;
    } else {
        m_lo = (lo == -kInf) ? 0 : -(J - 1);
        m_hi = (hi == kInf) ? 0 : (J - 1);
    }
    m_lo = std::max<Eigen::Index>(m_lo, -(J - 1));
    m_hi = std::min<Eigen::Index>(m_hi, J - 1);
    if (m_lo > m_hi) return;
    std::vector<double> factor(static_cast<std::size_t>(m_hi - m_lo + 1));
    for (Eigen::Index m = m_lo; m <= m_hi; ++m) {
        const double z = static_cast<double>(m) * h;
        const double pen = z >= 0.0 ? hi * z : lo * z;
        factor[static_cast<std::size_t>(m - m_lo)] = std::exp(-pen);
    }
    Eigen::VectorXd out = v;
    for (Eigen::Index k = 0; k < J; ++k) {
        double best = v[k];
        for (Eigen::Index m = m_lo; m <= m_hi; ++m) {
            const Eigen::Index idx = std::clamp<Eigen::Index>(k + m, 0, J - 1);
            best = std::max(best, factor[static_cast<std::size_t>(m - m_lo)] * v[idx]);
        }
        out[k] = best;
    }
    v = std::move(out);
}

}  // namespace

PdeSolution solve_constrained(const MarketModel& m, const Payoff& g, const ConstraintSet& K,
                              const Grid1D& grid, Scheme scheme, ConstraintMode mode,
                              ProportionRange range) {
    m.validate();
    grid.validate();
    if (K.dim() != 1) throw validation_error("pde: constraint must be one-dimensional");
    const double lo = K.lo1(), hi = K.hi1();
    const int J = grid.J();
    const int N = grid.time_steps;

    if (mode == ConstraintMode::Proportion && m.flavor != Flavor::Geometric)
        throw validation_error("pde: proportion constraints need the geometric flavor");

    // Divergence of the lift is level-independent: the price is +inf
    // everywhere. Infinite prices are values; emit them in-band.
    bool infinite = false;
    if (mode == ConstraintMode::Amount)
        infinite = g.slope_pos() > hi || g.slope_neg() < lo;
    else
        infinite = (range == ProportionRange::FullDomain) && g.growth_exponent() > hi;
    if (infinite) {
        PdeSolution sol;
        sol.t = Eigen::VectorXd::LinSpaced(N + 1, 0.0, grid.T);
        sol.x = grid.x;
        sol.value = Eigen::MatrixXd::Constant(N + 1, J, kInf);
        sol.delta = Eigen::MatrixXd::Zero(N + 1, J);
        sol.active =
            Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Ones(N + 1, J);
        sol.scheme = scheme;
        return sol;
    }

    const Operator op = make_operator(m, grid);

    // Terminal slice and far-field values carry the exact pointwise lift.
    Eigen::VectorXd terminal(J);
    for (int j = 0; j < J; ++j)
        terminal[j] = mode == ConstraintMode::Amount
                          ? facelift_amount(g, K, grid.x[j])
                          : facelift_proportion(g, K, grid.x[j], range);
    const double glo = terminal[0], ghi = terminal[J - 1];
    auto bc = [&](double tn) {
        const double df = std::exp(-m.r * (grid.T - tn));
        return std::pair<double, double>{df * glo, df * ghi};
    };

    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> active =
        Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(N + 1, J);
    const double log_h = grid.log_space ? grid.xi[1] - grid.xi[0] : 0.0;
    auto post = [&](Eigen::VectorXd& slice, int n) {
        const Eigen::VectorXd before = slice;
        if (mode == ConstraintMode::Amount)
            project_amount(grid.x, lo, hi, slice);
        else
            project_proportion(log_h, lo, hi, range, slice);
        for (int j = 0; j < J; ++j)
            if (slice[j] > before[j] + 1e-12 * (1.0 + std::abs(before[j])))
                active(n, j) = 1;
    };

    Eigen::MatrixXd value = run_backward(op, grid, scheme, std::move(terminal), bc, post);
    PdeSolution sol = assemble(grid, scheme, std::move(value));
    sol.active = std::move(active);
    return sol;
}

// ---------------------------------------------------------------------------
// Uncertain-volatility solver
// ---------------------------------------------------------------------------

PdeSolution solve_bsb(const Payoff& g, double sigma_lo, double sigma_hi, double r,
                      const Grid1D& grid, Scheme scheme) {
    grid.validate();
    if (!grid.log_space) throw validation_error("pde: two-volatility solver needs a log-space grid");
    if (!(sigma_lo > 0.0) || !(sigma_hi >= sigma_lo) || !std::isfinite(sigma_hi))
        throw validation_error("pde: need 0 < sigma_lo <= sigma_hi < inf");
    const int J = grid.J();
    const int N = grid.time_steps;
    const double h = grid.xi[1] - grid.xi[0];
    const double dt = grid.T / N;

    Eigen::VectorXd terminal(J);
    for (int j = 0; j < J; ++j) terminal[j] = g(grid.x[j]);
    const double glo = g(grid.x[0]), ghi = g(grid.x[J - 1]);
    auto bc_pair = [&](double tn) {
        const double df = std::exp(-r * (grid.T - tn));
        return std::pair<double, double>{df * glo, df * ghi};
    };

    // Convexity gauge in log-space: the sigma^2 coefficient multiplies
    // (D2 - D1) v exactly, so the maximizing volatility is sigma_hi where
    // that combination is >= 0 and sigma_lo elsewhere.
    auto policy_of = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd sig(J);
        for (int j = 0; j < J; ++j) {
            if (j == 0 || j == J - 1) {
                sig[j] = sigma_lo;
                continue;
            }
            const double d2 = (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (h * h);
            const double d1 = (v[j + 1] - v[j - 1]) / (2.0 * h);
            sig[j] = (d2 - d1) >= 0.0 ? sigma_hi : sigma_lo;
        }
        return sig;
    };
    auto op_for = [&](const Eigen::VectorXd& sig) {
        Operator op;
        op.r = r;
        op.h = h;
        op.a = 0.5 * sig.array().square();
        op.b = r - 0.5 * sig.array().square();
        return op;
    };

    Eigen::MatrixXd value(N + 1, J);
    value.row(N) = terminal.transpose();
    Eigen::VectorXd cur = terminal;

    if (scheme == Scheme::Explicit) {
        Operator worst;
        worst.r = r;
        worst.h = h;
        worst.a = Eigen::VectorXd::Constant(J, 0.5 * sigma_hi * sigma_hi);
        worst.b = Eigen::VectorXd::Constant(J, r);
        const double dts_max = explicit_dt_max(worst);
        const int sub = std::max(1, static_cast<int>(std::ceil(dt / dts_max)));
        const double dts = dt / sub;
        for (int n = N - 1; n >= 0; --n) {
            for (int k = 1; k <= sub; ++k) {
                const double tk = grid.T * (n + 1) / N - dts * k;
                const auto [lo_bc, hi_bc] = bc_pair(tk);
                const Operator op = op_for(policy_of(cur));
                cur = step_theta(op, dts, 0.0, cur, lo_bc, hi_bc);
            }
            value.row(n) = cur.transpose();
        }
    } else {
        const double theta = theta_of(scheme);
        for (int n = N - 1; n >= 0; --n) {
            const double tn = grid.T * n / N;
            const auto [lo_bc, hi_bc] = bc_pair(tn);
            Eigen::VectorXd sig = policy_of(cur);
            Eigen::VectorXd candidate;
            bool settled = false;
            for (int sweep = 0; sweep < 200; ++sweep) {
                candidate = step_theta(op_for(sig), dt, theta, cur, lo_bc, hi_bc);
                Eigen::VectorXd sig_new = policy_of(candidate);
                if ((sig_new - sig).lpNorm<Eigen::Infinity>() == 0.0) {
                    settled = true;
                    break;
                }
                sig = std::move(sig_new);
            }
            if (!settled) {
                std::ostringstream os;
                os << "pde: volatility policy iteration did not settle at step " << n
                   << " within 200 sweeps";
                throw numeric_error(os.str());
            }
            cur = std::move(candidate);
            value.row(n) = cur.transpose();
        }
    }
    return assemble(grid, scheme, std::move(value));
}

// ---------------------------------------------------------------------------
// Observed convergence order
// ---------------------------------------------------------------------------

ConvergenceReport estimate_convergence_order(
    const std::function<double(int J, int N)>& price_at,
    const std::vector<std::pair<int, int>>& grids, std::optional<double> oracle,
    double rel_floor) {
    if (grids.size() < 2)
        throw validation_error("convergence: need at least two grid levels");
    ConvergenceReport rep;
    rep.against_oracle = oracle.has_value();
    std::vector<double> values;
    values.reserve(grids.size());
    for (const auto& [J, N] : grids) values.push_back(price_at(J, N));

    const std::size_t n_err = rep.against_oracle ? grids.size() : grids.size() - 1;
    const double ref = rep.against_oracle ? *oracle : values.back();
    rep.monotone = true;
    double prev_err = kNaN;
    for (std::size_t k = 0; k < grids.size(); ++k) {
        ConvergencePoint p;
        p.J = grids[k].first;
        p.N = grids[k].second;
        p.value = values[k];
        if (k < n_err) {
            p.error = std::abs(values[k] - ref);
            const double floor = rel_floor * (1.0 + std::abs(ref));
            if (k > 0 && !std::isnan(prev_err)) {
                if (p.error > prev_err + floor) rep.monotone = false;
                p.order = (p.error > floor && prev_err > floor)
                              ? std::log2(prev_err / p.error)
                              : kNaN;
            } else {
                p.order = kNaN;
            }
            prev_err = p.error;
        } else {
            p.error = kNaN;
            p.order = kNaN;
        }
        rep.points.push_back(p);
    }
    return rep;
}

}  // namespace rh
