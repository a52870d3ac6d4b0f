// Command-line frontend. Every operation reads a JSON config describing the
// market, claim, constraint and numeric settings, runs the corresponding
// library routine, and writes CSV results with a reproducibility preamble
// (version, command, seed, config hash). Exit codes: 0 success, 2 malformed
// input, 3 numeric failure. Infinite prices are legitimate values and are
// written in-band as "inf" with exit 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rh/analytic.hpp"
#include "rh/common.hpp"
#include "rh/constraints.hpp"
#include "rh/csv.hpp"
#include "rh/liquidation.hpp"
#include "rh/market.hpp"
#include "rh/mc.hpp"
#include "rh/numerics.hpp"
#include "rh/payoff.hpp"
#include "rh/pde.hpp"
#include "rh/riskprice.hpp"

namespace {

using nlohmann::json;
using namespace rh;

constexpr const char* kToolVersion = "0.1.0";

struct RunContext {
    std::string command;
    std::string config_path;
    std::filesystem::path config_dir;  // anchor for relative paths in the config
    std::string out_dir = ".";
    bool quiet = false;
    std::uint64_t seed = 0;  // effective seed recorded in every preamble
    json cfg;                // effective config (seed override already applied)
    std::string config_hash;
    std::vector<std::string> written;
};

[[noreturn]] void fail(const std::string& msg) { throw validation_error(msg); }

void note(const RunContext& ctx, const std::string& line) {
    if (!ctx.quiet) std::cout << line << "\n";
}

// ---------------------------------------------------------------------------
// JSON access with strict schemas
// ---------------------------------------------------------------------------

const json& require_block(const json& root, const std::string& name) {
    const auto it = root.find(name);
    if (it == root.end()) fail("missing \"" + name + "\" block");
    if (!it->is_object())
        fail("\"" + name + "\" must be an object, got " + std::string(it->type_name()));
    return *it;
}

// Every key must be declared; unknown keys are configuration mistakes.
void check_keys(const json& obj, const std::string& ctx, const std::vector<std::string>& required,
                const std::vector<std::string>& optional) {
    for (const auto& k : required)
        if (!obj.contains(k)) fail(ctx + ": missing required key \"" + k + "\"");
    for (const auto& item : obj.items()) {
        const std::string& k = item.key();
        const bool known =
            std::find(required.begin(), required.end(), k) != required.end() ||
            std::find(optional.begin(), optional.end(), k) != optional.end();
        if (!known) {
            std::string allowed;
            for (const auto& s : required) allowed += (allowed.empty() ? "" : ", ") + s;
            for (const auto& s : optional) allowed += (allowed.empty() ? "" : ", ") + s;
            fail(ctx + ": unknown key \"" + k + "\" (allowed: " + allowed + ")");
        }
    }
}

// Numbers may be spelled as JSON numbers or as the strings "inf" / "-inf"
// (JSON itself has no infinity literal).
double as_num(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    fail(where + ": expected a number (or \"inf\"/\"-inf\"), got " + std::string(j.type_name()));
}

double get_num(const json& obj, const std::string& ctx, const std::string& key) {
    if (!obj.contains(key)) fail(ctx + ": missing required key \"" + key + "\"");
    return as_num(obj.at(key), ctx + "." + key);
}

double get_num_or(const json& obj, const std::string& ctx, const std::string& key, double dflt) {
    return obj.contains(key) ? as_num(obj.at(key), ctx + "." + key) : dflt;
}

std::int64_t get_i64(const json& obj, const std::string& ctx, const std::string& key) {
    if (!obj.contains(key)) fail(ctx + ": missing required key \"" + key + "\"");
    const json& j = obj.at(key);
    if (!j.is_number_integer()) fail(ctx + "." + key + ": expected an integer");
    return j.get<std::int64_t>();
}

int get_int(const json& obj, const std::string& ctx, const std::string& key) {
    const std::int64_t v = get_i64(obj, ctx, key);
    if (v < INT_MIN || v > INT_MAX) fail(ctx + "." + key + ": integer out of range");
    return static_cast<int>(v);
}

int get_int_or(const json& obj, const std::string& ctx, const std::string& key, int dflt) {
    return obj.contains(key) ? get_int(obj, ctx, key) : dflt;
}

std::uint64_t get_u64_or(const json& obj, const std::string& ctx, const std::string& key,
                         std::uint64_t dflt) {
    if (!obj.contains(key)) return dflt;
    const json& j = obj.at(key);
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(j.get<std::int64_t>());
    fail(ctx + "." + key + ": expected a non-negative integer");
}

bool get_bool_or(const json& obj, const std::string& ctx, const std::string& key, bool dflt) {
    if (!obj.contains(key)) return dflt;
    const json& j = obj.at(key);
    if (!j.is_boolean()) fail(ctx + "." + key + ": expected a boolean");
    return j.get<bool>();
}

std::string get_str(const json& obj, const std::string& ctx, const std::string& key) {
    if (!obj.contains(key)) fail(ctx + ": missing required key \"" + key + "\"");
    const json& j = obj.at(key);
    if (!j.is_string()) fail(ctx + "." + key + ": expected a string");
    return j.get<std::string>();
}

std::string get_str_or(const json& obj, const std::string& ctx, const std::string& key,
                       const std::string& dflt) {
    return obj.contains(key) ? get_str(obj, ctx, key) : dflt;
}

Eigen::VectorXd get_vec(const json& obj, const std::string& ctx, const std::string& key) {
    if (!obj.contains(key)) fail(ctx + ": missing required key \"" + key + "\"");
    const json& j = obj.at(key);
    if (!j.is_array() || j.empty()) fail(ctx + "." + key + ": expected a non-empty array");
    Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
    Eigen::Index i = 0;
    for (const json& e : j) out[i++] = as_num(e, ctx + "." + key);
    return out;
}

std::vector<int> get_int_vec(const json& obj, const std::string& ctx, const std::string& key) {
    if (!obj.contains(key)) fail(ctx + ": missing required key \"" + key + "\"");
    const json& j = obj.at(key);
    if (!j.is_array() || j.empty()) fail(ctx + "." + key + ": expected a non-empty array");
    std::vector<int> out;
    for (const json& e : j) {
        if (!e.is_number_integer()) fail(ctx + "." + key + ": expected integers");
        out.push_back(static_cast<int>(e.get<std::int64_t>()));
    }
    return out;
}

// Paths inside the config resolve relative to the config file's directory.
std::string resolve(const RunContext& ctx, const std::string& path) {
    const std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (ctx.config_dir / p).string();
}

// ---------------------------------------------------------------------------
// Block parsers
// ---------------------------------------------------------------------------

MarketModel parse_model(const json& root) {
    const json& m = require_block(root, "model");
    check_keys(m, "model block", {"spot", "sigma"}, {"mu", "r", "flavor"});
    MarketModel out;
    out.spot = get_num(m, "model block", "spot");
    out.sigma = get_num(m, "model block", "sigma");
    out.mu = get_num_or(m, "model block", "mu", 0.0);
    out.r = get_num_or(m, "model block", "r", 0.0);
    const std::string flavor = get_str_or(m, "model block", "flavor", "geometric");
    if (flavor == "geometric")
        out.flavor = Flavor::Geometric;
    else if (flavor == "arithmetic")
        out.flavor = Flavor::Arithmetic;
    else
        fail("model block: unknown flavor \"" + flavor + "\"");
    out.validate();
    return out;
}

Payoff parse_payoff(const json& root, const RunContext& ctx, const std::string& block) {
    const json& p = require_block(root, block);
    const std::string where = block + " block";
    const std::string kind = get_str(p, where, "kind");
    if (kind == "call" || kind == "put" || kind == "digital") {
        check_keys(p, where, {"kind", "strike"}, {});
        const double k = get_num(p, where, "strike");
        if (kind == "call") return Payoff::call(k);
        if (kind == "put") return Payoff::put(k);
        return Payoff::digital(k);
    }
    if (kind == "linear") {
        check_keys(p, where, {"kind"}, {});
        return Payoff::linear();
    }
    if (kind == "tabulated") {
        check_keys(p, where, {"kind"}, {"path", "x", "value"});
        const bool has_path = p.contains("path");
        const bool has_inline = p.contains("x") || p.contains("value");
        if (has_path == has_inline)
            fail(where + ": tabulated claims take either \"path\" or inline \"x\"/\"value\"");
        if (has_path) return Payoff::tabulated_from_csv(resolve(ctx, get_str(p, where, "path")));
        return Payoff::tabulated(get_vec(p, where, "x"), get_vec(p, where, "value"));
    }
    fail(where + ": unknown payoff kind \"" + kind + "\"");
}

ConstraintSet parse_constraint(const json& root) {
    const json& c = require_block(root, "constraint");
    const std::string kind = get_str(c, "constraint block", "kind");
    if (kind == "full_space") {
        check_keys(c, "constraint block", {"kind"}, {"dim"});
        return ConstraintSet::full_space(get_int_or(c, "constraint block", "dim", 1));
    }
    if (kind == "box") {
        check_keys(c, "constraint block", {"kind", "lo", "hi"}, {});
        return ConstraintSet::box(get_vec(c, "constraint block", "lo"),
                                  get_vec(c, "constraint block", "hi"));
    }
    if (kind == "cone") {
        check_keys(c, "constraint block", {"kind", "pattern"}, {});
        const json& arr = c.at("pattern");
        if (!arr.is_array() || arr.empty())
            fail("constraint block.pattern: expected a non-empty array");
        std::vector<SignPattern> pattern;
        for (const json& e : arr) {
            const std::string s = e.is_string() ? e.get<std::string>() : std::string();
            if (s == "free")
                pattern.push_back(SignPattern::Free);
            else if (s == "nonneg")
                pattern.push_back(SignPattern::NonNeg);
            else if (s == "nonpos")
                pattern.push_back(SignPattern::NonPos);
            else if (s == "zero")
                pattern.push_back(SignPattern::Zero);
            else
                fail("constraint block.pattern: entries are \"free\", \"nonneg\", \"nonpos\" or "
                     "\"zero\"");
        }
        return ConstraintSet::cone(std::move(pattern));
    }
    if (kind == "subspace") {
        check_keys(c, "constraint block", {"kind", "zeroed"}, {});
        const json& arr = c.at("zeroed");
        if (!arr.is_array() || arr.empty())
            fail("constraint block.zeroed: expected a non-empty array of booleans");
        std::vector<bool> zeroed;
        for (const json& e : arr) {
            if (!e.is_boolean()) fail("constraint block.zeroed: expected booleans");
            zeroed.push_back(e.get<bool>());
        }
        return ConstraintSet::subspace(std::move(zeroed));
    }
    fail("constraint block: unknown kind \"" + kind + "\"");
}

struct Horizon {
    double t0 = 0.0;
    double T = 0.0;
};

Horizon parse_horizon(const json& root, bool allow_t0) {
    const json& h = require_block(root, "horizon");
    if (allow_t0)
        check_keys(h, "horizon block", {"T"}, {"t0"});
    else
        check_keys(h, "horizon block", {"T"}, {});
    Horizon out;
    out.T = get_num(h, "horizon block", "T");
    out.t0 = allow_t0 ? get_num_or(h, "horizon block", "t0", 0.0) : 0.0;
    if (!is_finite(out.T) || !is_finite(out.t0) || out.t0 < 0.0 || !(out.T > out.t0))
        fail("horizon block: need finite 0 <= t0 < T");
    return out;
}

Scheme parse_scheme(const std::string& s) {
    if (s == "implicit") return Scheme::Implicit;
    if (s == "explicit") return Scheme::Explicit;
    if (s == "crank_nicolson") return Scheme::CrankNicolson;
    fail("scheme must be \"implicit\", \"explicit\" or \"crank_nicolson\", got \"" + s + "\"");
}

struct GridSpec {
    int J = 0;
    int N = 0;
    double n_std = 8.0;
    Scheme scheme = Scheme::Implicit;
    int stride = 1;
    ConstraintMode mode = ConstraintMode::Amount;
    ProportionRange range = ProportionRange::AsWritten;
};

GridSpec parse_grid(const json& root, bool with_lift_options) {
    const json& g = require_block(root, "grid");
    if (with_lift_options)
        check_keys(g, "grid block", {"J", "N"}, {"n_std", "scheme", "stride", "mode", "range"});
    else
        check_keys(g, "grid block", {"J", "N"}, {"n_std", "scheme", "stride"});
    GridSpec out;
    out.J = get_int(g, "grid block", "J");
    out.N = get_int(g, "grid block", "N");
    out.n_std = get_num_or(g, "grid block", "n_std", 8.0);
    out.scheme = parse_scheme(get_str_or(g, "grid block", "scheme", "implicit"));
    out.stride = get_int_or(g, "grid block", "stride", 1);
    if (out.stride < 1) fail("grid block.stride: must be >= 1");
    if (with_lift_options) {
        const std::string mode = get_str_or(g, "grid block", "mode", "amount");
        if (mode == "amount")
            out.mode = ConstraintMode::Amount;
        else if (mode == "proportion")
            out.mode = ConstraintMode::Proportion;
        else
            fail("grid block.mode: must be \"amount\" or \"proportion\"");
        const std::string range = get_str_or(g, "grid block", "range", "as_written");
        if (range == "as_written")
            out.range = ProportionRange::AsWritten;
        else if (range == "full_domain")
            out.range = ProportionRange::FullDomain;
        else
            fail("grid block.range: must be \"as_written\" or \"full_domain\"");
    }
    return out;
}

Grid1D build_grid(const MarketModel& m, double T, const GridSpec& gs) {
    return m.flavor == Flavor::Geometric
               ? Grid1D::log_uniform(m.spot, m.sigma, m.r, T, gs.J, gs.N, gs.n_std)
               : Grid1D::linear_uniform(m.spot, m.sigma, T, gs.J, gs.N, gs.n_std);
}

McConfig parse_mc(const json& root) {
    const json& b = require_block(root, "mc");
    check_keys(b, "mc block", {"n", "steps"}, {"seed", "antithetic", "workers"});
    McConfig cfg;
    cfg.n = get_i64(b, "mc block", "n");
    cfg.steps = get_int(b, "mc block", "steps");
    cfg.seed = get_u64_or(b, "mc block", "seed", 1);
    cfg.antithetic = get_bool_or(b, "mc block", "antithetic", false);
    cfg.workers = get_int_or(b, "mc block", "workers", 0);
    cfg.validate();
    return cfg;
}

std::vector<PiecewiseSchedule> parse_controls(const json& root) {
    const auto it = root.find("controls");
    if (it == root.end()) fail("missing \"controls\" array");
    if (!it->is_array() || it->empty()) fail("\"controls\" must be a non-empty array");
    std::vector<PiecewiseSchedule> out;
    int i = 0;
    for (const json& c : *it) {
        const std::string where = "controls[" + std::to_string(i) + "]";
        if (!c.is_object()) fail(where + ": expected an object");
        const std::string kind = get_str(c, where, "kind");
        if (kind == "constant") {
            check_keys(c, where, {"kind", "value"}, {});
            out.push_back(PiecewiseSchedule::constant(get_num(c, where, "value")));
        } else if (kind == "piecewise") {
            check_keys(c, where, {"kind", "t", "value"}, {});
            PiecewiseSchedule s;
            s.t = get_vec(c, where, "t");
            s.value = get_vec(c, where, "value");
            s.validate();
            out.push_back(std::move(s));
        } else {
            fail(where + ": control kind must be \"constant\" or \"piecewise\"");
        }
        ++i;
    }
    return out;
}

std::vector<Schedule> parse_liq_schedules(const json& root, const RunContext& ctx) {
    const auto it = root.find("schedules");
    if (it == root.end()) fail("missing \"schedules\" array");
    if (!it->is_array() || it->empty()) fail("\"schedules\" must be a non-empty array");
    std::vector<Schedule> out;
    int i = 0;
    for (const json& s : *it) {
        const std::string where = "schedules[" + std::to_string(i) + "]";
        if (!s.is_object()) fail(where + ": expected an object");
        const std::string kind = get_str(s, where, "kind");
        if (kind == "constant") {
            check_keys(s, where, {"kind", "total"}, {});
            out.push_back(Schedule::constant(get_num(s, where, "total")));
        } else if (kind == "front_loaded") {
            check_keys(s, where, {"kind", "total", "power"}, {});
            out.push_back(
                Schedule::front_loaded(get_num(s, where, "total"), get_num(s, where, "power")));
        } else if (kind == "time_grid") {
            check_keys(s, where, {"kind"}, {"path", "t", "rate"});
            const bool has_path = s.contains("path");
            const bool has_inline = s.contains("t") || s.contains("rate");
            if (has_path == has_inline)
                fail(where + ": time grids take either \"path\" or inline \"t\"/\"rate\"");
            if (has_path) {
                out.push_back(
                    Schedule::time_grid_from_csv(resolve(ctx, get_str(s, where, "path"))));
            } else {
                PiecewiseSchedule ps;
                ps.t = get_vec(s, where, "t");
                ps.value = get_vec(s, where, "rate");
                out.push_back(Schedule::time_grid(std::move(ps)));
            }
        } else {
            fail(where + ": schedule kind must be \"constant\", \"front_loaded\" or "
                         "\"time_grid\"");
        }
        ++i;
    }
    return out;
}

std::function<double(double)> parse_sigma_fn(const json& root) {
    const json& s = require_block(root, "sigma_fn");
    const std::string kind = get_str(s, "sigma_fn block", "kind");
    if (kind == "constant") {
        check_keys(s, "sigma_fn block", {"kind", "value"}, {});
        const double v = get_num(s, "sigma_fn block", "value");
        if (!(v > 0.0) || !is_finite(v)) fail("sigma_fn block.value: must be positive");
        return [v](double) { return v; };
    }
    if (kind == "shifted_reciprocal") {
        // sigma(x) = base + scale / (shift + x), a simple decreasing local
        // volatility on x > 0.
        check_keys(s, "sigma_fn block", {"kind", "base", "scale", "shift"}, {});
        const double base = get_num(s, "sigma_fn block", "base");
        const double scale = get_num(s, "sigma_fn block", "scale");
        const double shift = get_num(s, "sigma_fn block", "shift");
        if (!is_finite(base) || !is_finite(scale) || !is_finite(shift))
            fail("sigma_fn block: coefficients must be finite");
        if (base < 0.0 || scale < 0.0 || shift < 0.0 || !(base + scale > 0.0))
            fail("sigma_fn block: need base, scale, shift >= 0 and base + scale > 0");
        return [base, scale, shift](double x) { return base + scale / (shift + x); };
    }
    fail("sigma_fn block: kind must be \"constant\" or \"shifted_reciprocal\"");
}

LossFunction parse_loss(const json& root) {
    const json& l = require_block(root, "loss");
    const std::string kind = get_str(l, "loss block", "kind");
    if (kind == "quadratic") {
        check_keys(l, "loss block", {"kind"}, {});
        return LossFunction::quadratic();
    }
    if (kind == "power") {
        check_keys(l, "loss block", {"kind", "exponent"}, {});
        return LossFunction::power(get_num(l, "loss block", "exponent"));
    }
    fail("loss block: kind must be \"quadratic\" or \"power\"");
}

ScenarioSet parse_scenarios(const json& root, const RunContext& ctx) {
    const json& s = require_block(root, "scenarios");
    check_keys(s, "scenarios block", {}, {"path", "claim", "density"});
    const bool has_path = s.contains("path");
    const bool has_inline = s.contains("claim") || s.contains("density");
    if (has_path == has_inline)
        fail("scenarios block: give either \"path\" or inline \"claim\"/\"density\"");
    if (has_path) return ScenarioSet::from_csv(resolve(ctx, get_str(s, "scenarios block", "path")));
    ScenarioSet set;
    set.claim = get_vec(s, "scenarios block", "claim");
    set.density = get_vec(s, "scenarios block", "density");
    set.validate();
    return set;
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

std::string out_name(const RunContext& ctx) {
    if (ctx.cfg.contains("output")) {
        const json& o = ctx.cfg.at("output");
        if (!o.is_string() || o.get<std::string>().empty())
            fail("\"output\" must be a non-empty file name");
        return o.get<std::string>();
    }
    std::string n = ctx.command;
    std::replace(n.begin(), n.end(), '-', '_');
    return n + ".csv";
}

// quantile.csv -> quantile_region.csv and alike.
std::string with_suffix(std::string name, const std::string& suffix) {
    const std::string ext = ".csv";
    if (name.size() >= ext.size() && name.compare(name.size() - ext.size(), ext.size(), ext) == 0)
        name.insert(name.size() - ext.size(), suffix);
    else
        name += suffix + ext;
    return name;
}

void emit(RunContext& ctx, CsvTable table, const std::string& filename) {
    const std::vector<std::pair<std::string, std::string>> preamble = {
        {"version", kToolVersion},
        {"command", ctx.command},
        {"seed", std::to_string(ctx.seed)},
        {"config_hash", ctx.config_hash},
    };
    table.metadata.insert(table.metadata.begin(), preamble.begin(), preamble.end());
    const std::filesystem::path path = std::filesystem::path(ctx.out_dir) / filename;
    write_csv(path.string(), table);
    ctx.written.push_back(path.string());
}

void emit_single(RunContext& ctx, const std::vector<std::string>& columns,
                 const std::vector<double>& row) {
    CsvTable t;
    t.columns = columns;
    t.rows.push_back(row);
    emit(ctx, std::move(t), out_name(ctx));
}

// Root-level schema: every command allows the bookkeeping keys "command"
// (must match the invoked subcommand) and "output" (result file name).
void check_root(const RunContext& ctx, std::vector<std::string> required,
                std::vector<std::string> optional) {
    optional.emplace_back("command");
    optional.emplace_back("output");
    check_keys(ctx.cfg, "config", required, optional);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

void run_price_bs(RunContext& ctx) {
    check_root(ctx, {"model", "payoff", "horizon"}, {});
    const MarketModel m = parse_model(ctx.cfg);
    const Payoff g = parse_payoff(ctx.cfg, ctx, "payoff");
    const double T = parse_horizon(ctx.cfg, false).T;
    double value = 0.0;
    if (m.flavor == Flavor::Geometric) {
        switch (g.kind()) {
            case PayoffKind::Call: value = bs_call(m.spot, g.strike(), m.r, m.sigma, T); break;
            case PayoffKind::Put: value = bs_put(m.spot, g.strike(), m.r, m.sigma, T); break;
            case PayoffKind::Digital:
                value = bs_digital(m.spot, g.strike(), m.r, m.sigma, T);
                break;
            case PayoffKind::Linear: value = m.spot; break;
            default: fail("price-bs: closed forms cover call, put, digital and linear claims");
        }
    } else {
        if (m.r != 0.0) fail("price-bs: the arithmetic closed forms assume r = 0");
        switch (g.kind()) {
            case PayoffKind::Call: value = bachelier_call(m.spot, g.strike(), m.sigma, T); break;
            case PayoffKind::Put:
                // E[(K - X)^+] = E[(X - K)^+] - (x - K) at zero rate.
                value = bachelier_call(m.spot, g.strike(), m.sigma, T) - (m.spot - g.strike());
                break;
            case PayoffKind::Digital:
                value = norm_cdf((m.spot - g.strike()) / (m.sigma * std::sqrt(T)));
                break;
            case PayoffKind::Linear: value = m.spot; break;
            default: fail("price-bs: closed forms cover call, put, digital and linear claims");
        }
    }
    emit_single(ctx, {"value"}, {value});
    note(ctx, "value = " + format_double(value));
}

void run_price_exchange(RunContext& ctx) {
    check_root(ctx, {"exchange"}, {});
    const json& e = require_block(ctx.cfg, "exchange");
    check_keys(e, "exchange block", {"a", "b", "vol", "tau"}, {});
    const double value =
        margrabe_exchange(get_num(e, "exchange block", "a"), get_num(e, "exchange block", "b"),
                          get_num(e, "exchange block", "vol"), get_num(e, "exchange block", "tau"));
    emit_single(ctx, {"value"}, {value});
    note(ctx, "value = " + format_double(value));
}

void run_facelift(RunContext& ctx) {
    check_root(ctx, {"payoff", "constraint", "facelift"}, {});
    const Payoff g = parse_payoff(ctx.cfg, ctx, "payoff");
    const ConstraintSet K = parse_constraint(ctx.cfg);
    const json& f = require_block(ctx.cfg, "facelift");
    check_keys(f, "facelift block", {"x_lo", "x_hi"}, {"points", "mode", "range"});
    const double lo = get_num(f, "facelift block", "x_lo");
    const double hi = get_num(f, "facelift block", "x_hi");
    const int points = get_int_or(f, "facelift block", "points", 201);
    if (!is_finite(lo) || !is_finite(hi) || !(hi > lo) || points < 2)
        fail("facelift block: need finite x_lo < x_hi and points >= 2");
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(points, lo, hi);
    const std::string mode = get_str_or(f, "facelift block", "mode", "amount");
    Payoff lifted = Payoff::linear();  // placeholder; assigned below
    if (mode == "amount") {
        if (f.contains("range")) fail("facelift block: \"range\" applies to proportion mode only");
        lifted = facelift_amount_claim(g, K, grid);
    } else if (mode == "proportion") {
        const std::string range = get_str_or(f, "facelift block", "range", "as_written");
        ProportionRange pr = ProportionRange::AsWritten;
        if (range == "full_domain")
            pr = ProportionRange::FullDomain;
        else if (range != "as_written")
            fail("facelift block.range: must be \"as_written\" or \"full_domain\"");
        lifted = facelift_proportion_claim(g, K, grid, pr);
    } else {
        fail("facelift block.mode: must be \"amount\" or \"proportion\"");
    }
    CsvTable t;
    t.columns = {"x", "value"};
    for (Eigen::Index i = 0; i < lifted.grid().size(); ++i)
        t.rows.push_back({lifted.grid()[i], lifted.values()[i]});
    emit(ctx, std::move(t), out_name(ctx));
    note(ctx, "lifted " + std::to_string(points) + " nodes");
}

void emit_surface(RunContext& ctx, const PdeSolution& sol, double spot, int stride) {
    const double value = sol.value_at(0.0, spot);
    CsvTable t = sol.to_csv_table(stride);
    const std::vector<std::pair<std::string, std::string>> extra = {
        {"value_at_spot", format_double(value)},
        {"delta_at_spot", format_double(sol.delta_at(0.0, spot))},
    };
    t.metadata.insert(t.metadata.begin(), extra.begin(), extra.end());
    emit(ctx, std::move(t), out_name(ctx));
    note(ctx, "value_at_spot = " + format_double(value));
}

void run_pde_linear(RunContext& ctx) {
    check_root(ctx, {"model", "payoff", "horizon", "grid"}, {});
    const MarketModel m = parse_model(ctx.cfg);
    const Payoff g = parse_payoff(ctx.cfg, ctx, "payoff");
    const double T = parse_horizon(ctx.cfg, false).T;
    const GridSpec gs = parse_grid(ctx.cfg, false);
    const PdeSolution sol = solve_linear(m, g, build_grid(m, T, gs), gs.scheme);
    emit_surface(ctx, sol, m.spot, gs.stride);
}

void run_pde_constrained(RunContext& ctx) {
    check_root(ctx, {"model", "payoff", "constraint", "horizon", "grid"}, {});
    const MarketModel m = parse_model(ctx.cfg);
    const Payoff g = parse_payoff(ctx.cfg, ctx, "payoff");
    const ConstraintSet K = parse_constraint(ctx.cfg);
    const double T = parse_horizon(ctx.cfg, false).T;
    const GridSpec gs = parse_grid(ctx.cfg, true);
    const PdeSolution sol =
        solve_constrained(m, g, K, build_grid(m, T, gs), gs.scheme, gs.mode, gs.range);
    emit_surface(ctx, sol, m.spot, gs.stride);
}

void run_pde_bsb(RunContext& ctx) {
    check_root(ctx, {"payoff", "horizon", "grid", "bsb"}, {});
    const Payoff g = parse_payoff(ctx.cfg, ctx, "payoff");
    const double T = parse_horizon(ctx.cfg, false).T;
    const GridSpec gs = parse_grid(ctx.cfg, false);
    const json& b = require_block(ctx.cfg, "bsb");
    check_keys(b, "bsb block", {"spot", "sigma_lo", "sigma_hi"}, {"r"});
    const double spot = get_num(b, "bsb block", "spot");
    const double sigma_lo = get_num(b, "bsb block", "sigma_lo");
    const double sigma_hi = get_num(b, "bsb block", "sigma_hi");
    const double r = get_num_or(b, "bsb block", "r", 0.0);
    if (!(spot > 0.0) || !is_finite(spot)) fail("bsb block.spot: must be positive");
    const Grid1D grid = Grid1D::log_uniform(spot, sigma_hi, r, T, gs.J, gs.N, gs.n_std);
    const PdeSolution sol = solve_bsb(g, sigma_lo, sigma_hi, r, grid, gs.scheme);
    emit_surface(ctx, sol, spot, gs.stride);
}

void run_quantile(RunContext& ctx) {
    check_root(ctx, {"model", "payoff", "horizon", "quantile"}, {});
    const MarketModel m = parse_model(ctx.cfg);
    const Payoff g = parse_payoff(ctx.cfg, ctx, "payoff");
    const double T = parse_horizon(ctx.cfg, false).T;
    const json& q = require_block(ctx.cfg, "quantile");
    check_keys(q, "quantile block", {"p"}, {});
    const QuantileResult res = quantile_price(m, g, T, get_num(q, "quantile block", "p"));
    emit_single(ctx, {"price", "q_bar", "achieved_p", "atom"},
                {res.price, res.q_bar, res.achieved_p, res.atom_flag ? 1.0 : 0.0});
    CsvTable region;
    region.columns = {"interval_lo", "interval_hi"};
    for (const auto& [a, b] : res.success_x) region.rows.push_back({a, b});
    emit(ctx, std::move(region), with_suffix(out_name(ctx), "_region"));
    note(ctx, "price = " + format_double(res.price));
}

void run_shortfall(RunContext& ctx) {
    if (ctx.cfg.contains("scenarios")) {
        check_root(ctx, {"scenarios", "loss", "shortfall"}, {});
        const json& sb = require_block(ctx.cfg, "shortfall");
        check_keys(sb, "shortfall block", {"budget"}, {});
        const ShortfallSolution sol =
            shortfall_optimal_ratio(parse_loss(ctx.cfg), parse_scenarios(ctx.cfg, ctx),
                                    get_num(sb, "shortfall block", "budget"));
        CsvTable t;
        t.metadata = {{"c_hat", format_double(sol.c_hat)},
                      {"achieved_budget", format_double(sol.achieved_budget)},
                      {"achieved_risk", format_double(sol.achieved_risk)}};
        t.columns = {"scenario_id", "phi"};
        for (Eigen::Index i = 0; i < sol.phi.size(); ++i)
            t.rows.push_back({static_cast<double>(i), sol.phi[i]});
        emit(ctx, std::move(t), out_name(ctx));
        note(ctx, "c_hat = " + format_double(sol.c_hat) +
                      ", achieved_risk = " + format_double(sol.achieved_risk));
        return;
    }
    check_root(ctx, {"model", "payoff", "horizon", "shortfall"}, {});
    const MarketModel m = parse_model(ctx.cfg);
    const Payoff g = parse_payoff(ctx.cfg, ctx, "payoff");
    const double T = parse_horizon(ctx.cfg, false).T;
    const json& sb = require_block(ctx.cfg, "shortfall");
    check_keys(sb, "shortfall block", {"target"}, {});
    const ShortfallQuadResult res =
        shortfall_price_quadratic(m, g, T, get_num(sb, "shortfall block", "target"));
    emit_single(ctx, {"price", "q_bar", "achieved_risk"},
                {res.price, res.q_bar, res.achieved_risk});
    note(ctx, "price = " + format_double(res.price));
}

void run_dual_bound(RunContext& ctx) {
    check_root(ctx, {"model", "payoff", "constraint", "horizon", "mc", "controls"}, {});
    const MarketModel m = parse_model(ctx.cfg);
    const Payoff g = parse_payoff(ctx.cfg, ctx, "payoff");
    const ConstraintSet K = parse_constraint(ctx.cfg);
    const double T = parse_horizon(ctx.cfg, false).T;
    const McConfig mc = parse_mc(ctx.cfg);
    const DualBoundReport rep = dual_lower_bound(m, g, K, parse_controls(ctx.cfg), T, mc);
    emit(ctx, rep.to_csv_table(), out_name(ctx));
    note(ctx, "best_bound = " + format_double(rep.best_bound));
}

void run_hedge_sim(RunContext& ctx) {
    check_root(ctx, {"model", "payoff", "horizon", "mc", "hedge"}, {"grid"});
    const MarketModel m = parse_model(ctx.cfg);
    const Payoff g = parse_payoff(ctx.cfg, ctx, "payoff");
    const double T = parse_horizon(ctx.cfg, false).T;
    const McConfig mc = parse_mc(ctx.cfg);
    const json& h = require_block(ctx.cfg, "hedge");
    check_keys(h, "hedge block", {"rebalances"}, {"source", "y0", "margin", "p"});
    const int rebalances = get_int(h, "hedge block", "rebalances");
    const double margin = get_num_or(h, "hedge block", "margin", 0.0);
    const std::string source = get_str_or(h, "hedge block", "source", "closed_form");
    if (source != "pde" && ctx.cfg.contains("grid"))
        fail("config: the \"grid\" block is only used with hedge source \"pde\"");
    if (source != "quantile" && h.contains("p"))
        fail("hedge block: \"p\" is only used with source \"quantile\"");

    DeltaSource delta;
    double y0 = 0.0;
    if (source == "closed_form") {
        if (m.flavor != Flavor::Geometric || g.kind() != PayoffKind::Call)
            fail("hedge block: the closed-form source covers geometric call claims");
        const double k = g.strike();
        const double r = m.r, sigma = m.sigma;
        delta = delta_from_function([k, r, sigma, T](double t, double x) {
            return bs_call_delta(x, k, r, sigma, std::max(T - t, 0.0));
        });
        y0 = get_num_or(h, "hedge block", "y0", bs_call(m.spot, k, m.r, m.sigma, T));
    } else if (source == "pde") {
        const GridSpec gs = parse_grid(ctx.cfg, false);
        const PdeSolution sol = solve_linear(m, g, build_grid(m, T, gs), gs.scheme);
        y0 = get_num_or(h, "hedge block", "y0", sol.value_at(0.0, m.spot));
        delta = delta_from_solution(sol);
    } else if (source == "quantile") {
        const QuantileResult qr = quantile_price(m, g, T, get_num(h, "hedge block", "p"));
        delta = restricted_claim_delta(m, g, qr.success_x, T);
        y0 = get_num_or(h, "hedge block", "y0", qr.price);
    } else {
        fail("hedge block.source: must be \"closed_form\", \"pde\" or \"quantile\"");
    }

    const HedgeReport rep = hedge_simulation(delta, m, g, y0, T, rebalances, mc, margin);
    CsvTable t = rep.to_csv_table();
    t.metadata.insert(t.metadata.begin(), {"y0", format_double(y0)});
    emit(ctx, std::move(t), out_name(ctx));
    note(ctx, "success_frequency = " + format_double(rep.success_frequency) +
                  " (stderr " + format_double(rep.success_std_error) + ")");
}

void run_gamma_exp(RunContext& ctx) {
    check_root(ctx, {"sigma_fn", "target", "instrument", "gamma", "mc"}, {});
    const auto sigma = parse_sigma_fn(ctx.cfg);
    const Payoff target = parse_payoff(ctx.cfg, ctx, "target");
    const Payoff instrument = parse_payoff(ctx.cfg, ctx, "instrument");
    const McConfig mc = parse_mc(ctx.cfg);
    const json& gb = require_block(ctx.cfg, "gamma");
    check_keys(gb, "gamma block", {"x0", "t1", "t2", "rebalances"},
               {"grid_points", "time_steps", "n_std"});
    const double x0 = get_num(gb, "gamma block", "x0");
    const double t1 = get_num(gb, "gamma block", "t1");
    const double t2 = get_num(gb, "gamma block", "t2");
    const std::vector<int> rebalances = get_int_vec(gb, "gamma block", "rebalances");
    GammaConfig gc;
    gc.grid_points = get_int_or(gb, "gamma block", "grid_points", gc.grid_points);
    gc.time_steps = get_int_or(gb, "gamma block", "time_steps", gc.time_steps);
    gc.n_std = get_num_or(gb, "gamma block", "n_std", gc.n_std);
    const GammaReport rep =
        gamma_hedge_experiment(sigma, target, t1, instrument, t2, x0, rebalances, mc, gc);
    emit(ctx, rep.to_csv_table(), out_name(ctx));
    note(ctx, "slope = " + format_double(rep.slope));
}

void run_liquidate(RunContext& ctx) {
    check_root(ctx, {"liquidation", "state", "horizon", "target", "schedules", "mc"}, {});
    const json& lb = require_block(ctx.cfg, "liquidation");
    check_keys(lb, "liquidation block", {"mu", "sigma", "beta", "k_target"}, {"loss"});
    LiquidationModel lm;
    lm.mu = get_num(lb, "liquidation block", "mu");
    lm.sigma = get_num(lb, "liquidation block", "sigma");
    lm.beta = get_num(lb, "liquidation block", "beta");
    lm.k_target = get_num(lb, "liquidation block", "k_target");
    const std::string loss = get_str_or(lb, "liquidation block", "loss", "identity");
    if (loss == "identity")
        lm.loss = LossMap::identity();
    else if (loss == "cubic")
        lm.loss = LossMap::cubic();
    else
        fail("liquidation block.loss: must be \"identity\" or \"cubic\"");
    lm.validate();

    const json& st = require_block(ctx.cfg, "state");
    check_keys(st, "state block", {"x1"}, {"x2", "y"});
    LiquidationState x0;
    x0.x1 = get_num(st, "state block", "x1");
    x0.x2 = get_num_or(st, "state block", "x2", 0.0);
    x0.y = get_num_or(st, "state block", "y", 0.0);

    const Horizon hz = parse_horizon(ctx.cfg, true);
    const json& tb = require_block(ctx.cfg, "target");
    check_keys(tb, "target block", {"p"}, {});
    const double p = get_num(tb, "target block", "p");
    const std::vector<Schedule> family = parse_liq_schedules(ctx.cfg, ctx);
    const McConfig mc = parse_mc(ctx.cfg);

    const PremiumReport rep = premium_upper_bound(lm, p, family, hz.t0, x0, hz.T, mc);
    emit(ctx, rep.to_csv_table(), out_name(ctx));
    note(ctx, "best_y = " + format_double(rep.best_y));
}

void run_convergence(RunContext& ctx) {
    check_root(ctx, {"model", "payoff", "horizon", "convergence"}, {});
    const MarketModel m = parse_model(ctx.cfg);
    const Payoff g = parse_payoff(ctx.cfg, ctx, "payoff");
    const double T = parse_horizon(ctx.cfg, false).T;
    const json& cb = require_block(ctx.cfg, "convergence");
    check_keys(cb, "convergence block", {"grids"}, {"scheme", "oracle", "n_std"});
    const Scheme scheme = parse_scheme(get_str_or(cb, "convergence block", "scheme", "implicit"));
    const double n_std = get_num_or(cb, "convergence block", "n_std", 8.0);
    std::optional<double> oracle;
    if (cb.contains("oracle")) oracle = as_num(cb.at("oracle"), "convergence block.oracle");

    const json& gj = cb.at("grids");
    if (!gj.is_array() || gj.empty())
        fail("convergence block.grids: expected a non-empty array of [J, N] pairs");
    std::vector<std::pair<int, int>> grids;
    for (const json& e : gj) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
            !e[1].is_number_integer())
            fail("convergence block.grids: each entry is a [J, N] integer pair");
        grids.emplace_back(static_cast<int>(e[0].get<std::int64_t>()),
                           static_cast<int>(e[1].get<std::int64_t>()));
    }

    const auto price_at = [&](int J, int N) {
        const Grid1D grid = m.flavor == Flavor::Geometric
                                ? Grid1D::log_uniform(m.spot, m.sigma, m.r, T, J, N, n_std)
                                : Grid1D::linear_uniform(m.spot, m.sigma, T, J, N, n_std);
        return solve_linear(m, g, grid, scheme).value_at(0.0, m.spot);
    };
    const ConvergenceReport rep = estimate_convergence_order(price_at, grids, oracle);

    CsvTable t;
    t.metadata = {{"against_oracle", rep.against_oracle ? "1" : "0"},
                  {"monotone", rep.monotone ? "1" : "0"}};
    t.columns = {"J", "N", "value", "error", "order"};
    for (const ConvergencePoint& pt : rep.points)
        t.rows.push_back({static_cast<double>(pt.J), static_cast<double>(pt.N), pt.value,
                          pt.error, pt.order});
    emit(ctx, std::move(t), out_name(ctx));
    note(ctx, std::string("monotone = ") + (rep.monotone ? "1" : "0"));
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

json load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open config file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(std::string("config is not valid JSON: ") + e.what());
    }
}

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Command {
    const char* name;
    const char* help;
    void (*fn)(RunContext&);
};

constexpr Command kCommands[] = {
    {"price-bs", "closed-form price of a vanilla claim", run_price_bs},
    {"price-exchange", "closed-form price of an exchange option", run_price_exchange},
    {"facelift", "constraint-lifted payoff table", run_facelift},
    {"pde-linear", "linear pricing equation on a grid", run_pde_linear},
    {"pde-constrained", "super-hedging price under position constraints", run_pde_constrained},
    {"pde-bsb", "worst-case price over a volatility band", run_pde_bsb},
    {"quantile", "cheapest hedge covering the claim with probability p", run_quantile},
    {"shortfall", "expected-shortfall pricing / optimal partial coverage", run_shortfall},
    {"dual-bound", "penalized lower bounds from candidate drift controls", run_dual_bound},
    {"hedge-sim", "discrete rebalancing simulation of a hedging rule", run_hedge_sim},
    {"gamma-exp", "replication-error decay of delta-gamma hedging", run_gamma_exp},
    {"liquidate", "liquidation premium bounds over a schedule family", run_liquidate},
    {"convergence", "observed order of grid refinement", run_convergence},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"risk-aware pricing toolkit: config-driven valuation, hedging simulations and "
                 "liquidation studies"};
    app.require_subcommand(1);

    struct {
        std::string config;
        std::string out = ".";
        std::uint64_t seed = 0;
        bool quiet = false;
    } flags;

    for (const Command& c : kCommands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", flags.config, "JSON config file")->required();
        sub->add_option("--out", flags.out, "output directory (default: current)");
        sub->add_option("--seed", flags.seed, "override the simulation seed");
        sub->add_flag("--quiet", flags.quiet, "suppress console output");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    RunContext ctx;
    ctx.command = sub->get_name();
    ctx.config_path = flags.config;
    ctx.out_dir = flags.out;
    ctx.quiet = flags.quiet;

    const Command* cmd = nullptr;
    for (const Command& c : kCommands)
        if (ctx.command == c.name) cmd = &c;

    try {
        if (cmd == nullptr) fail("unknown command \"" + ctx.command + "\"");
        std::error_code ec;
        ctx.config_dir = std::filesystem::absolute(ctx.config_path, ec).parent_path();
        ctx.cfg = load_config(ctx.config_path);
        if (!ctx.cfg.is_object()) fail("config root must be a JSON object");
        if (ctx.cfg.contains("command")) {
            const json& c = ctx.cfg.at("command");
            if (!c.is_string() || c.get<std::string>() != ctx.command)
                fail("config names command \"" +
                     (c.is_string() ? c.get<std::string>() : std::string("<non-string>")) +
                     "\" but \"" + ctx.command + "\" was invoked");
        }

        const bool seed_given = sub->count("--seed") > 0;
        if (seed_given && ctx.cfg.contains("mc") && ctx.cfg["mc"].is_object())
            ctx.cfg["mc"]["seed"] = flags.seed;
        if (ctx.cfg.contains("mc") && ctx.cfg["mc"].is_object())
            ctx.seed = get_u64_or(ctx.cfg["mc"], "mc block", "seed", 1);
        else if (seed_given)
            ctx.seed = flags.seed;
        ctx.config_hash = fnv1a_hex(ctx.cfg.dump());

        std::filesystem::create_directories(ctx.out_dir, ec);  // best effort; writes re-check
        cmd->fn(ctx);
        if (!ctx.quiet)
            for (const std::string& p : ctx.written) std::cout << "wrote " << p << "\n";
        return 0;
    } catch (const json::exception& e) {
        std::cerr << "error: " << ctx.config_path << ": " << e.what() << "\n";
        return 2;
    } catch (const validation_error& e) {
        std::cerr << "error: " << ctx.config_path << ": " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "error: " << ctx.config_path << ": " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << ctx.config_path << ": unexpected failure: " << e.what() << "\n";
        return 3;
    }
}
