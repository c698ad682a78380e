#include "hadamard/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "hadamard/fbi.hpp"
#include "hadamard/instability.hpp"
#include "hadamard/kirchhoff.hpp"
#include "hadamard/majorant.hpp"
#include "hadamard/spectral_vdw.hpp"
#include "hadamard/symbol.hpp"
#include "hadamard/system.hpp"

#ifndef HADAMARD_VERSION
#define HADAMARD_VERSION "0.0.0"
#endif

namespace hadamard::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

SchemaError::SchemaError(const std::string& path, const std::string& message)
    : ConfigError(path + ": " + message), path_(path) {}

namespace {

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", x);
}

std::string num(int x) { return std::to_string(x); }
std::string flag(bool b) { return b ? "true" : "false"; }

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

// Typed access to one JSON object with field paths in every error; unknown keys are
// rejected by finish().
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw SchemaError(path_, "expected an object");
    }

    [[nodiscard]] std::string at(const std::string& k) const { return path_ + "." + k; }
    [[nodiscard]] bool has(const std::string& k) const { return j_.contains(k); }

    const json& raw(const std::string& k) {
        used_.insert(k);
        if (!j_.contains(k)) throw SchemaError(at(k), "required field missing");
        return j_.at(k);
    }

    double number(const std::string& k, std::optional<double> def = std::nullopt) {
        used_.insert(k);
        if (!j_.contains(k)) {
            if (def) return *def;
            throw SchemaError(at(k), "required field missing");
        }
        const auto& v = j_.at(k);
        if (!v.is_number()) throw SchemaError(at(k), "expected a number");
        return v.get<double>();
    }

    double positive(const std::string& k, std::optional<double> def = std::nullopt) {
        const double v = number(k, def);
        if (!(v > 0.0)) throw SchemaError(at(k), "must be positive");
        return v;
    }

    int integer(const std::string& k, std::optional<int> def = std::nullopt, int min = std::numeric_limits<int>::min()) {
        used_.insert(k);
        int v = 0;
        if (!j_.contains(k)) {
            if (!def) throw SchemaError(at(k), "required field missing");
            v = *def;
        } else {
            const auto& x = j_.at(k);
            if (!x.is_number_integer()) throw SchemaError(at(k), "expected an integer");
            v = x.get<int>();
        }
        if (v < min) throw SchemaError(at(k), "must be >= " + std::to_string(min));
        return v;
    }

    bool boolean(const std::string& k, bool def) {
        used_.insert(k);
        if (!j_.contains(k)) return def;
        if (!j_.at(k).is_boolean()) throw SchemaError(at(k), "expected true or false");
        return j_.at(k).get<bool>();
    }

    std::string string(const std::string& k, std::optional<std::string> def = std::nullopt) {
        used_.insert(k);
        if (!j_.contains(k)) {
            if (def) return *def;
            throw SchemaError(at(k), "required field missing");
        }
        if (!j_.at(k).is_string()) throw SchemaError(at(k), "expected a string");
        return j_.at(k).get<std::string>();
    }

    std::string choice(const std::string& k, const std::vector<std::string>& allowed,
                       std::optional<std::string> def = std::nullopt) {
        const auto v = string(k, std::move(def));
        if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            throw SchemaError(at(k), "expected one of {" + list + "}, got '" + v + "'");
        }
        return v;
    }

    std::vector<double> numbers(const std::string& k, std::optional<std::vector<double>> def = std::nullopt) {
        used_.insert(k);
        if (!j_.contains(k)) {
            if (def) return *def;
            throw SchemaError(at(k), "required field missing");
        }
        const auto& v = j_.at(k);
        if (!v.is_array()) throw SchemaError(at(k), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw SchemaError(at(k) + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    std::vector<int> integers(const std::string& k, std::optional<std::vector<int>> def = std::nullopt) {
        used_.insert(k);
        if (!j_.contains(k)) {
            if (def) return *def;
            throw SchemaError(at(k), "required field missing");
        }
        const auto& v = j_.at(k);
        if (!v.is_array()) throw SchemaError(at(k), "expected an array of integers");
        std::vector<int> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number_integer())
                throw SchemaError(at(k) + "[" + std::to_string(i) + "]", "expected an integer");
            out.push_back(v[i].get<int>());
        }
        return out;
    }

    Vector vector(const std::string& k, int size, std::optional<Vector> def = std::nullopt) {
        if (!has(k)) {
            used_.insert(k);
            if (def) return *def;
            throw SchemaError(at(k), "required field missing");
        }
        const auto v = numbers(k);
        if (int(v.size()) != size) throw SchemaError(at(k), "expected " + std::to_string(size) + " entries");
        return Eigen::Map<const Vector>(v.data(), size);
    }

    Fields object(const std::string& k) { return Fields(raw(k), at(k)); }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k)) throw SchemaError(at(k), "unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

void require(bool ok, const std::string& path, const std::string& msg) {
    if (!ok) throw SchemaError(path, msg);
}

PolynomialSystem load_system(Fields& f) {
    const std::string path = f.at("system");
    const json spec = f.has("system") ? f.raw("system") : json("vdw");
    try {
        return system_from_json(spec);
    } catch (const json::exception& e) {
        throw SchemaError(path, e.what());
    } catch (const ConfigError& e) {
        throw SchemaError(path, e.what());
    }
}

struct Output {
    json report = json::object();
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::map<std::string, std::string> artifacts;
    int status = kExitOk;
    std::string message;
};

// ---------------------------------------------------------------- classify

Output cmd_classify(Fields& f, std::uint64_t seed) {
    const auto ps = load_system(f);
    const auto sys = ps.as_system();
    const Vector u = f.vector("u", ps.N, Vector::Zero(ps.N));
    const Vector xi = f.vector("xi", ps.d, Vector::Ones(ps.d));
    const Vector x = f.vector("x", ps.d, Vector::Zero(ps.d));
    const double t = f.number("t", 0.0);
    Output out;
    out.report["system"] = ps.name;

    if (f.has("sample")) {
        Fields s = f.object("sample");
        const int count = s.integer("count", std::nullopt, 1);
        const double lo = s.number("u_min"), hi = s.number("u_max");
        require(lo < hi, s.at("u_max"), "must exceed u_min");
        const int comp = s.integer("component", 0, 0);
        require(comp < ps.N, s.at("component"), "out of range");
        const int xi_cycle = s.integer("xi_cycle", 1, 1);
        const auto near = s.numbers("exclude_square_near", std::vector<double>{});
        const double width = s.number("exclude_width", 0.0);
        s.finish();
        f.finish();

        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(lo, hi);
        out.columns = {"index", "u", "xi_scale", "verdict", "gamma0"};
        int accepted = 0, rejected = 0, nonhyp = 0;
        while (accepted < count) {
            const double v = U(rng);
            bool skip = false;
            for (double c : near) skip = skip || std::abs(v * v - c) < width;
            if (skip) {
                ++rejected;
                continue;
            }
            Vector uu = u;
            uu[comp] = v;
            const int k = 1 + accepted % xi_cycle;
            const auto spec = spectrum_classify(principal_symbol(sys, t, x, uu, double(k) * xi));
            nonhyp += spec.verdict == Verdict::NonHyperbolic;
            out.rows.push_back({num(accepted), num(v), num(k), to_string(spec.verdict), num(spec.gamma0)});
            ++accepted;
        }
        out.report["count"] = count;
        out.report["nonhyperbolic"] = nonhyp;
        out.report["hyperbolic"] = count - nonhyp;
        out.report["rejected"] = rejected;
        return out;
    }

    f.finish();
    const Matrix M = principal_symbol(sys, t, x, u, xi);
    const auto spec = spectrum_classify(M);
    out.report["verdict"] = to_string(spec.verdict);
    out.report["gamma0"] = spec.gamma0;
    json ev = json::array();
    for (const auto& e : spec.eigenvalues) ev.push_back(complex_json(e));
    out.report["eigenvalues"] = ev;
    if (spec.lambda0) out.report["lambda0"] = complex_json(*spec.lambda0);
    if (spec.rbar) {
        json r = json::array();
        for (Eigen::Index i = 0; i < spec.rbar->size(); ++i) r.push_back(complex_json((*spec.rbar)[i]));
        out.report["rbar"] = r;
    }
    out.report["projector_rank"] = projector_upper(M).rank;
    return out;
}

// ---------------------------------------------------------------- vdw

std::vector<ModeSpec> mode_list(Fields& f, const std::string& k) {
    std::vector<ModeSpec> out;
    if (!f.has(k)) return out;
    const auto& a = f.raw(k);
    require(a.is_array(), f.at(k), "expected an array of [n, re, im]");
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& e = a[i];
        const std::string p = f.at(k) + "[" + std::to_string(i) + "]";
        require(e.is_array() && e.size() == 3 && e[0].is_number_integer() && e[1].is_number() && e[2].is_number(), p,
                "expected [n, re, im]");
        out.push_back({e[0].get<int>(), Complex(e[1].get<double>(), e[2].get<double>())});
    }
    return out;
}

Output cmd_vdw(Fields& f) {
    const auto task = f.choice("task", {"energy", "growth"});
    Output out;
    out.report["task"] = task;
    if (task == "energy") {
        const int lambda = f.integer("lambda", std::nullopt, 1);
        const int nmodes = f.integer("nmodes", 4 * lambda, 1);
        const double u0 = f.number("u0", 0.0);
        const double dt = f.positive("dt"), t_end = f.positive("t_end");
        const int record_every = f.integer("record_every", 1, 1);
        const bool order_check = f.boolean("order_check", false);
        const int divisor = f.integer("order_reference_divisor", 16, 4);
        auto um = mode_list(f, "u_modes"), vm = mode_list(f, "v_modes");
        if (f.has("perturbation")) {
            Fields p = f.object("perturbation");
            const double a = p.number("amplitude"), decay = p.number("decay", 0.0);
            p.finish();
            for (int n = 1; n <= lambda; ++n) {
                const double an = a * std::exp(-decay * n);
                um.push_back({n, Complex(an, 0.5 * an)});
                vm.push_back({n, Complex(-0.3 * an, an)});
            }
        }
        f.finish();
        const auto s = make_state(lambda, nmodes, u0, um, vm);
        IntegrateOptions io;
        io.record_every = record_every;
        const auto run = integrate(s, dt, t_end, io);
        out.columns = {"t", "E"};
        for (std::size_t k = 0; k < run.trace.t.size(); ++k) out.rows.push_back({num(run.trace.t[k]), num(run.trace.E[k])});
        out.report["lambda"] = lambda;
        out.report["nmodes"] = nmodes;
        out.report["dt"] = dt;
        out.report["t_end"] = t_end;
        out.report["drift"] = finite_or_null(run.trace.drift);
        out.report["blew_up"] = run.blew_up;
        out.report["last_finite_t"] = run.last_finite_t;
        if (order_check && !run.blew_up) {
            IntegrateOptions quiet;
            quiet.record_every = std::numeric_limits<int>::max();
            const auto ref = integrate(s, dt / divisor, t_end, quiet);
            auto err = [&](double h) {
                const auto r = integrate(s, h, t_end, quiet);
                return std::max((r.state.uhat - ref.state.uhat).cwiseAbs().maxCoeff(),
                                (r.state.vhat - ref.state.vhat).cwiseAbs().maxCoeff());
            };
            const double e1 = err(dt), e2 = err(dt / 2);
            out.report["order"] = {{"reference_dt", dt / divisor}, {"error_dt", e1}, {"error_half_dt", e2},
                                   {"ratio", finite_or_null(e1 / e2)}};
        }
        if (run.blew_up) {
            out.status = kExitNumerical;
            out.message = "blow-up recorded at t = " + num(run.last_finite_t);
        }
        return out;
    }

    const double amplitude = f.positive("amplitude", 1e-8);
    const double dt = f.positive("dt", 1e-3);
    const double stop = f.positive("stop_amplitude", 1e-2);
    const double horizon = f.positive("horizon", 40.0);
    const auto& cases = f.raw("cases");
    require(cases.is_array() && !cases.empty(), f.at("cases"), "expected a non-empty array of {u0, n}");
    f.finish();
    const auto sys = vdw_system().as_system();
    out.columns = {"u0", "n", "lambda", "fitted_rate", "samples"};
    for (std::size_t i = 0; i < cases.size(); ++i) {
        Fields c(cases[i], "parameters.cases[" + std::to_string(i) + "]");
        const double u0 = c.number("u0");
        const int n = c.integer("n", std::nullopt, 1);
        const int lambda = c.integer("lambda", 2 * n, n);
        c.finish();
        const Vector state = Vector::Unit(2, 0) * u0;
        const double g = spectrum_classify(principal_symbol(sys, 0.0, Vector::Zero(1), state, Vector::Constant(1, n))).gamma0;
        require(g > 0.0, c.at("u0"), "state is hyperbolic; no growth to fit");
        const auto s = make_state(lambda, 4 * lambda, u0, {{n, amplitude}}, {});
        const auto run = integrate(s, dt, horizon / g, {.record_every = 1, .track = {n}, .stop_amplitude = stop});
        std::vector<double> t, a;
        for (const auto& ts : run.tracked) {
            t.push_back(ts.t);
            a.push_back(ts.abs_u[0]);
        }
        const double rate = growth_fit(t, a);
        out.rows.push_back({num(u0), num(n), num(lambda), num(rate), num(int(t.size()))});
    }
    return out;
}

// ---------------------------------------------------------------- kirchhoff

kirchhoff::SpectrumData spectrum_data(Fields& d) {
    const auto type = d.choice("type", {"power", "exponential", "single", "list"});
    kirchhoff::SpectrumData s;
    if (type == "power") {
        s = kirchhoff::SpectrumData::power(d.positive("s"), d.positive("norm"), d.integer("nmax", 4096, 1));
    } else if (type == "exponential") {
        s = kirchhoff::SpectrumData::exponential(d.positive("a"), d.positive("norm"), d.integer("nmax", 4096, 1));
    } else if (type == "single") {
        s = kirchhoff::SpectrumData::single(d.integer("n"), d.number("weight"));
    } else {
        const auto& m = d.raw("modes");
        require(m.is_array(), d.at("modes"), "expected an array of [n, w]");
        std::vector<std::pair<int, double>> nw;
        for (std::size_t i = 0; i < m.size(); ++i) {
            require(m[i].is_array() && m[i].size() == 2 && m[i][0].is_number_integer() && m[i][1].is_number(),
                    d.at("modes") + "[" + std::to_string(i) + "]", "expected [n, w]");
            nw.emplace_back(m[i][0].get<int>(), m[i][1].get<double>());
        }
        s = kirchhoff::SpectrumData::explicit_list(nw);
    }
    d.finish();
    return s;
}

double mode_sup_diff(const kirchhoff::ModeState& a, const kirchhoff::ModeState& b) {
    if (a.u.size() == 0) return 0.0;
    return std::max((a.u - b.u).cwiseAbs().maxCoeff(), (a.v - b.v).cwiseAbs().maxCoeff());
}

Output cmd_kirchhoff(Fields& f) {
    const auto task = f.choice("task", {"oracle", "bound"});
    Fields d = f.object("data");
    const auto data = spectrum_data(d);
    const auto variant = f.choice("variant", {"standard", "interchanged"}, "standard") == "standard"
                             ? kirchhoff::Variant::Standard
                             : kirchhoff::Variant::Interchanged;
    const auto lambdas = f.integers("lambdas");
    require(!lambdas.empty(), f.at("lambdas"), "must not be empty");
    for (int l : lambdas) require(l >= 1, f.at("lambdas"), "entries must be >= 1");
    const double dt = f.positive("dt");
    Output out;
    out.report["task"] = task;
    if (task == "oracle") {
        const double t_end = f.positive("t_end");
        const int record_every = f.integer("record_every", 1, 1);
        f.finish();
        out.columns = {"lambda", "sup_error", "energy_drift", "consistency_error", "diverged"};
        double worst = 0.0, drift = 0.0;
        bool diverged = false;
        for (int l : lambdas) {
            const auto tr = kirchhoff::integrate_A(data, l, t_end, dt, variant);
            const auto run = kirchhoff::direct_mode_ode(data, l, t_end, dt, record_every, variant);
            double err = 0.0;
            for (std::size_t k = 0; k < run.t.size(); ++k)
                err = std::max(err, mode_sup_diff(run.states[k], kirchhoff::closed_form_state(tr, data, run.t[k])));
            worst = std::max(worst, err);
            drift = std::max(drift, run.energy_drift);
            diverged = diverged || run.diverged;
            out.rows.push_back(
                {num(l), num(err), num(run.energy_drift), num(run.max_consistency_error), flag(run.diverged)});
        }
        out.report["max_sup_error"] = worst;
        out.report["max_energy_drift"] = drift;
        out.report["diverged"] = diverged;
        if (diverged) {
            out.status = kExitNumerical;
            out.message = "direct mode ODE diverged";
        }
        return out;
    }
    const double t = f.positive("t");
    const int n0 = f.integer("n0", 4, 0);
    f.finish();
    std::vector<kirchhoff::Trajectory> trs;
    for (int l : lambdas) trs.push_back(kirchhoff::integrate_A(data, l, t, dt, variant));
    const auto rep = kirchhoff::verify_bound_and_limit(trs, kirchhoff::mu_diagnostic(data, lambdas), data, t, n0);
    out.columns = {"lambda", "A", "U", "mu", "lhs", "rhs", "pass", "residual_u", "residual_v"};
    for (const auto& r : rep.rows)
        out.rows.push_back({num(r.lambda), num(r.A), num(r.U), num(r.mu), num(r.lhs), num(r.rhs), flag(r.pass),
                            num(r.residual_u), num(r.residual_v)});
    out.report["t"] = rep.t;
    out.report["K"] = rep.K;
    out.report["all_pass"] = rep.all_pass;
    out.report["residuals_decreasing"] = rep.residuals_decreasing;
    return out;
}

// ---------------------------------------------------------------- instability

struct ParamTemplate {
    double M, beta, m, alpha, delta, r0;
    int d;
};

ParamTemplate param_template(Fields& f, int d_default) {
    ParamTemplate t{};
    t.M = f.number("M");
    t.beta = f.number("beta");
    t.m = f.number("m", 1.0);
    t.alpha = f.number("alpha", 1.0);
    t.d = f.integer("d", d_default, 1);
    t.delta = f.positive("delta", 1.0);
    t.r0 = f.positive("r0", 1.0);
    return t;
}

instability::ProfileProblem profile_problem(Fields& f) {
    instability::ProfileProblem prob;
    prob.sys = load_system(f);
    prob.ubar = f.vector("ubar", prob.sys.N, Vector::Zero(prob.sys.N));
    prob.xibar = f.vector("xibar", prob.sys.d, Vector::Ones(prob.sys.d));
    prob.K = f.integer("K", 32, 1);
    prob.ds = f.positive("ds", 1.0 / 64.0);
    return prob;
}

instability::Params make_params_checked(double eps, const ParamTemplate& t, double gamma0) {
    return instability::make_params(eps, t.M, t.beta, gamma0, t.m, t.alpha, t.d, t.delta, t.r0);
}

Output cmd_instability(Fields& f) {
    auto prob = profile_problem(f);
    const auto templ = param_template(f, prob.sys.d);
    const auto eps = f.numbers("eps");
    require(!eps.empty(), f.at("eps"), "must not be empty");
    instability::HoelderOptions opts;
    opts.points_per_wavelength = f.positive("points_per_wavelength", 8.0);
    opts.t_points_per_unit_s = f.positive("t_points_per_unit_s", 8.0);
    f.finish();
    instability::Params p;
    p.M = templ.M;
    p.beta = templ.beta;
    p.m = templ.m;
    p.alpha = templ.alpha;
    p.d = templ.d;
    p.delta = templ.delta;
    p.r0 = templ.r0;
    const auto rows = instability::hoelder_ratio_sweep(prob, p, eps, opts);
    Output out;
    out.columns = {"eps",     "kappa1", "sbar",  "sbar_from_kappa",    "t_eps",        "r_eps",
                   "l2_norm", "hm_norm", "ratio", "predicted_exponent", "fitted_slope", "truncated",
                   "literal_cube_in_lens", "shifted_cube_in_lens"};
    bool increasing = true, truncated = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out.rows.push_back({num(r.eps), num(r.kappa1), num(r.sbar), flag(r.sbar_from_kappa), num(r.t_eps),
                            num(r.r_eps), num(r.l2_norm), num(r.hm_norm), num(r.ratio), num(r.predicted_exponent),
                            num(r.fitted_slope), flag(r.truncated), flag(r.literal_cube_in_lens),
                            flag(r.shifted_cube_in_lens)});
        if (i > 0) increasing = increasing && r.ratio > rows[i - 1].ratio;
        truncated = truncated || r.truncated;
    }
    out.report["predicted_exponent"] = rows.front().predicted_exponent;
    out.report["fitted_slope"] = finite_or_null(rows.front().fitted_slope);
    out.report["ratio_strictly_increasing"] = increasing;
    out.report["any_truncated"] = truncated;
    return out;
}

// ---------------------------------------------------------------- majorant

json constants_json(const majorant::Constants& c) {
    return {{"c0", c.c0},           {"c1", c.c1},           {"c2", c.c2},          {"argmax_c0", c.argmax_c0},
            {"argmax_c2", c.argmax_c2}, {"tail_c0", c.tail_c0}, {"tail_c1", c.tail_c1}, {"tail_c2", c.tail_c2}};
}

majorant::ProfileSeries random_series(std::mt19937_64& rng, const majorant::NormParams& np,
                                      majorant::NormVariant var, int N, int K, int T, const std::vector<double>& s) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    majorant::ProfileSeries u(N, K, T, s);
    for (int si = 0; si < u.ns(); ++si)
        for (int a = 0; a < N; ++a)
            for (int n = -K; n <= K; ++n)
                for (int k = 0; k <= T; ++k) {
                    const double lw =
                        std::log(np.c1) -
                        (var == majorant::NormVariant::One ? 0.5 : 1.0) * std::log(double(n) * n + 1.0) +
                        (np.gamma * s[si] - np.kappa) * majorant::weight_bracket(n) +
                        majorant::log_phi_taylor(np.c0, np.R, k, np.eps * np.rho * s[si],
                                                 var == majorant::NormVariant::Prime);
                    u.at(si, a, n, k) = std::exp(lw) * U(rng) * std::polar(1.0, 2.0 * kPi * U(rng));
                }
    return u;
}

Output cmd_majorant(Fields& f, std::uint64_t seed) {
    const auto task = f.choice("task", {"constants", "contraction"});
    auto prob = profile_problem(f);
    const auto templ = param_template(f, prob.sys.d);
    const double eps = f.number("eps");
    majorant::Constants c;
    {
        int T = 200, nmax = 4096, T_c2 = 2000;
        if (f.has("constants")) {
            Fields cf = f.object("constants");
            T = cf.integer("T", T, 1);
            nmax = cf.integer("nmax", nmax, 1);
            T_c2 = cf.integer("T_c2", T_c2, 1);
            cf.finish();
        }
        c = majorant::compute_constants(T, nmax, T_c2);
    }
    const Matrix Abar = instability::profile_matrix(prob);
    const auto mode = instability::growing_mode(spectrum_classify(Abar));
    const double gamma0 = spectrum_classify(Abar).gamma0;
    Output out;
    out.report["task"] = task;
    out.report["constants"] = constants_json(c);

    if (task == "constants") {
        const int range = f.integer("bracket_range", 100, 0);
        const int algebra_T = f.integer("algebra_T", 200, 1);
        const int c1_range = f.integer("c1_sum_range", 4000, 1);
        const int instances = f.integer("instances", 100, 0);
        const int lat_K = f.integer("lattice_K", 6, 0);
        const int lat_T = f.integer("lattice_T", 4, 0);
        const int lat_ns = f.integer("lattice_ns", 12, 2);
        const double lat_frac = f.positive("lattice_s_fraction", 0.9);
        f.finish();
        const auto p = make_params_checked(eps, templ, gamma0);
        const auto np = majorant::NormParams::from(p, c);

        long bracket_viol = 0;
        for (int a = -range; a <= range; ++a)
            for (int b = -range; b <= range; ++b)
                bracket_viol += majorant::weight_bracket(a + b) > majorant::weight_bracket(a) + majorant::weight_bracket(b);
        const auto phi = majorant::phi_series(c.c0, algebra_T);
        const bool phi_sq = majorant::dominates(majorant::multiply(phi, phi), phi);
        auto two = majorant::multiply(phi, majorant::derivative(phi));
        for (auto& x : two.coeffs) x *= 2.0;
        const bool dphi = majorant::dominates(two, majorant::derivative(phi));
        double c1_worst = 0.0;
        for (int n = -algebra_T; n <= algebra_T; ++n) {
            double lhs = 0.0;
            for (int q = -c1_range; q <= c1_range; ++q)
                lhs += c.c1 / (double(q) * q + 1.0) * c.c1 / (double(n - q) * (n - q) + 1.0);
            c1_worst = std::max(c1_worst, lhs / (c.c1 / (double(n) * n + 1.0)));
        }

        std::mt19937_64 rng(seed);
        const auto s = majorant::uniform_grid(lat_frac * p.sbar, lat_ns);
        int sub_viol = 0, prime_viol = 0, one_viol = 0;
        double sub_worst = 0.0;
        out.columns = {"instance", "norm_u", "norm_v", "norm_uv", "submultiplicative", "prime_bound", "one_bound"};
        for (int i = 0; i < instances; ++i) {
            const auto u = random_series(rng, np, majorant::NormVariant::Plain, 1, lat_K, lat_T, s);
            const auto v = random_series(rng, np, majorant::NormVariant::Plain, 1, lat_K, lat_T, s);
            const auto w = random_series(rng, np, majorant::NormVariant::Prime, 1, lat_K, lat_T, s);
            const auto z = random_series(rng, np, majorant::NormVariant::One, 1, lat_K, lat_T, s);
            const double nu = majorant::enorm(u, np, majorant::NormVariant::Plain);
            const double nv = majorant::enorm(v, np, majorant::NormVariant::Plain);
            const double nuv = majorant::enorm(majorant::product(u, v), np, majorant::NormVariant::Plain);
            const bool sub = nuv <= nu * nv;
            const bool pr = 2.0 * majorant::enorm(majorant::product(u, w), np, majorant::NormVariant::Prime) <=
                            nu * majorant::enorm(w, np, majorant::NormVariant::Prime);
            const bool on = majorant::enorm(majorant::product(u, z), np, majorant::NormVariant::One) <=
                            c.c2 * nu * majorant::enorm(z, np, majorant::NormVariant::One);
            sub_viol += !sub;
            prime_viol += !pr;
            one_viol += !on;
            sub_worst = std::max(sub_worst, nuv / (nu * nv));
            out.rows.push_back({num(i), num(nu), num(nv), num(nuv), flag(sub), flag(pr), flag(on)});
        }
        out.report["bracket"] = {{"range", range}, {"violations", bracket_viol}};
        out.report["phi_square_dominated"] = {{"T", algebra_T}, {"holds", phi_sq}};
        out.report["two_phi_dphi_dominated"] = {{"T", algebra_T}, {"holds", dphi}};
        out.report["c1_inequality"] = {{"T", algebra_T}, {"sum_range", c1_range}, {"worst_ratio", c1_worst},
                                       {"holds", c1_worst <= 1.0}};
        out.report["submultiplicative"] = {{"instances", instances}, {"violations", sub_viol},
                                           {"worst_ratio", finite_or_null(sub_worst)}};
        out.report["prime_bound_violations"] = prime_viol;
        out.report["one_bound_violations"] = one_viol;
        return out;
    }

    const int T = f.integer("T", 0, 0);
    const double frac = f.positive("s_fraction", 0.5);
    majorant::PicardOptions po;
    po.max_iter = f.integer("max_iter", po.max_iter, 1);
    po.tol = f.positive("tol", po.tol);
    const int nmax = f.integer("semigroup_nmax", prob.K, 1);
    f.finish();
    const auto p = make_params_checked(eps, templ, gamma0);
    const auto np = majorant::NormParams::from(p, c);
    const auto prof = instability::solve_profile(prob, p, mode, frac * p.sbar);
    const auto s = majorant::uniform_grid(frac * p.sbar, int(prof.s.size()));
    const auto oc = majorant::operator_constants(Abar, np, nmax, p.sbar);
    majorant::ContractionReport rep;
    bool feasible = true;
    std::string reason;
    try {
        rep = majorant::contraction_solve(prob, p, np, mode, T, s, oc, po);
    } catch (const InfeasibleError& e) {
        feasible = false;
        reason = e.what();
        rep = majorant::contraction_margin(prob, p, np, mode, T, s, oc);
        rep.picard = majorant::picard_iterate(prob, p, np, mode, T, s, po);
    }
    const auto& pic = rep.picard;
    double max_ratio = 0.0;
    for (double r : pic.ratios) max_ratio = std::max(max_ratio, r);
    const double sup = majorant::sup_difference(pic.u, prof);
    out.columns = {"iteration", "change", "ratio"};
    for (std::size_t i = 0; i < pic.changes.size(); ++i)
        out.rows.push_back({num(int(i + 1)), num(pic.changes[i]), i == 0 ? "" : num(pic.ratios[i - 1])});
    out.report["eps"] = eps;
    out.report["sbar"] = p.sbar;
    out.report["s_end"] = frac * p.sbar;
    out.report["ns"] = int(s.size());
    out.report["operator_constants"] = {{"K_semigroup", oc.K_semigroup}, {"K_semigroup_1", oc.K_semigroup_1},
                                        {"K_one", oc.K_one},             {"K_prime", oc.K_prime},
                                        {"K_gamma", oc.K_gamma}};
    out.report["norm_f"] = rep.norm_f;
    out.report["factor"] = rep.factor;
    out.report["margin"] = rep.margin;
    out.report["feasible"] = feasible;
    if (!feasible) out.report["infeasible_reason"] = reason;
    out.report["fixed_point_bound"] = rep.fixed_point_bound;
    out.report["bound_holds"] = rep.bound_holds;
    out.report["picard"] = {{"iterations", pic.iterations},     {"converged", pic.converged},
                            {"residual", pic.residual},         {"max_ratio", max_ratio},
                            {"norm_f", pic.norm_f},             {"norm_u_minus_f", pic.norm_u_minus_f}};
    out.report["sup_difference_vs_profile"] = sup;
    if (!feasible) {
        out.status = kExitNumerical;
        out.message = "contraction condition infeasible (recorded): " + reason;
    }
    return out;
}

// ---------------------------------------------------------------- fbi

std::function<Complex(const Vector&)> signal_family(Fields& s) {
    const auto fam = s.choice("family", {"gaussian", "cos_poly", "far_kink", "ramp_power", "abs_power"});
    if (fam == "gaussian") return [](const Vector& x) { return Complex(std::exp(-x.squaredNorm())); };
    if (fam == "cos_poly") {
        const double w = s.number("omega", 3.0);
        return [w](const Vector& x) { return Complex(std::cos(w * x[0]) + x[0]); };
    }
    if (fam == "far_kink") {
        const double a = s.number("at", 3.0);
        return [a](const Vector& x) { return Complex(std::abs(x[0] - a) + 1.0 / (1.0 + x[0] * x[0])); };
    }
    const double p = s.positive("p");
    if (fam == "ramp_power") return [p](const Vector& x) { return Complex(x[0] > 0.0 ? std::pow(x[0], p) : 0.0); };
    return [p](const Vector& x) { return Complex(std::pow(std::abs(x[0]), p)); };
}

fbi::SampledFunction signal_from_csv(const std::string& file, const std::string& path) {
    std::vector<std::map<std::string, std::string>> rows;
    try {
        rows = read_csv(file);
    } catch (const std::exception& e) {
        throw SchemaError(path, e.what());
    }
    std::vector<double> x;
    std::vector<Complex> v;
    for (const auto& r : rows) {
        try {
            x.push_back(std::stod(r.at("x")));
            if (r.count("value"))
                v.emplace_back(std::stod(r.at("value")));
            else
                v.emplace_back(std::stod(r.at("re")), std::stod(r.at("im")));
        } catch (const std::exception&) {
            throw SchemaError(path, "rows need x and value (or re, im) columns");
        }
    }
    return fbi::SampledFunction::from_columns(x, v);
}

CVector complex_vector(const json& j, int d, const std::string& path) {
    require(j.is_array() && int(j.size()) == d, path, "expected " + std::to_string(d) + " [re, im] pairs");
    CVector z(d);
    for (int a = 0; a < d; ++a) {
        require(j[a].is_array() && j[a].size() == 2 && j[a][0].is_number() && j[a][1].is_number(),
                path + "[" + std::to_string(a) + "]", "expected [re, im]");
        z[a] = Complex(j[a][0].get<double>(), j[a][1].get<double>());
    }
    return z;
}

std::string join_vector(const Vector& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ";" : "") + num(v[i]);
    return s;
}

Output cmd_fbi(Fields& f) {
    const auto task = f.choice("task", {"classify", "model"});
    Output out;
    out.report["task"] = task;
    if (task == "model") {
        fbi::ModelOptions o;
        const int n = f.integer("n", 256, 8);
        o.period = f.positive("period", o.period);
        o.x_max = f.positive("x_max", o.x_max);
        o.nx = f.integer("nx", o.nx, 8);
        o.rate_factor = f.positive("rate_factor", o.rate_factor);
        o.coeff_floor = f.positive("coeff_floor", o.coeff_floor);
        Fields d = f.object("data");
        const auto fam = d.choice("family", {"constant", "cosine", "abs", "inverse_exp"});
        const double c = d.number("c", 1.0);
        const double a = fam == "constant" ? 0.0 : d.number("a");
        const double k = fam == "cosine" ? d.number("k", 1.0) : 1.0;
        d.finish();
        f.finish();
        std::vector<Complex> h(n);
        for (int j = 0; j < n; ++j) {
            const double y = -0.5 * o.period + j * o.period / n;
            if (fam == "constant") h[j] = c;
            if (fam == "cosine") h[j] = c + a * std::cos(k * y);
            if (fam == "abs") h[j] = c + a * std::abs(y);
            if (fam == "inverse_exp") h[j] = 1.0 / (c + a * std::exp(kI * y));
        }
        const auto sol = fbi::model_cr_solver(h, o);
        out.columns = {"k", "eta", "abs_coeff"};
        for (std::size_t m = 0; m < sol.decay_profile.size(); ++m)
            out.rows.push_back({num(int(m)), num(2.0 * kPi * double(m) / o.period), num(sol.decay_profile[m])});
        const bool ok = sol.verdict == fbi::Solvability::Solvable;
        out.report["verdict"] = ok ? "Solvable" : "NoSolution";
        out.report["decay_rate"] = finite_or_null(sol.decay_rate);
        out.report["decay_rate_infinite"] = std::isinf(sol.decay_rate);
        out.report["threshold"] = o.rate_factor * o.x_max;
        out.report["residual"] = finite_or_null(sol.residual);
        if (ok) {
            std::ostringstream os;
            os << "x,y,re,im\n";
            const std::size_t ny = sol.y.size();
            for (std::size_t i = 0; i < sol.x.size(); ++i)
                for (std::size_t j = 0; j < ny; ++j) {
                    const Complex u = sol.u[i * ny + j];
                    os << num(sol.x[i]) << ',' << num(sol.y[j]) << ',' << num(u.real()) << ',' << num(u.imag()) << '\n';
                }
            out.artifacts["solution.csv"] = os.str();
        }
        return out;
    }

    const int d = f.integer("d", 1, 1);
    require(d <= 2, f.at("d"), "only d = 1 and d = 2 are supported");
    fbi::GaussianTransformSpec spec;
    spec.Q = Matrix::Identity(d, d);
    if (f.has("Q")) {
        const auto& q = f.raw("Q");
        require(q.is_array() && int(q.size()) == d, f.at("Q"), "expected a d x d array");
        for (int r = 0; r < d; ++r) {
            require(q[r].is_array() && int(q[r].size()) == d, f.at("Q"), "expected a d x d array");
            for (int cc = 0; cc < d; ++cc) {
                require(q[r][cc].is_number(), f.at("Q"), "entries must be numbers");
                spec.Q(r, cc) = q[r][cc].get<double>();
            }
        }
    }
    const Vector xbar = f.vector("xbar", d, Vector::Zero(d));
    spec.chi.center = xbar;
    if (f.has("cutoff")) {
        Fields cf = f.object("cutoff");
        spec.chi.none = cf.boolean("none", false);
        spec.chi.inner = cf.number("inner", spec.chi.inner);
        spec.chi.outer = cf.number("outer", spec.chi.outer);
        cf.finish();
    }
    spec.lambdas = f.numbers("lambdas", fbi::default_lambdas());
    try {
        spec.validate();
    } catch (const ConfigError& e) {
        throw SchemaError("parameters", e.what());
    }
    fbi::DecayOptions o;
    o.t = f.positive("t", o.t);
    o.rho = f.number("rho", o.rho);
    o.margin_fraction = f.positive("margin_fraction", o.margin_fraction);
    o.floor = f.positive("floor", o.floor);
    if (f.has("offsets")) {
        const auto& offs = f.raw("offsets");
        require(offs.is_array(), f.at("offsets"), "expected an array");
        for (std::size_t i = 0; i < offs.size(); ++i)
            o.offsets.push_back(complex_vector(offs[i], d, f.at("offsets") + "[" + std::to_string(i) + "]"));
    }
    if (f.has("abar")) o.abar = f.vector("abar", d);
    std::vector<Vector> dirs;
    if (f.has("directions")) {
        const auto& ds = f.raw("directions");
        require(ds.is_array() && !ds.empty(), f.at("directions"), "expected a non-empty array of vectors");
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const std::string p = f.at("directions") + "[" + std::to_string(i) + "]";
            require(ds[i].is_array() && int(ds[i].size()) == d, p, "expected " + std::to_string(d) + " numbers");
            Vector v(d);
            for (int a = 0; a < d; ++a) {
                require(ds[i][a].is_number(), p, "expected numbers");
                v[a] = ds[i][a].get<double>();
            }
            dirs.push_back(v);
        }
    } else {
        dirs = {Vector::Unit(d, 0), -Vector::Unit(d, 0)};
    }
    const double qmax = Eigen::SelfAdjointEigenSolver<Matrix>(spec.Q).eigenvalues().maxCoeff();
    const double spacing = f.positive("spacing", 1.0 / (8.0 * std::sqrt(spec.lambdas.back() * qmax)));
    const double half = f.positive("box_half_width", (spec.chi.none ? 10.0 : spec.chi.outer) + 0.3);
    const auto& sigs = f.raw("signals");
    require(sigs.is_array() && !sigs.empty(), f.at("signals"), "expected a non-empty array");
    f.finish();

    struct Signal {
        std::string name, label;
        fbi::SampledFunction h;
    };
    std::vector<Signal> signals;
    std::set<std::string> names;
    for (std::size_t i = 0; i < sigs.size(); ++i) {
        const std::string p = "parameters.signals[" + std::to_string(i) + "]";
        Fields s(sigs[i], p);
        Signal sg;
        sg.name = s.string("name");
        require(names.insert(sg.name).second, s.at("name"), "duplicate signal name");
        sg.label = s.string("label", "");
        if (s.has("csv")) {
            require(d == 1, s.at("csv"), "CSV signals are 1-dimensional");
            sg.h = signal_from_csv(s.string("csv"), s.at("csv"));
        } else {
            const auto fn = signal_family(s);
            sg.h = fbi::SampledFunction::sample(fn, xbar.array() - half, xbar.array() + half, spacing);
        }
        s.finish();
        signals.push_back(std::move(sg));
    }

    out.columns = {"signal", "label", "xi", "eps1", "q_im", "decay_margin", "verdict", "retained", "underflow",
                   "tangential"};
    for (const auto& sg : signals)
        for (const auto& xi : dirs) {
            const auto rep = fbi::decay_classify(sg.h, xbar, xi, spec, o);
            const bool analytic = rep.verdict == fbi::Verdict::AnalyticDirection;
            const double q = rep.points.empty() ? 0.0 : rep.points.front().q_im;
            const int retained = rep.points.empty() ? 0 : int(rep.points.front().lambdas.size());
            out.rows.push_back({sg.name, sg.label, join_vector(xi), num(rep.eps1), num(q), num(rep.decay_margin),
                                analytic ? "AnalyticDirection" : "NotDetected", num(retained), flag(rep.underflow),
                                flag(rep.tangential)});
        }
    out.report["signals"] = int(signals.size());
    out.report["directions"] = int(dirs.size());
    out.report["t"] = o.t;
    out.report["rho"] = o.rho;
    out.report["lambdas"] = spec.lambdas;
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("cannot write " + p.string());
    os << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw SchemaError(p.string(), "cannot read file");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Total order on JSON values: numbers by value, arrays and objects lexicographically.
// nlohmann's operator< on objects is unreliable under C++20 comparison rewriting.
int json_compare(const json& a, const json& b) {
    auto rank = [](const json& v) {
        if (v.is_null()) return 0;
        if (v.is_boolean()) return 1;
        if (v.is_number()) return 2;
        if (v.is_string()) return 3;
        if (v.is_array()) return 4;
        return 5;
    };
    const int ra = rank(a), rb = rank(b);
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (ra) {
        case 1: return int(a.get<bool>()) - int(b.get<bool>());
        case 2: {
            const double x = a.get<double>(), y = b.get<double>();
            return x < y ? -1 : (y < x ? 1 : 0);
        }
        case 3: return a.get_ref<const std::string&>().compare(b.get_ref<const std::string&>());
        case 4:
            for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
                if (const int c = json_compare(a[i], b[i]); c != 0) return c;
            return a.size() < b.size() ? -1 : (a.size() > b.size() ? 1 : 0);
        case 5: {
            auto ia = a.begin(), ib = b.begin();
            for (; ia != a.end() && ib != b.end(); ++ia, ++ib) {
                if (const int c = ia.key().compare(ib.key()); c != 0) return c;
                if (const int c = json_compare(ia.value(), ib.value()); c != 0) return c;
            }
            return ia == a.end() ? (ib == b.end() ? 0 : -1) : 1;
        }
        default: return 0;
    }
}

json versions() {
    return {{"hadamard", HADAMARD_VERSION},
            {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
            {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                          NLOHMANN_JSON_VERSION_PATCH)},
            {"fmt", FMT_VERSION},
            {"compiler", __VERSION__}};
}

}  // namespace

json ExperimentConfig::to_json() const {
    return {{"command", command}, {"parameters", parameters}, {"output_dir", output_dir}, {"seed", seed}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("config", "expected an object");
    if (j.empty()) throw SchemaError("command", "required field missing (empty config)");
    Fields f(j, "config");
    ExperimentConfig c;
    c.command = f.choice("command", {"classify", "vdw", "kirchhoff", "instability", "majorant", "fbi"});
    c.parameters = f.raw("parameters");
    if (!c.parameters.is_object()) throw SchemaError("config.parameters", "expected an object");
    c.output_dir = f.string("output_dir", "");
    if (f.has("seed")) {
        const auto& s = f.raw("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
            throw SchemaError("config.seed", "expected a nonnegative integer");
        c.seed = s.get<std::uint64_t>();
    }
    f.finish();
    return c;
}

json parse_json_strict(const std::string& text) {
    std::vector<std::set<std::string>> seen;
    std::vector<std::string> keys;
    json::parser_callback_t cb = [&](int depth, json::parse_event_t ev, json& parsed) {
        if (ev == json::parse_event_t::object_start) {
            seen.emplace_back();
        } else if (ev == json::parse_event_t::object_end) {
            if (!seen.empty()) seen.pop_back();
        } else if (ev == json::parse_event_t::key) {
            const auto k = parsed.get<std::string>();
            keys.resize(std::size_t(std::max(depth - 1, 0)));
            std::string path;
            for (const auto& s : keys) path += s + ".";
            if (!seen.empty() && !seen.back().insert(k).second) throw SchemaError(path + k, "duplicate key");
            keys.push_back(k);
        }
        return true;
    };
    try {
        return json::parse(text, cb);
    } catch (const json::parse_error& e) {
        throw SchemaError("config", e.what());
    }
}

ExperimentConfig load_config(const fs::path& file) { return ExperimentConfig::from_json(parse_json_strict(read_file(file))); }

RunResult execute(const ExperimentConfig& cfg) {
    Fields f(cfg.parameters, "parameters");
    Output out;
    if (cfg.command == "classify")
        out = cmd_classify(f, cfg.seed);
    else if (cfg.command == "vdw")
        out = cmd_vdw(f);
    else if (cfg.command == "kirchhoff")
        out = cmd_kirchhoff(f);
    else if (cfg.command == "instability")
        out = cmd_instability(f);
    else if (cfg.command == "majorant")
        out = cmd_majorant(f, cfg.seed);
    else if (cfg.command == "fbi")
        out = cmd_fbi(f);
    else
        throw SchemaError("command", "unknown command '" + cfg.command + "'");
    RunResult r;
    r.status = out.status;
    r.message = out.message;
    r.report = std::move(out.report);
    r.report["command"] = cfg.command;
    r.report["status"] = out.status;
    r.columns = std::move(out.columns);
    r.rows = std::move(out.rows);
    r.artifacts = std::move(out.artifacts);
    return r;
}

RunResult run(const ExperimentConfig& cfg) {
    if (cfg.output_dir.empty()) throw SchemaError("output_dir", "required field missing");
    const auto start = std::chrono::steady_clock::now();
    RunResult r = execute(cfg);
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    write_file(dir / "report.json", r.report.dump(2) + "\n");
    r.files.push_back("report.json");
    if (!r.columns.empty()) {
        write_file(dir / "results.csv", to_csv(r.columns, r.rows));
        r.files.push_back("results.csv");
    }
    for (const auto& [name, text] : r.artifacts) {
        write_file(dir / name, text);
        r.files.push_back(name);
    }
    std::sort(r.files.begin(), r.files.end());
    json manifest = {{"config", cfg.to_json()},
                     {"versions", versions()},
                     {"wall_time_seconds", r.wall_time},
                     {"status", r.status},
                     {"outputs", r.files}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    return r;
}

RunResult rerun_from_manifest(const fs::path& manifest, const std::string& output_dir) {
    const auto m = parse_json_strict(read_file(manifest));
    if (!m.contains("config")) throw SchemaError("manifest.config", "required field missing");
    auto cfg = ExperimentConfig::from_json(m.at("config"));
    cfg.output_dir = output_dir;
    return run(cfg);
}

std::vector<ExperimentConfig> expand_sweep(const json& j) {
    if (!j.is_object()) throw SchemaError("sweep", "expected an object");
    Fields f(j, "sweep");
    std::vector<ExperimentConfig> out;
    const std::string dir = f.string("output_dir", "");
    if (f.has("runs")) {
        const auto& runs = f.raw("runs");
        require(runs.is_array() && !runs.empty(), "sweep.runs", "expected a non-empty array of configs");
        for (const auto& r : runs) out.push_back(ExperimentConfig::from_json(r));
    } else {
        ExperimentConfig base;
        base.command = f.choice("command", {"classify", "vdw", "kirchhoff", "instability", "majorant", "fbi"});
        const json params = f.raw("base");
        require(params.is_object(), "sweep.base", "expected an object");
        if (f.has("seed")) base.seed = f.raw("seed").get<std::uint64_t>();
        const auto& vary = f.raw("vary");
        require(vary.is_array() && !vary.empty(), "sweep.vary", "expected a non-empty array of objects");
        for (std::size_t i = 0; i < vary.size(); ++i) {
            require(vary[i].is_object(), "sweep.vary[" + std::to_string(i) + "]", "expected an object");
            ExperimentConfig c = base;
            c.parameters = params;
            c.parameters.merge_patch(vary[i]);
            out.push_back(c);
        }
    }
    f.finish();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].output_dir = dir;
        for (std::size_t k = 0; k < i; ++k)
            if (out[k].command == out[i].command && out[k].parameters == out[i].parameters && out[k].seed == out[i].seed)
                throw SchemaError("sweep[" + std::to_string(i) + "]", "duplicates sweep[" + std::to_string(k) + "]");
    }
    return out;
}

SweepResult sweep(std::vector<ExperimentConfig> configs, const std::string& output_dir) {
    if (configs.empty()) throw SchemaError("sweep", "no runs");
    if (output_dir.empty()) throw SchemaError("output_dir", "required field missing");
    for (std::size_t i = 0; i < configs.size(); ++i)
        for (std::size_t k = 0; k < i; ++k)
            if (configs[k].command == configs[i].command && configs[k].parameters == configs[i].parameters &&
                configs[k].seed == configs[i].seed)
                throw SchemaError("sweep[" + std::to_string(i) + "]", "duplicates sweep[" + std::to_string(k) + "]");
    std::stable_sort(configs.begin(), configs.end(), [](const ExperimentConfig& a, const ExperimentConfig& b) {
        if (a.command != b.command) return a.command < b.command;
        if (const int c = json_compare(a.parameters, b.parameters); c != 0) return c < 0;
        return a.seed < b.seed;
    });

    SweepResult res;
    const int n = int(configs.size());
    res.runs.resize(n);
    std::vector<RunResult> results(n);
    for (int i = 0; i < n; ++i) {
        res.runs[i].config = configs[i];
        res.runs[i].config.output_dir = (fs::path(output_dir) / fmt::format("run_{:03d}", i)).string();
    }
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) {
        try {
            results[i] = run(res.runs[i].config);
            res.runs[i].status = results[i].status;
            res.runs[i].message = results[i].message;
        } catch (const std::exception& e) {
            res.runs[i].status = exit_status_for(e);
            res.runs[i].message = e.what();
        }
    }

    // Key columns: top-level parameters whose values differ between runs.
    std::set<std::string> all;
    for (const auto& r : res.runs)
        for (const auto& [k, v] : r.config.parameters.items()) all.insert(k);
    for (const auto& k : all) {
        const json first = res.runs.front().config.parameters.value(k, json());
        for (const auto& r : res.runs)
            if (r.config.parameters.value(k, json()) != first) {
                res.key_columns.push_back(k);
                break;
            }
    }
    for (const auto& r : results)
        if (!r.columns.empty()) {
            res.columns = r.columns;
            break;
        }
    std::vector<std::string> header{"run"};
    header.insert(header.end(), res.key_columns.begin(), res.key_columns.end());
    header.push_back("status");
    header.push_back("message");
    header.insert(header.end(), res.columns.begin(), res.columns.end());

    json summary = json::array();
    for (int i = 0; i < n; ++i) {
        const auto& r = res.runs[i];
        res.status = std::max(res.status, r.status);
        std::vector<std::string> prefix{num(i)};
        for (const auto& k : res.key_columns) {
            const json v = r.config.parameters.value(k, json());
            prefix.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        }
        prefix.push_back(num(r.status));
        prefix.push_back(r.message);
        const bool has_rows = results[i].columns == res.columns && !results[i].rows.empty();
        if (!has_rows) {
            auto row = prefix;
            row.resize(header.size());
            res.rows.push_back(row);
        } else {
            for (const auto& body : results[i].rows) {
                auto row = prefix;
                row.insert(row.end(), body.begin(), body.end());
                res.rows.push_back(row);
            }
        }
        summary.push_back({{"run", i}, {"config", r.config.to_json()}, {"status", r.status}, {"message", r.message}});
    }
    fs::create_directories(output_dir);
    write_file(fs::path(output_dir) / "merged.csv", to_csv(header, res.rows));
    write_file(fs::path(output_dir) / "sweep.json",
               json({{"runs", summary}, {"key_columns", res.key_columns}, {"status", res.status}}).dump(2) + "\n");
    return res;
}

std::string to_csv(const std::vector<std::string>& columns, const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream os;
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << csv_field(columns[i]);
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_field(r[i]);
        os << '\n';
    }
    return os.str();
}

std::vector<std::map<std::string, std::string>> read_csv(const fs::path& file) {
    std::ifstream is(file);
    if (!is) throw Error("cannot read " + file.string());
    std::string line;
    if (!std::getline(is, line)) throw Error(file.string() + ": empty CSV");
    const auto header = split_csv_line(line);
    std::vector<std::map<std::string, std::string>> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size()) throw Error(file.string() + ": ragged row");
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; i < f.size(); ++i) row[header[i]] = f[i];
        out.push_back(std::move(row));
    }
    return out;
}

int exit_status_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return kExitUsage;
    if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
    return kExitInternal;
}

}  // namespace hadamard::cli
