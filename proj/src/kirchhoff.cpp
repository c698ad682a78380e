#include "hadamard/kirchhoff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hadamard/errors.hpp"

namespace hadamard::kirchhoff {

namespace {

void guard(int n, double A) {
    if (std::abs(n) * std::abs(A) > kSaturation)
        throw SaturationError("|n A| = " + std::to_string(std::abs(n) * std::abs(A)) + " exceeds " +
                              std::to_string(kSaturation) + " at n = " + std::to_string(n) +
                              "; lambda t is too large for double range");
}

SpectrumData normalized(std::map<int, double> w, double norm) {
    double s = 0.0;
    for (const auto& [n, x] : w) s += x;
    if (!(s > 0.0)) throw ConfigError("spectrum family has zero mass");
    for (auto& [n, x] : w) x *= norm / s;
    return SpectrumData{std::move(w)};
}

}  // namespace

double SpectrumData::total() const {
    double s = 0.0;
    for (const auto& [n, w] : weights) s += w;
    return s;
}

int SpectrumData::support() const {
    int m = 0;
    for (const auto& [n, w] : weights)
        if (w > 0.0) m = std::max(m, std::abs(n));
    return m;
}

double SpectrumData::weight(int n) const {
    const auto it = weights.find(n);
    return it == weights.end() ? 0.0 : it->second;
}

double SpectrumData::hhat(int n) const { return std::sqrt(weight(n)); }

SpectrumData SpectrumData::power(double s, double norm, int nmax) {
    if (!(s > 1.0) || !(norm >= 0.0) || nmax < 1) throw ConfigError("power family needs s > 1, norm >= 0, nmax >= 1");
    std::map<int, double> w;
    for (int n = -nmax; n <= nmax; ++n) w[n] = std::pow(1.0 + std::abs(n), -s);
    return normalized(std::move(w), norm);
}

SpectrumData SpectrumData::exponential(double a, double norm, int nmax) {
    if (!(a > 0.0) || !(norm >= 0.0) || nmax < 1) throw ConfigError("exp family needs a > 0, norm >= 0, nmax >= 1");
    std::map<int, double> w;
    for (int n = -nmax; n <= nmax; ++n) w[n] = std::exp(-a * std::abs(n));
    return normalized(std::move(w), norm);
}

SpectrumData SpectrumData::single(int n, double w) {
    if (!(w >= 0.0)) throw ConfigError("single family needs w >= 0");
    SpectrumData d;
    if (n == 0) {
        d.weights[0] = w;
    } else {
        d.weights[n] = 0.5 * w;
        d.weights[-n] = 0.5 * w;
    }
    return d;
}

SpectrumData SpectrumData::explicit_list(const std::vector<std::pair<int, double>>& nw) {
    SpectrumData d;
    for (const auto& [n, w] : nw) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("weights must be finite and nonnegative");
        d.weights[n] = w;
        d.weights[-n] = w;
    }
    return d;
}

double u_of_A(double A, const SpectrumData& data, int lambda, Variant variant) {
    if (!(A >= 0.0)) throw ConfigError("u_of_A needs A >= 0");
    double U = 0.0;
    const auto end = data.weights.upper_bound(lambda);
    for (auto it = data.weights.lower_bound(-lambda); it != end; ++it) {
        const auto [n, w] = *it;
        if (w == 0.0) continue;
        guard(n, A);
        const double s = variant == Variant::Standard ? std::sinh(n * A) : std::cosh(n * A);
        U += w * s * s;
    }
    return U;
}

double Trajectory::A_at(double s) const {
    if (t.empty()) throw ConfigError("empty trajectory");
    if (s <= t.front()) return A.front();
    if (s >= t.back()) {
        if (s - t.back() > 1e-12 * (1.0 + std::abs(s))) throw ConfigError("time outside the trajectory range");
        return A.back();
    }
    const auto it = std::upper_bound(t.begin(), t.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
    const double h = t[i + 1] - t[i];
    const double x = (s - t[i]) / h;
    const double d0 = 1.0 - U[i], d1 = 1.0 - U[i + 1];
    const double h00 = (1 + 2 * x) * (1 - x) * (1 - x), h10 = x * (1 - x) * (1 - x);
    const double h01 = x * x * (3 - 2 * x), h11 = x * x * (x - 1);
    return h00 * A[i] + h10 * h * d0 + h01 * A[i + 1] + h11 * h * d1;
}

Trajectory integrate_A(const SpectrumData& data, int lambda, double t_end, double dt, Variant variant) {
    if (!(dt > 0.0) || !(t_end >= 0.0)) throw ConfigError("integrate_A needs dt > 0 and t_end >= 0");
    if (variant == Variant::Interchanged && u_of_A(0.0, data, lambda, variant) >= 1.0)
        throw ConfigError("interchanged variant needs ||S_lambda h||^2 < 1");
    Trajectory tr;
    tr.lambda = lambda;
    tr.variant = variant;
    const long nsteps = std::lround(t_end / dt);
    auto f = [&](double A) { return 1.0 - u_of_A(A, data, lambda, variant); };
    double A = 0.0;
    tr.t.push_back(0.0);
    tr.A.push_back(A);
    tr.U.push_back(u_of_A(A, data, lambda, variant));
    for (long k = 1; k <= nsteps; ++k) {
        const double k1 = f(A);
        const double k2 = f(A + 0.5 * dt * k1);
        const double k3 = f(A + 0.5 * dt * k2);
        const double k4 = f(A + dt * k3);
        A += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        tr.t.push_back(k * dt);
        tr.A.push_back(A);
        tr.U.push_back(u_of_A(A, data, lambda, variant));
    }
    return tr;
}

ModeState closed_form_state(const Trajectory& traj, const SpectrumData& data, double t) {
    const double A = traj.A_at(t);
    ModeState st;
    for (const auto& [n, w] : data.weights)
        if (std::abs(n) <= traj.lambda) st.n.push_back(n);
    st.u.resize(st.n.size());
    st.v.resize(st.n.size());
    for (std::size_t i = 0; i < st.n.size(); ++i) {
        const int n = st.n[i];
        guard(n, A);
        const double h = data.hhat(n);
        if (traj.variant == Variant::Standard) {
            st.u[i] = Complex(0.0, -std::sinh(n * A) * h);
            st.v[i] = std::cosh(n * A) * h;
        } else {
            st.u[i] = std::cosh(n * A) * h;
            st.v[i] = Complex(0.0, std::sinh(n * A) * h);
        }
    }
    return st;
}

DirectRun direct_mode_ode(const SpectrumData& data, int lambda, double t_end, double dt, int record_every,
                          Variant variant) {
    if (!(dt > 0.0) || !(t_end >= 0.0) || record_every < 1)
        throw ConfigError("direct_mode_ode needs dt > 0, t_end >= 0, record_every >= 1");
    ModeState st;
    for (const auto& [n, w] : data.weights)
        if (std::abs(n) <= lambda) st.n.push_back(n);
    const int m = static_cast<int>(st.n.size());
    CVector nvec(m), h(m);
    for (int i = 0; i < m; ++i) {
        nvec[i] = static_cast<double>(st.n[i]);
        h[i] = data.hhat(st.n[i]);
    }
    st.u = variant == Variant::Standard ? CVector::Zero(m) : h;
    st.v = variant == Variant::Standard ? h : CVector::Zero(m);
    double A = 0.0;
    int nmax = 0;
    for (int n : st.n) nmax = std::max(nmax, std::abs(n));

    struct D {
        CVector du, dv;
        double dA;
    };
    auto rhs = [&](const CVector& u, const CVector& v) {
        const double a = u.squaredNorm() - 1.0;
        D d;
        d.du = Complex(0.0, a) * nvec.cwiseProduct(v);
        d.dv = Complex(0.0, std::abs(a)) * nvec.cwiseProduct(u);
        d.dA = -a;
        return d;
    };

    DirectRun run;
    auto record = [&](double t) {
        const double U = st.u.squaredNorm();
        run.t.push_back(t);
        run.states.push_back(st);
        run.U.push_back(U);
        run.energy.push_back(st.v.squaredNorm() + std::abs(U - 1.0));
        guard(nmax, A);
        const double err = std::abs(U - u_of_A(std::max(A, 0.0), data, lambda, variant));
        run.max_consistency_error = std::max(run.max_consistency_error, err);
        if (err > 1e-6) run.diverged = true;
    };

    record(0.0);
    const long nsteps = std::lround(t_end / dt);
    for (long k = 1; k <= nsteps; ++k) {
        const D k1 = rhs(st.u, st.v);
        const D k2 = rhs(st.u + 0.5 * dt * k1.du, st.v + 0.5 * dt * k1.dv);
        const D k3 = rhs(st.u + 0.5 * dt * k2.du, st.v + 0.5 * dt * k2.dv);
        const D k4 = rhs(st.u + dt * k3.du, st.v + dt * k3.dv);
        st.u += dt / 6.0 * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
        st.v += dt / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
        A += dt / 6.0 * (k1.dA + 2 * k2.dA + 2 * k3.dA + k4.dA);
        if (k % record_every == 0 || k == nsteps) record(k * dt);
    }
    for (double E : run.energy) run.energy_drift = std::max(run.energy_drift, std::abs(E - run.energy.front()));
    return run;
}

Diagnostic mu_diagnostic(const SpectrumData& data, const std::vector<int>& lambdas) {
    Diagnostic d;
    d.lambdas = lambdas;
    for (int lambda : lambdas) {
        double mass = 0.0;
        for (const auto& [n, w] : data.weights)
            if (2 * std::abs(n) >= lambda && std::abs(n) <= lambda) mass += w;
        const double mu = mass > 0.0 ? -std::log(mass) : std::numeric_limits<double>::infinity();
        d.mu.push_back(mu);
        d.ratio.push_back(mu / lambda);
    }
    return d;
}

double bound_constant_K(const SpectrumData& data) { return std::log(8.0 * kPi * (1.0 + data.total())); }

BoundReport verify_bound_and_limit(const std::vector<Trajectory>& trajs, const Diagnostic& diag,
                                   const SpectrumData& data, double t, int n0) {
    if (!(t > 0.0)) throw ConfigError("verify_bound_and_limit needs t > 0");
    if (trajs.size() != diag.lambdas.size()) throw ConfigError("one trajectory per lambda is required");
    BoundReport rep;
    rep.t = t;
    rep.K = bound_constant_K(data);
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        const auto& tr = trajs[i];
        if (tr.lambda != diag.lambdas[i]) throw ConfigError("trajectory order does not match the lambda list");
        BoundRow row;
        row.lambda = tr.lambda;
        row.A = tr.A_at(t);
        row.U = u_of_A(row.A, data, tr.lambda, tr.variant);
        row.mu = diag.mu[i];
        row.lhs = 1.0 - row.U;
        row.rhs = (row.mu + rep.K) / (t * tr.lambda);
        row.pass = row.lhs <= row.rhs;
        const ModeState st = closed_form_state(tr, data, t);
        for (std::size_t k = 0; k < st.n.size(); ++k) {
            if (std::abs(st.n[k]) > n0) continue;
            const Complex h0 = tr.variant == Variant::Standard ? Complex(0.0) : Complex(data.hhat(st.n[k]));
            const Complex h1 = tr.variant == Variant::Standard ? Complex(data.hhat(st.n[k])) : Complex(0.0);
            row.residual_u = std::max(row.residual_u, std::abs(st.u[k] - h0));
            row.residual_v = std::max(row.residual_v, std::abs(st.v[k] - h1));
        }
        rep.all_pass = rep.all_pass && row.pass;
        if (!rep.rows.empty()) {
            const auto& prev = rep.rows.back();
            if (!(row.residual_u < prev.residual_u && row.residual_v < prev.residual_v)) rep.residuals_decreasing = false;
        }
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace hadamard::kirchhoff
