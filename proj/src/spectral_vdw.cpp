#include "hadamard/spectral_vdw.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/FFT>

#include "hadamard/errors.hpp"

namespace hadamard {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_grid(int lambda, int nmodes) {
    if (lambda < 1) throw ConfigError("lambda must be >= 1");
    if (!is_pow2(nmodes)) throw ConfigError("nmodes must be a power of two, got " + std::to_string(nmodes));
    if (nmodes < 4 * lambda)
        throw ConfigError("nmodes = " + std::to_string(nmodes) + " is below 4 lambda = " + std::to_string(4 * lambda) +
                          "; the cubic product cannot be de-aliased");
}

// Physical values on the padded grid of 2 nmodes points.
class PaddedGrid {
public:
    PaddedGrid(int lambda, int nmodes) : lambda_(lambda), nmodes_(nmodes), L_(2 * nmodes), spec_(L_), phys_(L_) {
        fft_.SetFlag(Eigen::FFT<double>::Unscaled);
    }

    int size() const { return L_; }

    const std::vector<Complex>& to_physical(const CVector& hat) {
        std::fill(spec_.begin(), spec_.end(), Complex(0.0));
        for (int n = -lambda_; n <= lambda_; ++n) spec_[(n + L_) % L_] = hat[(n + nmodes_) % nmodes_];
        fft_.inv(phys_, spec_);
        return phys_;
    }

    // Modes |n| <= lambda of the real samples f, conjugate symmetry imposed.
    CVector from_physical(const std::vector<double>& f) {
        for (int j = 0; j < L_; ++j) phys_[j] = f[j];
        fft_.fwd(spec_, phys_);
        CVector out = CVector::Zero(nmodes_);
        out[0] = spec_[0].real() / L_;
        for (int n = 1; n <= lambda_; ++n) {
            out[n] = spec_[n] / double(L_);
            out[nmodes_ - n] = std::conj(out[n]);
        }
        return out;
    }

private:
    int lambda_;
    int nmodes_;
    int L_;
    Eigen::FFT<double> fft_;
    std::vector<Complex> spec_;
    std::vector<Complex> phys_;
};

Rhs rhs_on(const FilteredState& s, PaddedGrid& grid) {
    const auto& phys = grid.to_physical(s.uhat);
    std::vector<double> p(grid.size());
    for (int j = 0; j < grid.size(); ++j) {
        const double u = phys[j].real();
        p[j] = u * u * u - u;
    }
    const CVector ph = grid.from_physical(p);
    Rhs r{CVector::Zero(s.nmodes), CVector::Zero(s.nmodes)};
    for (int n = -s.lambda; n <= s.lambda; ++n) {
        const int k = s.slot(n);
        r.du[k] = Complex(0.0, -n) * s.vhat[k];
        r.dv[k] = Complex(0.0, -n) * ph[k];
    }
    return r;
}

double energy_on(const FilteredState& s, PaddedGrid& grid) {
    std::vector<double> u(grid.size());
    const auto& pu = grid.to_physical(s.uhat);
    for (int j = 0; j < grid.size(); ++j) u[j] = pu[j].real();
    const auto& pv = grid.to_physical(s.vhat);
    double acc = 0.0;
    for (int j = 0; j < grid.size(); ++j) {
        const double v = pv[j].real();
        acc += 0.5 * v * v + 0.25 * u[j] * u[j] * (u[j] * u[j] - 2.0);
    }
    return acc * 2.0 * kPi / grid.size();
}

bool all_finite(const CVector& a) {
    for (int i = 0; i < a.size(); ++i)
        if (!std::isfinite(a[i].real()) || !std::isfinite(a[i].imag())) return false;
    return true;
}

void assert_structure(const FilteredState& s) {
    for (const CVector* c : {&s.uhat, &s.vhat}) {
        for (int k = 0; k < s.nmodes; ++k) {
            const int n = k < s.nmodes / 2 ? k : k - s.nmodes;
            if (std::abs(n) > s.lambda && (*c)[k] != Complex(0.0))
                throw NumericalError("filter closure violated at mode " + std::to_string(n));
            if (n > 0 && n <= s.lambda && (*c)[k] != std::conj((*c)[s.nmodes - k]))
                throw NumericalError("conjugate symmetry violated at mode " + std::to_string(n));
        }
        if ((*c)[0].imag() != 0.0) throw NumericalError("mean mode is not real");
    }
}

}  // namespace

FilteredState::FilteredState(int lambda_, int nmodes_)
    : lambda(lambda_), nmodes(nmodes_), uhat(CVector::Zero(nmodes_)), vhat(CVector::Zero(nmodes_)) {
    check_grid(lambda, nmodes);
}

FilteredState make_state(int lambda, int nmodes, double u0, const std::vector<ModeSpec>& umodes,
                         const std::vector<ModeSpec>& vmodes) {
    FilteredState s(lambda, nmodes);
    s.u(0) = u0;
    auto put = [&](CVector& c, const ModeSpec& m, const char* field) {
        if (std::abs(m.n) > lambda)
            throw ConfigError(std::string(field) + " mode " + std::to_string(m.n) + " exceeds lambda");
        if (m.n == 0) {
            if (m.value.imag() != 0.0) throw ConfigError(std::string(field) + " mode 0 must be real");
            c[0] += m.value;
            return;
        }
        const int n = std::abs(m.n);
        const Complex val = m.n > 0 ? m.value : std::conj(m.value);
        c[s.slot(n)] += val;
        c[s.slot(-n)] = std::conj(c[s.slot(n)]);
    };
    for (const auto& m : umodes) put(s.uhat, m, "u");
    for (const auto& m : vmodes) put(s.vhat, m, "v");
    return s;
}

CVector s_lambda(const CVector& coeffs, int lambda) {
    if (lambda < 0) throw ConfigError("lambda must be >= 0");
    const int L = static_cast<int>(coeffs.size());
    CVector out = coeffs;
    for (int k = 0; k < L; ++k) {
        const int n = k < L / 2 ? k : k - L;
        if (std::abs(n) > lambda) out[k] = 0.0;
    }
    return out;
}

Rhs vdw_rhs(const FilteredState& state) {
    check_grid(state.lambda, state.nmodes);
    PaddedGrid grid(state.lambda, state.nmodes);
    return rhs_on(state, grid);
}

double energy(const FilteredState& state) {
    check_grid(state.lambda, state.nmodes);
    PaddedGrid grid(state.lambda, state.nmodes);
    return energy_on(state, grid);
}

double char_speed_estimate(const FilteredState& state) {
    PaddedGrid grid(state.lambda, state.nmodes);
    const auto& phys = grid.to_physical(state.uhat);
    double c = 0.0;
    for (const auto& z : phys) c = std::max(c, std::sqrt(std::abs(3.0 * z.real() * z.real() - 1.0)));
    return c;
}

VdwRun integrate(const FilteredState& initial, double dt, double t_end, const IntegrateOptions& opts) {
    check_grid(initial.lambda, initial.nmodes);
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (t_end < initial.t) throw ConfigError("t_end precedes the initial time");
    if (opts.record_every < 1) throw ConfigError("record_every must be >= 1");
    for (int n : opts.track)
        if (std::abs(n) > initial.lambda) throw ConfigError("tracked mode " + std::to_string(n) + " exceeds lambda");
    const double cfl = dt * initial.lambda * char_speed_estimate(initial);
    if (cfl > 0.5) throw ConfigError("CFL guard: dt lambda c = " + std::to_string(cfl) + " exceeds 0.5");

    PaddedGrid grid(initial.lambda, initial.nmodes);
    VdwRun run;
    run.state = initial;
    FilteredState& s = run.state;
    const double t0 = initial.t;
    const long nsteps = std::lround((t_end - t0) / dt);

    bool stop = false;
    auto record = [&]() {
        assert_structure(s);
        run.trace.t.push_back(s.t);
        run.trace.E.push_back(energy_on(s, grid));
        if (!opts.track.empty()) {
            TrackSample ts;
            ts.t = s.t;
            for (int n : opts.track) {
                ts.abs_u.push_back(std::abs(s.u(n)));
                ts.abs_v.push_back(std::abs(s.v(n)));
                if (ts.abs_u.back() > opts.stop_amplitude || ts.abs_v.back() > opts.stop_amplitude) stop = true;
            }
            run.tracked.push_back(std::move(ts));
        }
    };

    record();
    FilteredState stage = s;
    for (long step = 1; step <= nsteps && !stop; ++step) {
        const Rhs k1 = rhs_on(s, grid);
        stage.uhat = s.uhat + 0.5 * dt * k1.du;
        stage.vhat = s.vhat + 0.5 * dt * k1.dv;
        const Rhs k2 = rhs_on(stage, grid);
        stage.uhat = s.uhat + 0.5 * dt * k2.du;
        stage.vhat = s.vhat + 0.5 * dt * k2.dv;
        const Rhs k3 = rhs_on(stage, grid);
        stage.uhat = s.uhat + dt * k3.du;
        stage.vhat = s.vhat + dt * k3.dv;
        const Rhs k4 = rhs_on(stage, grid);
        CVector un = s.uhat + (dt / 6.0) * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
        CVector vn = s.vhat + (dt / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
        if (!all_finite(un) || !all_finite(vn)) {
            run.blew_up = true;
            break;
        }
        s.uhat = std::move(un);
        s.vhat = std::move(vn);
        s.t = t0 + step * dt;
        run.last_finite_t = s.t;
        if (step % opts.record_every == 0 || step == nsteps) record();
    }
    if (run.blew_up && run.trace.t.back() != s.t) record();

    const double E0 = run.trace.E.front();
    for (double E : run.trace.E) run.trace.drift = std::max(run.trace.drift, std::abs(E - E0) / std::max(1.0, std::abs(E0)));
    return run;
}

double growth_fit(const std::vector<double>& t, const std::vector<double>& amp, double saturation) {
    if (t.size() != amp.size() || t.empty()) throw ConfigError("growth_fit needs matching, nonempty traces");
    const double lo = 10.0 * amp.front(), hi = 1e-3 * saturation;
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (amp[i] >= lo && amp[i] <= hi) {
            ts.push_back(t[i]);
            ys.push_back(std::log(amp[i]));
        }
    if (ts.size() < 10)
        throw InsufficientGrowthError("only " + std::to_string(ts.size()) +
                                      " samples between 10x the initial amplitude and 1e-3 of saturation; need 10");
    const double n = static_cast<double>(ts.size());
    double tm = 0, ym = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        tm += ts[i] / n;
        ym += ys[i] / n;
    }
    double stt = 0, sty = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        stt += (ts[i] - tm) * (ts[i] - tm);
        sty += (ts[i] - tm) * (ys[i] - ym);
    }
    if (stt <= 0.0) throw InsufficientGrowthError("degenerate time window in growth fit");
    return sty / stt;
}

}  // namespace hadamard
