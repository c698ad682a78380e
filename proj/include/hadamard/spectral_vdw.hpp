#pragma once

#include <limits>
#include <vector>

#include "hadamard/types.hpp"

namespace hadamard {

/// Truncated Fourier state on the 2pi-torus. Coefficients are stored in FFT
/// order: slot k holds mode n = k for k < nmodes/2 and n = k - nmodes otherwise,
/// with u(x) = sum_n uhat_n e^{inx}.
struct FilteredState {
    int lambda = 1;
    int nmodes = 4;
    CVector uhat;
    CVector vhat;
    double t = 0.0;

    FilteredState() = default;
    FilteredState(int lambda, int nmodes);

    [[nodiscard]] int slot(int n) const { return n >= 0 ? n : n + nmodes; }
    Complex& u(int n) { return uhat[slot(n)]; }
    Complex& v(int n) { return vhat[slot(n)]; }
    [[nodiscard]] Complex u(int n) const { return uhat[slot(n)]; }
    [[nodiscard]] Complex v(int n) const { return vhat[slot(n)]; }
};

struct ModeSpec {
    int n = 0;
    Complex value;
};

/// Real fields with the given modes (the conjugate at -n is filled in) plus
/// the constant background u0.
FilteredState make_state(int lambda, int nmodes, double u0, const std::vector<ModeSpec>& umodes,
                         const std::vector<ModeSpec>& vmodes);

struct EnergyTrace {
    std::vector<double> t;
    std::vector<double> E;
    double drift = 0.0;
};

/// Zero every mode with |n| > lambda. Coefficients in FFT order.
CVector s_lambda(const CVector& coeffs, int lambda);

struct Rhs {
    CVector du;
    CVector dv;
};

/// du = -i n vhat, dv = -i n S_lambda p(u), products de-aliased on a grid of
/// 2 nmodes points.
Rhs vdw_rhs(const FilteredState& state);

double energy(const FilteredState& state);

struct TrackSample {
    double t = 0.0;
    std::vector<double> abs_u;
    std::vector<double> abs_v;
};

struct IntegrateOptions {
    int record_every = 1;
    std::vector<int> track;
    /// Stop once any tracked |uhat_n| or |vhat_n| exceeds this.
    double stop_amplitude = std::numeric_limits<double>::infinity();
};

struct VdwRun {
    FilteredState state;
    EnergyTrace trace;
    std::vector<TrackSample> tracked;
    bool blew_up = false;
    double last_finite_t = 0.0;
};

/// Classical RK4 with a non-finite check after every step. Blow-up is reported
/// in the result, not thrown.
VdwRun integrate(const FilteredState& initial, double dt, double t_end, const IntegrateOptions& opts = {});

/// Least-squares slope of log(amp) against t over the samples with
/// 10 amp[0] <= amp <= 1e-3 saturation.
double growth_fit(const std::vector<double>& t, const std::vector<double>& amp, double saturation = 1.0);

/// Largest sqrt|p'(u)| over the physical grid.
double char_speed_estimate(const FilteredState& state);

}  // namespace hadamard
