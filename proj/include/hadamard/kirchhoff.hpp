#pragma once

#include <limits>
#include <map>
#include <vector>

#include "hadamard/types.hpp"

namespace hadamard::kirchhoff {

/// Parseval weights w_n = |h_n|^2 on the torus, so that sum_n w_n = ||h||^2.
struct SpectrumData {
    std::map<int, double> weights;

    [[nodiscard]] double total() const;
    [[nodiscard]] int support() const;
    [[nodiscard]] double weight(int n) const;
    /// hhat_n = sqrt(w_n), the real positive phase choice.
    [[nodiscard]] double hhat(int n) const;

    static SpectrumData power(double s, double norm, int nmax = 4096);
    static SpectrumData exponential(double a, double norm, int nmax = 4096);
    /// w/2 on each of +-n (all of w on n = 0).
    static SpectrumData single(int n, double w);
    /// Symmetrised: each listed (n, w) also sets -n.
    static SpectrumData explicit_list(const std::vector<std::pair<int, double>>& nw);
};

/// Standard: u(0) = 0, v(0) = S_lambda h. Interchanged: u(0) = S_lambda h, v(0) = 0,
/// which swaps the roles of cosh and sinh.
enum class Variant { Standard, Interchanged };

inline constexpr double kSaturation = 700.0;

/// U = Phi(A) = sum_{|n|<=lambda} w_n sinh^2(nA) (cosh^2 for the interchanged variant).
double u_of_A(double A, const SpectrumData& data, int lambda, Variant variant = Variant::Standard);

struct Trajectory {
    int lambda = 0;
    Variant variant = Variant::Standard;
    std::vector<double> t;
    std::vector<double> A;
    std::vector<double> U;

    /// Cubic Hermite interpolation with the exact derivative A' = 1 - U.
    [[nodiscard]] double A_at(double s) const;
};

/// RK4 on A' = 1 - Phi(A), A(0) = 0.
Trajectory integrate_A(const SpectrumData& data, int lambda, double t_end, double dt,
                       Variant variant = Variant::Standard);

struct ModeState {
    std::vector<int> n;
    CVector u;
    CVector v;
};

/// uhat_n = -i sinh(nA) hhat_n, vhat_n = cosh(nA) hhat_n (standard variant).
ModeState closed_form_state(const Trajectory& traj, const SpectrumData& data, double t);

struct DirectRun {
    std::vector<double> t;
    std::vector<ModeState> states;
    std::vector<double> U;
    std::vector<double> energy;
    double energy_drift = 0.0;
    double max_consistency_error = 0.0;
    bool diverged = false;
};

/// Coupled mode ODEs d_t u_n = i n a v_n, d_t v_n = i n |a| u_n with a = ||u||^2 - 1
/// recomputed from the evolving modes at every stage. A is carried along to
/// check |U - Phi(A)|.
DirectRun direct_mode_ode(const SpectrumData& data, int lambda, double t_end, double dt, int record_every = 1,
                          Variant variant = Variant::Standard);

struct Diagnostic {
    std::vector<int> lambdas;
    std::vector<double> mu;
    std::vector<double> ratio;
};

/// mu(lambda) = -ln sum_{lambda/2 <= |n| <= lambda} w_n, +inf on an empty annulus.
Diagnostic mu_diagnostic(const SpectrumData& data, const std::vector<int>& lambdas);

double bound_constant_K(const SpectrumData& data);

struct BoundRow {
    int lambda = 0;
    double A = 0.0;
    double U = 0.0;
    double mu = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
    double residual_u = 0.0;
    double residual_v = 0.0;
};

struct BoundReport {
    double t = 0.0;
    double K = 0.0;
    std::vector<BoundRow> rows;
    bool all_pass = true;
    bool residuals_decreasing = true;
};

/// Trajectories must be ordered like diag.lambdas.
BoundReport verify_bound_and_limit(const std::vector<Trajectory>& trajs, const Diagnostic& diag,
                                   const SpectrumData& data, double t, int n0);

}  // namespace hadamard::kirchhoff
