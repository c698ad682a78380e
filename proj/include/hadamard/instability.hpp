#pragma once

#include <vector>

#include "hadamard/symbol.hpp"
#include "hadamard/system.hpp"
#include "hadamard/types.hpp"

namespace hadamard::instability {

struct Params {
    double eps = 0.0;
    double M = 0.0;
    double beta = 0.0;
    double gamma0 = 0.0;
    double kappa1 = 0.0;
    double gamma = 0.0;
    double kappa = 0.0;
    double R = 0.0;
    double rho = 0.0;
    double sigma = 0.0;
    double sbar = 0.0;
    bool sbar_from_kappa = true;  // which branch of min{kappa/gamma, 1/(eps rho)} is active
    double m = 0.0;
    double alpha = 0.0;
    int d = 1;
    double delta = 0.0;
    double r0 = 0.0;
    double alpha_prime = 0.0;
    double t_eps = 0.0;
    double r_eps = 0.0;
};

/// Throws InfeasibleError naming the violated inequality.
Params make_params(double eps, double M, double beta, double gamma0, double m, double alpha, int d, double delta,
                   double r0);

/// Eigenpair driving growth for Fourier modes e^{in theta}: the conjugate of the
/// upper-half-plane pair, so that e^{is lambda} grows like e^{s gamma0}.
struct GrowingMode {
    Complex lambda;
    CVector r;
};

GrowingMode growing_mode(const SymbolSpectrum& spec);

struct OscillatoryData {
    std::vector<double> x;
    std::vector<Vector> h;
    double hm_norm = 0.0;
};

/// h(x) = eps^M Re(e^{i x xibar / eps} r) sampled on nx points of [xbar - r0, xbar + r0].
/// hm_norm = eps^M (1 + (xibar/eps)^2)^{m/2} ||Re(e^{i omega x} r)||_{L2(B_r0)}, the
/// L2 factor in closed form.
OscillatoryData oscillatory_data(const Params& p, int xibar, const CVector& r, double xbar = 0.0, int nx = 0);

double hm_norm(const Params& p, int xibar, const CVector& r, double xbar = 0.0);

/// f(s, theta) = eps^M Re(e^{i s lambda + i theta} r).
CVector linear_profile(const Params& p, double s, double theta, const GrowingMode& mode);

/// c with |f(s, theta)| >= 2c e^{s gamma0 - kappa1}: c = sigma_min([r, conj r]) / (2 sqrt 2).
double lower_bound_constant(const GrowingMode& mode);

/// max over 0 <= |n| <= nmax and the uniform s-grid of ||e^{insA}||_2 e^{-|n| gamma s}.
double semigroup_bound_check(const Matrix& Abar, double gamma, int nmax, double smax, int ns = 2000);

/// Fourier profile in theta: coeffs[k] is N x (2K+1), column n + K holds u_n.
struct ProfileTrajectory {
    int N = 0;
    int K = 0;
    double ds = 0.0;
    std::vector<double> s;
    std::vector<CMatrix> coeffs;
    bool blew_up = false;
    double last_finite_s = 0.0;

    /// Four-point Lagrange interpolation in s.
    [[nodiscard]] CMatrix at(double s) const;
    [[nodiscard]] static CVector eval(const CMatrix& c, double theta);
};

struct ProfileProblem {
    PolynomialSystem sys;
    Vector ubar;      // base state
    Vector xibar;     // integer frequency vector
    int K = 32;       // theta modes kept: |n| <= K
    double ds = 1.0 / 64.0;
};

/// Abar = sum_j xibar_j A_j(ubar).
Matrix profile_matrix(const ProfileProblem& prob);

/// Right-hand side (A(ubar + w) - Abar) d_theta w + eps F(ubar + w) by exact
/// Fourier convolution truncated to |n| <= K. w is N x (2K+1).
CMatrix profile_nonlinearity(const ProfileProblem& prob, double eps, const CMatrix& w);

/// Integrating-factor RK4 for (d_s - Abar d_theta) w = nonlinearity, data
/// w(0) = eps^M Re(e^{i theta} r). Overflow is reported, not thrown.
ProfileTrajectory solve_profile(const ProfileProblem& prob, const Params& p, const GrowingMode& mode, double s_end);

/// Lens {t >= 0, |x - xbar|^2 + delta t < r^2}.
bool lens_contains(double r, double delta, double t, double x);
/// Box [t_lo, t_hi] x [-x_half, x_half] inside the lens, by the monotone bound at (t_hi, x_half).
bool box_in_lens(double r, double delta, double t_lo, double t_hi, double x_half);

struct HoelderRow {
    double eps = 0.0;
    double kappa1 = 0.0;
    double sbar = 0.0;
    bool sbar_from_kappa = true;
    double t_eps = 0.0;
    double r_eps = 0.0;
    double l2_norm = 0.0;
    double hm_norm = 0.0;
    double ratio = 0.0;
    double predicted_exponent = 0.0;
    double fitted_slope = 0.0;
    bool truncated = false;
    bool literal_cube_in_lens = false;
    bool shifted_cube_in_lens = false;
};

struct HoelderOptions {
    double points_per_wavelength = 8.0;
    double t_points_per_unit_s = 8.0;
    bool parallel = true;
};

/// One row per eps; fitted_slope is the least-squares slope of ln ratio against
/// ln eps over all rows (the same value on each row).
std::vector<HoelderRow> hoelder_ratio_sweep(const ProfileProblem& prob, const Params& templ,
                                            const std::vector<double>& eps_list, const HoelderOptions& opts = {});

}  // namespace hadamard::instability
