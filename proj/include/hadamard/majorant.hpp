#pragma once

#include <vector>

#include "hadamard/instability.hpp"
#include "hadamard/types.hpp"

namespace hadamard::majorant {

/// <n> = |n| for n != 0, <0> = 2.
int weight_bracket(int n);

/// Nonnegative power series a_0 + a_1 z + ... + a_T z^T.
struct MajorantSeries {
    std::vector<double> coeffs;

    [[nodiscard]] int order() const { return int(coeffs.size()) - 1; }
};

/// phi(z) = c0 sum_{n <= T} z^n / (n^2 + 1).
MajorantSeries phi_series(double c0, int T);
/// Product truncated at the common order.
MajorantSeries multiply(const MajorantSeries& a, const MajorantSeries& b);
MajorantSeries derivative(const MajorantSeries& a);
bool dominates(const MajorantSeries& u, const MajorantSeries& v);  // u << v

struct Constants {
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    int argmax_c0 = 0;  // n attaining max (n^2+1) S_n
    int argmax_c2 = 0;
    double tail_c0 = 0.0;  // analytic upper bounds used for n > T
    double tail_c1 = 0.0;
    double tail_c2 = 0.0;
};

/// c0 = 1 / sup_n (n^2+1) sum_{p=0}^n 1/((p^2+1)((n-p)^2+1)),
/// c1 = 1 / sup_n (n^2+1) sum_{p in Z} 1/((p^2+1)((n-p)^2+1)),
/// c2 = c1 sup_n sqrt(n^2+1) sum_{p in Z} 1/((p^2+1) sqrt((n-p)^2+1)).
/// Indices n <= T are summed (p truncated at nmax with a tail bound); n > T use
/// analytic bounds. Results are rounded toward the safe side.
Constants compute_constants(int T = 200, int nmax = 4096, int T_c2 = 2000);

/// Taylor coefficients in Y of phi(RY + z) (plain, one) or phi'(RY + z) (prime):
/// R^k phi^{(k)}(z)/k! and R^k phi^{(k+1)}(z)/k!. Returned as logarithms.
/// Throws DomainError for z >= 1 where the series diverge.
double log_phi_taylor(double c0, double R, int k, double z, bool derivative);

enum class NormVariant { Plain, Prime, One };

struct NormParams {
    double gamma = 0.0;
    double kappa = 0.0;
    double eps = 0.0;
    double R = 0.0;
    double rho = 0.0;
    double c0 = 0.0;
    double c1 = 0.0;
    double sbar = 0.0;

    static NormParams from(const instability::Params& p, const Constants& c);
};

/// Coefficients c_{n,k}(s) of sum_n sum_k c_{n,k}(s) Y^k e^{in theta}, N components,
/// |n| <= K, k <= T, on a uniform s-grid starting at 0.
struct ProfileSeries {
    int N = 0;
    int K = 0;
    int T = 0;
    std::vector<double> s;
    std::vector<Complex> data;

    ProfileSeries() = default;
    ProfileSeries(int N, int K, int T, std::vector<double> s);

    [[nodiscard]] int ns() const { return int(s.size()); }
    [[nodiscard]] std::size_t index(int si, int a, int n, int k) const {
        return ((std::size_t(si) * N + a) * (2 * K + 1) + (n + K)) * (T + 1) + k;
    }
    Complex& at(int si, int a, int n, int k) { return data[index(si, a, n, k)]; }
    [[nodiscard]] Complex at(int si, int a, int n, int k) const { return data[index(si, a, n, k)]; }

    ProfileSeries& operator+=(const ProfileSeries& o);
    ProfileSeries& operator-=(const ProfileSeries& o);
    ProfileSeries& operator*=(Complex c);
};

std::vector<double> uniform_grid(double s_end, int ns);

/// Smallest C with |c_{n,k}(s)| <= C w_n(s) Phi_k(s) on the lattice, max over components.
/// Throws DomainError outside [0, min(kappa/gamma, 1/(eps rho))).
double enorm(const ProfileSeries& u, const NormParams& p, NormVariant variant, bool parallel = true);

/// Componentwise Fourier-Taylor product, truncated to |n| <= K, k <= T.
ProfileSeries product(const ProfileSeries& u, const ProfileSeries& v);

/// v_n(s) = int_0^s e^{in(s - s')Abar} f_n(s') ds' with f piecewise linear in s
/// (exact exponential integrator: e^{hL}, phi_1(hL), phi_2(hL) from one augmented
/// matrix exponential).
ProfileSeries duhamel_apply(const ProfileSeries& f, const Matrix& Abar);

struct OperatorConstants {
    double K_semigroup = 0.0;     // sup ||e^{insA}|| e^{-|n| gamma s}
    double K_semigroup_1 = 0.0;   // same at gamma1 = (gamma + gamma0)/2
    double K_one = 0.0;           // [[I f]] <= K_one [[f]]_1
    double K_prime = 0.0;         // [[I f]] <= K_prime / (eps rho) [[f]]'
    double K_gamma = 0.0;         // max(K_one, K_prime), used in the contraction test
};

OperatorConstants operator_constants(const Matrix& Abar, const NormParams& p, int nmax, double smax);

/// Lattice samples of f = eps^M Re(e^{is lambda + i theta} r) (k = 0 only).
ProfileSeries linear_data(const instability::Params& p, const instability::GrowingMode& mode, int N, int K, int T,
                          const std::vector<double>& s);

/// (A(ubar + u) - Abar) d_theta u + eps F(ubar + u) with the lattice product.
ProfileSeries nonlinearity(const instability::ProfileProblem& prob, double eps, const ProfileSeries& u);

/// Coefficient bound C with F << C prod_j 1/(a - u_j) for a polynomial F.
double polynomial_majorant(const Polynomial& P, double a);

struct PicardReport {
    ProfileSeries u;
    int iterations = 0;
    bool converged = false;
    std::vector<double> changes;  // [[u^{m+1} - u^m]]
    std::vector<double> ratios;   // changes[m+1] / changes[m]
    double residual = 0.0;        // [[u - f - T(u)]] / [[u]]
    double norm_f = 0.0;
    double norm_u_minus_f = 0.0;
};

struct PicardOptions {
    int max_iter = 200;
    double tol = 1e-10;
    bool parallel = true;
};

/// u <- f + I(F(u)) starting from f, stopping when [[u^{m+1} - u^m]] <= tol [[u^{m+1}]].
PicardReport picard_iterate(const instability::ProfileProblem& prob, const instability::Params& p,
                            const NormParams& np, const instability::GrowingMode& mode, int T,
                            const std::vector<double>& s, const PicardOptions& opts = {});

struct ContractionReport {
    double norm_f = 0.0;
    double K_gamma = 0.0;
    double margin = 0.0;         // 1/2 - K_gamma (1/R + 4 [[f]] + R/rho)
    double factor = 0.0;         // K_gamma (1/R + 4 [[f]] + R/rho)
    double fixed_point_bound = 0.0;  // factor * [[f]]
    PicardReport picard;
    bool bound_holds = false;
};

/// Feasibility margin for the data and constants, without iterating.
ContractionReport contraction_margin(const instability::ProfileProblem& prob, const instability::Params& p,
                                     const NormParams& np, const instability::GrowingMode& mode, int T,
                                     const std::vector<double>& s, const OperatorConstants& oc);

/// Throws InfeasibleError carrying the margin when the contraction condition fails.
ContractionReport contraction_solve(const instability::ProfileProblem& prob, const instability::Params& p,
                                    const NormParams& np, const instability::GrowingMode& mode, int T,
                                    const std::vector<double>& s, const OperatorConstants& oc,
                                    const PicardOptions& opts = {});

/// sup over the s-grid and 64 theta samples of |u(s, theta) - profile(s, theta)|, k = 0 part.
double sup_difference(const ProfileSeries& u, const instability::ProfileTrajectory& prof);

}  // namespace hadamard::majorant
