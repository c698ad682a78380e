#include "hadamard/instability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "hadamard/errors.hpp"
#include "hadamard/kernels.hpp"

namespace hadamard::instability {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw InfeasibleError("parameter constraint violated: " + what);
}

// Two-sided Fourier series with coefficients for |n| <= L at index n + L.
struct Series {
    int L = 0;
    std::vector<Complex> c;

    static Series constant(Complex v) { return {0, {v}}; }
    Complex at(int n) const { return std::abs(n) > L ? Complex(0.0) : c[n + L]; }
};

Series convolve(const Series& a, const Series& b) {
    Series out{a.L + b.L, std::vector<Complex>(2 * (a.L + b.L) + 1, Complex(0.0))};
    for (int p = -a.L; p <= a.L; ++p) {
        const Complex ap = a.c[p + a.L];
        if (ap == Complex(0.0)) continue;
        for (int q = -b.L; q <= b.L; ++q) out.c[p + q + out.L] += ap * b.c[q + b.L];
    }
    return out;
}

Polynomial scaled(const Polynomial& P, double s) {
    std::vector<Monomial> t = P.terms();
    for (auto& m : t) m.coef *= s;
    return Polynomial(P.nvars(), std::move(t));
}

// Evaluates (A(ubar + w) - Abar) d_theta w + eps F(ubar + w) on Fourier data.
class ProfileOperator {
public:
    explicit ProfileOperator(const ProfileProblem& prob) : N_(prob.sys.N), K_(prob.K) {
        const auto& sys = prob.sys;
        if (prob.ubar.size() != N_) throw ConfigError("ubar must have N components");
        if (prob.xibar.size() != sys.d) throw ConfigError("xibar must have d components");
        B_.assign(N_, std::vector<Polynomial>(N_, Polynomial(N_, {})));
        for (int j = 0; j < sys.d; ++j) {
            if (prob.xibar[j] == 0.0) continue;
            for (int r = 0; r < N_; ++r)
                for (int c = 0; c < N_; ++c) B_[r][c] += scaled(sys.A[j][r][c].shifted_increment(prob.ubar), prob.xibar[j]);
        }
        F0_ = Vector::Zero(N_);
        for (int r = 0; r < N_; ++r) {
            Fw_.push_back(sys.F[r].shifted_increment(prob.ubar));
            F0_[r] = sys.F[r].eval(prob.ubar);
        }
        for (int r = 0; r < N_; ++r) {
            for (int c = 0; c < N_; ++c) maxdeg_ = std::max(maxdeg_, B_[r][c].degree());
            maxdeg_ = std::max(maxdeg_, Fw_[r].degree());
        }
    }

    CMatrix apply(double eps, const CMatrix& w) const {
        // Powers w_i^k, k <= maxdeg, kept untruncated so the Galerkin product is exact.
        std::vector<std::vector<Series>> pw(N_);
        for (int i = 0; i < N_; ++i) {
            Series wi{K_, std::vector<Complex>(2 * K_ + 1)};
            for (int n = -K_; n <= K_; ++n) wi.c[n + K_] = w(i, n + K_);
            pw[i].push_back(Series::constant(1.0));
            for (int k = 1; k <= maxdeg_; ++k) pw[i].push_back(convolve(pw[i].back(), wi));
        }
        auto eval = [&](const Polynomial& P) {
            Series acc = Series::constant(0.0);
            for (const auto& m : P.terms()) {
                Series t = Series::constant(m.coef);
                for (int i = 0; i < N_; ++i)
                    if (m.powers[i] > 0) t = convolve(t, pw[i][m.powers[i]]);
                if (t.L > acc.L) {
                    Series grown{t.L, std::vector<Complex>(2 * t.L + 1, Complex(0.0))};
                    for (int n = -acc.L; n <= acc.L; ++n) grown.c[n + t.L] = acc.c[n + acc.L];
                    acc = std::move(grown);
                }
                for (int n = -t.L; n <= t.L; ++n) acc.c[n + acc.L] += t.c[n + t.L];
            }
            return acc;
        };
        std::vector<Series> dw(N_);
        for (int c = 0; c < N_; ++c) {
            dw[c] = {K_, std::vector<Complex>(2 * K_ + 1)};
            for (int n = -K_; n <= K_; ++n) dw[c].c[n + K_] = Complex(0.0, n) * w(c, n + K_);
        }
        CMatrix out = CMatrix::Zero(N_, 2 * K_ + 1);
        for (int r = 0; r < N_; ++r) {
            for (int c = 0; c < N_; ++c) {
                if (B_[r][c].is_zero()) continue;
                const Series prod = convolve(eval(B_[r][c]), dw[c]);
                for (int n = -K_; n <= K_; ++n) out(r, n + K_) += prod.at(n);
            }
            if (eps != 0.0) {
                const Series f = eval(Fw_[r]);
                for (int n = -K_; n <= K_; ++n) out(r, n + K_) += eps * f.at(n);
                out(r, K_) += eps * F0_[r];
            }
        }
        // Real profile: impose exact conjugate symmetry.
        for (int r = 0; r < N_; ++r) {
            out(r, K_) = out(r, K_).real();
            for (int n = 1; n <= K_; ++n) out(r, K_ - n) = std::conj(out(r, K_ + n));
        }
        return out;
    }

private:
    int N_;
    int K_;
    int maxdeg_ = 0;
    std::vector<std::vector<Polynomial>> B_;
    std::vector<Polynomial> Fw_;
    Vector F0_;
};

double op_norm(const CMatrix& M) {
    Eigen::JacobiSVD<CMatrix> svd(M);
    return svd.singularValues()(0);
}

}  // namespace

Params make_params(double eps, double M, double beta, double gamma0, double m, double alpha, int d, double delta,
                   double r0) {
    require(eps > 0.0 && eps < 1.0, "0 < eps < 1");
    require(M >= 1.0, "M >= 1");
    require(beta > 0.0, "beta > 0");
    require(2.0 * M * beta < 1.0, "2 M beta < 1");
    require(gamma0 > 0.0, "gamma0 > 0");
    require(m >= 0.0, "m >= 0");
    require(alpha > 0.0, "alpha > 0");
    require(d >= 1, "d >= 1");
    require(delta > 0.0, "delta > 0");
    require(r0 > 0.0, "r0 > 0");

    Params p;
    p.eps = eps;
    p.M = M;
    p.beta = beta;
    p.gamma0 = gamma0;
    p.m = m;
    p.alpha = alpha;
    p.d = d;
    p.delta = delta;
    p.r0 = r0;
    p.kappa1 = M * std::abs(std::log(eps));
    p.gamma = (1.0 + beta) * gamma0;
    p.kappa = (1.0 - beta) * p.kappa1;
    p.R = std::pow(eps, -beta * M);
    p.rho = std::pow(eps, -2.0 * beta * M);
    p.sigma = (1.0 - beta) / (1.0 + beta);
    const double s_kappa = p.kappa / p.gamma;
    const double s_rho = 1.0 / (eps * p.rho);
    p.sbar_from_kappa = s_kappa <= s_rho;
    p.sbar = std::min(s_kappa, s_rho);
    p.alpha_prime = (M - m) / M * alpha - (1.0 + d) / (2.0 * M);
    require(p.alpha_prime > 0.0, "alpha' = (M - m)/M alpha - (1 + d)/(2M) > 0");
    require(1.0 - p.alpha_prime < p.sigma, "1 - alpha' < sigma");
    p.t_eps = eps * p.sbar;
    p.r_eps = std::sqrt(p.t_eps / delta);
    return p;
}

GrowingMode growing_mode(const SymbolSpectrum& spec) {
    if (!spec.lambda0 || !spec.rbar) throw ConfigError("symbol is hyperbolic: no growing eigenpair");
    return {std::conj(*spec.lambda0), spec.rbar->conjugate()};
}

double hm_norm(const Params& p, int xibar, const CVector& r, double xbar) {
    if (xibar == 0) throw ConfigError("xibar must be nonzero");
    const double omega = xibar / p.eps;
    // int_{xbar-r0}^{xbar+r0} Re(e^{i omega x} r_j)^2 dx = r0 |r_j|^2 + 1/2 Re(r_j^2 int e^{2 i omega x} dx).
    const Complex osc = std::exp(Complex(0.0, 2.0 * omega * xbar)) * (std::sin(2.0 * omega * p.r0) / omega);
    double l2sq = p.r0 * r.squaredNorm();
    for (int j = 0; j < r.size(); ++j) l2sq += 0.5 * (r[j] * r[j] * osc).real();
    return std::pow(p.eps, p.M) * std::pow(1.0 + omega * omega, 0.5 * p.m) * std::sqrt(std::max(l2sq, 0.0));
}

OscillatoryData oscillatory_data(const Params& p, int xibar, const CVector& r, double xbar, int nx) {
    OscillatoryData out;
    out.hm_norm = hm_norm(p, xibar, r, xbar);
    if (nx <= 0) {
        const double wavelength = 2.0 * kPi * p.eps / std::abs(xibar);
        nx = std::max(65, int(std::ceil(8.0 * 2.0 * p.r0 / wavelength)) + 1);
    }
    const double amp = std::pow(p.eps, p.M);
    for (int j = 0; j < nx; ++j) {
        const double x = xbar - p.r0 + 2.0 * p.r0 * j / (nx - 1);
        const Complex e = std::exp(Complex(0.0, x * xibar / p.eps));
        out.x.push_back(x);
        out.h.push_back(amp * (e * r).real());
    }
    return out;
}

CVector linear_profile(const Params& p, double s, double theta, const GrowingMode& mode) {
    const Complex e = std::exp(kI * (s * mode.lambda + theta));
    return (std::pow(p.eps, p.M) * (e * mode.r).real()).cast<Complex>();
}

double lower_bound_constant(const GrowingMode& mode) {
    CMatrix B(mode.r.size(), 2);
    B.col(0) = mode.r;
    B.col(1) = mode.r.conjugate();
    Eigen::JacobiSVD<CMatrix> svd(B);
    return svd.singularValues()(1) / (2.0 * std::sqrt(2.0));
}

double semigroup_bound_check(const Matrix& Abar, double gamma, int nmax, double smax, int ns) {
    const double g0 = spectrum_classify(Abar).gamma0;
    if (!(gamma > g0)) throw ConfigError("semigroup bound needs gamma > gamma0 = " + std::to_string(g0));
    if (nmax < 0 || !(smax > 0.0) || ns < 1) throw ConfigError("semigroup bound needs nmax >= 0, smax > 0, ns >= 1");
    const CMatrix iA = kI * Abar.cast<Complex>();
    double K = 1.0;  // n = 0
    for (int k = 1; k <= ns; ++k) {
        const double s = smax * k / ns;
        // (e^{isA} e^{-gamma s})^n = e^{insA} e^{-n gamma s}; e^{-insA} is its conjugate for real A.
        const CMatrix step = (s * iA).exp() * std::exp(-gamma * s);
        CMatrix P = CMatrix::Identity(Abar.rows(), Abar.cols());
        for (int n = 1; n <= nmax; ++n) {
            P = P * step;
            K = std::max(K, op_norm(P));
        }
    }
    return K;
}

CMatrix ProfileTrajectory::at(double sq) const {
    const int n = int(coeffs.size());
    if (n == 1) return coeffs[0];
    const double x = (sq - s.front()) / ds;
    int i = int(std::floor(x));
    int lo = std::clamp(i - 1, 0, std::max(0, n - 4));
    const int m = std::min(4, n);
    CMatrix out = CMatrix::Zero(coeffs[0].rows(), coeffs[0].cols());
    for (int a = 0; a < m; ++a) {
        double w = 1.0;
        for (int b = 0; b < m; ++b)
            if (b != a) w *= (x - (lo + b)) / double(a - b);
        out += w * coeffs[lo + a];
    }
    return out;
}

CVector ProfileTrajectory::eval(const CMatrix& c, double theta) {
    const int K = int(c.cols() - 1) / 2;
    CVector u = CVector::Zero(c.rows());
    for (int n = -K; n <= K; ++n) u += c.col(n + K) * std::exp(Complex(0.0, n * theta));
    return u;
}

Matrix profile_matrix(const ProfileProblem& prob) {
    if (prob.xibar.size() != prob.sys.d) throw ConfigError("xibar must have d components");
    Matrix A = Matrix::Zero(prob.sys.N, prob.sys.N);
    for (int j = 0; j < prob.sys.d; ++j) A += prob.xibar[j] * prob.sys.coefficient(j, prob.ubar);
    return A;
}

CMatrix profile_nonlinearity(const ProfileProblem& prob, double eps, const CMatrix& w) {
    return ProfileOperator(prob).apply(eps, w);
}

ProfileTrajectory solve_profile(const ProfileProblem& prob, const Params& p, const GrowingMode& mode, double s_end) {
    const int N = prob.sys.N;
    const int K = prob.K;
    if (K < 1) throw ConfigError("profile needs K >= 1");
    if (mode.r.size() != N) throw ConfigError("eigenvector length differs from N");
    if (!(s_end >= 0.0) || !(prob.ds > 0.0)) throw ConfigError("profile needs s_end >= 0 and ds > 0");
    const Matrix Abar = profile_matrix(prob);
    const int nsteps = std::max(1, int(std::ceil(s_end / prob.ds - 1e-9)));
    const double h = s_end / nsteps;
    const double anorm = op_norm(Abar.cast<Complex>());
    if (h * K * anorm > 0.5)
        throw ConfigError("profile step violates ds K ||A|| <= 0.5 (got " + std::to_string(h * K * anorm) + ")");

    const ProfileOperator op(prob);
    const CMatrix iA = kI * Abar.cast<Complex>();
    std::vector<CMatrix> Eh(2 * K + 1), Eh2(2 * K + 1);
    for (int n = -K; n <= K; ++n) {
        Eh[n + K] = (double(n) * h * iA).exp();
        Eh2[n + K] = (double(n) * 0.5 * h * iA).exp();
    }
    auto prop = [&](const std::vector<CMatrix>& E, const CMatrix& w) {
        CMatrix out(N, 2 * K + 1);
        for (int n = -K; n <= K; ++n) out.col(n + K) = E[n + K] * w.col(n + K);
        return out;
    };

    ProfileTrajectory tr;
    tr.N = N;
    tr.K = K;
    tr.ds = h;
    CMatrix w = CMatrix::Zero(N, 2 * K + 1);
    const double amp = 0.5 * std::pow(p.eps, p.M);
    w.col(K + 1) = amp * mode.r;
    w.col(K - 1) = amp * mode.r.conjugate();
    tr.s.push_back(0.0);
    tr.coeffs.push_back(w);

    const double eps = p.eps;
    for (int k = 1; k <= nsteps; ++k) {
        // Lawson integrating-factor RK4.
        const CMatrix k1 = op.apply(eps, w);
        const CMatrix k2 = op.apply(eps, prop(Eh2, w + 0.5 * h * k1));
        const CMatrix k3 = op.apply(eps, prop(Eh2, w) + 0.5 * h * k2);
        const CMatrix k4 = op.apply(eps, prop(Eh, w) + h * prop(Eh2, k3));
        const CMatrix next =
            prop(Eh, w) + (h / 6.0) * (prop(Eh, k1) + 2.0 * prop(Eh2, k2 + k3) + k4);
        if (!next.allFinite()) {
            tr.blew_up = true;
            break;
        }
        w = next;
        tr.s.push_back(k * h);
        tr.coeffs.push_back(w);
    }
    tr.last_finite_s = tr.s.back();
    return tr;
}

bool lens_contains(double r, double delta, double t, double x) { return t >= 0.0 && x * x + delta * t < r * r; }

bool box_in_lens(double r, double delta, double t_lo, double t_hi, double x_half) {
    // x^2 + delta t is increasing in |x| and t, so the worst corner is (t_hi, x_half).
    return t_lo >= 0.0 && t_lo <= t_hi && lens_contains(r, delta, t_hi, x_half);
}

std::vector<HoelderRow> hoelder_ratio_sweep(const ProfileProblem& prob, const Params& templ,
                                            const std::vector<double>& eps_list, const HoelderOptions& opts) {
    if (prob.sys.d != 1 || prob.xibar.size() != 1) throw ConfigError("Hoelder sweep supports d = 1 only");
    const double xi = prob.xibar[0];
    if (xi != std::round(xi) || xi == 0.0) throw ConfigError("xibar must be a nonzero integer");
    const auto spec = spectrum_classify(profile_matrix(prob));
    const GrowingMode mode = growing_mode(spec);

    std::vector<HoelderRow> rows;
    for (double eps : eps_list) {
        const Params p = make_params(eps, templ.M, templ.beta, spec.gamma0, templ.m, templ.alpha, templ.d,
                                     templ.delta, templ.r0);
        const auto prof = solve_profile(prob, p, mode, p.sbar);

        HoelderRow row;
        row.eps = eps;
        row.kappa1 = p.kappa1;
        row.sbar = p.sbar;
        row.sbar_from_kappa = p.sbar_from_kappa;
        row.t_eps = p.t_eps;
        row.r_eps = p.r_eps;
        row.predicted_exponent = p.M * (1.0 - p.sigma - p.alpha_prime);

        // The lens reaches t = r^2/delta; the profile is only defined up to t_eps
        // (or the last finite slow time).
        const double lens_top = p.r_eps * p.r_eps / p.delta;
        const double t_max = std::min({lens_top, p.t_eps, eps * prof.last_finite_s});
        row.truncated = prof.blew_up || lens_top > p.t_eps * (1.0 + 1e-12);

        kernels::LensGrid g;
        g.eps = eps;
        g.xibar = xi;
        g.r = p.r_eps;
        g.delta = p.delta;
        g.t_max = t_max;
        g.nt = std::max(16, int(std::ceil(opts.t_points_per_unit_s * t_max / eps)));
        g.dx_target = 2.0 * kPi * eps / std::abs(xi) / opts.points_per_wavelength;
        row.l2_norm = std::sqrt(kernels::lens_l2_squared(g, prof, opts.parallel));
        row.hm_norm = hm_norm(p, int(xi), mode.r);
        row.ratio = row.l2_norm / std::pow(row.hm_norm, p.alpha);
        row.literal_cube_in_lens = box_in_lens(p.r_eps, p.delta, p.t_eps - eps, p.t_eps, eps);
        row.shifted_cube_in_lens = box_in_lens(p.r_eps, p.delta, p.t_eps - 2.0 * eps, p.t_eps - eps, eps);
        rows.push_back(row);
    }

    double slope = std::numeric_limits<double>::quiet_NaN();
    if (rows.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (const auto& r : rows) {
            mx += std::log(r.eps);
            my += std::log(r.ratio);
        }
        mx /= rows.size();
        my /= rows.size();
        double sxy = 0.0, sxx = 0.0;
        for (const auto& r : rows) {
            sxy += (std::log(r.eps) - mx) * (std::log(r.ratio) - my);
            sxx += (std::log(r.eps) - mx) * (std::log(r.eps) - mx);
        }
        slope = sxy / sxx;
    }
    for (auto& r : rows) r.fitted_slope = slope;
    return rows;
}

}  // namespace hadamard::instability
