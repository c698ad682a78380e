#include "hadamard/majorant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "hadamard/errors.hpp"
#include "hadamard/kernels.hpp"

namespace hadamard::majorant {

namespace {

const double kPiCothPi = kPi * std::cosh(kPi) / std::sinh(kPi);

double down(double x) { return std::nextafter(x, 0.0); }
double up(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }

void check_same_shape(const ProfileSeries& a, const ProfileSeries& b) {
    if (a.N != b.N || a.K != b.K || a.T != b.T || a.s != b.s) throw ConfigError("profile series shapes differ");
}

// ln(e^a + e^b) without overflow.
double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

// ln sum_{j >= m} C(j, m) z^{j-m} / (j^2 + 1) for 0 <= z < 1.
double log_g(int m, double z) {
    if (z == 0.0) return -std::log(double(m) * m + 1.0);
    const double lz = std::log(z);
    double lchoose = 0.0;  // ln C(m, m)
    double acc = -std::numeric_limits<double>::infinity();
    const double j_peak = m / (1.0 - z);
    for (long j = m; j < m + 200000000L; ++j) {
        const double lt = lchoose + (j - m) * lz - std::log(double(j) * j + 1.0);
        acc = log_add(acc, lt);
        if (j > j_peak + 10 && lt < acc - 40.0) return acc;
        lchoose += std::log(double(j + 1) / double(j + 1 - m));
    }
    throw DomainError("phi series did not converge at z = " + std::to_string(z));
}

// Semigroup bound in the max-row-sum norm, which is the operator norm for the
// componentwise sup used by the weighted norms.
double semigroup_inf(const Matrix& Abar, double gamma, int nmax, double smax, int ns) {
    const CMatrix iA = kI * Abar.cast<Complex>();
    double K = 1.0;
    for (int k = 1; k <= ns; ++k) {
        const double s = smax * k / ns;
        const CMatrix step = (s * iA).exp() * std::exp(-gamma * s);
        CMatrix P = CMatrix::Identity(Abar.rows(), Abar.cols());
        for (int n = 1; n <= nmax; ++n) {
            P = P * step;
            K = std::max(K, P.cwiseAbs().rowwise().sum().maxCoeff());
        }
    }
    return K;
}

ProfileSeries component(const ProfileSeries& u, int a) {
    ProfileSeries out(1, u.K, u.T, u.s);
    const std::size_t block = std::size_t(2 * u.K + 1) * (u.T + 1);
    for (int si = 0; si < u.ns(); ++si)
        std::copy_n(u.data.begin() + u.index(si, a, -u.K, 0), block, out.data.begin() + out.index(si, 0, -u.K, 0));
    return out;
}

void add_component(ProfileSeries& out, int a, const ProfileSeries& c, Complex scale) {
    for (int si = 0; si < out.ns(); ++si)
        for (int n = -out.K; n <= out.K; ++n)
            for (int k = 0; k <= out.T; ++k) out.at(si, a, n, k) += scale * c.at(si, 0, n, k);
}

ProfileSeries constant_series(const ProfileSeries& shape, Complex v) {
    ProfileSeries out(1, shape.K, shape.T, shape.s);
    for (int si = 0; si < out.ns(); ++si) out.at(si, 0, 0, 0) = v;
    return out;
}

Polynomial scaled(const Polynomial& P, double s) {
    std::vector<Monomial> t = P.terms();
    for (auto& m : t) m.coef *= s;
    return Polynomial(P.nvars(), std::move(t));
}

}  // namespace

int weight_bracket(int n) { return n == 0 ? 2 : std::abs(n); }

MajorantSeries phi_series(double c0, int T) {
    MajorantSeries out;
    for (int n = 0; n <= T; ++n) out.coeffs.push_back(c0 / (double(n) * n + 1.0));
    return out;
}

MajorantSeries multiply(const MajorantSeries& a, const MajorantSeries& b) {
    const int T = std::min(a.order(), b.order());
    MajorantSeries out{std::vector<double>(T + 1, 0.0)};
    for (int i = 0; i <= T; ++i)
        for (int j = 0; i + j <= T; ++j) out.coeffs[i + j] += a.coeffs[i] * b.coeffs[j];
    return out;
}

MajorantSeries derivative(const MajorantSeries& a) {
    MajorantSeries out;
    for (int n = 1; n <= a.order(); ++n) out.coeffs.push_back(n * a.coeffs[n]);
    return out;
}

bool dominates(const MajorantSeries& u, const MajorantSeries& v) {
    if (u.coeffs.size() != v.coeffs.size()) throw ConfigError("majorant series truncations differ");
    for (std::size_t i = 0; i < u.coeffs.size(); ++i)
        if (!(std::abs(u.coeffs[i]) <= v.coeffs[i])) return false;
    return true;
}

Constants compute_constants(int T, int nmax, int T_c2) {
    if (T < 64 || nmax < 64 || T_c2 < 64) throw ConfigError("constants need T, nmax, T_c2 >= 64");
    const int P = std::max(nmax, 2 * std::max(T, T_c2));
    auto f = [](double x) { return 1.0 / (x * x + 1.0); };
    Constants c;

    // c0: (phi^2)_n = c0^2 S_n <= c0/(n^2+1).
    double h0 = 0.0;
    for (int n = 0; n <= T; ++n) {
        double S = 0.0;
        for (int p = 0; p <= n; ++p) S += f(p) * f(n - p);
        const double H = (double(n) * n + 1.0) * S;
        if (H > h0) {
            h0 = H;
            c.argmax_c0 = n;
        }
    }
    // For p <= n/2, (n^2+1)/((n-p)^2+1) <= 1 + 8p/n; with the mirror half this gives
    // (n^2+1) S_n <= 1 + pi coth pi + 16 (1 + ln(n/2)) / n, decreasing in n.
    const double n0 = T + 1.0;
    c.tail_c0 = 1.0 + kPiCothPi + 16.0 * (1.0 + std::log(n0 / 2.0)) / n0;
    c.c0 = down(1.0 / up(std::max(h0, c.tail_c0)));

    // c1: full convolution over Z. For n != 0 the sum is 2 pi coth pi / (n^2 + 4) by
    // residues, so (n^2+1) Z_n increases to 2 pi coth pi: that limit bounds n > T.
    double h1 = 0.0;
    for (int n = 0; n <= T; ++n) {
        double Z = 0.0;
        for (int p = -P; p <= P; ++p) Z += f(p) * f(n - p);
        Z += 2.0 / (P * ((double(P) - n) * (double(P) - n) + 1.0));
        h1 = std::max(h1, (double(n) * n + 1.0) * Z);
    }
    c.tail_c1 = 2.0 * kPiCothPi;
    c.c1 = down(1.0 / up(std::max(h1, c.tail_c1)));

    // c2: [[uv]]_1 <= c2 [[u]] [[v]]_1 needs c1 sqrt(n^2+1) sum_p f(p) f(n-p)^{1/2} <= c2.
    double h2 = 0.0;
    for (int n = 0; n <= T_c2; ++n) {
        double G = 0.0;
        for (int p = -P; p <= P; ++p) G += f(p) * std::sqrt(f(n - p));
        G += (1.0 / P) * (1.0 / (double(P) - n) + 1.0 / P);
        G *= std::sqrt(double(n) * n + 1.0);
        if (G > h2) {
            h2 = G;
            c.argmax_c2 = n;
        }
    }
    // Split p <= 0, 0 < p <= n/2, n/2 < p <= 2n, p > 2n.
    const double m = T_c2 + 1.0;
    c.tail_c2 = kPiCothPi + 4.0 * (1.0 + std::log(m / 2.0)) / m + (m + 1.0) * (12.5 + 8.0 * std::log(m)) / (m * m);
    c.c2 = up(c.c1 * up(std::max(h2, c.tail_c2)));
    return c;
}

double log_phi_taylor(double c0, double R, int k, double z, bool deriv) {
    if (!(z >= 0.0) || !(z < 1.0)) throw DomainError("phi(RY + z) needs 0 <= z < 1, got z = " + std::to_string(z));
    if (k < 0) throw ConfigError("Taylor order must be >= 0");
    const double base = std::log(c0) + k * std::log(R);
    if (!deriv) return base + log_g(k, z);
    return base + std::log(k + 1.0) + log_g(k + 1, z);
}

NormParams NormParams::from(const instability::Params& p, const Constants& c) {
    NormParams n;
    n.gamma = p.gamma;
    n.kappa = p.kappa;
    n.eps = p.eps;
    n.R = p.R;
    n.rho = p.rho;
    n.c0 = c.c0;
    n.c1 = c.c1;
    n.sbar = p.sbar;
    return n;
}

ProfileSeries::ProfileSeries(int N_, int K_, int T_, std::vector<double> s_)
    : N(N_), K(K_), T(T_), s(std::move(s_)) {
    if (N < 1 || K < 0 || T < 0) throw ConfigError("profile series needs N >= 1, K >= 0, T >= 0");
    data.assign(s.size() * N * (2 * K + 1) * (T + 1), Complex(0.0));
}

ProfileSeries& ProfileSeries::operator+=(const ProfileSeries& o) {
    check_same_shape(*this, o);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    return *this;
}

ProfileSeries& ProfileSeries::operator-=(const ProfileSeries& o) {
    check_same_shape(*this, o);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
    return *this;
}

ProfileSeries& ProfileSeries::operator*=(Complex c) {
    for (auto& v : data) v *= c;
    return *this;
}

std::vector<double> uniform_grid(double s_end, int ns) {
    if (ns < 2 || !(s_end > 0.0)) throw ConfigError("s-grid needs ns >= 2 and s_end > 0");
    std::vector<double> s(ns);
    for (int i = 0; i < ns; ++i) s[i] = s_end * i / (ns - 1);
    return s;
}

double enorm(const ProfileSeries& u, const NormParams& p, NormVariant variant, bool parallel) {
    const int nn = 2 * u.K + 1, nk = u.T + 1;
    std::vector<double> logw(std::size_t(u.ns()) * nn * nk);
    const double s_max = p.kappa / p.gamma;
    for (int si = 0; si < u.ns(); ++si) {
        const double s = u.s[si];
        if (s < 0.0 || s > s_max * (1.0 + 1e-12))
            throw DomainError("weight vanishes: s = " + std::to_string(s) + " beyond kappa/gamma");
        std::vector<double> lphi(nk);
        for (int k = 0; k < nk; ++k)
            lphi[k] = log_phi_taylor(p.c0, p.R, k, p.eps * p.rho * s, variant == NormVariant::Prime);
        for (int n = -u.K; n <= u.K; ++n) {
            const double n2 = double(n) * n + 1.0;
            const double lw = std::log(p.c1) - (variant == NormVariant::One ? 0.5 : 1.0) * std::log(n2) +
                              (p.gamma * s - p.kappa) * weight_bracket(n);
            for (int k = 0; k < nk; ++k) logw[(std::size_t(si) * nn + (n + u.K)) * nk + k] = lw + lphi[k];
        }
    }
    const kernels::WeightedLattice w{u.ns(), u.N, nn, nk, u.data.data(), logw.data()};
    return parallel ? kernels::weighted_sup_omp(w) : kernels::weighted_sup_serial(w);
}

ProfileSeries product(const ProfileSeries& u, const ProfileSeries& v) {
    check_same_shape(u, v);
    ProfileSeries out(u.N, u.K, u.T, u.s);
    const int K = u.K, T = u.T;
    for (int si = 0; si < u.ns(); ++si)
        for (int a = 0; a < u.N; ++a)
            for (int p = -K; p <= K; ++p)
                for (int i = 0; i <= T; ++i) {
                    const Complex up_ = u.at(si, a, p, i);
                    if (up_ == Complex(0.0)) continue;
                    for (int q = std::max(-K, -K - p); q <= std::min(K, K - p); ++q)
                        for (int j = 0; i + j <= T; ++j) out.at(si, a, p + q, i + j) += up_ * v.at(si, a, q, j);
                }
    return out;
}

ProfileSeries duhamel_apply(const ProfileSeries& f, const Matrix& Abar) {
    if (Abar.rows() != f.N || Abar.cols() != f.N) throw ConfigError("Abar must be N x N");
    ProfileSeries v(f.N, f.K, f.T, f.s);
    if (f.ns() < 2) return v;
    const double h = f.s[1] - f.s[0];
    for (int i = 1; i < f.ns(); ++i)
        if (std::abs(f.s[i] - f.s[i - 1] - h) > 1e-12 * (1.0 + std::abs(f.s.back())))
            throw ConfigError("duhamel_apply needs a uniform s-grid");
    const int N = f.N;
    for (int n = -f.K; n <= f.K; ++n) {
        CMatrix aug = CMatrix::Zero(3 * N, 3 * N);
        aug.topLeftCorner(N, N) = (kI * (double(n) * h)) * Abar.cast<Complex>();
        aug.block(0, N, N, N) = CMatrix::Identity(N, N);
        aug.block(N, 2 * N, N, N) = CMatrix::Identity(N, N);
        const CMatrix X = aug.exp();
        const CMatrix E = X.topLeftCorner(N, N);
        const CMatrix P1 = X.block(0, N, N, N);
        const CMatrix P2 = X.block(0, 2 * N, N, N);
        for (int k = 0; k <= f.T; ++k) {
            CVector vj = CVector::Zero(N), fj(N), fn(N);
            for (int a = 0; a < N; ++a) fj[a] = f.at(0, a, n, k);
            for (int si = 1; si < f.ns(); ++si) {
                for (int a = 0; a < N; ++a) fn[a] = f.at(si, a, n, k);
                vj = E * vj + h * (P1 * fj + P2 * (fn - fj));
                for (int a = 0; a < N; ++a) v.at(si, a, n, k) = vj[a];
                fj = fn;
            }
        }
    }
    return v;
}

OperatorConstants operator_constants(const Matrix& Abar, const NormParams& p, int nmax, double smax) {
    const double g0 = spectrum_classify(Abar).gamma0;
    if (!(p.gamma > g0)) throw ConfigError("operator constants need gamma > gamma0");
    const double g1 = 0.5 * (p.gamma + g0);
    const int ns = 2000;
    OperatorConstants oc;
    oc.K_semigroup = semigroup_inf(Abar, p.gamma, nmax, smax, ns);
    oc.K_semigroup_1 = semigroup_inf(Abar, g1, nmax, smax, ns);
    // int_0^s e^{(s-s')(|n| g1 - <n> gamma)} ds' <= 1 / (<n> gamma - |n| g1).
    double sup = 0.0;
    for (int n = 0; n <= nmax; ++n)
        sup = std::max(sup, std::sqrt(double(n) * n + 1.0) / (weight_bracket(n) * p.gamma - n * g1));
    oc.K_one = oc.K_semigroup_1 * sup;
    oc.K_prime = oc.K_semigroup;
    oc.K_gamma = std::max(oc.K_one, oc.K_prime);
    return oc;
}

ProfileSeries linear_data(const instability::Params& p, const instability::GrowingMode& mode, int N, int K, int T,
                          const std::vector<double>& s) {
    if (mode.r.size() != N) throw ConfigError("eigenvector length differs from N");
    if (K < 1) throw ConfigError("linear data needs K >= 1");
    ProfileSeries f(N, K, T, s);
    const double amp = 0.5 * std::pow(p.eps, p.M);
    for (int si = 0; si < f.ns(); ++si) {
        const Complex e = std::exp(kI * s[si] * mode.lambda);
        for (int a = 0; a < N; ++a) {
            f.at(si, a, 1, 0) = amp * e * mode.r[a];
            f.at(si, a, -1, 0) = std::conj(f.at(si, a, 1, 0));
        }
    }
    return f;
}

ProfileSeries nonlinearity(const instability::ProfileProblem& prob, double eps, const ProfileSeries& u) {
    const auto& sys = prob.sys;
    const int N = sys.N;
    if (u.N != N) throw ConfigError("series has the wrong number of components");
    if (prob.ubar.size() != N || prob.xibar.size() != sys.d) throw ConfigError("ubar/xibar sizes do not match");

    std::vector<ProfileSeries> comp;
    for (int a = 0; a < N; ++a) comp.push_back(component(u, a));
    auto eval = [&](const Polynomial& P) {
        ProfileSeries acc(1, u.K, u.T, u.s);
        for (const auto& m : P.terms()) {
            ProfileSeries t = constant_series(u, m.coef);
            for (int i = 0; i < N; ++i)
                for (int e = 0; e < m.powers[i]; ++e) t = product(t, comp[i]);
            acc += t;
        }
        return acc;
    };

    ProfileSeries out(N, u.K, u.T, u.s);
    for (int r = 0; r < N; ++r) {
        for (int c = 0; c < N; ++c) {
            Polynomial B(N, {});
            for (int j = 0; j < sys.d; ++j)
                if (prob.xibar[j] != 0.0) B += scaled(sys.A[j][r][c].shifted_increment(prob.ubar), prob.xibar[j]);
            if (B.is_zero()) continue;
            ProfileSeries dth = comp[c];
            for (int si = 0; si < dth.ns(); ++si)
                for (int n = -u.K; n <= u.K; ++n)
                    for (int k = 0; k <= u.T; ++k) dth.at(si, 0, n, k) *= Complex(0.0, n);
            add_component(out, r, product(eval(B), dth), 1.0);
        }
        if (eps != 0.0) {
            add_component(out, r, eval(sys.F[r].shifted_increment(prob.ubar)), eps);
            const double F0 = sys.F[r].eval(prob.ubar);
            for (int si = 0; si < out.ns(); ++si) out.at(si, r, 0, 0) += eps * F0;
        }
    }
    return out;
}

double polynomial_majorant(const Polynomial& P, double a) {
    if (!(a > 0.0)) throw ConfigError("majorant radius must be positive");
    // prod_j 1/(a - u_j) = sum_alpha u^alpha / a^{|alpha| + N}.
    double C = 0.0;
    for (const auto& m : P.terms()) {
        int deg = 0;
        for (int e : m.powers) deg += e;
        C = std::max(C, std::abs(m.coef) * std::pow(a, deg + P.nvars()));
    }
    return C;
}

PicardReport picard_iterate(const instability::ProfileProblem& prob, const instability::Params& p,
                            const NormParams& np, const instability::GrowingMode& mode, int T,
                            const std::vector<double>& s, const PicardOptions& opts) {
    const Matrix Abar = instability::profile_matrix(prob);
    const ProfileSeries f = linear_data(p, mode, prob.sys.N, prob.K, T, s);
    PicardReport rep;
    rep.norm_f = enorm(f, np, NormVariant::Plain, opts.parallel);
    ProfileSeries u = f;
    for (int m = 0; m < opts.max_iter; ++m) {
        ProfileSeries next = f;
        next += duhamel_apply(nonlinearity(prob, p.eps, u), Abar);
        ProfileSeries diff = next;
        diff -= u;
        const double change = enorm(diff, np, NormVariant::Plain, opts.parallel);
        const double size = enorm(next, np, NormVariant::Plain, opts.parallel);
        if (!rep.changes.empty() && rep.changes.back() > 0.0) rep.ratios.push_back(change / rep.changes.back());
        rep.changes.push_back(change);
        u = std::move(next);
        rep.iterations = m + 1;
        if (change <= opts.tol * size) {
            rep.converged = true;
            break;
        }
    }
    ProfileSeries res = u;
    res -= f;
    rep.norm_u_minus_f = enorm(res, np, NormVariant::Plain, opts.parallel);
    res -= duhamel_apply(nonlinearity(prob, p.eps, u), Abar);
    const double nu = enorm(u, np, NormVariant::Plain, opts.parallel);
    rep.residual = nu > 0.0 ? enorm(res, np, NormVariant::Plain, opts.parallel) / nu : 0.0;
    rep.u = std::move(u);
    return rep;
}

ContractionReport contraction_margin(const instability::ProfileProblem& prob, const instability::Params& p,
                                     const NormParams& np, const instability::GrowingMode& mode, int T,
                                     const std::vector<double>& s, const OperatorConstants& oc) {
    ContractionReport rep;
    rep.norm_f = enorm(linear_data(p, mode, prob.sys.N, prob.K, T, s), np, NormVariant::Plain);
    rep.K_gamma = oc.K_gamma;
    rep.factor = oc.K_gamma * (1.0 / np.R + 4.0 * rep.norm_f + np.R / np.rho);
    rep.margin = 0.5 - rep.factor;
    rep.fixed_point_bound = rep.factor * rep.norm_f;
    return rep;
}

ContractionReport contraction_solve(const instability::ProfileProblem& prob, const instability::Params& p,
                                    const NormParams& np, const instability::GrowingMode& mode, int T,
                                    const std::vector<double>& s, const OperatorConstants& oc,
                                    const PicardOptions& opts) {
    ContractionReport rep = contraction_margin(prob, p, np, mode, T, s, oc);
    if (!(rep.margin > 0.0))
        throw InfeasibleError("contraction condition K_gamma (1/R + 4 [[f]] + R/rho) < 1/2 fails: margin = " +
                              std::to_string(rep.margin) + ", [[f]] = " + std::to_string(rep.norm_f) +
                              ", K_gamma = " + std::to_string(rep.K_gamma));
    rep.picard = picard_iterate(prob, p, np, mode, T, s, opts);
    rep.bound_holds = rep.picard.norm_u_minus_f <= rep.fixed_point_bound;
    return rep;
}

double sup_difference(const ProfileSeries& u, const instability::ProfileTrajectory& prof) {
    if (u.N != prof.N) throw ConfigError("component counts differ");
    double err = 0.0;
    for (int si = 0; si < u.ns(); ++si) {
        const CMatrix c = prof.at(u.s[si]);
        CMatrix d = CMatrix::Zero(u.N, 2 * u.K + 1);
        for (int a = 0; a < u.N; ++a)
            for (int n = -u.K; n <= u.K; ++n) d(a, n + u.K) = u.at(si, a, n, 0);
        for (int j = 0; j < 64; ++j) {
            const double th = 2.0 * kPi * j / 64;
            const CVector diff =
                instability::ProfileTrajectory::eval(d, th) - instability::ProfileTrajectory::eval(c, th);
            err = std::max(err, diff.norm());
        }
    }
    return err;
}

}  // namespace hadamard::majorant
