#include "hadamard/instability.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "hadamard/errors.hpp"
#include "hadamard/kernels.hpp"

using namespace hadamard;
using namespace hadamard::instability;

namespace {

Params standard(double eps) { return make_params(eps, 3.0, 0.1, 1.0, 1.0, 1.0, 1, 1.0, 1.0); }

ProfileProblem vdw_problem(int K = 32) {
    ProfileProblem prob;
    prob.sys = vdw_system();
    prob.ubar = Vector::Zero(2);
    prob.xibar = Vector::Ones(1);
    prob.K = K;
    return prob;
}

GrowingMode vdw_mode() { return growing_mode(spectrum_classify(profile_matrix(vdw_problem()))); }

// Constant-coefficient 2x2 system d_s w = A0 d_x w + F0 w.
PolynomialSystem linear_system(const Matrix& A0, const Matrix& F0) {
    PolynomialSystem s;
    s.N = 2;
    s.d = 1;
    s.A.assign(1, std::vector<std::vector<Polynomial>>(2, std::vector<Polynomial>(2)));
    s.F.assign(2, Polynomial(2, {}));
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            s.A[0][r][c] = Polynomial::constant(2, A0(r, c));
            s.F[r] += Polynomial::linear(2, c, F0(r, c));
        }
    }
    return s;
}

double sup_theta_diff(const ProfileTrajectory& tr, std::size_t k, const Params& p, const GrowingMode& mode) {
    double err = 0.0;
    for (int j = 0; j < 64; ++j) {
        const double th = 2.0 * kPi * j / 64;
        const CVector u = ProfileTrajectory::eval(tr.coeffs[k], th);
        err = std::max(err, (u - linear_profile(p, tr.s[k], th, mode)).norm());
    }
    return err;
}

}  // namespace

TEST(MakeParams, StandardSet) {
    const auto p = standard(1e-4);
    EXPECT_NEAR(p.alpha_prime, 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(p.sigma, 9.0 / 11.0, 1e-15);
    EXPECT_NEAR(p.kappa1, 27.631, 1e-3);
    EXPECT_NEAR(p.kappa, 24.868, 1e-3);
    EXPECT_NEAR(p.kappa / p.gamma, 22.607, 1e-3);
    EXPECT_NEAR(1.0 / (p.eps * p.rho), 39.81, 1e-2);
    EXPECT_NEAR(p.sbar, 22.607, 1e-3);
    EXPECT_TRUE(p.sbar_from_kappa);
    EXPECT_NEAR(p.R, std::pow(1e-4, -0.3), 1e-9);
    EXPECT_NEAR(p.t_eps, 1e-4 * p.sbar, 1e-18);
    EXPECT_NEAR(p.r_eps, std::sqrt(p.t_eps), 1e-15);
}

TEST(MakeParams, IdentitiesAndBothBranches) {
    for (double eps : {1e-2, 1e-3, 1e-4, 1e-6}) {
        const auto p = make_params(eps, 3.0, 0.1, 1.7, 1.0, 1.0, 1, 1.0, 1.0);
        EXPECT_NEAR(p.kappa / p.gamma, p.sigma * p.kappa1 / p.gamma0, 1e-12);
        EXPECT_EQ(p.sbar, std::min(p.kappa / p.gamma, 1.0 / (eps * p.rho)));
    }
    EXPECT_FALSE(standard(1e-2).sbar_from_kappa);
    EXPECT_NEAR(standard(1e-2).sbar, std::pow(1e-2, -0.4), 1e-12);
    EXPECT_TRUE(standard(1e-4).sbar_from_kappa);
}

TEST(MakeParams, InfeasibleInequalities) {
    EXPECT_THROW(make_params(1e-2, 3.0, 0.2, 1.0, 1.0, 1.0, 1, 1.0, 1.0), InfeasibleError);  // 2 M beta = 1.2
    EXPECT_THROW(make_params(1e-2, 3.0, 0.1, 1.0, 2.0, 1.0, 1, 1.0, 1.0), InfeasibleError);  // alpha' = 0
    EXPECT_THROW(make_params(1e-2, 3.0, 0.1, 1.0, 1.0, 0.7, 1, 1.0, 1.0), InfeasibleError);  // 1 - alpha' > sigma
    EXPECT_THROW(make_params(1.0, 3.0, 0.1, 1.0, 1.0, 1.0, 1, 1.0, 1.0), InfeasibleError);
    EXPECT_THROW(make_params(1e-2, 3.0, 0.1, 0.0, 1.0, 1.0, 1, 1.0, 1.0), InfeasibleError);
    try {
        make_params(1e-2, 3.0, 0.2, 1.0, 1.0, 1.0, 1, 1.0, 1.0);
    } catch (const InfeasibleError& e) {
        EXPECT_NE(std::string(e.what()).find("2 M beta < 1"), std::string::npos);
    }
}

TEST(OscillatoryData, ClosedFormNormMatchesQuadrature) {
    const auto mode = vdw_mode();
    const auto p = make_params(1e-2, 3.0, 0.1, 1.0, 0.0, 1.0, 1, 1.0, 0.37);
    const auto data = oscillatory_data(p, 1, mode.r, 0.0, 200001);
    // m = 0: the norm is the plain L2 norm, so Simpson on the samples is an oracle.
    const double h = data.x[1] - data.x[0];
    double s = 0.0;
    for (std::size_t j = 0; j < data.h.size(); ++j) {
        const double w = (j == 0 || j + 1 == data.h.size()) ? 1.0 : (j % 2 ? 4.0 : 2.0);
        s += w * data.h[j].squaredNorm();
    }
    EXPECT_NEAR(std::sqrt(s * h / 3.0) / data.hm_norm, 1.0, 1e-9);
}

TEST(OscillatoryData, PointValueAndScaling) {
    const auto mode = vdw_mode();
    const auto p = standard(1e-2);
    const auto data = oscillatory_data(p, 1, mode.r, 0.0, 201);
    EXPECT_NEAR((data.h[100] - 1e-6 * mode.r.real()).norm(), 0.0, 1e-20);
    double lo = 1e300, hi = 0.0;
    for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
        const double q = hm_norm(standard(eps), 1, mode.r) / std::pow(eps, 3.0 - 1.0);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    EXPECT_GT(lo, 0.5);
    EXPECT_LT(hi / lo, 1.01);
}

TEST(LinearProfile, DataGrowthAndLowerBound) {
    const auto mode = vdw_mode();
    EXPECT_NEAR(std::abs(mode.lambda - Complex(0.0, -1.0)), 0.0, 1e-12);
    const auto p = standard(1e-2);
    for (double th : {0.0, 0.7, 2.0}) {
        const CVector f0 = linear_profile(p, 0.0, th, mode);
        const Vector data = 1e-6 * (std::exp(Complex(0.0, th)) * mode.r).real();
        EXPECT_NEAR((f0.real() - data).norm(), 0.0, 1e-21);
    }
    EXPECT_NEAR(linear_profile(p, p.sbar, 0.0, mode).norm() / linear_profile(p, 0.0, 0.0, mode).norm(),
                std::exp(p.sbar), 1e-9 * std::exp(p.sbar));
    const double c = lower_bound_constant(mode);
    EXPECT_GT(c, 0.0);
    for (int i = 0; i <= 50; ++i)
        for (int j = 0; j < 64; ++j) {
            const double s = p.sbar * i / 50, th = 2.0 * kPi * j / 64;
            ASSERT_GE(linear_profile(p, s, th, mode).norm(), 2.0 * c * std::exp(s - p.kappa1) * (1.0 - 1e-12));
        }
}

TEST(LinearProfile, RealEigenvalueHasConstantEnvelope) {
    CVector r(2);
    r << Complex(0.6, 0.0), Complex(0.0, 0.8);
    const GrowingMode mode{Complex(1.3, 0.0), r};
    const auto p = standard(1e-2);
    auto envelope = [&](double s) {
        double m = 0.0;
        for (int j = 0; j < 4096; ++j) m = std::max(m, linear_profile(p, s, 2.0 * kPi * j / 4096, mode).norm());
        return m;
    };
    EXPECT_NEAR(envelope(3.0) / envelope(0.0), 1.0, 1e-6);
}

TEST(Semigroup, DiagonalIsUnitary) {
    Matrix A(2, 2);
    A << 1.0, 0.0, 0.0, -2.0;
    EXPECT_NEAR(semigroup_bound_check(A, 0.1, 16, 5.0, 200), 1.0, 1e-12);
}

TEST(Semigroup, VdwPointAndMonotoneInGamma) {
    const Matrix A = profile_matrix(vdw_problem());
    const double K = semigroup_bound_check(A, 1.1, 64, 20.0, 2000);
    EXPECT_TRUE(std::isfinite(K));
    EXPECT_LE(K, 10.0);
    double prev = 1e300;
    for (double g : {1.05, 1.1, 1.5, 2.0}) {
        const double k = semigroup_bound_check(A, g, 64, 20.0, 500);
        EXPECT_LE(k, prev);
        prev = k;
    }
    EXPECT_THROW(semigroup_bound_check(A, 1.0, 8, 1.0), ConfigError);
}

TEST(Semigroup, NonNormalMatchesClosedForm) {
    // A^2 = -I, so e^{i tau A} = cosh(tau) I + i sinh(tau) A.
    Matrix A(2, 2);
    A << 0.0, -4.0, 0.25, 0.0;
    const double gamma = 1.3;
    const int nmax = 8, ns = 400;
    const double smax = 3.0;
    double K = 1.0;
    for (int k = 1; k <= ns; ++k)
        for (int n = 1; n <= nmax; ++n) {
            const double tau = n * smax * k / ns;
            const CMatrix E = std::cosh(tau) * CMatrix::Identity(2, 2) + kI * std::sinh(tau) * A.cast<Complex>();
            K = std::max(K, Eigen::JacobiSVD<CMatrix>(E).singularValues()(0) * std::exp(-gamma * tau));
        }
    EXPECT_GT(K, 1.2);
    EXPECT_NEAR(semigroup_bound_check(A, gamma, nmax, smax, ns) / K, 1.0, 1e-10);
    // Refining the s-grid barely moves the estimate.
    EXPECT_NEAR(semigroup_bound_check(A, gamma, nmax, smax, 2 * ns) / K, 1.0, 1e-3);
}

TEST(ProfileNonlinearity, VdwCubicHandCalculation) {
    // w = (0, 0) + a cos theta in the first component: row 1 gets -3 u^2 u_theta
    // = 3 a^3 cos^2 sin = (3a^3/4)(sin theta + sin 3 theta).
    const double a = 0.3;
    for (int K : {1, 4}) {
        auto prob = vdw_problem(K);
        CMatrix w = CMatrix::Zero(2, 2 * K + 1);
        w(0, K + 1) = w(0, K - 1) = 0.5 * a;
        const CMatrix out = profile_nonlinearity(prob, 0.01, w);
        const Complex c = Complex(0.0, -3.0 * a * a * a / 8.0);
        EXPECT_NEAR(std::abs(out(1, K + 1) - c), 0.0, 1e-16);
        EXPECT_NEAR(std::abs(out(1, K - 1) - std::conj(c)), 0.0, 1e-16);
        if (K >= 3) EXPECT_NEAR(std::abs(out(1, K + 3) - c), 0.0, 1e-16);
        EXPECT_EQ(out.row(0).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(SolveProfile, LinearSystemIsExact) {
    Matrix A0(2, 2), F0 = Matrix::Zero(2, 2);
    A0 << 0.0, -1.0, 1.0, 0.0;
    ProfileProblem prob;
    prob.sys = linear_system(A0, F0);
    prob.ubar = Vector::Zero(2);
    prob.xibar = Vector::Ones(1);
    prob.K = 8;
    const auto mode = growing_mode(spectrum_classify(A0));
    const auto p = standard(1e-2);
    const auto tr = solve_profile(prob, p, mode, p.sbar);
    EXPECT_FALSE(tr.blew_up);
    EXPECT_NEAR(tr.s.back(), p.sbar, 1e-12);
    double err = 0.0;
    for (std::size_t k = 0; k < tr.s.size(); ++k) err = std::max(err, sup_theta_diff(tr, k, p, mode));
    EXPECT_LE(err, 1e-12);
}

TEST(SolveProfile, LinearSourceScalesLinearly) {
    Matrix A0(2, 2), F0(2, 2);
    A0 << 0.0, -1.0, 1.0, 0.0;
    F0 << 0.3, 0.1, -0.2, 0.0;
    ProfileProblem prob;
    prob.sys = linear_system(A0, F0);
    prob.ubar = Vector::Zero(2);
    prob.xibar = Vector::Ones(1);
    prob.K = 4;
    const auto mode = growing_mode(spectrum_classify(A0));
    const auto p1 = make_params(0.1, 3.0, 0.1, 1.0, 1.0, 1.0, 1, 1.0, 1.0);
    const auto p2 = make_params(0.1, 3.5, 0.1, 1.0, 1.0, 1.0, 1, 1.0, 1.0);
    const auto a = solve_profile(prob, p1, mode, 2.0);
    const auto b = solve_profile(prob, p2, mode, 2.0);
    const double c = std::pow(0.1, 0.5);
    EXPECT_LE((b.coeffs.back() - c * a.coeffs.back()).cwiseAbs().maxCoeff(),
              1e-13 * a.coeffs.back().cwiseAbs().maxCoeff());
}

TEST(SolveProfile, VdwStaysCloseToLinearProfile) {
    const auto prob = vdw_problem();
    const auto mode = vdw_mode();
    const auto p = standard(1e-2);
    const auto tr = solve_profile(prob, p, mode, p.sbar / 2);
    EXPECT_FALSE(tr.blew_up);
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.s.size(); ++k)
        worst = std::max(worst, sup_theta_diff(tr, k, p, mode) / std::exp(tr.s[k] - p.kappa1));
    EXPECT_LT(worst, 1e-3);
    // Odd symmetry of the cubic keeps even modes exactly zero.
    for (int n = 0; n <= prob.K; n += 2) EXPECT_EQ(std::abs(tr.coeffs.back()(0, prob.K + n)), 0.0);
}

TEST(SolveProfile, StepRefinementConverges) {
    auto prob = vdw_problem(16);
    const auto mode = vdw_mode();
    const auto p = make_params(0.1, 2.0, 0.1, 1.0, 0.0, 1.0, 1, 1.0, 1.0);
    auto run = [&](double ds) {
        prob.ds = ds;
        return solve_profile(prob, p, mode, 2.0).coeffs.back();
    };
    const CMatrix ref = run(1.0 / 1024);
    const double e1 = (run(1.0 / 64) - ref).cwiseAbs().maxCoeff();
    const double e2 = (run(1.0 / 128) - ref).cwiseAbs().maxCoeff();
    EXPECT_GT(e1 / e2, 12.0);
}

TEST(SolveProfile, OverflowIsReported) {
    // Scalar Riccati source eps u^2 with no transport.
    PolynomialSystem s;
    s.N = 1;
    s.d = 1;
    s.A.assign(1, std::vector<std::vector<Polynomial>>(1, std::vector<Polynomial>(1, Polynomial(1, {}))));
    s.F = {Polynomial(1, {Monomial{1.0, {2}}})};
    ProfileProblem prob{s, Vector::Zero(1), Vector::Ones(1), 4, 1.0 / 64};
    CVector r(1);
    r << 1.0;
    const auto p = make_params(0.5, 2.0, 0.1, 1.0, 0.0, 1.0, 1, 1.0, 1.0);
    const auto tr = solve_profile(prob, p, GrowingMode{Complex(0.0), r}, 400.0);
    EXPECT_TRUE(tr.blew_up);
    EXPECT_LT(tr.last_finite_s, 400.0);
    EXPECT_TRUE(tr.coeffs.back().allFinite());
}

TEST(SolveProfile, StepConstraint) {
    auto prob = vdw_problem(32);
    prob.ds = 0.05;
    EXPECT_THROW(solve_profile(prob, standard(1e-2), vdw_mode(), 1.0), ConfigError);
}

TEST(Lens, CubePredicates) {
    const auto p = standard(1e-3);
    EXPECT_TRUE(lens_contains(1.0, 1.0, 0.5, 0.5));
    EXPECT_FALSE(lens_contains(1.0, 1.0, -0.1, 0.0));
    // With delta = 1 the lens tops out exactly at t_eps, so the cube ending at t_eps touches the boundary.
    EXPECT_FALSE(box_in_lens(p.r_eps, p.delta, p.t_eps - p.eps, p.t_eps, p.eps));
    EXPECT_TRUE(box_in_lens(p.r_eps, p.delta, p.t_eps - 2 * p.eps, p.t_eps - p.eps, p.eps));
    const auto q = make_params(1e-3, 3.0, 0.1, 1.0, 1.0, 1.0, 1, 0.5, 1.0);
    EXPECT_TRUE(box_in_lens(q.r_eps, q.delta, q.t_eps - q.eps, q.t_eps, q.eps));
}

TEST(LensKernel, MatchesExactChordIntegral) {
    // Constant profile a cos theta: int_chord a^2 cos^2(x/eps) dx = a^2 (X + eps sin(2X/eps)/2).
    ProfileTrajectory tr;
    tr.N = 1;
    tr.K = 2;
    tr.ds = 1.0;
    const double a = 0.7;
    for (int k = 0; k < 5; ++k) {
        CMatrix c = CMatrix::Zero(1, 5);
        c(0, 3) = c(0, 1) = 0.5 * a;
        tr.s.push_back(k);
        tr.coeffs.push_back(c);
    }
    kernels::LensGrid g{1e-2, 1.0, 0.3, 1.0, 0.05, 400, 2.0 * kPi * 1e-2 / 32};
    const double got = kernels::lens_l2_squared(g, tr, false);
    const int m = 20000;
    double s = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double t = g.t_max * i / m;
        const double X = std::sqrt(g.r * g.r - t);
        const double f = a * a * (X + 0.5 * g.eps * std::sin(2.0 * X / g.eps));
        s += (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0)) * f;
    }
    EXPECT_NEAR(got / (s * g.t_max / m / 3.0), 1.0, 1e-3);
}

TEST(LensKernel, ParallelIsBitIdentical) {
    const auto p = standard(1e-2);
    const auto tr = solve_profile(vdw_problem(), p, vdw_mode(), p.sbar);
    kernels::LensGrid g{p.eps, 1.0, p.r_eps, 1.0, p.t_eps, 64, 2.0 * kPi * p.eps / 8};
    EXPECT_EQ(kernels::lens_rows_serial(g, tr), kernels::lens_rows_omp(g, tr));
}

TEST(HoelderSweep, TwoEpsRowsDiverge) {
    Params templ;
    templ.M = 3.0;
    templ.beta = 0.1;
    templ.m = 1.0;
    templ.alpha = 1.0;
    templ.d = 1;
    templ.delta = 1.0;
    templ.r0 = 1.0;
    const auto rows = hoelder_ratio_sweep(vdw_problem(), templ, {1e-2, 1e-3});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].eps, 1e-2);
    EXPECT_NEAR(rows[0].predicted_exponent, -5.0 / 11.0, 1e-12);
    EXPECT_GT(rows[1].ratio, rows[0].ratio);
    EXPECT_FALSE(rows[0].truncated);
    EXPECT_FALSE(rows[0].literal_cube_in_lens);
    EXPECT_TRUE(rows[0].shifted_cube_in_lens);
    EXPECT_TRUE(std::isfinite(rows[0].fitted_slope));
}
