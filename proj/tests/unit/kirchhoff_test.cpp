#include "hadamard/kirchhoff.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "hadamard/errors.hpp"

using namespace hadamard;
using namespace hadamard::kirchhoff;

namespace {

const double kAstar = std::log(1.0 + std::sqrt(2.0));

// t(A) = int_0^A dB / (1 - sinh^2 B) by composite Simpson, for the single pair of weight 1.
double time_to_reach(double A) {
    const int m = 2000;
    const double h = A / m;
    auto f = [](double B) { return 1.0 / (1.0 - std::sinh(B) * std::sinh(B)); };
    double s = f(0.0) + f(A);
    for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return s * h / 3.0;
}

double sup_diff(const ModeState& a, const ModeState& b) {
    EXPECT_EQ(a.n, b.n);
    return std::max((a.u - b.u).cwiseAbs().maxCoeff(), (a.v - b.v).cwiseAbs().maxCoeff());
}

}  // namespace

TEST(SpectrumData, Families) {
    const auto p = SpectrumData::power(4.0, 0.5, 512);
    EXPECT_NEAR(p.total(), 0.5, 1e-14);
    EXPECT_EQ(p.weight(3), p.weight(-3));
    EXPECT_NEAR(p.weight(1) / p.weight(3), std::pow(4.0 / 2.0, 4.0), 1e-12);
    const auto s = SpectrumData::single(2, 1.0);
    EXPECT_EQ(s.weight(2), 0.5);
    EXPECT_EQ(s.weight(-2), 0.5);
    EXPECT_EQ(s.support(), 2);
    EXPECT_THROW(SpectrumData::power(0.5, 1.0), ConfigError);
}

TEST(UOfA, ClosedForms) {
    const auto one = SpectrumData::single(1, 1.0);
    EXPECT_EQ(u_of_A(0.0, one, 8), 0.0);
    EXPECT_NEAR(u_of_A(kAstar, one, 8), 1.0, 1e-15);
    EXPECT_NEAR(kAstar, 0.881373587019543, 1e-14);
    const auto two = SpectrumData::explicit_list({{1, 0.25}, {2, 0.25}});
    const double brute = 2 * 0.25 * std::sinh(0.5) * std::sinh(0.5) + 2 * 0.25 * std::sinh(1.0) * std::sinh(1.0);
    EXPECT_NEAR(u_of_A(0.5, two, 8), brute, 1e-15);
    EXPECT_NEAR(u_of_A(0.5, two, 1), 2 * 0.25 * std::sinh(0.5) * std::sinh(0.5), 1e-15);
    EXPECT_THROW(u_of_A(800.0, one, 8), SaturationError);
}

TEST(IntegrateA, ZeroData) {
    const auto tr = integrate_A(SpectrumData{}, 16, 2.0, 1e-2);
    EXPECT_NEAR(tr.A.back(), 2.0, 1e-12);
    EXPECT_EQ(tr.U.back(), 0.0);
}

TEST(IntegrateA, SinglePairSaturatesAtRoot) {
    const auto data = SpectrumData::single(1, 1.0);
    const auto tr = integrate_A(data, 8, 10.0, 1e-4);
    EXPECT_NEAR(tr.A.back(), kAstar, 1e-6);
    for (std::size_t i = 1; i < tr.U.size(); ++i) {
        ASSERT_GT(tr.U[i], tr.U[i - 1] - 1e-15);
        ASSERT_LT(tr.U[i], 1.0);
    }
    // Separable-ODE oracle: the time to reach A is an explicit integral.
    for (double A : {0.2, 0.5, 0.8}) EXPECT_NEAR(tr.A_at(time_to_reach(A)), A, 1e-9) << A;
}

TEST(IntegrateA, TrajectoryInvariants) {
    const auto data = SpectrumData::power(4.0, 0.5);
    const auto tr = integrate_A(data, 32, 2.0, 1e-3);
    EXPECT_EQ(tr.A.front(), 0.0);
    EXPECT_EQ(tr.U.front(), 0.0);
    for (std::size_t i = 1; i < tr.t.size(); ++i) {
        // Strictness is only resolvable while 1 - U is above double rounding.
        if (1.0 - tr.U[i] > 1e-12) {
            ASSERT_GT(tr.U[i], tr.U[i - 1]);
            ASSERT_LT(tr.U[i], 1.0);
        } else {
            ASSERT_GE(tr.U[i], tr.U[i - 1] - 1e-15);
            ASSERT_LE(tr.U[i], 1.0 + 1e-15);
        }
        ASSERT_LE(tr.A[i], tr.t[i] + 1e-15);
        ASSERT_GE(tr.A[i], tr.t[i] * (1.0 - tr.U[i]) - 1e-12);
    }
}

TEST(ClosedForm, InitialDataAndIdentity) {
    const auto data = SpectrumData::power(4.0, 0.5);
    const auto tr = integrate_A(data, 16, 1.0, 1e-3);
    const auto s0 = closed_form_state(tr, data, 0.0);
    EXPECT_EQ(s0.u.cwiseAbs().maxCoeff(), 0.0);
    double sum_w = 0.0;
    for (std::size_t i = 0; i < s0.n.size(); ++i) {
        EXPECT_EQ(s0.v[i], Complex(data.hhat(s0.n[i])));
        sum_w += data.weight(s0.n[i]);
    }
    for (double t : {0.1, 0.5, 1.0}) {
        const auto s = closed_form_state(tr, data, t);
        EXPECT_NEAR(s.v.squaredNorm() - s.u.squaredNorm(), sum_w, 1e-12);
        for (std::size_t i = 0; i < s.n.size(); ++i)
            if (s.n[i] == 0) {
                EXPECT_EQ(s.u[i], Complex(0.0));
                EXPECT_EQ(s.v[i], Complex(data.hhat(0)));
            }
    }
}

TEST(DirectModeOde, ZeroData) {
    const auto run = direct_mode_ode(SpectrumData{}, 8, 1.0, 1e-2);
    EXPECT_TRUE(run.states.back().u.size() == 0 || run.states.back().u.cwiseAbs().maxCoeff() == 0.0);
}

TEST(DirectModeOde, MatchesClosedFormSinglePair) {
    const auto data = SpectrumData::single(1, 1.0);
    const auto tr = integrate_A(data, 4, 1.0, 1e-4);
    const auto run = direct_mode_ode(data, 4, 1.0, 1e-4, 10000);
    EXPECT_LE(sup_diff(run.states.back(), closed_form_state(tr, data, 1.0)), 1e-8);
    EXPECT_LE(run.energy_drift, 1e-6);
    EXPECT_FALSE(run.diverged);
}

TEST(DirectModeOde, MatchesClosedFormPowerLaw) {
    const auto data = SpectrumData::power(4.0, 0.5);
    const int lambda = 64;
    const auto tr = integrate_A(data, lambda, 2.0, 1e-4);
    const auto run = direct_mode_ode(data, lambda, 2.0, 1e-4, 2000);
    double err = 0.0;
    for (std::size_t k = 0; k < run.t.size(); ++k)
        err = std::max(err, sup_diff(run.states[k], closed_form_state(tr, data, run.t[k])));
    EXPECT_LE(err, 1e-8);
    EXPECT_LE(run.energy_drift, 1e-6);
    EXPECT_FALSE(run.diverged);
}

TEST(DirectModeOde, InterchangedVariantMatchesClosedForm) {
    const auto data = SpectrumData::power(3.0, 0.4);
    const auto tr = integrate_A(data, 16, 1.0, 1e-4, Variant::Interchanged);
    const auto run = direct_mode_ode(data, 16, 1.0, 1e-4, 10000, Variant::Interchanged);
    EXPECT_LE(sup_diff(run.states.back(), closed_form_state(tr, data, 1.0)), 1e-8);
    EXPECT_LE(run.energy_drift, 1e-6);
}

TEST(MuDiagnostic, PowerLawIsLogarithmic) {
    const auto data = SpectrumData::power(4.0, 0.5);
    const auto d = mu_diagnostic(data, {16, 32, 64, 128, 256});
    for (std::size_t i = 0; i < d.lambdas.size(); ++i) {
        double brute = 0.0;
        for (int n = -d.lambdas[i]; n <= d.lambdas[i]; ++n)
            if (2 * std::abs(n) >= d.lambdas[i]) brute += data.weight(n);
        EXPECT_NEAR(d.mu[i], -std::log(brute), 1e-12);
    }
    // Annulus mass ~ lambda^{-3}: successive differences approach 3 ln 2.
    EXPECT_NEAR(d.mu[4] - d.mu[3], 3.0 * std::log(2.0), 0.02);
    EXPECT_LT(d.ratio[4], d.ratio[0]);
}

TEST(MuDiagnostic, SinglePairIsInfinite) {
    const auto d = mu_diagnostic(SpectrumData::single(1, 1.0), {2, 4, 8});
    EXPECT_TRUE(std::isfinite(d.mu[0]));
    EXPECT_TRUE(std::isinf(d.mu[1]));
    EXPECT_TRUE(std::isinf(d.mu[2]));
}

TEST(MuDiagnostic, ExponentialRatioTendsToHalf) {
    const auto data = SpectrumData::exponential(1.0, 1.0);
    const auto d = mu_diagnostic(data, {64, 128, 256});
    // Geometric tail: mu(2 lambda) - mu(lambda) = lambda / 2 up to e^{-lambda} corrections.
    EXPECT_NEAR(d.mu[1] - d.mu[0], 32.0, 1e-9);
    EXPECT_NEAR(d.mu[2] - d.mu[1], 64.0, 1e-9);
    EXPECT_NEAR(d.ratio[2], 0.5, 0.02);
}

TEST(BoundAndLimit, PowerLawPassesWithDecreasingResiduals) {
    const auto data = SpectrumData::power(4.0, 0.5);
    const std::vector<int> lambdas{16, 32, 64, 128};
    std::vector<Trajectory> trs;
    for (int l : lambdas) trs.push_back(integrate_A(data, l, 1.0, 1e-4));
    const auto rep = verify_bound_and_limit(trs, mu_diagnostic(data, lambdas), data, 1.0, 4);
    EXPECT_TRUE(rep.all_pass);
    EXPECT_TRUE(rep.residuals_decreasing);
    for (const auto& r : rep.rows) EXPECT_LE(r.lhs, r.rhs) << r.lambda;
}

TEST(BoundAndLimit, ZeroDataIsVacuous) {
    const SpectrumData data;
    const auto rep = verify_bound_and_limit({integrate_A(data, 16, 1.0, 1e-2)}, mu_diagnostic(data, {16}), data, 1.0, 4);
    EXPECT_EQ(rep.rows[0].lhs, 1.0);
    EXPECT_TRUE(std::isinf(rep.rows[0].rhs));
    EXPECT_TRUE(rep.all_pass);
}

TEST(BoundAndLimit, AnalyticContrastKeepsResidual) {
    const auto data = SpectrumData::single(1, 1.0);
    const std::vector<int> lambdas{16, 32};
    std::vector<Trajectory> trs;
    for (int l : lambdas) trs.push_back(integrate_A(data, l, 10.0, 1e-4));
    const auto rep = verify_bound_and_limit(trs, mu_diagnostic(data, lambdas), data, 10.0, 4);
    for (const auto& r : rep.rows) {
        EXPECT_NEAR(r.A, kAstar, 1e-6);
        EXPECT_NEAR(r.residual_u, std::sinh(kAstar) * std::sqrt(0.5), 1e-6);
    }
    EXPECT_FALSE(rep.residuals_decreasing);
}
