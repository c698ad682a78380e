#include "hadamard/spectral_vdw.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "hadamard/errors.hpp"

using namespace hadamard;

namespace {

double max_diff(const CVector& a, const CVector& b) { return (a - b).cwiseAbs().maxCoeff(); }

FilteredState hyperbolic_state(int lambda, int nmodes) {
    // u0 = 1.2 (p' = 3.32) with a few small smooth perturbations up to lambda.
    std::vector<ModeSpec> um, vm;
    for (int n = 1; n <= lambda; ++n) {
        const double a = 0.02 * std::exp(-0.25 * n);
        um.push_back({n, Complex(a, 0.5 * a)});
        vm.push_back({n, Complex(-0.3 * a, a)});
    }
    return make_state(lambda, nmodes, 1.2, um, vm);
}

}  // namespace

TEST(SLambda, Projects) {
    FilteredState s = make_state(4, 16, 0.0, {{1, 0.5}, {3, 0.5}}, {});
    EXPECT_EQ(s_lambda(s.uhat, 0).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(max_diff(s_lambda(s.uhat, 8), s.uhat), 0.0);
    const CVector p = s_lambda(s.uhat, 2);
    EXPECT_EQ(p[3], Complex(0.0));
    EXPECT_EQ(p[1], Complex(0.5));
    EXPECT_EQ(max_diff(s_lambda(p, 2), p), 0.0);
}

TEST(VdwRhs, ConstantsAreSteady) {
    const auto s = make_state(4, 16, 0.7, {}, {{0, 0.3}});
    const Rhs r = vdw_rhs(s);
    EXPECT_LE(r.du.cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE(r.dv.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(VdwRhs, SingleModeHandCalculation) {
    // u = 0, v = cos x: du/dt = -v_x = sin x, dv/dt = -p(0)_x = 0.
    const auto s = make_state(2, 8, 0.0, {}, {{1, 0.5}});
    const Rhs r = vdw_rhs(s);
    EXPECT_NEAR(std::abs(r.du[1] - Complex(0.0, -0.5)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(r.du[7] - Complex(0.0, 0.5)), 0.0, 1e-15);
    EXPECT_LE(r.dv.cwiseAbs().maxCoeff(), 1e-15);

    // u = a cos x: p(u) = (3a^3/4 - a) cos x + (a^3/4) cos 3x, filtered at lambda = 1.
    const double a = 0.8;
    const auto s2 = make_state(1, 4, 0.0, {{1, 0.5 * a}}, {});
    const Rhs r2 = vdw_rhs(s2);
    const double c1 = 0.5 * (0.75 * a * a * a - a);
    EXPECT_NEAR(std::abs(r2.dv[1] - Complex(0.0, -c1)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(r2.dv[3] - Complex(0.0, c1)), 0.0, 1e-15);
}

TEST(VdwRhs, CubicAliasingIsRemoved) {
    // u = cos(lambda x): cos^3 = 3/4 cos + 1/4 cos 3, so S_lambda p(u) = -1/4 cos(lambda x).
    const int lambda = 4;
    const auto s = make_state(lambda, 4 * lambda, 0.0, {{lambda, 0.5}}, {});
    const Rhs r = vdw_rhs(s);
    for (int n = -lambda; n <= lambda; ++n) {
        const Complex expected = std::abs(n) == lambda ? Complex(0.0, -n) * Complex(-0.125) : Complex(0.0);
        EXPECT_NEAR(std::abs(r.dv[s.slot(n)] - expected), 0.0, 1e-15) << "n=" << n;
    }
}

TEST(VdwRhs, GridTooSmallIsConfigError) {
    EXPECT_THROW(FilteredState(8, 16), ConfigError);
    EXPECT_THROW(FilteredState(2, 12), ConfigError);
}

TEST(Energy, ClosedForms) {
    EXPECT_EQ(energy(make_state(2, 8, 0.0, {}, {})), 0.0);
    EXPECT_NEAR(energy(make_state(2, 8, 0.0, {}, {{1, 0.5}})), kPi / 2.0, 1e-14);
    EXPECT_NEAR(energy(make_state(2, 8, 1.0, {}, {})), -kPi / 2.0, 1e-14);
    // u = a cos x: integral of P(u) = a^4/4 * 3pi/4 - a^2/2 * pi.
    const double a = 0.6;
    const double expected = 0.25 * std::pow(a, 4) * 0.75 * kPi - 0.5 * a * a * kPi;
    EXPECT_NEAR(energy(make_state(1, 4, 0.0, {{1, 0.5 * a}}, {})), expected, 1e-14);
}

TEST(Integrate, ZeroDataStaysZero) {
    const auto run = integrate(FilteredState(4, 16), 1e-2, 1.0);
    EXPECT_FALSE(run.blew_up);
    EXPECT_EQ(run.state.uhat.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(run.trace.drift, 0.0);
    EXPECT_EQ(run.trace.t.size(), 101u);
}

TEST(Integrate, HyperbolicEnergyDrift) {
    const auto s = hyperbolic_state(16, 64);
    const auto run = integrate(s, 1e-3, 1.0, {.record_every = 50});
    EXPECT_FALSE(run.blew_up);
    EXPECT_LT(run.trace.drift, 1e-8);
    EXPECT_NEAR(run.trace.t.back(), 1.0, 1e-12);
}

TEST(Integrate, FourthOrderConvergence) {
    const auto s = hyperbolic_state(16, 64);
    const double T = 1.0, dt = 1e-3;
    const auto ref = integrate(s, dt / 16, T, {.record_every = 1000});
    auto err = [&](double h) {
        const auto r = integrate(s, h, T, {.record_every = 1000});
        return std::max(max_diff(r.state.uhat, ref.state.uhat), max_diff(r.state.vhat, ref.state.vhat));
    };
    const double e1 = err(dt), e2 = err(dt / 2);
    EXPECT_GE(e1 / e2, 15.0) << e1 << " " << e2;
}

TEST(Integrate, CflGuard) { EXPECT_THROW(integrate(hyperbolic_state(16, 64), 0.05, 1.0), ConfigError); }

TEST(Integrate, EllipticRunStaysGlobalWithConservedEnergy) {
    // The filtered system conserves an energy bounded below, so even the
    // elliptic regime has global solutions.
    const auto s = make_state(8, 32, 0.0, {{8, 1e-2}}, {});
    const auto run = integrate(s, 1e-3, 20.0, {.record_every = 100});
    EXPECT_FALSE(run.blew_up);
    EXPECT_NEAR(run.last_finite_t, 20.0, 1e-9);
    EXPECT_GT(run.state.uhat.cwiseAbs().maxCoeff(), 2e-2);
    EXPECT_LT(run.trace.drift, 1e-4);
}

TEST(Integrate, OverflowIsReportedNotThrown) {
    const auto s = make_state(2, 8, 0.0, {}, {{1, 1e300}});
    const auto run = integrate(s, 1e-3, 1.0);
    EXPECT_TRUE(run.blew_up);
    EXPECT_LT(run.last_finite_t, 1.0);
}

TEST(GrowthFit, SyntheticExponential) {
    std::vector<double> t, a;
    for (int i = 0; i <= 400; ++i) {
        t.push_back(0.01 * i);
        a.push_back(1e-9 * std::exp(3.0 * t.back()));
    }
    EXPECT_NEAR(growth_fit(t, a), 3.0, 1e-9);
}

TEST(GrowthFit, NoWindowThrows) {
    std::vector<double> t{0, 1, 2}, a{1e-8, 1e-8, 1e-8};
    EXPECT_THROW(growth_fit(t, a), InsufficientGrowthError);
}

class EllipticGrowth : public ::testing::TestWithParam<std::pair<double, int>> {};

TEST_P(EllipticGrowth, MatchesLinearizedRate) {
    const auto [u0, n] = GetParam();
    const double rate = n * std::sqrt(1.0 - 3.0 * u0 * u0);
    const int lambda = 2 * n;
    const auto s = make_state(lambda, 4 * lambda, u0, {{n, 1e-8}}, {});
    const auto run = integrate(s, 1e-3, 40.0 / rate, {.record_every = 1, .track = {n}, .stop_amplitude = 1e-2});
    std::vector<double> t, a;
    for (const auto& ts : run.tracked) {
        t.push_back(ts.t);
        a.push_back(ts.abs_u[0]);
    }
    EXPECT_NEAR(growth_fit(t, a) / rate, 1.0, 0.01);
}

INSTANTIATE_TEST_SUITE_P(Modes, EllipticGrowth,
                         ::testing::Values(std::make_pair(0.0, 4), std::make_pair(0.0, 8), std::make_pair(0.5, 4),
                                           std::make_pair(0.5, 8)));
