#include "hadamard/system.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "hadamard/errors.hpp"

using namespace hadamard;

TEST(Polynomial, EvalAndDegree) {
    // 2 u0^2 u1 - 3 u1 + 1
    Polynomial p(2, {{2.0, {2, 1}}, {-3.0, {0, 1}}, {1.0, {0, 0}}});
    Vector u(2);
    u << 1.5, -2.0;
    EXPECT_DOUBLE_EQ(p.eval(u), 2.0 * 2.25 * -2.0 + 6.0 + 1.0);
    EXPECT_EQ(p.degree(), 3);
}

TEST(Polynomial, LikeTermsMerge) {
    Polynomial p(1, {{1.0, {2}}, {-1.0, {2}}, {4.0, {1}}});
    ASSERT_EQ(p.terms().size(), 1u);
    EXPECT_DOUBLE_EQ(p.terms()[0].coef, 4.0);
}

TEST(Polynomial, ShiftedIncrementMatchesDirectDifference) {
    Polynomial p(2, {{1.0, {3, 0}}, {-2.0, {1, 2}}, {0.5, {0, 1}}, {7.0, {0, 0}}});
    Vector base(2), w(2);
    base << 0.3, -1.1;
    const Polynomial q = p.shifted_increment(base);
    for (double a : {-0.7, 0.0, 0.4})
        for (double b : {-0.2, 0.9}) {
            w << a, b;
            EXPECT_NEAR(q.eval(w), p.eval(base + w) - p.eval(base), 1e-13);
        }
    w.setZero();
    EXPECT_EQ(q.eval(w), 0.0);
}

TEST(Polynomial, RejectsBadExponents) {
    EXPECT_THROW(Polynomial(2, {{1.0, {1}}}), ConfigError);
    EXPECT_THROW(Polynomial(1, {{1.0, {-1}}}), ConfigError);
}

TEST(Systems, VdwCoefficient) {
    const auto s = vdw_system();
    Vector u(2);
    u << 0.5, 3.0;
    const Matrix A = s.coefficient(0, u);
    EXPECT_DOUBLE_EQ(A(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(A(0, 1), -1.0);
    EXPECT_DOUBLE_EQ(A(1, 0), 1.0 - 3.0 * 0.25);
    EXPECT_DOUBLE_EQ(A(1, 1), 0.0);
}

TEST(Systems, ComplexBurgersCoefficient) {
    const auto s = complex_burgers_system();
    Vector u(2);
    u << 0.2, 1.0;
    Matrix Ax(2, 2), Ay(2, 2);
    Ax << -0.2, 1.0, -1.0, -0.2;
    Ay << -1.0, 0.0, 0.0, -1.0;
    EXPECT_TRUE(s.coefficient(0, u).isApprox(Ax));
    EXPECT_TRUE(s.coefficient(1, u).isApprox(Ay));
}

TEST(Systems, FromJsonTable) {
    const auto j = nlohmann::json::parse(R"({
        "N": 1, "d": 1, "name": "burgers",
        "A": [[[[ [ -1.0, [1] ] ]]]],
        "F": [0.25]
    })");
    const auto s = system_from_json(j);
    Vector u(1);
    u << 2.0;
    EXPECT_DOUBLE_EQ(s.coefficient(0, u)(0, 0), -2.0);
    EXPECT_DOUBLE_EQ(s.source(u)[0], 0.25);
    EXPECT_EQ(system_from_json("vdw").name, "vdw");
}

TEST(Systems, FromJsonErrorsNamePath) {
    const auto j = nlohmann::json::parse(R"({"N": 2, "d": 1, "A": [[[0, 0], [0]]]})");
    try {
        system_from_json(j);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("system.A[0][1]"), std::string::npos);
    }
    EXPECT_THROW(system_from_json("nope"), ConfigError);
}
