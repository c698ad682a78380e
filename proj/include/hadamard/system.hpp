#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hadamard/types.hpp"

namespace hadamard {

/// Quasilinear first-order system  du/dt = sum_j A_j(t,x,u) d_{x_j} u + F(t,x,u).
///
/// The evaluators must be pure. `coeff` returns exactly `d` matrices of size N x N.
struct FirstOrderSystem {
    int N = 0;
    int d = 0;
    std::function<std::vector<Matrix>(double, const Vector&, const Vector&)> coeff;
    std::function<Vector(double, const Vector&, const Vector&)> source;
    std::string name;
};

/// Monomial coef * prod_i u_i^{powers[i]}.
struct Monomial {
    double coef = 0.0;
    std::vector<int> powers;
};

/// Real polynomial in the N state components.
class Polynomial {
public:
    Polynomial() = default;
    Polynomial(int nvars, std::vector<Monomial> terms);

    static Polynomial constant(int nvars, double c);
    /// c * u_i
    static Polynomial linear(int nvars, int i, double c);

    [[nodiscard]] int nvars() const { return nvars_; }
    [[nodiscard]] const std::vector<Monomial>& terms() const { return terms_; }
    [[nodiscard]] int degree() const;
    [[nodiscard]] bool is_zero() const { return terms_.empty(); }

    [[nodiscard]] double eval(const Vector& u) const;
    /// Polynomial in w equal to P(base + w) - P(base).
    [[nodiscard]] Polynomial shifted_increment(const Vector& base) const;

    Polynomial& operator+=(const Polynomial& other);

private:
    void canonicalize();

    int nvars_ = 0;
    std::vector<Monomial> terms_;
};

/// Systems whose coefficients are polynomial tables in u (no explicit t, x
/// dependence). Every built-in system is of this form.
struct PolynomialSystem {
    int N = 0;
    int d = 0;
    std::string name;
    /// A[j][r][c]
    std::vector<std::vector<std::vector<Polynomial>>> A;
    std::vector<Polynomial> F;

    [[nodiscard]] FirstOrderSystem as_system() const;
    [[nodiscard]] Matrix coefficient(int j, const Vector& u) const;
    [[nodiscard]] Vector source(const Vector& u) const;
};

/// p(u) = u (u^2 - 1) written as d_t(u, v) = A(u) d_x(u, v), A = -[[0, 1], [p'(u), 0]].
PolynomialSystem vdw_system();

/// The 2x2 real form of the complex Burgers-type example in (x, y):
///   u_t + u u_x - v v_x + u_y = 0,  v_t + v u_x + u v_x + v_y = 0.
PolynomialSystem complex_burgers_system();

/// Built-in by name ("vdw", "complex-burgers") or a polynomial table object.
PolynomialSystem system_from_json(const nlohmann::json& spec);

}  // namespace hadamard
