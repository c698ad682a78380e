#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hadamard/system.hpp"
#include "hadamard/types.hpp"

namespace hadamard {

enum class Verdict { Hyperbolic, NonHyperbolic };

const char* to_string(Verdict v);

struct SymbolSpectrum {
    std::vector<Complex> eigenvalues;  // sorted by (Im, Re) descending
    double gamma0 = 0.0;
    std::optional<Complex> lambda0;
    std::optional<CVector> rbar;
    Verdict verdict = Verdict::Hyperbolic;
    double tol_imag = 0.0;
};

struct SpectralProjectorUpper {
    CMatrix matrix;
    int rank = 0;
};

inline constexpr double kTolEig = 1e-8;
inline constexpr double kTolProj = 1e-8;

/// 1e-9 (1 + ||M||), Frobenius norm.
double tol_imag(const Matrix& M);

/// M = sum_j xi_j A_j(t, x, u).
Matrix principal_symbol(const FirstOrderSystem& sys, double t, const Vector& x, const Vector& u, const Vector& xi);

SymbolSpectrum spectrum_classify(const Matrix& M);

SpectralProjectorUpper projector_upper(const Matrix& M);

struct VdwPoint {
    double p = 0.0;
    double dp = 0.0;
    double P = 0.0;
    bool elliptic = false;
};

VdwPoint vdw_tools(double u);

/// Central-difference Jacobian, step 1e-6 (1 + |v_i|) in each component.
Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& v);

/// Fully nonlinear d_t u = F(t, x, u, grad u). `grad` stacks the d partial
/// derivatives: grad.segment(j*N, N) = d_{x_j} u. Returns sum_j xi_j dF/d(d_j u).
Matrix principal_symbol_nonlinear(const std::function<Vector(double, const Vector&, const Vector&, const Vector&)>& F,
                                  int N, int d, double t, const Vector& x, const Vector& u, const Vector& grad,
                                  const Vector& xi);

}  // namespace hadamard
