#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "hadamard/types.hpp"

namespace hadamard::fbi {

/// Smooth radial cutoff: 1 on |x - center| <= inner, 0 for |x - center| >= outer,
/// with the C-infinity transition e^{-1/(1-s)} / (e^{-1/(1-s)} + e^{-1/s}).
/// `none` gives chi = 1 everywhere (the integral then runs over the sample grid).
struct Cutoff {
    Vector center;
    double inner = 0.8;
    double outer = 1.2;
    bool none = false;

    [[nodiscard]] double operator()(const Vector& x) const;
};

struct GaussianTransformSpec {
    Matrix Q;
    Cutoff chi;
    std::vector<double> lambdas;
    std::vector<CVector> ygrid;

    /// Throws ConfigError unless Q is symmetric positive definite, inner < outer and
    /// the lambdas are positive and increasing.
    void validate() const;
};

/// 2^4, ..., 2^10.
std::vector<double> default_lambdas();

/// Values on a uniform tensor grid in d = 1 or 2 dimensions, first index fastest.
struct SampledFunction {
    int d = 1;
    Vector origin;
    Vector spacing;
    std::vector<int> shape;
    std::vector<Complex> values;

    [[nodiscard]] std::size_t size() const { return values.size(); }
    [[nodiscard]] Vector point(std::size_t flat) const;

    /// Samples f on [lo, hi] (per axis) with the largest spacing <= `spacing` that divides the box.
    static SampledFunction sample(const std::function<Complex(const Vector&)>& f, const Vector& lo,
                                  const Vector& hi, double spacing);
    /// 1-d samples; x must be uniformly spaced (relative tolerance 1e-9).
    static SampledFunction from_columns(const std::vector<double>& x, const std::vector<Complex>& v);
};

/// Th(y, lambda) e^{-lambda q(Im y)} and the matching scaled sum of |integrand|, which sets
/// the rounding floor of the quadrature.
struct TransformValue {
    Complex scaled;
    double magnitude = 0.0;
};

/// Throws ResolutionError when the spacing exceeds 1/(8 sqrt(lambda q_max)) and ConfigError
/// for mismatched dimensions or a grid that does not cover the cutoff support.
void check_transform(const SampledFunction& h, const GaussianTransformSpec& spec, const CVector& y, double lambda);

/// (lambda/pi)^{d/2} sum_x w_x e^{-lambda q(x - y)} h(x) chi(x), trapezoid weights.
TransformValue gaussian_transform_scaled(const SampledFunction& h, const GaussianTransformSpec& spec,
                                         const CVector& y, double lambda);
Complex gaussian_transform(const SampledFunction& h, const GaussianTransformSpec& spec, const CVector& y,
                           double lambda);

/// A positive definite Q with Q abar = xi. Throws ConfigError unless xi . abar > 0.
Matrix q_for_direction(const Vector& abar, const Vector& xi);

enum class Verdict { AnalyticDirection, NotDetected };

struct DecayOptions {
    double t = 0.3;
    double rho = 0.05;
    std::vector<CVector> offsets;      // y' with |y'| <= rho t; the centre point is always used
    double margin_fraction = 0.05;     // decay_margin = margin_fraction q(Im y)
    double floor = 1e-13;              // values below floor * magnitude are dropped
    std::optional<Vector> abar;        // if set, xi . abar <= 0 reports a tangential direction
    bool parallel = true;
};

struct PointFit {
    CVector y;
    double q_im = 0.0;
    std::vector<double> lambdas;       // retained lambdas
    std::vector<double> log_scaled;    // ln|Th| - lambda q(Im y)
    double eps1 = 0.0;
    bool underflow = false;
};

struct DecayReport {
    Vector xi;
    std::vector<PointFit> points;
    double eps1 = 0.0;                 // min over points; +inf when every point underflowed
    double decay_margin = 0.0;
    Verdict verdict = Verdict::NotDetected;
    bool underflow = false;
    bool tangential = false;
};

/// Fits ln|Th(y, lambda)| - lambda q(Im y) = c0 - eps1 lambda + c2 ln lambda at
/// y = xbar - i t Q^{-1} xi (+ offsets). Points with fewer than 3 usable lambdas count as
/// underflow with eps1 = +inf.
DecayReport decay_classify(const SampledFunction& h, const Vector& xbar, const Vector& xi,
                           const GaussianTransformSpec& spec, const DecayOptions& opts = {});

enum class Solvability { Solvable, NoSolution };

struct ModelOptions {
    double period = 2.0 * kPi;  // the data interval [-period/2, period/2) is treated as periodic
    double x_max = 0.5;
    int nx = 256;
    double rate_factor = 1.25;  // solvable iff decay rate > rate_factor x_max
    double coeff_floor = 1e-13; // relative floor below which Fourier coefficients are zeroed
};

struct ModelSolution {
    Solvability verdict = Solvability::NoSolution;
    double decay_rate = 0.0;            // fitted rate of |ghat(eta)| for eta > 0
    std::vector<double> decay_profile;  // |ghat(eta_k)|, k = 0, 1, ...
    std::vector<double> x;
    std::vector<double> y;
    std::vector<Complex> u;             // u(x_i, y_j) at index i * ny + j
    double residual = std::numeric_limits<double>::quiet_NaN();
};

/// (d_x + i d_y) u = u^2, u(0, y) = h(y), with h sampled at y_j = -period/2 + j period/n.
/// 1/u = G(x + iy) - x where G is holomorphic with trace 1/h; G is the one-sided Fourier
/// extension sum ghat_eta e^{eta z}. Throws ConfigError for vanishing h and NumericalError
/// when G - x vanishes on the grid.
ModelSolution model_cr_solver(const std::vector<Complex>& h, const ModelOptions& opts = {});

}  // namespace hadamard::fbi
