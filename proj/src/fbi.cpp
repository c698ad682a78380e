#include "hadamard/fbi.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "hadamard/errors.hpp"
#include "hadamard/kernels.hpp"

namespace hadamard::fbi {

namespace {

double smooth_step(double z) { return z > 0.0 ? std::exp(-1.0 / z) : 0.0; }

double q_max(const Matrix& Q) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
    return es.eigenvalues().maxCoeff();
}

// Trapezoid weight of grid index i on an axis with n points.
double axis_weight(int i, int n, double dx) { return (i == 0 || i == n - 1) ? 0.5 * dx : dx; }

}  // namespace

double Cutoff::operator()(const Vector& x) const {
    if (none) return 1.0;
    double r2 = 0.0;
    for (Eigen::Index a = 0; a < x.size(); ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
    const double r = std::sqrt(r2);
    if (r <= inner) return 1.0;
    if (r >= outer) return 0.0;
    const double s = (r - inner) / (outer - inner);
    const double a = smooth_step(1.0 - s), b = smooth_step(s);
    return a / (a + b);
}

void GaussianTransformSpec::validate() const {
    const int d = int(Q.rows());
    if (d < 1 || d > 2 || Q.cols() != d) throw ConfigError("Q must be a 1x1 or 2x2 matrix");
    if ((Q - Q.transpose()).norm() > 1e-12 * Q.norm()) throw ConfigError("Q is not symmetric");
    Eigen::LLT<Matrix> llt(Q);
    if (llt.info() != Eigen::Success) throw ConfigError("Q is not positive definite");
    if (!chi.none) {
        if (chi.center.size() != d) throw ConfigError("cutoff centre has the wrong dimension");
        if (!(chi.inner >= 0.0 && chi.inner < chi.outer)) throw ConfigError("cutoff needs 0 <= inner < outer");
    }
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0)) throw ConfigError("lambdas must be positive");
        if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw ConfigError("lambdas must be increasing");
    }
    for (const auto& y : ygrid)
        if (y.size() != d) throw ConfigError("ygrid point has the wrong dimension");
}

std::vector<double> default_lambdas() {
    std::vector<double> l;
    for (int k = 4; k <= 10; ++k) l.push_back(std::ldexp(1.0, k));
    return l;
}

Vector SampledFunction::point(std::size_t flat) const {
    Vector x(d);
    std::size_t rest = flat;
    for (int a = 0; a < d; ++a) {
        const std::size_t i = rest % std::size_t(shape[a]);
        rest /= std::size_t(shape[a]);
        x[a] = origin[a] + double(i) * spacing[a];
    }
    return x;
}

SampledFunction SampledFunction::sample(const std::function<Complex(const Vector&)>& f, const Vector& lo,
                                        const Vector& hi, double spacing) {
    const int d = int(lo.size());
    if (d < 1 || d > 2 || hi.size() != d) throw ConfigError("sampling box must be 1- or 2-dimensional");
    if (!(spacing > 0.0)) throw ConfigError("sampling spacing must be positive");
    SampledFunction s;
    s.d = d;
    s.origin = lo;
    s.spacing = Vector(d);
    s.shape.resize(d);
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) {
        if (!(hi[a] > lo[a])) throw ConfigError("sampling box is empty");
        const int n = int(std::ceil((hi[a] - lo[a]) / spacing - 1e-9));
        s.spacing[a] = (hi[a] - lo[a]) / n;
        s.shape[a] = n + 1;
        total *= std::size_t(n + 1);
    }
    s.values.resize(total);
    for (std::size_t i = 0; i < total; ++i) s.values[i] = f(s.point(i));
    return s;
}

SampledFunction SampledFunction::from_columns(const std::vector<double>& x, const std::vector<Complex>& v) {
    if (x.size() < 2 || x.size() != v.size()) throw ConfigError("signal needs at least two (x, value) rows");
    const double dx = (x.back() - x.front()) / double(x.size() - 1);
    if (!(dx > 0.0)) throw ConfigError("signal abscissae must increase");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (std::abs(x[i] - (x.front() + double(i) * dx)) > 1e-9 * dx)
            throw ConfigError("signal abscissae must be uniformly spaced");
    SampledFunction s;
    s.d = 1;
    s.origin = Vector::Constant(1, x.front());
    s.spacing = Vector::Constant(1, dx);
    s.shape = {int(x.size())};
    s.values = v;
    return s;
}

void check_transform(const SampledFunction& h, const GaussianTransformSpec& spec, const CVector& y, double lambda) {
    const int d = h.d;
    if (spec.Q.rows() != d || y.size() != d) throw ConfigError("transform dimensions do not match the signal");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    const double required = 1.0 / (8.0 * std::sqrt(lambda * q_max(spec.Q)));
    for (int a = 0; a < d; ++a) {
        if (h.spacing[a] > required * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "grid spacing " << h.spacing[a] << " on axis " << a << " exceeds the required " << required
               << " at lambda " << lambda;
            throw ResolutionError(os.str());
        }
        if (!spec.chi.none) {
            const double lo = h.origin[a], hi = h.origin[a] + (h.shape[a] - 1) * h.spacing[a];
            const double tol = 1e-12 * std::max(1.0, spec.chi.outer);
            if (lo > spec.chi.center[a] - spec.chi.outer + tol || hi < spec.chi.center[a] + spec.chi.outer - tol)
                throw ConfigError("sample grid does not cover the cutoff support");
        }
    }
}

TransformValue gaussian_transform_scaled(const SampledFunction& h, const GaussianTransformSpec& spec,
                                         const CVector& y, double lambda) {
    check_transform(h, spec, y, lambda);
    const int d = h.d;
    const Vector yi = y.imag();
    const double q_im = yi.dot(spec.Q * yi);
    const int n0 = h.shape[0];
    const int n1 = d == 2 ? h.shape[1] : 1;
    const double q00 = spec.Q(0, 0);
    const double q01 = d == 2 ? spec.Q(0, 1) : 0.0;
    const double q11 = d == 2 ? spec.Q(1, 1) : 0.0;
    const Complex y1 = d == 2 ? y[1] : Complex(0.0);
    Complex sum = 0.0;
    double mag = 0.0;
    Vector x(d);
    for (int i1 = 0; i1 < n1; ++i1) {
        const double w1 = d == 2 ? axis_weight(i1, n1, h.spacing[1]) : 1.0;
        if (d == 2) x[1] = h.origin[1] + i1 * h.spacing[1];
        const Complex e1 = d == 2 ? x[1] - y1 : Complex(0.0);
        for (int i0 = 0; i0 < n0; ++i0) {
            const Complex hv = h.values[std::size_t(i1) * n0 + i0];
            if (hv == Complex(0.0)) continue;
            x[0] = h.origin[0] + i0 * h.spacing[0];
            const double c = spec.chi(x);
            if (c == 0.0) continue;
            const Complex e0 = x[0] - y[0];
            const Complex q = q00 * e0 * e0 + 2.0 * q01 * e0 * e1 + q11 * e1 * e1;
            const Complex term = w1 * axis_weight(i0, n0, h.spacing[0]) * c * hv * std::exp(-lambda * (q + q_im));
            sum += term;
            mag += std::abs(term);
        }
    }
    const double pre = std::pow(lambda / kPi, 0.5 * d);
    return {pre * sum, pre * mag};
}

Complex gaussian_transform(const SampledFunction& h, const GaussianTransformSpec& spec, const CVector& y,
                           double lambda) {
    const auto v = gaussian_transform_scaled(h, spec, y, lambda);
    const Vector yi = y.imag();
    return v.scaled * std::exp(lambda * yi.dot(spec.Q * yi));
}

Matrix q_for_direction(const Vector& abar, const Vector& xi) {
    if (abar.size() != xi.size()) throw ConfigError("abar and xi have different dimensions");
    const double s = xi.dot(abar);
    if (!(s > 0.0)) throw ConfigError("need xi . abar > 0");
    const int d = int(xi.size());
    const Matrix P = Matrix::Identity(d, d) - abar * abar.transpose() / abar.squaredNorm();
    return xi * xi.transpose() / s + P;
}

DecayReport decay_classify(const SampledFunction& h, const Vector& xbar, const Vector& xi,
                           const GaussianTransformSpec& spec, const DecayOptions& opts) {
    spec.validate();
    const int d = h.d;
    if (xbar.size() != d || xi.size() != d) throw ConfigError("xbar and xi must match the signal dimension");
    if (!(xi.norm() > 0.0)) throw ConfigError("xi must be nonzero");
    if (!(opts.t > 0.0) || !(opts.rho >= 0.0)) throw ConfigError("need t > 0 and rho >= 0");

    DecayReport rep;
    rep.xi = xi;
    if (opts.abar && !(xi.dot(*opts.abar) > 0.0)) {
        rep.tangential = true;
        rep.eps1 = std::numeric_limits<double>::quiet_NaN();
        return rep;
    }
    const Vector a = spec.Q.ldlt().solve(xi);
    CVector y0 = xbar.cast<Complex>() - kI * opts.t * a.cast<Complex>();
    std::vector<CVector> ys{y0};
    for (const auto& off : opts.offsets) {
        if (off.size() != d) throw ConfigError("offset has the wrong dimension");
        if (off.norm() > opts.rho * opts.t * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "offset |y'| = " << off.norm() << " exceeds rho t = " << opts.rho * opts.t;
            throw ConfigError(os.str());
        }
        ys.push_back(y0 + off);
    }
    const auto lambdas = spec.lambdas.empty() ? default_lambdas() : spec.lambdas;

    std::vector<kernels::TransformJob> jobs;
    for (const auto& y : ys)
        for (double l : lambdas) jobs.push_back({y, l});
    const auto vals = opts.parallel ? kernels::fbi_batch_omp(h, spec, jobs) : kernels::fbi_batch_serial(h, spec, jobs);

    rep.eps1 = std::numeric_limits<double>::infinity();
    rep.underflow = true;
    std::size_t k = 0;
    for (const auto& y : ys) {
        PointFit pf;
        pf.y = y;
        const Vector yi = y.imag();
        pf.q_im = yi.dot(spec.Q * yi);
        for (double l : lambdas) {
            const auto& v = vals[k++];
            const double m = std::abs(v.scaled);
            if (m > opts.floor * v.magnitude && m > 0.0 && std::isfinite(m)) {
                pf.lambdas.push_back(l);
                pf.log_scaled.push_back(std::log(m));
            }
        }
        const int n = int(pf.lambdas.size());
        if (n < 3) {
            pf.underflow = true;
            pf.eps1 = std::numeric_limits<double>::infinity();
        } else {
            Matrix A(n, 3);
            Vector b(n);
            for (int i = 0; i < n; ++i) {
                A(i, 0) = 1.0;
                A(i, 1) = pf.lambdas[i];
                A(i, 2) = std::log(pf.lambdas[i]);
                b[i] = pf.log_scaled[i];
            }
            const Vector c = A.colPivHouseholderQr().solve(b);
            pf.eps1 = -c[1];
            rep.underflow = false;
        }
        rep.eps1 = std::min(rep.eps1, pf.eps1);
        rep.points.push_back(std::move(pf));
    }
    rep.decay_margin = opts.margin_fraction * rep.points.front().q_im;
    rep.verdict = rep.eps1 >= rep.decay_margin ? Verdict::AnalyticDirection : Verdict::NotDetected;
    return rep;
}

ModelSolution model_cr_solver(const std::vector<Complex>& h, const ModelOptions& opts) {
    const int n = int(h.size());
    if (n < 8 || n % 2 != 0) throw ConfigError("boundary data needs an even number (>= 8) of samples");
    if (!(opts.period > 0.0) || !(opts.x_max > 0.0) || opts.nx < 8)
        throw ConfigError("need period > 0, x_max > 0 and nx >= 8");
    double hmax = 0.0;
    for (const auto& v : h) hmax = std::max(hmax, std::abs(v));
    for (int j = 0; j < n; ++j)
        if (!(std::abs(h[j]) > 1e-12 * hmax)) {
            std::ostringstream os;
            os << "boundary data vanishes at y = " << -0.5 * opts.period + j * opts.period / n;
            throw ConfigError(os.str());
        }

    std::vector<Complex> g(n), c;
    for (int j = 0; j < n; ++j) g[j] = 1.0 / h[j];
    Eigen::FFT<double> fft;
    fft.fwd(c, g);
    // Samples start at -period/2, which multiplies mode m by (-1)^m.
    auto freq = [n](int m) { return m < n / 2 ? m : m - n; };
    double cmax = 0.0;
    for (int m = 0; m < n; ++m) {
        c[m] *= (freq(m) % 2 == 0 ? 1.0 : -1.0) / double(n);
        cmax = std::max(cmax, std::abs(c[m]));
    }
    c[n / 2] = 0.0;
    for (auto& v : c)
        if (std::abs(v) < opts.coeff_floor * cmax) v = 0.0;
    const double deta = 2.0 * kPi / opts.period;

    ModelSolution sol;
    for (int m = 0; m < n / 2; ++m) sol.decay_profile.push_back(std::abs(c[m]));
    std::vector<double> fx, fy;
    for (int m = 1; m < n / 2; ++m)
        if (c[m] != Complex(0.0)) {
            fx.push_back(m * deta);
            fy.push_back(std::log(std::abs(c[m])));
        }
    if (fx.size() < 2) {
        sol.decay_rate = std::numeric_limits<double>::infinity();
    } else {
        const double k = double(fx.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < fx.size(); ++i) {
            sx += fx[i];
            sy += fy[i];
            sxx += fx[i] * fx[i];
            sxy += fx[i] * fy[i];
        }
        sol.decay_rate = -(k * sxy - sx * sy) / (k * sxx - sx * sx);
    }
    if (!(sol.decay_rate > opts.rate_factor * opts.x_max)) {
        sol.verdict = Solvability::NoSolution;
        return sol;
    }
    sol.verdict = Solvability::Solvable;

    const int nx = opts.nx;
    const double hx = opts.x_max / (nx - 1), hy = opts.period / n;
    for (int i = 0; i < nx; ++i) sol.x.push_back(i * hx);
    for (int j = 0; j < n; ++j) sol.y.push_back(-0.5 * opts.period + j * hy);
    sol.u.resize(std::size_t(nx) * n);
    std::vector<Complex> coeff(n), G;
    for (int i = 0; i < nx; ++i) {
        for (int m = 0; m < n; ++m) {
            const int f = freq(m);
            coeff[m] = c[m] * std::exp(f * deta * sol.x[i]) * (f % 2 == 0 ? 1.0 : -1.0) * double(n);
        }
        fft.inv(G, coeff);
        for (int j = 0; j < n; ++j) {
            const Complex den = G[j] - sol.x[i];
            const Complex u = 1.0 / den;
            if (!(std::abs(den) > 1e-10) || !std::isfinite(std::abs(u))) {
                std::ostringstream os;
                os << "solution blows up near x = " << sol.x[i];
                throw NumericalError(os.str());
            }
            sol.u[std::size_t(i) * n + j] = u;
        }
    }

    auto U = [&](int i, int j) { return sol.u[std::size_t(i) * n + ((j % n) + n) % n]; };
    double res = 0.0;
    for (int i = 2; i < nx - 2; ++i)
        for (int j = 0; j < n; ++j) {
            const Complex ux = (U(i - 2, j) - 8.0 * U(i - 1, j) + 8.0 * U(i + 1, j) - U(i + 2, j)) / (12.0 * hx);
            const Complex uy = (U(i, j - 2) - 8.0 * U(i, j - 1) + 8.0 * U(i, j + 1) - U(i, j + 2)) / (12.0 * hy);
            res = std::max(res, std::abs(ux + kI * uy - U(i, j) * U(i, j)));
        }
    sol.residual = res;
    return sol;
}

}  // namespace hadamard::fbi
