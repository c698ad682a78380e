#include "hadamard/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "hadamard/errors.hpp"

namespace hadamard {

namespace {

std::string echo(const Matrix& M) {
    std::ostringstream os;
    os.precision(17);
    os << M;
    return os.str();
}

void check_finite(const Matrix& M, const char* what, int j) {
    for (int r = 0; r < M.rows(); ++r)
        for (int c = 0; c < M.cols(); ++c)
            if (!std::isfinite(M(r, c))) {
                std::ostringstream os;
                os << what << "[" << j << "](" << r << "," << c << ") is not finite";
                throw EvaluationError(os.str());
            }
}

CVector normalize_phase(CVector v) {
    v /= v.norm();
    const double floor = 1e-12 * v.cwiseAbs().maxCoeff();
    for (int i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > floor) {
            v *= std::conj(v[i]) / std::abs(v[i]);
            v[i] = Complex(v[i].real(), 0.0);
            break;
        }
    }
    return v;
}

bool lex_greater(const CVector& a, const CVector& b) {
    for (int i = 0; i < a.size(); ++i) {
        if (a[i].real() != b[i].real()) return a[i].real() > b[i].real();
        if (a[i].imag() != b[i].imag()) return a[i].imag() > b[i].imag();
    }
    return false;
}

// Swap the adjacent diagonal entries k, k+1 of the upper triangular T,
// accumulating the unitary change of basis into Q.
void swap_adjacent(CMatrix& T, CMatrix& Q, int k) {
    const Complex a = T(k, k), b = T(k + 1, k + 1), c = T(k, k + 1);
    Complex x1 = c, x2 = b - a;
    const double nrm = std::sqrt(std::norm(x1) + std::norm(x2));
    if (nrm == 0.0) return;
    x1 /= nrm;
    x2 /= nrm;
    Eigen::Matrix2cd G;
    G << x1, -std::conj(x2), x2, std::conj(x1);
    T.middleRows(k, 2) = (G.adjoint() * T.middleRows(k, 2)).eval();
    T.middleCols(k, 2) = (T.middleCols(k, 2) * G).eval();
    Q.middleCols(k, 2) = (Q.middleCols(k, 2) * G).eval();
    T(k + 1, k) = 0.0;
}

}  // namespace

const char* to_string(Verdict v) { return v == Verdict::Hyperbolic ? "Hyperbolic" : "NonHyperbolic"; }

double tol_imag(const Matrix& M) { return 1e-9 * (1.0 + M.norm()); }

Matrix principal_symbol(const FirstOrderSystem& sys, double t, const Vector& x, const Vector& u, const Vector& xi) {
    if (xi.size() != sys.d) throw ConfigError("xi has dimension " + std::to_string(xi.size()) + ", expected d");
    for (int j = 0; j < xi.size(); ++j)
        if (!std::isfinite(xi[j])) throw ConfigError("xi is not finite");
    const auto A = sys.coeff(t, x, u);
    if (static_cast<int>(A.size()) != sys.d) throw EvaluationError("coeff returned the wrong number of matrices");
    Matrix M = Matrix::Zero(sys.N, sys.N);
    for (int j = 0; j < sys.d; ++j) {
        if (A[j].rows() != sys.N || A[j].cols() != sys.N) throw EvaluationError("coeff returned a matrix of wrong size");
        check_finite(A[j], "A", j);
        M += xi[j] * A[j];
    }
    return M;
}

SymbolSpectrum spectrum_classify(const Matrix& M) {
    for (int r = 0; r < M.rows(); ++r)
        for (int c = 0; c < M.cols(); ++c)
            if (!std::isfinite(M(r, c))) throw EvaluationError("symbol matrix has a non-finite entry");
    Eigen::EigenSolver<Matrix> es(M, true);
    if (es.info() != Eigen::Success) throw NumericalError("eigen-solver did not converge on\n" + echo(M));

    const int N = static_cast<int>(M.rows());
    std::vector<int> order(N);
    for (int i = 0; i < N; ++i) order[i] = i;
    const CVector ev = es.eigenvalues();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (ev[a].imag() != ev[b].imag()) return ev[a].imag() > ev[b].imag();
        return ev[a].real() > ev[b].real();
    });

    SymbolSpectrum out;
    out.tol_imag = tol_imag(M);
    for (int i : order) out.eigenvalues.push_back(ev[i]);
    for (const auto& z : out.eigenvalues) out.gamma0 = std::max(out.gamma0, std::abs(z.imag()));
    out.verdict = out.gamma0 <= out.tol_imag ? Verdict::Hyperbolic : Verdict::NonHyperbolic;
    if (out.gamma0 == 0.0 || out.verdict == Verdict::Hyperbolic) return out;

    const double tie = kTolEig * (1.0 + M.norm());
    int best = -1;
    CVector best_vec;
    for (int i : order) {
        if (ev[i].imag() < out.gamma0 - tie) continue;
        CVector v = normalize_phase(es.eigenvectors().col(i));
        if (best < 0 || ev[i].real() > ev[best].real() + tie ||
            (std::abs(ev[i].real() - ev[best].real()) <= tie && lex_greater(v, best_vec))) {
            best = i;
            best_vec = v;
        }
    }
    out.lambda0 = ev[best];
    out.rbar = best_vec;
    return out;
}

SpectralProjectorUpper projector_upper(const Matrix& M) {
    const int N = static_cast<int>(M.rows());
    const double tol = tol_imag(M);
    Eigen::ComplexSchur<CMatrix> schur(M.cast<Complex>());
    if (schur.info() != Eigen::Success) throw NumericalError("Schur decomposition did not converge on\n" + echo(M));
    CMatrix T = schur.matrixT();
    CMatrix Q = schur.matrixU();

    for (int i = 0; i < N; ++i) {
        const double im = std::abs(T(i, i).imag());
        if (im > 0.5 * tol && im < 2.0 * tol) {
            std::ostringstream os;
            os.precision(17);
            os << "eigenvalue " << T(i, i) << " lies in the guard band around the real axis (tol " << tol << ")";
            throw AmbiguousSpectrumError(os.str());
        }
    }
    auto upper = [&](int i) { return T(i, i).imag() > tol; };

    // Bubble the upper-half-plane eigenvalues to the leading block.
    for (int pass = 0; pass < N; ++pass)
        for (int k = 0; k + 1 < N; ++k)
            if (!upper(k) && upper(k + 1)) swap_adjacent(T, Q, k);

    int p = 0;
    while (p < N && upper(p)) ++p;
    SpectralProjectorUpper out;
    out.rank = p;
    out.matrix = CMatrix::Zero(N, N);
    if (p == 0) return out;

    const int q = N - p;
    // T11 Y - Y T22 = -T12, column by column.
    CMatrix Y = CMatrix::Zero(p, q);
    const CMatrix T11 = T.topLeftCorner(p, p);
    for (int j = 0; j < q; ++j) {
        CVector rhs = -T.block(0, p + j, p, 1);
        for (int l = 0; l < j; ++l) rhs += Y.col(l) * T(p + l, p + j);
        CMatrix S = T11 - T(p + j, p + j) * CMatrix::Identity(p, p);
        Y.col(j) = S.triangularView<Eigen::Upper>().solve(rhs);
    }
    CMatrix P = CMatrix::Zero(N, N);
    P.topLeftCorner(p, p) = CMatrix::Identity(p, p);
    P.topRightCorner(p, q) = -Y;
    out.matrix = Q * P * Q.adjoint();

    const CMatrix Mc = M.cast<Complex>();
    const double idem = (out.matrix * out.matrix - out.matrix).norm();
    const double comm = (out.matrix * Mc - Mc * out.matrix).norm();
    if (idem > kTolProj * (1.0 + out.matrix.norm()) || comm > kTolProj * (1.0 + M.norm()) * (1.0 + out.matrix.norm()))
        throw NumericalError("spectral projector failed its invariants (ill-conditioned splitting) for\n" + echo(M));
    return out;
}

VdwPoint vdw_tools(double u) {
    VdwPoint r;
    r.p = u * u * u - u;
    r.dp = 3.0 * u * u - 1.0;
    r.P = 0.25 * u * u * (u * u - 2.0);
    r.elliptic = r.dp < 0.0;
    return r;
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& v) {
    const Vector f0 = f(v);
    Matrix J(f0.size(), v.size());
    for (int i = 0; i < v.size(); ++i) {
        const double h = 1e-6 * (1.0 + std::abs(v[i]));
        Vector vp = v, vm = v;
        vp[i] += h;
        vm[i] -= h;
        J.col(i) = (f(vp) - f(vm)) / (2.0 * h);
    }
    for (int r = 0; r < J.rows(); ++r)
        for (int c = 0; c < J.cols(); ++c)
            if (!std::isfinite(J(r, c))) throw EvaluationError("finite-difference Jacobian has a non-finite entry");
    return J;
}

Matrix principal_symbol_nonlinear(const std::function<Vector(double, const Vector&, const Vector&, const Vector&)>& F,
                                  int N, int d, double t, const Vector& x, const Vector& u, const Vector& grad,
                                  const Vector& xi) {
    if (grad.size() != N * d || xi.size() != d) throw ConfigError("gradient or xi has the wrong dimension");
    const Matrix J = fd_jacobian([&](const Vector& g) { return F(t, x, u, g); }, grad);
    Matrix M = Matrix::Zero(N, N);
    for (int j = 0; j < d; ++j) M += xi[j] * J.middleCols(j * N, N);
    return M;
}

}  // namespace hadamard
