#include <algorithm>
#include <cmath>

#include "hadamard/errors.hpp"
#include "hadamard/kernels.hpp"

namespace hadamard::kernels {

namespace {

double row_integral(const LensGrid& g, const instability::ProfileTrajectory& prof, int i) {
    const double dt = g.t_max / g.nt;
    const double t = (i + 0.5) * dt;
    const double X2 = g.r * g.r - g.delta * t;
    if (X2 <= 0.0) return 0.0;
    const double X = std::sqrt(X2);
    const int nx = std::max(1, int(std::ceil(2.0 * X / g.dx_target)));
    const double dx = 2.0 * X / nx;
    const CMatrix c = prof.at(t / g.eps);
    const int K = prof.K;
    const int N = prof.N;
    double sum = 0.0;
    Vector u(N);
    for (int j = 0; j < nx; ++j) {
        const double x = -X + (j + 0.5) * dx;
        const double theta = x * g.xibar / g.eps;
        const Complex e1(std::cos(theta), std::sin(theta));
        // Real profile: u = c_0 + 2 Re sum_{n>0} c_n e^{in theta}.
        Complex e(1.0, 0.0);
        for (int a = 0; a < N; ++a) u[a] = c(a, K).real();
        for (int n = 1; n <= K; ++n) {
            e *= e1;
            for (int a = 0; a < N; ++a) u[a] += 2.0 * (c(a, K + n) * e).real();
        }
        double v = 0.0;
        for (int a = 0; a < N; ++a) v += u[a] * u[a];
        sum += v;
    }
    return sum * dx * dt;
}

void check(const LensGrid& g) {
    if (g.nt < 1 || !(g.dx_target > 0.0) || !(g.eps > 0.0) || !(g.t_max >= 0.0))
        throw ConfigError("lens grid needs nt >= 1, dx_target > 0, eps > 0, t_max >= 0");
}

}  // namespace

std::vector<double> lens_rows_serial(const LensGrid& g, const instability::ProfileTrajectory& prof) {
    check(g);
    std::vector<double> rows(g.nt);
    for (int i = 0; i < g.nt; ++i) rows[i] = row_integral(g, prof, i);
    return rows;
}

std::vector<double> lens_rows_omp(const LensGrid& g, const instability::ProfileTrajectory& prof) {
    check(g);
    std::vector<double> rows(g.nt);
#pragma omp parallel for schedule(dynamic, 4)
    for (int i = 0; i < g.nt; ++i) rows[i] = row_integral(g, prof, i);
    return rows;
}

double lens_l2_squared(const LensGrid& g, const instability::ProfileTrajectory& prof, bool parallel) {
    const auto rows = parallel ? lens_rows_omp(g, prof) : lens_rows_serial(g, prof);
    double s = 0.0;
    for (double r : rows) s += r;
    return s;
}

}  // namespace hadamard::kernels
