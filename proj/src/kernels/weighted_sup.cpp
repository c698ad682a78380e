#include <algorithm>
#include <cmath>
#include <vector>

#include "hadamard/kernels.hpp"

namespace hadamard::kernels {

namespace {

double slice_sup(const WeightedLattice& w, int si) {
    double m = 0.0;
    for (int a = 0; a < w.N; ++a) {
        const Complex* c = w.c + (std::size_t(si) * w.N + a) * w.nn * w.nk;
        const double* lw = w.logw + std::size_t(si) * w.nn * w.nk;
        for (int j = 0; j < w.nn * w.nk; ++j) {
            const double v = std::abs(c[j]);
            if (v != 0.0) m = std::max(m, v * std::exp(-lw[j]));
        }
    }
    return m;
}

}  // namespace

double weighted_sup_serial(const WeightedLattice& w) {
    double m = 0.0;
    for (int si = 0; si < w.ns; ++si) m = std::max(m, slice_sup(w, si));
    return m;
}

double weighted_sup_omp(const WeightedLattice& w) {
    std::vector<double> per(w.ns);
#pragma omp parallel for schedule(static)
    for (int si = 0; si < w.ns; ++si) per[si] = slice_sup(w, si);
    double m = 0.0;
    for (double v : per) m = std::max(m, v);
    return m;
}

}  // namespace hadamard::kernels
