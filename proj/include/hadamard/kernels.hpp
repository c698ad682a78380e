#pragma once

#include <vector>

#include "hadamard/fbi.hpp"
#include "hadamard/instability.hpp"

namespace hadamard::kernels {

/// Midpoint grid on the lens {0 <= t <= t_max, x^2 + delta t < r^2}. Each t-row
/// covers its exact chord [-X(t), X(t)] with cells no wider than dx_target.
struct LensGrid {
    double eps = 0.0;
    double xibar = 1.0;
    double r = 0.0;
    double delta = 1.0;
    double t_max = 0.0;
    int nt = 0;
    double dx_target = 0.0;
};

/// Row integrals int |u(t/eps, x xibar/eps)|^2 dx at the t-midpoints, times dt.
std::vector<double> lens_rows_serial(const LensGrid& g, const instability::ProfileTrajectory& prof);
std::vector<double> lens_rows_omp(const LensGrid& g, const instability::ProfileTrajectory& prof);

/// Sum of the rows in index order.
double lens_l2_squared(const LensGrid& g, const instability::ProfileTrajectory& prof, bool parallel);

/// max |c(si, a, n, k)| exp(-logw(si, n, k)) over a lattice stored as in
/// majorant::ProfileSeries; logw is indexed (si, n, k) and shared by the components.
struct WeightedLattice {
    int ns = 0;
    int N = 0;
    int nn = 0;  // 2K + 1
    int nk = 0;  // T + 1
    const Complex* c = nullptr;
    const double* logw = nullptr;
};

double weighted_sup_serial(const WeightedLattice& w);
double weighted_sup_omp(const WeightedLattice& w);

/// One Gaussian transform evaluation per (y, lambda) job.
struct TransformJob {
    CVector y;
    double lambda = 0.0;
};

std::vector<fbi::TransformValue> fbi_batch_serial(const fbi::SampledFunction& h,
                                                  const fbi::GaussianTransformSpec& spec,
                                                  const std::vector<TransformJob>& jobs);
std::vector<fbi::TransformValue> fbi_batch_omp(const fbi::SampledFunction& h,
                                               const fbi::GaussianTransformSpec& spec,
                                               const std::vector<TransformJob>& jobs);

}  // namespace hadamard::kernels
