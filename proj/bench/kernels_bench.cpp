#include <cmath>

#include <benchmark/benchmark.h>

#include "hadamard/kernels.hpp"
#include "hadamard/majorant.hpp"
#include "hadamard/symbol.hpp"

using namespace hadamard;

namespace {

struct LensFixture {
    instability::ProfileTrajectory prof;
    kernels::LensGrid grid;

    LensFixture() {
        instability::ProfileProblem prob;
        prob.sys = vdw_system();
        prob.ubar = Vector::Zero(2);
        prob.xibar = Vector::Ones(1);
        prob.K = 16;
        const auto p = instability::make_params(1e-2, 3.0, 0.1, 1.0, 1.0, 1.0, 1, 1.0, 1.0);
        const auto mode = instability::growing_mode(spectrum_classify(instability::profile_matrix(prob)));
        prof = instability::solve_profile(prob, p, mode, p.sbar);
        grid = {p.eps, 1.0, p.r_eps, 1.0, p.t_eps, 256, 2.0 * kPi * p.eps / 8.0};
    }
};

const LensFixture& lens() {
    static const LensFixture f;
    return f;
}

struct LatticeFixture {
    std::vector<Complex> c;
    std::vector<double> logw;
    kernels::WeightedLattice w;

    LatticeFixture() {
        const int ns = 512, N = 2, nn = 65, nk = 9;
        c.resize(std::size_t(ns) * N * nn * nk);
        logw.resize(std::size_t(ns) * nn * nk);
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::polar(1.0 + std::sin(double(i)), 0.1 * double(i));
        for (std::size_t i = 0; i < logw.size(); ++i) logw[i] = -0.01 * double(i % 97);
        w = {ns, N, nn, nk, c.data(), logw.data()};
    }
};

const LatticeFixture& lattice() {
    static const LatticeFixture f;
    return f;
}

struct FbiFixture {
    fbi::SampledFunction h;
    fbi::GaussianTransformSpec spec;
    std::vector<kernels::TransformJob> jobs;

    FbiFixture() {
        h = fbi::SampledFunction::sample([](const Vector& x) { return Complex(std::abs(x[0])); },
                                         Vector::Constant(1, -1.5), Vector::Constant(1, 1.5), 1e-3);
        spec.Q = Matrix::Identity(1, 1);
        spec.chi.center = Vector::Zero(1);
        for (double l : fbi::default_lambdas())
            for (int k = 0; k < 8; ++k) jobs.push_back({CVector::Constant(1, Complex(0.01 * k, -0.3)), l});
    }
};

const FbiFixture& fbi_data() {
    static const FbiFixture f;
    return f;
}

void BM_LensRowsSerial(benchmark::State& state) {
    const auto& f = lens();
    for (auto _ : state) benchmark::DoNotOptimize(kernels::lens_rows_serial(f.grid, f.prof));
}

void BM_LensRowsOmp(benchmark::State& state) {
    const auto& f = lens();
    for (auto _ : state) benchmark::DoNotOptimize(kernels::lens_rows_omp(f.grid, f.prof));
}

void BM_WeightedSupSerial(benchmark::State& state) {
    const auto& f = lattice();
    for (auto _ : state) benchmark::DoNotOptimize(kernels::weighted_sup_serial(f.w));
}

void BM_WeightedSupOmp(benchmark::State& state) {
    const auto& f = lattice();
    for (auto _ : state) benchmark::DoNotOptimize(kernels::weighted_sup_omp(f.w));
}

void BM_FbiBatchSerial(benchmark::State& state) {
    const auto& f = fbi_data();
    for (auto _ : state) benchmark::DoNotOptimize(kernels::fbi_batch_serial(f.h, f.spec, f.jobs));
}

void BM_FbiBatchOmp(benchmark::State& state) {
    const auto& f = fbi_data();
    for (auto _ : state) benchmark::DoNotOptimize(kernels::fbi_batch_omp(f.h, f.spec, f.jobs));
}

}  // namespace

BENCHMARK(BM_LensRowsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LensRowsOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WeightedSupSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WeightedSupOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FbiBatchSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FbiBatchOmp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
