#include <vector>

#include "hadamard/kernels.hpp"

namespace hadamard::kernels {

std::vector<fbi::TransformValue> fbi_batch_serial(const fbi::SampledFunction& h,
                                                  const fbi::GaussianTransformSpec& spec,
                                                  const std::vector<TransformJob>& jobs) {
    std::vector<fbi::TransformValue> out;
    out.reserve(jobs.size());
    for (const auto& j : jobs) out.push_back(fbi::gaussian_transform_scaled(h, spec, j.y, j.lambda));
    return out;
}

std::vector<fbi::TransformValue> fbi_batch_omp(const fbi::SampledFunction& h,
                                               const fbi::GaussianTransformSpec& spec,
                                               const std::vector<TransformJob>& jobs) {
    for (const auto& j : jobs) fbi::check_transform(h, spec, j.y, j.lambda);
    std::vector<fbi::TransformValue> out(jobs.size());
    const int n = int(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) out[i] = fbi::gaussian_transform_scaled(h, spec, jobs[i].y, jobs[i].lambda);
    return out;
}

}  // namespace hadamard::kernels
