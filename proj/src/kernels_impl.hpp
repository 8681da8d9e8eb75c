#pragma once

// Internal dispatch table shared by kernels.cpp and the two variant TUs.

#include <cstddef>

namespace tcer::kernels {

struct KernelOps {
    void (*softmax)(const double* logits, std::size_t n, double inv_temp, double* out);
    void (*log_softmax)(const double* logits, std::size_t n, double inv_temp, double* out);
    double (*entropy)(const double* probs, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*log_array)(const double* x, std::size_t n, double* out);
    void (*exp_array)(const double* x, std::size_t n, double* out);
    void (*log_ratio_smoothed)(const double* p, const double* q, std::size_t n, double eps,
                               double* out);
    void (*gate_array)(const double* p, std::size_t n, double lambda, double* out);
    double (*coverage)(const double* probs, std::size_t n, double lambda);
};

const KernelOps& scalar_ops();

// nullptr when the build or the CPU cannot run AVX2.
const KernelOps* avx2_ops();

}  // namespace tcer::kernels
