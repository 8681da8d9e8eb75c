// Backend selection and the span-based public surface.

#include "tcer/kernels.hpp"

#include <string>

#include "kernels_impl.hpp"
#include "tcer/common.hpp"

namespace tcer::kernels {
namespace {

const KernelOps* pick_default() {
    if (const KernelOps* avx2 = avx2_ops()) return avx2;
    return &scalar_ops();
}

const KernelOps*& active_ops() {
    static const KernelOps* ops = pick_default();
    return ops;
}

}  // namespace

Backend active_backend() {
    return active_ops() == &scalar_ops() ? Backend::scalar : Backend::avx2;
}

bool backend_available(Backend b) {
    return b == Backend::scalar || avx2_ops() != nullptr;
}

void set_backend(Backend b) {
    if (b == Backend::scalar) {
        active_ops() = &scalar_ops();
        return;
    }
    const KernelOps* avx2 = avx2_ops();
    if (!avx2) throw UsageError("kernel backend 'avx2' is not available on this CPU");
    active_ops() = avx2;
}

const char* backend_name(Backend b) { return b == Backend::scalar ? "scalar" : "avx2"; }

void softmax(std::span<const double> logits, double inv_temp, std::span<double> out) {
    active_ops()->softmax(logits.data(), logits.size(), inv_temp, out.data());
}

void log_softmax(std::span<const double> logits, double inv_temp, std::span<double> out) {
    active_ops()->log_softmax(logits.data(), logits.size(), inv_temp, out.data());
}

double entropy(std::span<const double> probs) {
    return active_ops()->entropy(probs.data(), probs.size());
}

double sum(std::span<const double> x) { return active_ops()->sum(x.data(), x.size()); }

double dot(std::span<const double> a, std::span<const double> b) {
    return active_ops()->dot(a.data(), b.data(), a.size());
}

void log_array(std::span<const double> x, std::span<double> out) {
    active_ops()->log_array(x.data(), x.size(), out.data());
}

void exp_array(std::span<const double> x, std::span<double> out) {
    active_ops()->exp_array(x.data(), x.size(), out.data());
}

void log_ratio_smoothed(std::span<const double> p, std::span<const double> q, double eps,
                        std::span<double> out) {
    active_ops()->log_ratio_smoothed(p.data(), q.data(), p.size(), eps, out.data());
}

void gate_array(std::span<const double> p, double lambda, std::span<double> out) {
    active_ops()->gate_array(p.data(), p.size(), lambda, out.data());
}

double coverage(std::span<const double> probs, double lambda) {
    return active_ops()->coverage(probs.data(), probs.size(), lambda);
}

}  // namespace tcer::kernels
