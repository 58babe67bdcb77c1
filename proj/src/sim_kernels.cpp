#include "martkit/sim_kernels.hpp"

namespace martkit {

PathSampler::PathSampler(const FiniteMarkovChain& chain)
    : n_(chain.n_states()),
      pi_cdf_(static_cast<std::size_t>(chain.n_states())),
      row_cdf_(static_cast<std::size_t>(chain.n_states()) * chain.n_states()) {
    double acc = 0.0;
    for (int i = 0; i < n_; ++i) {
        acc += chain.pi()(i);
        pi_cdf_[i] = acc;
    }
    pi_cdf_[n_ - 1] = 1.0;
    for (int x = 0; x < n_; ++x) {
        acc = 0.0;
        for (int y = 0; y < n_; ++y) {
            acc += chain.kernel()(x, y);
            row_cdf_[static_cast<std::size_t>(x) * n_ + y] = acc;
        }
        row_cdf_[static_cast<std::size_t>(x) * n_ + n_ - 1] = 1.0;
    }
}

namespace detail {

void run_replicas_serial(int replicas, void* ctx, void (*body)(void*, int)) {
    for (int r = 0; r < replicas; ++r) {
        body(ctx, r);
    }
}

void run_replicas_openmp(int replicas, void* ctx, void (*body)(void*, int)) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < replicas; ++r) {
        body(ctx, r);
    }
}

}  // namespace detail

}  // namespace martkit
