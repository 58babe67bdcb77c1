#pragma once

#include <cstdint>
#include <vector>

#include "martkit/chain.hpp"
#include "martkit/rng.hpp"

namespace martkit {

// Execution mode of the replica loops.  Results are bit-identical across
// modes and thread counts: every replica owns its stream and writes its own
// slot, and reductions run serially in replica order.
enum class Exec { Serial, OpenMP };

// Inverse-CDF sampler over the chain's stationary law and kernel rows.
class PathSampler {
public:
    explicit PathSampler(const FiniteMarkovChain& chain);

    int n_states() const { return n_; }

    int initial_state(Rng& rng) const { return pick(pi_cdf_.data(), rng.uniform()); }

    int step(int state, Rng& rng) const {
        return pick(row_cdf_.data() + static_cast<std::size_t>(state) * n_, rng.uniform());
    }

private:
    int pick(const double* cdf, double u) const {
        int i = 0;
        while (i + 1 < n_ && u >= cdf[i]) ++i;
        return i;
    }

    int n_;
    std::vector<double> pi_cdf_;
    std::vector<double> row_cdf_;  // n x n row-major cumulative rows
};

namespace detail {
void run_replicas_serial(int replicas, void* ctx, void (*body)(void*, int));
void run_replicas_openmp(int replicas, void* ctx, void (*body)(void*, int));
}  // namespace detail

// Runs body(replica) for replica = 0..replicas-1 under the chosen mode.
template <class Fn>
void for_each_replica(int replicas, Exec exec, Fn&& body) {
    auto trampoline = [](void* ctx, int r) { (*static_cast<Fn*>(ctx))(r); };
    if (exec == Exec::OpenMP) {
        detail::run_replicas_openmp(replicas, &body, trampoline);
    } else {
        detail::run_replicas_serial(replicas, &body, trampoline);
    }
}

}  // namespace martkit
