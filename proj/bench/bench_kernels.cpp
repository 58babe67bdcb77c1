// Times the replica kernels in serial and OpenMP mode on the two-state
// benchmark and checks that both modes produce identical statistics.

#include <chrono>
#include <cstdio>

#include "martkit/chain.hpp"
#include "martkit/montecarlo.hpp"

using namespace martkit;

namespace {

FiniteMarkovChain benchmark_chain() {
    Eigen::MatrixXd k(2, 2);
    k << 0.7, 0.3, 0.1, 0.9;
    return build_chain(k);
}

template <class Body>
double time_seconds(Body&& body) {
    const auto start = std::chrono::steady_clock::now();
    body();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

int main() {
    const auto chain = benchmark_chain();
    Eigen::VectorXd raw(2);
    raw << 3.0, -1.0;
    const Observable f(chain, raw);

    const int n = 4096;
    const int replicas = 4000;
    const std::uint64_t seed = 42;
    const std::vector<int> grid = {n / 4, n};

    std::printf("%-28s %10s %10s %8s\n", "kernel", "serial[s]", "openmp[s]", "speedup");

    {
        MaxStatistic serial_stat, parallel_stat;
        const double ts = time_seconds(
            [&] { serial_stat = max_sq_partial_sum(chain, f, n, replicas, seed, Exec::Serial); });
        const double tp = time_seconds(
            [&] { parallel_stat = max_sq_partial_sum(chain, f, n, replicas, seed, Exec::OpenMP); });
        std::printf("%-28s %10.3f %10.3f %7.2fx %s\n", "max_sq_partial_sum", ts, tp,
                    ts / tp, serial_stat.value == parallel_stat.value ? "" : "MISMATCH");
    }
    {
        DecayCurve serial_curve, parallel_curve;
        const double ts = time_seconds(
            [&] { serial_curve = residual_decay_curve(chain, f, grid, replicas, seed, Exec::Serial); });
        const double tp = time_seconds(
            [&] { parallel_curve = residual_decay_curve(chain, f, grid, replicas, seed, Exec::OpenMP); });
        std::printf("%-28s %10.3f %10.3f %7.2fx %s\n", "residual_decay_curve", ts, tp,
                    ts / tp,
                    serial_curve.values == parallel_curve.values ? "" : "MISMATCH");
    }
    {
        const StateFunction y = chain.kernel() * f.values();
        SeminormEstimate serial_est, parallel_est;
        const double ts = time_seconds(
            [&] { serial_est = estimate_seminorm(chain, y, grid, replicas, seed, true, Exec::Serial); });
        const double tp = time_seconds(
            [&] { parallel_est = estimate_seminorm(chain, y, grid, replicas, seed, true, Exec::OpenMP); });
        std::printf("%-28s %10.3f %10.3f %7.2fx %s\n", "estimate_seminorm", ts, tp,
                    ts / tp, serial_est.values == parallel_est.values ? "" : "MISMATCH");
    }
    {
        TrajectoryBatch serial_batch, parallel_batch;
        const double ts =
            time_seconds([&] { serial_batch = simulate(chain, n, replicas, seed, Exec::Serial); });
        const double tp =
            time_seconds([&] { parallel_batch = simulate(chain, n, replicas, seed, Exec::OpenMP); });
        std::printf("%-28s %10.3f %10.3f %7.2fx %s\n", "simulate", ts, tp, ts / tp,
                    serial_batch.states == parallel_batch.states ? "" : "MISMATCH");
    }
    return 0;
}
