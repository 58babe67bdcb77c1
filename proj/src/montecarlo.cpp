#include "martkit/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "martkit/spectral.hpp"

namespace martkit {

namespace {

MaxStatistic mean_and_se(std::span<const double> xs) {
    MaxStatistic out;
    const double count = static_cast<double>(xs.size());
    double sum = 0.0;
    for (const double x : xs) sum += x;
    out.value = sum / count;
    if (xs.size() > 1) {
        double sq = 0.0;
        for (const double x : xs) sq += (x - out.value) * (x - out.value);
        out.std_error = std::sqrt(sq / (count - 1.0) / count);
    } else {
        out.std_error = std::numeric_limits<double>::infinity();
    }
    return out;
}

void require_batch_shape(int n, int replicas) {
    if (replicas < 1) throw EmptyBatch("replicas must be >= 1");
    if (n < 1) throw DimensionMismatch("path length must be >= 1");
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double running_max_cdf(double a) {
    return a <= 0.0 ? 0.0 : 2.0 * standard_normal_cdf(a) - 1.0;
}

template <class Cdf>
double ks_distance(std::vector<double>& sample, Cdf cdf) {
    std::sort(sample.begin(), sample.end());
    const double count = static_cast<double>(sample.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double at = cdf(sample[i]);
        worst = std::max(worst, at - static_cast<double>(i) / count);
        worst = std::max(worst, static_cast<double>(i + 1) / count - at);
    }
    return worst;
}

}  // namespace

// =============================================================================
// Simulation
// =============================================================================

TrajectoryBatch simulate(const FiniteMarkovChain& chain, int n, int replicas,
                         std::uint64_t seed, Exec exec) {
    require_batch_shape(n, replicas);
    TrajectoryBatch batch;
    batch.seed = seed;
    batch.replicas = replicas;
    batch.length = n;
    batch.states.resize(static_cast<std::size_t>(replicas) * (n + 1));

    const PathSampler sampler(chain);
    auto* out = batch.states.data();
    for_each_replica(replicas, exec, [&](int r) {
        Rng rng = replica_rng(seed, r);
        auto* row = out + static_cast<std::size_t>(r) * (n + 1);
        int state = sampler.initial_state(rng);
        row[0] = static_cast<std::int32_t>(state);
        for (int k = 1; k <= n; ++k) {
            state = sampler.step(state, rng);
            row[k] = static_cast<std::int32_t>(state);
        }
    });
    return batch;
}

// =============================================================================
// Seminorms
// =============================================================================

SeminormEstimate estimate_seminorm(const FiniteMarkovChain& chain, const StateFunction& z,
                                   std::span<const int> n_grid, int replicas,
                                   std::uint64_t seed, bool with_max, Exec exec) {
    if (z.size() != chain.n_states()) {
        throw DimensionMismatch("estimate_seminorm: state function size mismatch");
    }
    if (n_grid.empty()) throw DimensionMismatch("estimate_seminorm: empty n grid");
    for (std::size_t i = 1; i < n_grid.size(); ++i) {
        if (n_grid[i] <= n_grid[i - 1]) {
            throw DimensionMismatch("estimate_seminorm: n grid must be increasing");
        }
    }
    require_batch_shape(n_grid.front(), replicas);

    const PathSampler sampler(chain);
    const int n_max = n_grid.back();
    const std::size_t grid_size = n_grid.size();

    // Per-replica squared statistic at every grid point; replica paths are
    // prefix-stable, so one walk serves the whole grid.
    std::vector<double> stat_sq(static_cast<std::size_t>(replicas) * grid_size);
    for_each_replica(replicas, exec, [&](int r) {
        Rng rng = replica_rng(seed, r);
        int state = sampler.initial_state(rng);
        double sum = 0.0;
        double peak = 0.0;
        std::size_t slot = 0;
        for (int j = 1; j <= n_max; ++j) {
            state = sampler.step(state, rng);  // xi_j
            sum += z(state);
            peak = std::max(peak, std::abs(sum));
            if (j == n_grid[slot]) {
                const double value = with_max ? peak : std::abs(sum);
                stat_sq[static_cast<std::size_t>(r) * grid_size + slot] = value * value;
                ++slot;
            }
        }
    });

    SeminormEstimate est;
    est.n_grid.assign(n_grid.begin(), n_grid.end());
    est.with_max = with_max;
    std::vector<double> column(replicas);
    for (std::size_t slot = 0; slot < grid_size; ++slot) {
        for (int r = 0; r < replicas; ++r) {
            column[r] = stat_sq[static_cast<std::size_t>(r) * grid_size + slot];
        }
        const MaxStatistic mean_sq = mean_and_se(column);
        const double n = static_cast<double>(n_grid[slot]);
        const double value = std::sqrt(mean_sq.value / n);
        est.values.push_back(value);
        // Delta method through sqrt(mean / n); degenerate samples keep the
        // reported error positive but negligible.
        const double err = value > 0.0
                               ? mean_sq.std_error / (2.0 * std::sqrt(mean_sq.value * n))
                               : std::numeric_limits<double>::min();
        est.std_errors.push_back(err);
    }
    return est;
}

// =============================================================================
// Maximal inequalities
// =============================================================================

MaxStatistic max_sq_partial_sum(const FiniteMarkovChain& chain, const Observable& f, int n,
                                int replicas, std::uint64_t seed, Exec exec) {
    require_batch_shape(n, replicas);
    const PathSampler sampler(chain);
    const StateFunction& values = f.values();

    std::vector<double> peaks(replicas);
    for_each_replica(replicas, exec, [&](int r) {
        Rng rng = replica_rng(seed, r);
        int state = sampler.initial_state(rng);
        double sum = 0.0;
        double peak = 0.0;
        for (int i = 1; i <= n; ++i) {
            sum += values(state);  // S_i now complete
            peak = std::max(peak, sum * sum);
            if (i < n) state = sampler.step(state, rng);
        }
        peaks[r] = peak;
    });
    return mean_and_se(peaks);
}

namespace {

InequalityReport make_report(std::string id, const MaxStatistic& lhs, double rhs) {
    InequalityReport report;
    report.id = std::move(id);
    report.lhs_estimate = lhs.value;
    report.lhs_stderr = lhs.std_error;
    report.rhs_exact = rhs;
    report.margin = rhs - (lhs.value + 3.0 * lhs.std_error);
    return report;
}

}  // namespace

InequalityReport verify_rio(const FiniteMarkovChain& chain, const Observable& f, int n,
                            int replicas, std::uint64_t seed, Exec exec) {
    const MaxStatistic lhs = max_sq_partial_sum(chain, f, n, replicas, seed, exec);

    // 8n E(X_0^2) + 16 sum_{k=2}^n E|X_0 E_0(S_k - S_1)|, all terms exact.
    const double f_norm_sq = inner_product_pi(chain, f.values(), f.values());
    double conditional_part = 0.0;
    StateFunction power = f.values();
    StateFunction inner = StateFunction::Zero(chain.n_states());
    for (int k = 2; k <= n; ++k) {
        power = chain.kernel() * power;  // Q^{k-1} f
        inner += power;                  // sum_{j=1}^{k-1} Q^j f
        conditional_part +=
            (chain.pi().array() * f.values().array().abs() * inner.array().abs()).sum();
    }
    const double rhs = 8.0 * n * f_norm_sq + 16.0 * conditional_part;
    return make_report("rio", lhs, rhs);
}

InequalityReport verify_pu(const FiniteMarkovChain& chain, const Observable& f, int n,
                           int replicas, std::uint64_t seed, Exec exec) {
    const MaxStatistic lhs = max_sq_partial_sum(chain, f, n, replicas, seed, exec);

    int r = 0;
    while ((1 << r) < n) ++r;  // smallest r with n <= 2^r
    double dyadic = 0.0;
    StateFunction power = f.values();
    StateFunction cond_sum = StateFunction::Zero(chain.n_states());
    int k = 0;
    for (int j = 0; j < r; ++j) {
        const int target = 1 << j;
        while (k < target) {
            if (k > 0) power = chain.kernel() * power;
            cond_sum += power;
            ++k;
        }
        dyadic += norm_pi(chain, cond_sum) / std::pow(2.0, 0.5 * j);
    }
    const double base = 2.0 * norm_pi(chain, f.values()) + 3.0 * dyadic;
    return make_report("pu", lhs, n * base * base);
}

InequalityReport verify_dm(const FiniteMarkovChain& chain, const Observable& f, int n,
                           int replicas, std::uint64_t seed, Exec exec) {
    const DecayCertificate cert = decay_certificate(chain);
    if (!cert.valid()) {
        throw NotRegular("remote past carries conditional mass: no contraction "
                         "certificate on the centered subspace");
    }
    const MaxStatistic lhs = max_sq_partial_sum(chain, f, n, replicas, seed, exec);

    // Full projection-increment series; the certified remainder only inflates
    // the exact right-hand side by a relative 1e-13.
    const double f_norm = norm_pi(chain, f.values());
    StateFunction power = f.values();
    double prev_norm_sq = f_norm * f_norm;
    double series = 0.0;
    for (std::int64_t i = 0;; ++i) {
        power = chain.kernel() * power;
        const double next_norm_sq = inner_product_pi(chain, power, power);
        series += std::sqrt(std::max(0.0, prev_norm_sq - next_norm_sq));
        prev_norm_sq = next_norm_sq;
        const double remainder = f_norm * cert.tail_sum(i + 1);
        if (remainder <= 1e-13 * (series + 1.0)) {
            series += remainder;
            break;
        }
    }
    return make_report("dm", lhs, 4.0 * n * series * series);
}

InequalityReport verify_lw(const FiniteMarkovChain& chain, const Observable& f, int n,
                           int replicas, std::uint64_t seed, Exec exec) {
    if (!structure_flags(chain).reversible) {
        throw NotReversible("verify_lw requires a reversible chain");
    }
    const MaxStatistic lhs = max_sq_partial_sum(chain, f, n, replicas, seed, exec);
    const double covariance_sum = kv_integral(spectral_measure(chain, f));
    return make_report("lw", lhs, (24.0 * n + 3.0) * covariance_sum);
}

// =============================================================================
// FCLT statistics
// =============================================================================

double ks_to_standard_normal(std::vector<double> sample) {
    return ks_distance(sample, standard_normal_cdf);
}

double ks_to_brownian_running_max(std::vector<double> sample) {
    return ks_distance(sample, running_max_cdf);
}

double ks_threshold(int sample_size) {
    return 0.05 + 1.628 * (1.0 / std::sqrt(static_cast<double>(sample_size)) -
                           1.0 / std::sqrt(2000.0));
}

double runmax_allowance(int path_length) {
    return 1.0 / std::sqrt(static_cast<double>(path_length));
}

bool FcltReport::pass() const {
    if (terminal_distance >= threshold || runmax_distance >= runmax_threshold) {
        return false;
    }
    for (const auto& group : groups) {
        if (group.terminal_distance >= group.threshold ||
            group.runmax_distance >= group.runmax_threshold) {
            return false;
        }
    }
    return true;
}

FcltReport fclt_statistics(const FiniteMarkovChain& chain, const Observable& f, int n,
                           int replicas, std::uint64_t seed, Exec exec) {
    require_batch_shape(n, replicas);
    const double sigma2 = long_run_variance(chain, f);
    if (sigma2 <= 1e-12) {
        throw DegenerateVariance("long-run variance " + std::to_string(sigma2) +
                                 "; observable is a coboundary");
    }
    const PathSampler sampler(chain);
    const StateFunction& values = f.values();
    const double scale = 1.0 / std::sqrt(static_cast<double>(n) * sigma2);

    std::vector<double> terminal(replicas);
    std::vector<double> running_max(replicas);
    std::vector<int> initial(replicas);
    for_each_replica(replicas, exec, [&](int r) {
        Rng rng = replica_rng(seed, r);
        int state = sampler.initial_state(rng);
        initial[r] = state;
        double sum = 0.0;
        double peak = 0.0;  // S_0 = 0 participates in the running maximum
        for (int i = 1; i <= n; ++i) {
            sum += values(state);
            peak = std::max(peak, sum);
            if (i < n) state = sampler.step(state, rng);
        }
        terminal[r] = sum * scale;
        running_max[r] = peak * scale;
    });

    FcltReport report;
    report.sigma2 = sigma2;
    report.replicas = replicas;
    report.length = n;
    report.threshold = ks_threshold(replicas);
    report.runmax_threshold = report.threshold + runmax_allowance(n);
    report.terminal_distance = ks_to_standard_normal(terminal);
    report.runmax_distance = ks_to_brownian_running_max(running_max);

    std::map<int, std::vector<double>> terminal_by_state;
    std::map<int, std::vector<double>> runmax_by_state;
    for (int r = 0; r < replicas; ++r) {
        terminal_by_state[initial[r]].push_back(terminal[r]);
        runmax_by_state[initial[r]].push_back(running_max[r]);
    }
    for (auto& [state, sample] : terminal_by_state) {
        GroupKs group;
        group.state = state;
        group.count = static_cast<int>(sample.size());
        group.threshold = ks_threshold(group.count);
        group.runmax_threshold = group.threshold + runmax_allowance(n);
        group.terminal_distance = ks_to_standard_normal(std::move(sample));
        group.runmax_distance = ks_to_brownian_running_max(std::move(runmax_by_state[state]));
        report.groups.push_back(group);
    }
    return report;
}

// =============================================================================
// Residual decay
// =============================================================================

DecayCurve residual_decay_curve(const FiniteMarkovChain& chain, const Observable& f,
                                std::span<const int> n_grid, int replicas,
                                std::uint64_t seed, Exec exec) {
    if (n_grid.empty()) throw DimensionMismatch("residual_decay_curve: empty n grid");
    for (std::size_t i = 1; i < n_grid.size(); ++i) {
        if (n_grid[i] <= n_grid[i - 1]) {
            throw DimensionMismatch("residual_decay_curve: n grid must be increasing");
        }
    }
    require_batch_shape(n_grid.front(), replicas);

    const DifferenceKernel kernel = limit_diff_kernel(chain, f);
    const PathSampler sampler(chain);
    const StateFunction& values = f.values();
    const int n_max = n_grid.back();
    const std::size_t grid_size = n_grid.size();

    std::vector<double> stat(static_cast<std::size_t>(replicas) * grid_size);
    for_each_replica(replicas, exec, [&](int r) {
        Rng rng = replica_rng(seed, r);
        int state = sampler.initial_state(rng);
        double sum = 0.0;
        double mart = 0.0;
        double peak = 0.0;
        std::size_t slot = 0;
        for (int k = 1; k <= n_max; ++k) {
            const int prev = state;
            sum += values(prev);
            state = sampler.step(prev, rng);
            mart += kernel.d(prev, state);
            const double resid = sum - mart;
            peak = std::max(peak, resid * resid);
            if (k == n_grid[slot]) {
                stat[static_cast<std::size_t>(r) * grid_size + slot] =
                    peak / static_cast<double>(k);
                ++slot;
            }
        }
    });

    DecayCurve curve;
    curve.n_grid.assign(n_grid.begin(), n_grid.end());
    std::vector<double> column(replicas);
    for (std::size_t slot = 0; slot < grid_size; ++slot) {
        for (int r = 0; r < replicas; ++r) {
            column[r] = stat[static_cast<std::size_t>(r) * grid_size + slot];
        }
        const MaxStatistic stat_mean = mean_and_se(column);
        curve.values.push_back(stat_mean.value);
        curve.std_errors.push_back(stat_mean.std_error);
    }
    return curve;
}

}  // namespace martkit
