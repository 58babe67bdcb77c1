#include "martkit/martingale.hpp"

#include <cmath>
#include <string>

namespace martkit {

namespace {

// Kernel of x -> y differences built from a potential-like state function h:
// d(x, y) = h(y) - (Qh)(x).  Conditionally centered by construction.
DifferenceKernel kernel_from_potential(const FiniteMarkovChain& chain,
                                       const StateFunction& h) {
    const int n = chain.n_states();
    const StateFunction qh = chain.kernel() * h;
    DifferenceKernel out;
    out.d.resize(n, n);
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            out.d(x, y) = h(y) - qh(x);
        }
    }
    double norm_sq = 0.0;
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            norm_sq += chain.pi()(x) * chain.kernel()(x, y) * out.d(x, y) * out.d(x, y);
        }
    }
    out.l2_norm_sq = norm_sq;
    return out;
}

StateFunction theta_state_function(const FiniteMarkovChain& chain, const Observable& f,
                                   int m) {
    // theta^m = sum_{j<m} (1 - j/m) Q^j f, the average of the first m
    // conditional partial sums.
    StateFunction power = f.values();
    StateFunction theta = power;  // j = 0 term, weight 1
    for (int j = 1; j < m; ++j) {
        power = chain.kernel() * power;
        theta += (1.0 - static_cast<double>(j) / m) * power;
    }
    return theta;
}

}  // namespace

// =============================================================================
// Correctors
// =============================================================================

AveragedCorrector averaged_corrector(const FiniteMarkovChain& chain, const Observable& f,
                                     int m) {
    if (m < 1) {
        throw DimensionMismatch("averaged_corrector: m must be >= 1");
    }
    AveragedCorrector out;
    out.m = m;
    out.theta = theta_state_function(chain, f, m);

    // y^m = (1/m)(Qf + ... + Q^m f)
    StateFunction power = f.values();
    StateFunction acc = StateFunction::Zero(chain.n_states());
    for (int i = 1; i <= m; ++i) {
        power = chain.kernel() * power;
        acc += power;
    }
    out.y = acc / static_cast<double>(m);

    // The defining identity f = theta - Q theta + y holds algebraically;
    // a large residual means the operator arithmetic went wrong.
    const StateFunction resid =
        out.theta - chain.kernel() * out.theta + out.y - f.values();
    if (resid.cwiseAbs().maxCoeff() > tol::kResidual) {
        throw ConsistencyError("averaged corrector identity residual " +
                               std::to_string(resid.cwiseAbs().maxCoeff()));
    }
    return out;
}

// =============================================================================
// Difference kernels
// =============================================================================

double conditional_centering_residual(const FiniteMarkovChain& chain,
                                      const DifferenceKernel& kernel) {
    if (kernel.d.rows() != chain.n_states() || kernel.d.cols() != chain.n_states()) {
        throw DimensionMismatch("difference kernel size does not match chain");
    }
    double worst = 0.0;
    for (int x = 0; x < chain.n_states(); ++x) {
        worst = std::max(worst, std::abs(chain.kernel().row(x).dot(kernel.d.row(x))));
    }
    return worst;
}

DifferenceKernel diff_kernel_m(const FiniteMarkovChain& chain, const Observable& f, int m) {
    if (m < 1) {
        throw DimensionMismatch("diff_kernel_m: m must be >= 1");
    }
    return kernel_from_potential(chain, theta_state_function(chain, f, m));
}

DifferenceKernel limit_diff_kernel(const FiniteMarkovChain& chain, const Observable& f) {
    return kernel_from_potential(chain, poisson_solve(chain, f));
}

DifferenceKernel extrapolated_limit_kernel(const FiniteMarkovChain& chain,
                                           const Observable& f, int m) {
    if (m < 1) {
        throw DimensionMismatch("extrapolated_limit_kernel: m must be >= 1");
    }
    // The kernels are linear in theta^m, so 2 theta^{2m} - theta^m removes the
    // 1/m term of the corrector error and leaves a geometrically small rest.
    const StateFunction h =
        2.0 * theta_state_function(chain, f, 2 * m) - theta_state_function(chain, f, m);
    return kernel_from_potential(chain, h);
}

double diff_distance(const FiniteMarkovChain& chain, const DifferenceKernel& a,
                     const DifferenceKernel& b) {
    const int n = chain.n_states();
    if (a.d.rows() != n || b.d.rows() != n || a.d.cols() != n || b.d.cols() != n) {
        throw DimensionMismatch("diff_distance: kernel sizes do not match chain");
    }
    double acc = 0.0;
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            const double delta = a.d(x, y) - b.d(x, y);
            acc += chain.pi()(x) * chain.kernel()(x, y) * delta * delta;
        }
    }
    return std::sqrt(acc);
}

// =============================================================================
// Path decompositions
// =============================================================================

DecompositionTrace decompose_trajectory(const FiniteMarkovChain& chain, const Observable& f,
                                        std::span<const int> path,
                                        const DifferenceKernel& kernel,
                                        const AveragedCorrector* corrector) {
    const int n = chain.n_states();
    for (const int s : path) {
        if (s < 0 || s >= n) {
            throw InvalidState("path state " + std::to_string(s) + " out of range");
        }
    }
    if (kernel.d.rows() != n || kernel.d.cols() != n) {
        throw DimensionMismatch("decompose_trajectory: kernel size does not match chain");
    }

    DecompositionTrace trace;
    trace.states.assign(path.begin(), path.end());
    const std::size_t steps = path.empty() ? 0 : path.size() - 1;

    trace.partial_sums.resize(steps + (path.empty() ? 0 : 1));
    trace.martingale_part.resize(trace.partial_sums.size());
    trace.residual.resize(trace.partial_sums.size());
    if (path.empty()) {
        return trace;
    }

    trace.partial_sums[0] = 0.0;
    trace.martingale_part[0] = 0.0;
    trace.residual[0] = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
        trace.partial_sums[k] = trace.partial_sums[k - 1] + f.values()(path[k - 1]);
        trace.martingale_part[k] =
            trace.martingale_part[k - 1] + kernel.d(path[k - 1], path[k]);
        trace.residual[k] = trace.partial_sums[k] - trace.martingale_part[k];
    }

    if (corrector != nullptr) {
        trace.has_corrector = true;
        trace.m = corrector->m;
        trace.theta_path.resize(path.size());
        trace.rbar.resize(path.size());
        for (std::size_t k = 0; k < path.size(); ++k) {
            trace.theta_path[k] = corrector->theta(path[k]);
        }
        trace.rbar[0] = 0.0;
        for (std::size_t k = 1; k <= steps; ++k) {
            trace.rbar[k] = trace.rbar[k - 1] + corrector->y(path[k - 1]);
        }
    }
    return trace;
}

MaxStatistic residual_max_statistic(std::span<const DecompositionTrace> traces, int n) {
    if (traces.empty()) {
        throw EmptyBatch("residual_max_statistic: no traces");
    }
    if (n < 1) {
        throw DimensionMismatch("residual_max_statistic: n must be >= 1");
    }
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto& trace : traces) {
        if (trace.residual.size() < static_cast<std::size_t>(n) + 1) {
            throw DimensionMismatch("residual_max_statistic: trace shorter than n");
        }
        double peak = 0.0;
        for (int j = 1; j <= n; ++j) {
            peak = std::max(peak, trace.residual[j] * trace.residual[j]);
        }
        const double scaled = peak / static_cast<double>(n);
        sum += scaled;
        sum_sq += scaled * scaled;
    }
    const double count = static_cast<double>(traces.size());
    MaxStatistic out;
    out.value = sum / count;
    if (traces.size() > 1) {
        const double var = std::max(0.0, (sum_sq - sum * sum / count) / (count - 1.0));
        out.std_error = std::sqrt(var / count);
    } else {
        out.std_error = std::numeric_limits<double>::infinity();
    }
    return out;
}

}  // namespace martkit
