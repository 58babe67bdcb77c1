#pragma once

#include <span>
#include <vector>

#include "martkit/chain.hpp"

namespace martkit {

// =============================================================================
// Averaged correctors
// =============================================================================

// The averaging-parameter-m corrector pair: theta is the averaged conditional
// partial sum, y the averaged conditional one-step forecast.  Both are
// centered state functions and satisfy f = theta - Q theta + y.
struct AveragedCorrector {
    int m = 0;
    StateFunction theta;
    StateFunction y;
};

AveragedCorrector averaged_corrector(const FiniteMarkovChain& chain, const Observable& f,
                                     int m);

// =============================================================================
// Martingale difference kernels
// =============================================================================

// A function of one transition (x, y); conditionally centered under every row,
// so its partial sums along the chain form a martingale.
struct DifferenceKernel {
    Eigen::MatrixXd d;
    double l2_norm_sq = 0.0;  // second moment under pi (x) Q

    double operator()(int x, int y) const { return d(x, y); }
};

// Largest row-wise centering residual max_x |sum_y Q(x,y) d(x,y)|.
double conditional_centering_residual(const FiniteMarkovChain& chain,
                                      const DifferenceKernel& kernel);

// The m-indexed difference kernel d(x, y) = theta^m(y) - (Q theta^m)(x).
DifferenceKernel diff_kernel_m(const FiniteMarkovChain& chain, const Observable& f, int m);

// The limit kernel d(x, y) = g(y) - (Qg)(x) built from the Poisson potential.
// Its second moment equals the long-run variance.
DifferenceKernel limit_diff_kernel(const FiniteMarkovChain& chain, const Observable& f);

// Numerical limit of the m-indexed sequence, estimated from the kernels at m
// and 2m (the leading 1/m error term cancels).  Used by uniqueness checks.
DifferenceKernel extrapolated_limit_kernel(const FiniteMarkovChain& chain,
                                           const Observable& f, int m);

// L2 distance of two kernels under the transition law pi (x) Q.
double diff_distance(const FiniteMarkovChain& chain, const DifferenceKernel& a,
                     const DifferenceKernel& b);

// =============================================================================
// Trajectory decompositions
// =============================================================================

// Per-path bookkeeping of S_k = M_k + R_k, plus the corrector identity
// S_k = M_k + theta(xi_0) - theta(xi_k) + rbar_k when an m-kernel is used.
struct DecompositionTrace {
    std::vector<int> states;
    std::vector<double> partial_sums;     // S_0 .. S_n
    std::vector<double> martingale_part;  // M_0 .. M_n
    std::vector<double> residual;         // R_k = S_k - M_k
    // Present only when a corrector is supplied:
    std::vector<double> theta_path;  // theta(xi_k)
    std::vector<double> rbar;        // running sums of y along the path
    bool has_corrector = false;
    int m = 0;
};

DecompositionTrace decompose_trajectory(const FiniteMarkovChain& chain, const Observable& f,
                                        std::span<const int> path,
                                        const DifferenceKernel& kernel,
                                        const AveragedCorrector* corrector = nullptr);

// A Monte Carlo point estimate with its standard error.
struct MaxStatistic {
    double value = 0.0;
    double std_error = 0.0;
};

// Mean over traces of max_{1<=j<=n} R_j^2 divided by n.
MaxStatistic residual_max_statistic(std::span<const DecompositionTrace> traces, int n);

}  // namespace martkit
