#pragma once

#include <vector>

#include "martkit/chain.hpp"
#include "martkit/series.hpp"

namespace martkit {

// =============================================================================
// Projective series criteria
// =============================================================================

// sum_k ||E_0(S_k)|| / k^{3/2}, truncated at K with a certified tail.
CriterionReport maxwell_woodroofe(const FiniteMarkovChain& chain, const Observable& f,
                                  int truncation);

// sum_n ||Q^n f|| / sqrt(n).
CriterionReport projective_series(const FiniteMarkovChain& chain, const Observable& f,
                                  int truncation);

// Gamma_j profiles sum_{k>=j} E|X_j E_0(X_k)| for j = 0..j_max, with their
// Cesaro averages.  partial_sums holds the cumulative sums over j.
CriterionReport rio_gamma_profile(const FiniteMarkovChain& chain, const Observable& f,
                                  int j_max, int truncation);

// Projection increments sqrt(||Q^i f||^2 - ||Q^{i+1} f||^2) plus the
// regularity check that the remote past carries no conditional mass.
CriterionReport hannan_profile(const FiniteMarkovChain& chain, const Observable& f,
                               int truncation);

// sum_k ||E_0(S_k)||^2 / k^2 together with sum_k ||E_0(X_k)||^2 (in detail).
CriterionReport gap_and_cor2(const FiniteMarkovChain& chain, const Observable& f,
                             int truncation);

// =============================================================================
// Mixing coefficients
// =============================================================================

// Maximal correlation between functions of the current state and of the state
// n steps ahead: the second singular value of the weighted n-step operator.
double rho_coefficient(const FiniteMarkovChain& chain, int n);

// sum_k rho(2^k) for k = 1..K with a certified tail.
CriterionReport rho_dyadic_series(const FiniteMarkovChain& chain, int truncation);

enum class AlphaMode { Auto, Exact, Bound };

struct AlphaValue {
    double value = 0.0;
    bool is_upper_bound = false;  // total-variation bound above the exact cap
};

inline constexpr int kAlphaExactMaxStates = 20;

// Strong mixing coefficient between the current state and the state n steps
// ahead.  Exact mode enumerates all 2^n_states events (capped at 20 states);
// bound mode aggregates total variation instead.
AlphaValue alpha_coefficient(const FiniteMarkovChain& chain, int n,
                             AlphaMode mode = AlphaMode::Auto);

// =============================================================================
// Quantile machinery
// =============================================================================

// Right-continuous non-increasing step function on [0, 1]: the cadlag inverse
// of the exceedance function t -> P(|X_0| > t).
struct QuantileFunction {
    std::vector<double> breakpoints;  // ascending, first entry 0
    std::vector<double> values;       // value on [breakpoints[i], breakpoints[i+1])

    double operator()(double u) const;
};

QuantileFunction quantile_function(const FiniteMarkovChain& chain, const Observable& f);

// sum_k E[X_0^2 1{|X_0| >= Q(2 alpha_k)}], evaluated literally with the ">="
// convention.  On a finite chain the summand stabilizes at the mass of the
// top atom once 2 alpha_k falls below every positive exceedance probability,
// so the literal series diverges unless that mass is zero; the report states
// this instead of reinterpreting the condition.
CriterionReport dmr_series(const FiniteMarkovChain& chain, const Observable& f,
                           int truncation);

}  // namespace martkit
