#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "martkit/errors.hpp"

namespace martkit {

// A real-valued function on the state space, stored one value per state.
using StateFunction = Eigen::VectorXd;

// Tolerances used throughout the toolkit.  Input validation is tightest,
// linear-system residuals get one order of slack, and cross-checks between
// independent computation routes get two.
namespace tol {
inline constexpr double kInput = 1e-12;
inline constexpr double kRowSum = 1e-9;
inline constexpr double kResidual = 1e-10;
inline constexpr double kCrossCheck = 1e-8;
inline constexpr double kPathIdentity = 1e-9;
}  // namespace tol

// =============================================================================
// FiniteMarkovChain
// =============================================================================

// An irreducible finite-state chain: row-stochastic kernel plus its unique
// stationary law.  Immutable after construction; safe to share across threads.
class FiniteMarkovChain {
public:
    int n_states() const { return static_cast<int>(kernel_.rows()); }
    const Eigen::MatrixXd& kernel() const { return kernel_; }
    const Eigen::VectorXd& pi() const { return pi_; }

    // True when some stationary weight is small enough that conjugation by
    // pi^{1/2} starts to amplify rounding error.
    bool poorly_conditioned_pi() const { return pi_.minCoeff() < 1e-6; }

private:
    friend FiniteMarkovChain build_chain(const Eigen::MatrixXd& kernel);
    FiniteMarkovChain(Eigen::MatrixXd kernel, Eigen::VectorXd pi)
        : kernel_(std::move(kernel)), pi_(std::move(pi)) {}

    Eigen::MatrixXd kernel_;
    Eigen::VectorXd pi_;
};

// Validates the kernel, renormalizes rows, and solves the stationary
// fixed-point system.  Throws NonStochasticRow or ReducibleChain.
FiniteMarkovChain build_chain(const Eigen::MatrixXd& kernel);

// =============================================================================
// Observable
// =============================================================================

// A centered square-integrable function of the state: the per-step summand
// of the partial-sum process.
class Observable {
public:
    // Validates centering against the stationary law (tolerance tol::kInput).
    Observable(const FiniteMarkovChain& chain, StateFunction values);

    // Centers an arbitrary state function before wrapping it.
    static Observable centered(const FiniteMarkovChain& chain, StateFunction values);

    const StateFunction& values() const { return values_; }

private:
    explicit Observable(StateFunction values) : values_(std::move(values)) {}
    StateFunction values_;
};

// =============================================================================
// Operator action and the weighted geometry
// =============================================================================

// Returns Q^power h; power 0 is the identity.
StateFunction apply_operator(const FiniteMarkovChain& chain, const StateFunction& h, int power);

// Sum of the first k conditional expectations of the partial sum given the
// starting state: x -> sum_{j=0}^{k-1} (Q^j f)(x), k >= 1.
StateFunction conditional_sum(const FiniteMarkovChain& chain, const Observable& f, int k);

// Inner product and norm weighted by the stationary law.
double inner_product_pi(const FiniteMarkovChain& chain, const StateFunction& g,
                        const StateFunction& h);
double norm_pi(const FiniteMarkovChain& chain, const StateFunction& h);

// Solves (I - Q) g = f with pi.g = 0.  Throws SingularSystem when the
// centered subspace carries an eigenvalue-1 pathology.
StateFunction poisson_solve(const FiniteMarkovChain& chain, const Observable& f);

// Long-run variance of the partial sums: computed from the Poisson potential
// and cross-checked against the covariance series (tolerance tol::kCrossCheck).
// Throws SeriesNotConverged when the centered spectral radius is ~1.
double long_run_variance(const FiniteMarkovChain& chain, const Observable& f);

// =============================================================================
// Certified geometric decay on the centered subspace
// =============================================================================

// A pair (power, factor) with ||Q^power h|| <= factor * ||h|| for every
// centered h, factor < 1.  Certifies geometric tails of all the projective
// series: ||Q^k h|| <= factor^{floor(k/power)} ||h||.
struct DecayCertificate {
    int power = 0;
    double factor = 1.0;

    bool valid() const { return power > 0 && factor < 1.0; }

    // factor^{floor(k/power)}, the certified bound on ||Q^k|_{L^2_0}||.
    double norm_factor(std::int64_t k) const;

    // sum_{k>=k0} norm_factor(k), in closed form.
    double tail_sum(std::int64_t k0) const;

    // sum_{k>=k0} norm_factor(k)^2.
    double tail_sum_squared(std::int64_t k0) const;

    // sum_{k>=0} norm_factor(k) = power / (1 - factor).
    double series_sum() const { return tail_sum(0); }
};

// Searches powers 1, 2, 4, ... of the restricted operator for a contraction
// factor <= 0.7.  Gives an invalid certificate when none is found by 2^20,
// which signals spectral radius ~1 on the centered subspace.
DecayCertificate decay_certificate(const FiniteMarkovChain& chain);

// Largest eigenvalue modulus of Q restricted to the centered subspace
// (an estimate, not a certified operator bound).
double l20_spectral_radius(const FiniteMarkovChain& chain);

// The pi-weighted conjugation D^{1/2} Q D^{-1/2}; maps the weighted geometry
// onto the Euclidean one.
Eigen::MatrixXd conjugated_operator(const FiniteMarkovChain& chain);

}  // namespace martkit
