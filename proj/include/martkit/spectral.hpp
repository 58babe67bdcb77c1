#pragma once

#include <complex>
#include <vector>

#include "martkit/chain.hpp"

namespace martkit {

// =============================================================================
// Structure detection
// =============================================================================

struct StructureFlags {
    bool reversible = false;  // detailed balance: pi(x)Q(x,y) = pi(y)Q(y,x)
    bool normal = false;      // the weighted operator commutes with its adjoint
};

StructureFlags structure_flags(const FiniteMarkovChain& chain);

// =============================================================================
// Spectral measure
// =============================================================================

// Eigenvalue/weight pairs of the weighted Markov operator as seen by an
// observable.  Points are real for reversible chains and lie in the closed
// unit disk for normal ones; the weights add up to ||f||^2.
struct SpectralMeasure {
    std::vector<std::complex<double>> points;
    std::vector<double> weights;
    bool reversible = false;
    bool conditioning_warning = false;  // tiny stationary weights amplify error

    double total_weight() const;
};

// Diagonalizes the weighted operator (symmetric eigensolver when reversible,
// unitary Schur otherwise).  Throws NotNormalOperator for non-normal chains
// and WeightAtOne if the observable carries mass on the invariant direction.
SpectralMeasure spectral_measure(const FiniteMarkovChain& chain, const Observable& f);

// =============================================================================
// Spectral integrals and bounds
// =============================================================================

// Integral of 1/(1 - t) against a reversible measure; equals the summed
// covariance series of the observable.
double kv_integral(const SpectralMeasure& measure);

// The 27-constant bound on the squared running-max seminorm of the averaged
// forecast at parameter m, evaluated atom by atom on a reversible measure.
double reversible_seminorm_bound(const SpectralMeasure& measure, int m);

struct NormalBounds {
    double normcond_integral = 0.0;  // integral of 1/|1 - z|
    double plus_bound = 0.0;         // 4-constant bound on the no-max seminorm
};

NormalBounds normal_integral_and_bound(const SpectralMeasure& measure, int m);

// Spectral-side value of ||E_0(S_k)||^2; asserts agreement with the
// projective route through conditional_sum within tol::kPathIdentity.
double conditional_norm_identity(const FiniteMarkovChain& chain, const Observable& f,
                                 const SpectralMeasure& measure, int k);

}  // namespace martkit
