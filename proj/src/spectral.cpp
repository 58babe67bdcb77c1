#include "martkit/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>
#include <string>

namespace martkit {

namespace {

constexpr double kStructureTol = 1e-10;
constexpr double kWeightAtOneTol = 1e-10;
constexpr double kDiskOvershoot = 1e-12;

std::complex<double> geometric_partial(std::complex<double> z, int m) {
    // 1 + z + ... + z^{m-1}, summed directly; m stays desk-scale.
    std::complex<double> acc(0.0, 0.0);
    std::complex<double> p(1.0, 0.0);
    for (int j = 0; j < m; ++j) {
        acc += p;
        p *= z;
    }
    return acc;
}

void check_unit_disk(std::complex<double>& z) {
    const double mag = std::abs(z);
    if (mag > 1.0 + kDiskOvershoot) {
        throw NotNormalOperator("eigenvalue modulus " + std::to_string(mag) +
                                " exceeds the unit disk beyond rounding");
    }
    if (mag > 1.0) {
        z /= mag;  // project machine-precision overshoot back to the disk
    }
}

bool weight_sits_at_one(const std::complex<double>& z, double w) {
    return std::abs(z - 1.0) < kWeightAtOneTol && w > kWeightAtOneTol;
}

}  // namespace

// =============================================================================
// Structure flags
// =============================================================================

StructureFlags structure_flags(const FiniteMarkovChain& chain) {
    const int n = chain.n_states();
    StructureFlags flags;

    double balance = 0.0;
    for (int x = 0; x < n; ++x) {
        for (int y = x + 1; y < n; ++y) {
            balance = std::max(balance,
                               std::abs(chain.pi()(x) * chain.kernel()(x, y) -
                                        chain.pi()(y) * chain.kernel()(y, x)));
        }
    }
    flags.reversible = balance <= kStructureTol;

    const Eigen::MatrixXd m = conjugated_operator(chain);
    const Eigen::MatrixXd commutator = m * m.transpose() - m.transpose() * m;
    flags.normal = commutator.norm() <= kStructureTol;

    // Detailed balance makes the weighted operator self-adjoint, hence normal;
    // keep the implication even when conjugation noise inflates the commutator.
    if (flags.reversible) flags.normal = true;
    return flags;
}

// =============================================================================
// Spectral measure
// =============================================================================

double SpectralMeasure::total_weight() const {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

SpectralMeasure spectral_measure(const FiniteMarkovChain& chain, const Observable& f) {
    const StructureFlags flags = structure_flags(chain);
    if (!flags.normal) {
        throw NotNormalOperator("spectral_measure requires a normal Markov operator");
    }
    const int n = chain.n_states();
    const Eigen::VectorXd f_tilde =
        chain.pi().cwiseSqrt().asDiagonal() * f.values();

    SpectralMeasure measure;
    measure.reversible = flags.reversible;
    measure.conditioning_warning = chain.poorly_conditioned_pi();
    measure.points.reserve(n);
    measure.weights.reserve(n);

    if (flags.reversible) {
        // Symmetrize to remove conjugation roundoff before the eigensolve.
        const Eigen::MatrixXd m = conjugated_operator(chain);
        const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
        for (int i = 0; i < n; ++i) {
            std::complex<double> z(solver.eigenvalues()(i), 0.0);
            check_unit_disk(z);
            const double proj = solver.eigenvectors().col(i).dot(f_tilde);
            measure.points.push_back(z);
            measure.weights.push_back(proj * proj);
        }
    } else {
        // For a normal operator the Schur form is diagonal and the Schur basis
        // is unitary, which keeps the weights exactly conservative.
        const Eigen::MatrixXcd m = conjugated_operator(chain).cast<std::complex<double>>();
        Eigen::ComplexSchur<Eigen::MatrixXcd> schur(m);
        const Eigen::MatrixXcd& t = schur.matrixT();
        double off_diag = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                off_diag += std::norm(t(i, j));
            }
        }
        if (std::sqrt(off_diag) > 1e-8) {
            throw NotNormalOperator("Schur form is not diagonal: off-diagonal mass " +
                                    std::to_string(std::sqrt(off_diag)));
        }
        const Eigen::VectorXcd coeffs =
            schur.matrixU().adjoint() * f_tilde.cast<std::complex<double>>();
        for (int i = 0; i < n; ++i) {
            std::complex<double> z = t(i, i);
            check_unit_disk(z);
            measure.points.push_back(z);
            measure.weights.push_back(std::norm(coeffs(i)));
        }
    }

    for (std::size_t i = 0; i < measure.points.size(); ++i) {
        if (weight_sits_at_one(measure.points[i], measure.weights[i])) {
            throw WeightAtOne("centered observable carries weight " +
                              std::to_string(measure.weights[i]) + " at eigenvalue 1");
        }
    }
    return measure;
}

// =============================================================================
// Integrals and bounds
// =============================================================================

double kv_integral(const SpectralMeasure& measure) {
    if (!measure.reversible) {
        throw NotReversible("kv_integral requires a reversible spectral measure");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < measure.points.size(); ++i) {
        const double lambda = measure.points[i].real();
        const double w = measure.weights[i];
        if (std::abs(1.0 - lambda) < kWeightAtOneTol) {
            if (w > kWeightAtOneTol) {
                throw WeightAtOne("kv_integral: weight at eigenvalue 1");
            }
            continue;  // the invariant direction carries no observable mass
        }
        acc += w / (1.0 - lambda);
    }
    return acc;
}

double reversible_seminorm_bound(const SpectralMeasure& measure, int m) {
    if (!measure.reversible) {
        throw NotReversible("reversible_seminorm_bound requires a reversible measure");
    }
    if (m < 1) {
        throw DimensionMismatch("reversible_seminorm_bound: m must be >= 1");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < measure.points.size(); ++i) {
        const double lambda = measure.points[i].real();
        const double w = measure.weights[i];
        if (std::abs(1.0 - lambda) < kWeightAtOneTol) {
            if (w > kWeightAtOneTol) {
                throw WeightAtOne("reversible_seminorm_bound: weight at eigenvalue 1");
            }
            continue;
        }
        const double partial = geometric_partial({lambda, 0.0}, m).real();
        acc += w * partial * partial / (1.0 - lambda);
    }
    return 27.0 * acc / (static_cast<double>(m) * static_cast<double>(m));
}

NormalBounds normal_integral_and_bound(const SpectralMeasure& measure, int m) {
    if (m < 1) {
        throw DimensionMismatch("normal_integral_and_bound: m must be >= 1");
    }
    NormalBounds out;
    for (std::size_t i = 0; i < measure.points.size(); ++i) {
        const std::complex<double> z = measure.points[i];
        const double w = measure.weights[i];
        const double gap = std::abs(1.0 - z);
        if (gap < kWeightAtOneTol) {
            if (w > kWeightAtOneTol) {
                throw WeightAtOne("normal_integral_and_bound: weight at eigenvalue 1");
            }
            continue;
        }
        out.normcond_integral += w / gap;
        const double partial = std::abs(geometric_partial(z, m));
        out.plus_bound += w * partial * partial / gap;
    }
    out.plus_bound *= 4.0 / (static_cast<double>(m) * static_cast<double>(m));
    return out;
}

double conditional_norm_identity(const FiniteMarkovChain& chain, const Observable& f,
                                 const SpectralMeasure& measure, int k) {
    if (k < 1) {
        throw DimensionMismatch("conditional_norm_identity: k must be >= 1");
    }
    double spectral_side = 0.0;
    for (std::size_t i = 0; i < measure.points.size(); ++i) {
        const double partial = std::abs(geometric_partial(measure.points[i], k));
        spectral_side += measure.weights[i] * partial * partial;
    }
    const double proj = norm_pi(chain, conditional_sum(chain, f, k));
    const double projective_side = proj * proj;
    if (std::abs(spectral_side - projective_side) > tol::kPathIdentity) {
        throw NotNormalOperator("conditional norm identity failed: spectral " +
                                std::to_string(spectral_side) + " vs projective " +
                                std::to_string(projective_side));
    }
    return spectral_side;
}

}  // namespace martkit
