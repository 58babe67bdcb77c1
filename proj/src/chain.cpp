#include "martkit/chain.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <string>

namespace martkit {

namespace {

void require_same_size(const FiniteMarkovChain& chain, const StateFunction& h,
                       const char* where) {
    if (h.size() != chain.n_states()) {
        throw DimensionMismatch(std::string(where) + ": state function has length " +
                                std::to_string(h.size()) + ", chain has " +
                                std::to_string(chain.n_states()) + " states");
    }
}

}  // namespace

// =============================================================================
// Construction
// =============================================================================

FiniteMarkovChain build_chain(const Eigen::MatrixXd& kernel) {
    const auto n = kernel.rows();
    if (n == 0 || kernel.cols() != n) {
        throw NonStochasticRow("kernel must be a non-empty square matrix");
    }
    if (!kernel.allFinite()) {
        throw NonStochasticRow("kernel has non-finite entries");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (kernel.row(i).minCoeff() < 0.0) {
            throw NonStochasticRow("negative entry in row " + std::to_string(i));
        }
        const double row_sum = kernel.row(i).sum();
        if (std::abs(row_sum - 1.0) > tol::kRowSum) {
            throw NonStochasticRow("row " + std::to_string(i) + " sums to " +
                                   std::to_string(row_sum));
        }
    }

    // Renormalize rows so the stored kernel meets the tight invariant even
    // when the input only met the looser acceptance threshold.
    Eigen::MatrixXd q = kernel;
    for (Eigen::Index i = 0; i < n; ++i) {
        q.row(i) /= q.row(i).sum();
    }

    // Stationary law: left fixed vector of Q, i.e. the kernel of (Q^T - I).
    Eigen::MatrixXd a = q.transpose() - Eigen::MatrixXd::Identity(n, n);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-10);
    if (lu.dimensionOfKernel() != 1) {
        throw ReducibleChain("stationary law is not unique (kernel dimension " +
                             std::to_string(lu.dimensionOfKernel()) + ")");
    }
    Eigen::VectorXd pi = lu.kernel().col(0);
    pi /= pi.sum();
    if (pi.minCoeff() <= 1e-13) {
        throw ReducibleChain("stationary law has a non-positive entry; chain has "
                             "transient states");
    }

    // Stationarity residual must be far below the validation tolerance.
    const double resid = (pi.transpose() * q - pi.transpose()).cwiseAbs().maxCoeff();
    if (resid > tol::kResidual) {
        throw ReducibleChain("stationary residual " + std::to_string(resid));
    }
    return FiniteMarkovChain(std::move(q), std::move(pi));
}

Observable::Observable(const FiniteMarkovChain& chain, StateFunction values)
    : values_(std::move(values)) {
    require_same_size(chain, values_, "Observable");
    const double mean = chain.pi().dot(values_);
    if (std::abs(mean) > tol::kInput) {
        throw ValidationError("observable is not centered: pi.f = " + std::to_string(mean));
    }
}

Observable Observable::centered(const FiniteMarkovChain& chain, StateFunction values) {
    require_same_size(chain, values, "Observable::centered");
    values.array() -= chain.pi().dot(values);
    return Observable(std::move(values));
}

// =============================================================================
// Operator action
// =============================================================================

StateFunction apply_operator(const FiniteMarkovChain& chain, const StateFunction& h,
                             int power) {
    require_same_size(chain, h, "apply_operator");
    if (power < 0) {
        throw DimensionMismatch("apply_operator: power must be non-negative");
    }
    StateFunction out = h;
    for (int j = 0; j < power; ++j) {
        out = chain.kernel() * out;
    }
    return out;
}

StateFunction conditional_sum(const FiniteMarkovChain& chain, const Observable& f, int k) {
    if (k < 1) {
        throw DimensionMismatch("conditional_sum: k must be >= 1");
    }
    StateFunction term = f.values();
    StateFunction sum = term;
    for (int j = 1; j < k; ++j) {
        term = chain.kernel() * term;
        sum += term;
    }
    return sum;
}

double inner_product_pi(const FiniteMarkovChain& chain, const StateFunction& g,
                        const StateFunction& h) {
    require_same_size(chain, g, "inner_product_pi");
    require_same_size(chain, h, "inner_product_pi");
    return (chain.pi().array() * g.array() * h.array()).sum();
}

double norm_pi(const FiniteMarkovChain& chain, const StateFunction& h) {
    return std::sqrt(std::max(0.0, inner_product_pi(chain, h, h)));
}

// =============================================================================
// Poisson equation and the long-run variance
// =============================================================================

StateFunction poisson_solve(const FiniteMarkovChain& chain, const Observable& f) {
    const int n = chain.n_states();
    // (I - Q + 1 pi^T) is nonsingular on an irreducible chain and its solution
    // satisfies both (I - Q) g = f and pi.g = 0.
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - chain.kernel();
    a.noalias() += Eigen::VectorXd::Ones(n) * chain.pi().transpose();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    StateFunction g = lu.solve(f.values());

    const StateFunction resid =
        (Eigen::MatrixXd::Identity(n, n) - chain.kernel()) * g - f.values();
    const double resid_norm = norm_pi(chain, resid);
    const double centering = std::abs(chain.pi().dot(g));
    if (!(resid_norm <= tol::kResidual) || !(centering <= tol::kResidual)) {
        throw SingularSystem("Poisson solve failed: residual " + std::to_string(resid_norm) +
                             ", centering " + std::to_string(centering));
    }
    return g;
}

double long_run_variance(const FiniteMarkovChain& chain, const Observable& f) {
    const StateFunction g = poisson_solve(chain, f);
    const StateFunction qg = chain.kernel() * g;
    const double from_potential =
        inner_product_pi(chain, g, g) - inner_product_pi(chain, qg, qg);

    // Independent route: ||f||^2 + 2 sum_k <f, Q^k f>, truncated once the
    // certified tail falls below the residual tolerance.
    const DecayCertificate cert = decay_certificate(chain);
    const double f_norm_sq = inner_product_pi(chain, f.values(), f.values());
    if (f_norm_sq == 0.0) {
        return 0.0;
    }
    if (!cert.valid()) {
        throw SeriesNotConverged("no contraction certificate on the centered subspace");
    }
    std::int64_t cutoff = 1;
    while (2.0 * f_norm_sq * cert.tail_sum(cutoff + 1) > tol::kResidual) {
        ++cutoff;
        if (cutoff > 1000000) {
            throw SeriesNotConverged("covariance tail not certified below tolerance by k = 1e6");
        }
    }
    double from_series = f_norm_sq;
    StateFunction v = f.values();
    for (std::int64_t k = 1; k <= cutoff; ++k) {
        v = chain.kernel() * v;
        from_series += 2.0 * inner_product_pi(chain, f.values(), v);
    }

    if (std::abs(from_potential - from_series) > tol::kCrossCheck) {
        throw ConsistencyError("long-run variance routes disagree: " +
                               std::to_string(from_potential) + " vs " +
                               std::to_string(from_series));
    }
    return from_potential;
}

// =============================================================================
// Decay certification
// =============================================================================

double DecayCertificate::norm_factor(std::int64_t k) const {
    if (!valid()) return 1.0;
    const std::int64_t q = k / power;
    return q == 0 ? 1.0 : std::pow(factor, static_cast<double>(q));
}

namespace {

double geometric_block_tail(std::int64_t k0, int p, double beta) {
    // sum_{k>=k0} beta^{floor(k/p)} for beta in [0,1).
    const std::int64_t q0 = k0 / p;
    const std::int64_t s0 = k0 - q0 * p;
    const double head = static_cast<double>(p - s0) *
                        (q0 == 0 ? 1.0 : std::pow(beta, static_cast<double>(q0)));
    const double rest = static_cast<double>(p) *
                        std::pow(beta, static_cast<double>(q0 + 1)) / (1.0 - beta);
    return head + rest;
}

}  // namespace

double DecayCertificate::tail_sum(std::int64_t k0) const {
    if (!valid()) return std::numeric_limits<double>::infinity();
    return geometric_block_tail(k0, power, factor);
}

double DecayCertificate::tail_sum_squared(std::int64_t k0) const {
    if (!valid()) return std::numeric_limits<double>::infinity();
    return geometric_block_tail(k0, power, factor * factor);
}

Eigen::MatrixXd conjugated_operator(const FiniteMarkovChain& chain) {
    const Eigen::VectorXd s = chain.pi().cwiseSqrt();
    return s.asDiagonal() * chain.kernel() * s.cwiseInverse().asDiagonal();
}

namespace {

// Q restricted to the centered subspace, expressed in the Euclidean geometry:
// M - u u^T with u = sqrt(pi).  Its powers are exactly M^k - u u^T.
Eigen::MatrixXd restricted_operator(const FiniteMarkovChain& chain) {
    const Eigen::VectorXd u = chain.pi().cwiseSqrt();
    return conjugated_operator(chain) - u * u.transpose();
}

}  // namespace

DecayCertificate decay_certificate(const FiniteMarkovChain& chain) {
    Eigen::MatrixXd cur = restricted_operator(chain);
    int power = 1;
    while (power <= (1 << 20)) {
        const double beta =
            Eigen::JacobiSVD<Eigen::MatrixXd>(cur).singularValues()(0);
        if (beta <= 0.7) {
            return DecayCertificate{power, beta};
        }
        cur = cur * cur;
        power *= 2;
    }
    return DecayCertificate{};
}

double l20_spectral_radius(const FiniteMarkovChain& chain) {
    const Eigen::VectorXcd eigs =
        Eigen::EigenSolver<Eigen::MatrixXd>(restricted_operator(chain), false).eigenvalues();
    return eigs.cwiseAbs().maxCoeff();
}

}  // namespace martkit
