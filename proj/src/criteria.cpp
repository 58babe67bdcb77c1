#include "martkit/criteria.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace martkit {

namespace {

constexpr double kSigmaOneTol = 1e-10;

Verdict verdict_from_tail(const DecayCertificate& cert, double tail_bound) {
    if (!cert.valid() || !std::isfinite(tail_bound)) return Verdict::Inconclusive;
    return tail_bound == 0.0 ? Verdict::Satisfied : Verdict::SatisfiedWithTailBound;
}

Eigen::MatrixXd matrix_power(Eigen::MatrixXd base, long exponent) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(base.rows(), base.cols());
    while (exponent > 0) {
        if (exponent & 1) acc = acc * base;
        base = base * base;
        exponent >>= 1;
    }
    return acc;
}

// Second singular value of the weighted n-step operator; asserts that the
// leading singular value is the invariant direction (exactly 1).
double rho_from_weighted_power(const Eigen::MatrixXd& weighted_power) {
    const Eigen::VectorXd sv =
        Eigen::JacobiSVD<Eigen::MatrixXd>(weighted_power).singularValues();
    if (std::abs(sv(0) - 1.0) > kSigmaOneTol) {
        throw ConsistencyError("leading singular value " + std::to_string(sv(0)) +
                               " is not the invariant direction");
    }
    if (sv.size() < 2) return 0.0;
    return std::clamp(sv(1), 0.0, 1.0);
}

}  // namespace

// =============================================================================
// Projective series criteria
// =============================================================================

CriterionReport maxwell_woodroofe(const FiniteMarkovChain& chain, const Observable& f,
                                  int truncation) {
    if (truncation < 1) throw DimensionMismatch("maxwell_woodroofe: K must be >= 1");
    const DecayCertificate cert = decay_certificate(chain);
    const double f_norm = norm_pi(chain, f.values());

    CriterionReport report;
    report.name = "maxwell_woodroofe";
    Series norms{"E0_Sk_norm", {}, {}};

    StateFunction power = f.values();
    StateFunction cond_sum = StateFunction::Zero(chain.n_states());
    double partial = 0.0;
    for (int k = 1; k <= truncation; ++k) {
        if (k > 1) power = chain.kernel() * power;
        cond_sum += power;
        const double a_k = norm_pi(chain, cond_sum);
        norms.push(a_k, 0.0);
        partial += a_k / std::pow(static_cast<double>(k), 1.5);
        report.partial_sums.push_back(partial);
    }

    // ||E_0(S_k)|| <= ||f|| sum_j factor(j), uniformly in k, and the k^{-3/2}
    // tail past K is bounded by 2/sqrt(K).
    report.tail_bound = cert.valid()
                            ? f_norm * cert.series_sum() * 2.0 /
                                  std::sqrt(static_cast<double>(truncation))
                            : std::numeric_limits<double>::infinity();
    report.verdict = verdict_from_tail(cert, report.tail_bound);
    report.detail.push_back(std::move(norms));
    return report;
}

CriterionReport projective_series(const FiniteMarkovChain& chain, const Observable& f,
                                  int truncation) {
    if (truncation < 1) throw DimensionMismatch("projective_series: K must be >= 1");
    const DecayCertificate cert = decay_certificate(chain);
    const double f_norm = norm_pi(chain, f.values());

    CriterionReport report;
    report.name = "projective_series";
    Series terms{"terms", {}, {}};

    StateFunction power = f.values();
    double partial = 0.0;
    for (int n = 1; n <= truncation; ++n) {
        power = chain.kernel() * power;
        const double term = norm_pi(chain, power) / std::sqrt(static_cast<double>(n));
        terms.push(term, 0.0);
        partial += term;
        report.partial_sums.push_back(partial);
    }
    report.tail_bound = cert.valid()
                            ? f_norm * cert.tail_sum(truncation + 1) /
                                  std::sqrt(static_cast<double>(truncation + 1))
                            : std::numeric_limits<double>::infinity();
    report.verdict = verdict_from_tail(cert, report.tail_bound);
    report.detail.push_back(std::move(terms));
    return report;
}

CriterionReport rio_gamma_profile(const FiniteMarkovChain& chain, const Observable& f,
                                  int j_max, int truncation) {
    if (j_max < 1 || truncation < 1) {
        throw DimensionMismatch("rio_gamma_profile: j_max and K must be >= 1");
    }
    const DecayCertificate cert = decay_certificate(chain);
    const double f_norm_sq = inner_product_pi(chain, f.values(), f.values());
    const int k_cut = std::max(truncation, j_max);

    // Forecast powers Q^k f for the inner factor and positive powers Q^j |f|
    // for the outer one.
    std::vector<StateFunction> forecast(k_cut + 1);
    forecast[0] = f.values();
    for (int k = 1; k <= k_cut; ++k) forecast[k] = chain.kernel() * forecast[k - 1];
    std::vector<StateFunction> abs_power(j_max + 1);
    abs_power[0] = f.values().cwiseAbs();
    for (int j = 1; j <= j_max; ++j) abs_power[j] = chain.kernel() * abs_power[j - 1];

    const double per_gamma_tail =
        cert.valid() ? f_norm_sq * cert.tail_sum(k_cut + 1)
                     : std::numeric_limits<double>::infinity();

    CriterionReport report;
    report.name = "rio_gamma";
    Series gamma{"gamma", {}, {}};
    Series cesaro{"cesaro", {}, {}};
    double cumulative = 0.0;
    double cumulative_total = 0.0;
    for (int j = 0; j <= j_max; ++j) {
        double gamma_partial = 0.0;
        for (int k = j; k <= k_cut; ++k) {
            gamma_partial +=
                (chain.pi().array() * abs_power[j].array() * forecast[k].array().abs())
                    .sum();
        }
        gamma.push(gamma_partial + per_gamma_tail, per_gamma_tail);
        cumulative += gamma_partial;
        cumulative_total += gamma_partial + per_gamma_tail;
        report.partial_sums.push_back(cumulative);
        cesaro.push(cumulative_total / static_cast<double>(j + 1), 0.0);
    }
    report.tail_bound = cert.valid()
                            ? static_cast<double>(j_max + 1) * per_gamma_tail
                            : std::numeric_limits<double>::infinity();
    report.verdict = verdict_from_tail(cert, report.tail_bound);
    report.note = "gamma_j <= ||f||^2 * certified tail(j), so the Cesaro average "
                  "vanishes when the certificate is valid";
    report.detail.push_back(std::move(gamma));
    report.detail.push_back(std::move(cesaro));
    return report;
}

CriterionReport hannan_profile(const FiniteMarkovChain& chain, const Observable& f,
                               int truncation) {
    if (truncation < 1) throw DimensionMismatch("hannan_profile: K must be >= 1");
    const DecayCertificate cert = decay_certificate(chain);
    const double f_norm = norm_pi(chain, f.values());

    CriterionReport report;
    report.name = "hannan";
    Series terms{"terms", {}, {}};
    Series sq_partial{"sq_partial", {}, {}};

    StateFunction power = f.values();
    double prev_norm_sq = inner_product_pi(chain, power, power);
    double partial = 0.0;
    double partial_sq = 0.0;
    for (int i = 0; i <= truncation; ++i) {
        power = chain.kernel() * power;
        const double next_norm_sq = inner_product_pi(chain, power, power);
        const double discriminant = prev_norm_sq - next_norm_sq;
        if (discriminant < -tol::kInput) {
            throw ConsistencyError("projection increment has negative discriminant " +
                                   std::to_string(discriminant));
        }
        const double term = std::sqrt(std::max(0.0, discriminant));
        terms.push(term, 0.0);
        partial += term;
        partial_sq += term * term;
        report.partial_sums.push_back(partial);
        sq_partial.push(partial_sq, 0.0);
        prev_norm_sq = next_norm_sq;
    }

    report.tail_bound = cert.valid()
                            ? f_norm * cert.tail_sum(truncation + 1)
                            : std::numeric_limits<double>::infinity();
    report.verdict = verdict_from_tail(cert, report.tail_bound);
    report.note = cert.valid()
                      ? "regular: conditional means vanish geometrically (certified)"
                      : "regularity not certified: no contraction certificate";
    report.detail.push_back(std::move(terms));
    report.detail.push_back(std::move(sq_partial));
    return report;
}

CriterionReport gap_and_cor2(const FiniteMarkovChain& chain, const Observable& f,
                             int truncation) {
    if (truncation < 1) throw DimensionMismatch("gap_and_cor2: K must be >= 1");
    const DecayCertificate cert = decay_certificate(chain);
    const double f_norm = norm_pi(chain, f.values());
    const double f_norm_sq = f_norm * f_norm;

    CriterionReport report;
    report.name = "gap_and_cor2";
    Series cor2{"cor2_partial", {}, {}};

    StateFunction power = f.values();
    StateFunction cond_sum = StateFunction::Zero(chain.n_states());
    double gap_partial = 0.0;
    double cor2_partial = 0.0;
    for (int k = 1; k <= truncation; ++k) {
        cond_sum += power;  // Q^{k-1} f joins E_0(S_k)
        const double a_k = norm_pi(chain, cond_sum);
        gap_partial += a_k * a_k / (static_cast<double>(k) * static_cast<double>(k));
        report.partial_sums.push_back(gap_partial);

        power = chain.kernel() * power;  // Q^k f
        cor2_partial += inner_product_pi(chain, power, power);
        cor2.push(cor2_partial, 0.0);
    }

    if (cert.valid()) {
        const double uniform = f_norm * cert.series_sum();
        report.tail_bound = uniform * uniform / static_cast<double>(truncation);
        const double cor2_tail = f_norm_sq * cert.tail_sum_squared(truncation + 1);
        Series cor2_tail_series{"cor2_tail_bound", {cor2_tail}, {0.0}};
        report.detail.push_back(std::move(cor2_tail_series));
    } else {
        report.tail_bound = std::numeric_limits<double>::infinity();
    }
    report.verdict = verdict_from_tail(cert, report.tail_bound);
    report.detail.push_back(std::move(cor2));
    return report;
}

// =============================================================================
// Mixing coefficients
// =============================================================================

double rho_coefficient(const FiniteMarkovChain& chain, int n) {
    if (n < 1) throw DimensionMismatch("rho_coefficient: n must be >= 1");
    return rho_from_weighted_power(matrix_power(conjugated_operator(chain), n));
}

CriterionReport rho_dyadic_series(const FiniteMarkovChain& chain, int truncation) {
    if (truncation < 1) throw DimensionMismatch("rho_dyadic_series: K must be >= 1");
    const DecayCertificate cert = decay_certificate(chain);

    CriterionReport report;
    report.name = "rho_dyadic";
    Series rhos{"rho_2k", {}, {}};

    // Repeated squaring of the restricted operator: its powers carry no
    // invariant direction, so rho(2^k) is its leading singular value and the
    // iteration stays clean even at dyadic exponent 2^20.
    const Eigen::VectorXd u = chain.pi().cwiseSqrt();
    Eigen::MatrixXd power = conjugated_operator(chain) - u * u.transpose();
    const auto rho_of = [](const Eigen::MatrixXd& restricted_power) {
        return std::clamp(
            Eigen::JacobiSVD<Eigen::MatrixXd>(restricted_power).singularValues()(0), 0.0,
            1.0);
    };
    double partial = 0.0;
    for (int k = 1; k <= truncation; ++k) {
        power = power * power;
        const double rho = rho_of(power);
        rhos.push(rho, 0.0);
        partial += rho;
        report.partial_sums.push_back(partial);
    }

    if (cert.valid()) {
        // Extend with exact values until the dyadic exponent clears one full
        // certificate block, then close with the geometric remainder.
        double tail = 0.0;
        int k = truncation + 1;
        while ((1L << k) / cert.power < 1 && k < 62) {
            power = power * power;
            tail += rho_of(power);
            ++k;
        }
        tail += cert.norm_factor(1L << k) / (1.0 - cert.factor);
        report.tail_bound = tail;
    } else {
        report.tail_bound = std::numeric_limits<double>::infinity();
    }
    report.verdict = verdict_from_tail(cert, report.tail_bound);
    report.note = "rho for the pair (sigma(xi_0), sigma(xi_n))";
    report.detail.push_back(std::move(rhos));
    return report;
}

namespace {

// Exact strong mixing coefficient by enumerating initial-state events in Gray
// order; the future event is optimized exactly per initial event by taking the
// positive (or negative) part of the column margins.
double alpha_exact(const Eigen::MatrixXd& deviation) {
    const int ns = static_cast<int>(deviation.rows());
    const std::uint32_t total = 1u << ns;

    // Contiguous blocks keep the Gray-code walk local to each worker; the
    // final max over blocks is order-independent.
    const int block_count = std::min<std::uint32_t>(64, total);
    std::vector<double> block_best(block_count, 0.0);

#pragma omp parallel for schedule(static)
    for (int b = 0; b < block_count; ++b) {
        const std::uint32_t begin = 1 + static_cast<std::uint32_t>(
                                            (static_cast<std::uint64_t>(total - 1) * b) /
                                            block_count);
        const std::uint32_t end = 1 + static_cast<std::uint32_t>(
                                          (static_cast<std::uint64_t>(total - 1) * (b + 1)) /
                                          block_count);
        if (begin >= end) continue;

        Eigen::VectorXd margins = Eigen::VectorXd::Zero(ns);
        std::uint32_t gray = begin ^ (begin >> 1);
        for (int x = 0; x < ns; ++x) {
            if (gray & (1u << x)) margins += deviation.row(x).transpose();
        }
        double best = 0.0;
        for (std::uint32_t i = begin;; ++i) {
            const double pos = margins.cwiseMax(0.0).sum();
            const double neg = (-margins).cwiseMax(0.0).sum();
            best = std::max(best, std::max(pos, neg));
            if (i + 1 >= end) break;
            const std::uint32_t next_gray = (i + 1) ^ ((i + 1) >> 1);
            const std::uint32_t flipped = gray ^ next_gray;
            const int x = std::countr_zero(flipped);
            if (next_gray & flipped) {
                margins += deviation.row(x).transpose();
            } else {
                margins -= deviation.row(x).transpose();
            }
            gray = next_gray;
        }
        block_best[b] = best;
    }
    double best = 0.0;
    for (const double v : block_best) best = std::max(best, v);
    return best;
}

}  // namespace

AlphaValue alpha_coefficient(const FiniteMarkovChain& chain, int n, AlphaMode mode) {
    if (n < 1) throw DimensionMismatch("alpha_coefficient: n must be >= 1");
    const int ns = chain.n_states();
    const bool exact_feasible = ns <= kAlphaExactMaxStates;
    if (mode == AlphaMode::Exact && !exact_feasible) {
        throw StateSpaceTooLarge("exact alpha needs 2^" + std::to_string(ns) +
                                 " subsets; cap is 2^" +
                                 std::to_string(kAlphaExactMaxStates));
    }
    const Eigen::MatrixXd joint =
        chain.pi().asDiagonal() * matrix_power(chain.kernel(), n);
    const Eigen::MatrixXd deviation = joint - chain.pi() * chain.pi().transpose();

    AlphaValue out;
    if (mode == AlphaMode::Bound || !exact_feasible) {
        out.value = 0.25 * deviation.cwiseAbs().sum();
        out.is_upper_bound = true;
    } else {
        out.value = alpha_exact(deviation);
        out.is_upper_bound = false;
    }
    return out;
}

// =============================================================================
// Quantile machinery
// =============================================================================

double QuantileFunction::operator()(double u) const {
    // Right-continuous: take the last breakpoint <= u.
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), u);
    const auto idx = static_cast<std::size_t>(it - breakpoints.begin());
    if (idx == 0) return values.front();
    return values[idx - 1];
}

QuantileFunction quantile_function(const FiniteMarkovChain& chain, const Observable& f) {
    // Atom masses of |X_0|, largest value first.
    std::map<double, double, std::greater<>> atoms;
    for (int x = 0; x < chain.n_states(); ++x) {
        atoms[std::abs(f.values()(x))] += chain.pi()(x);
    }
    QuantileFunction q;
    q.breakpoints.push_back(0.0);
    double cumulative = 0.0;
    for (const auto& [value, mass] : atoms) {
        if (value <= 0.0) break;
        q.values.push_back(value);
        cumulative += mass;
        q.breakpoints.push_back(cumulative);
    }
    q.values.push_back(0.0);  // below every positive exceedance level
    return q;
}

CriterionReport dmr_series(const FiniteMarkovChain& chain, const Observable& f,
                           int truncation) {
    if (truncation < 1) throw DimensionMismatch("dmr_series: K must be >= 1");
    const QuantileFunction quantile = quantile_function(chain, f);
    const DecayCertificate cert = decay_certificate(chain);
    const double f_norm_sq = inner_product_pi(chain, f.values(), f.values());

    // Mass at the top atom: the limiting summand once 2 alpha_k falls below
    // every positive exceedance probability.
    double top_mass = 0.0;
    const double top_value = quantile.values.front();
    for (int x = 0; x < chain.n_states(); ++x) {
        if (std::abs(f.values()(x)) >= top_value && top_value > 0.0) {
            top_mass += chain.pi()(x) * f.values()(x) * f.values()(x);
        }
    }
    const double u_min =
        quantile.breakpoints.size() > 1 ? quantile.breakpoints[1] : 0.0;

    CriterionReport report;
    report.name = "dmr";
    Series alphas{"alpha_k", {}, {}};
    Series terms{"terms", {}, {}};

    double partial = 0.0;
    int stabilized_at = 0;
    for (int k = 1; k <= truncation; ++k) {
        const AlphaValue alpha = alpha_coefficient(chain, k, AlphaMode::Exact);
        alphas.push(alpha.value, 0.0);
        const double level = quantile(2.0 * alpha.value);
        double term = 0.0;
        for (int x = 0; x < chain.n_states(); ++x) {
            if (std::abs(f.values()(x)) >= level) {
                term += chain.pi()(x) * f.values()(x) * f.values()(x);
            }
        }
        terms.push(term, 0.0);
        partial += term;
        report.partial_sums.push_back(partial);
        if (stabilized_at == 0 && u_min > 0.0 && 2.0 * alpha.value < u_min) {
            stabilized_at = k;
        }
    }

    if (f_norm_sq == 0.0) {
        report.tail_bound = 0.0;
        report.verdict = Verdict::Satisfied;
        report.note = "degenerate observable: every summand is zero";
    } else {
        report.tail_bound = std::numeric_limits<double>::infinity();
        report.verdict = Verdict::Inconclusive;
        // Certified stabilization index: alpha_k <= rho(k) <= norm_factor(k).
        long certified_k = 0;
        if (cert.valid() && u_min > 0.0) {
            certified_k = 1;
            while (2.0 * cert.norm_factor(certified_k) >= u_min && certified_k < 1000000) {
                ++certified_k;
            }
        }
        report.note =
            "atomic law: summand stabilizes at the top-atom mass " +
            std::to_string(top_mass) +
            (stabilized_at > 0 ? " from k = " + std::to_string(stabilized_at) : "") +
            (certified_k > 0 ? " (certified by k = " + std::to_string(certified_k) + ")"
                             : "") +
            "; the literal series diverges, reported verbatim";
    }
    report.detail.push_back(std::move(alphas));
    report.detail.push_back(std::move(terms));
    return report;
}

}  // namespace martkit
