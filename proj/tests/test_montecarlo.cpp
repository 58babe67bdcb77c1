#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "martkit/chain.hpp"
#include "martkit/criteria.hpp"
#include "martkit/montecarlo.hpp"
#include "martkit/spectral.hpp"
#include "test_support.hpp"

using namespace martkit;
using namespace testsupport;

namespace {

// iid chain whose marginal law matches the benchmark pi.
FiniteMarkovChain benchmark_iid_chain() {
    Eigen::VectorXd law(2);
    law << 0.25, 0.75;
    return iid_chain(law);
}

double spearman(std::vector<double> a, std::vector<double> b) {
    const auto ranks = [](std::vector<double>& xs) {
        std::vector<int> order(xs.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](int i, int j) { return xs[i] < xs[j]; });
        std::vector<double> rank(xs.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            rank[order[i]] = static_cast<double>(i);
        }
        return rank;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double n = static_cast<double>(ra.size());
    double d_sq = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        d_sq += (ra[i] - rb[i]) * (ra[i] - rb[i]);
    }
    return 1.0 - 6.0 * d_sq / (n * (n * n - 1.0));
}

}  // namespace

TEST_CASE("simulate: deterministic and prefix-stable across batch sizes") {
    const auto chain = benchmark_chain();
    const auto a = simulate(chain, 10, 3, 7);
    const auto b = simulate(chain, 10, 3, 7);
    CHECK(a.states == b.states);

    const auto wider = simulate(chain, 10, 5, 7);
    for (int r = 0; r < 3; ++r) {
        const auto lhs = a.path(r);
        const auto rhs = wider.path(r);
        CHECK(std::equal(lhs.begin(), lhs.end(), rhs.begin()));
    }
    const auto reseeded = simulate(chain, 10, 3, 8);
    CHECK(a.states != reseeded.states);

    CHECK_THROWS_AS(simulate(chain, 10, 0, 7), EmptyBatch);
    CHECK_THROWS_AS(simulate(chain, 0, 3, 7), DimensionMismatch);
}

TEST_CASE("simulate: serial and OpenMP paths are bit-identical") {
    const auto chain = benchmark_chain();
    const auto parallel = simulate(chain, 200, 64, 99, Exec::OpenMP);
    const auto serial = simulate(chain, 200, 64, 99, Exec::Serial);
    CHECK(parallel.states == serial.states);
}

TEST_CASE("simulate: iid state frequencies match pi within 3 sigma") {
    const auto chain = benchmark_iid_chain();
    const int n = 100, replicas = 10000;  // one million sampled states
    const auto batch = simulate(chain, n, replicas, 4242);
    std::size_t zeros = 0;
    for (const auto s : batch.states) zeros += (s == 0);
    const double total = static_cast<double>(batch.states.size());
    const double freq = static_cast<double>(zeros) / total;
    const double sigma = std::sqrt(0.25 * 0.75 / total);
    CHECK(std::abs(freq - 0.25) < 3.0 * sigma);
}

TEST_CASE("estimate_seminorm: degenerate inputs") {
    const auto chain = benchmark_chain();
    const std::vector<int> grid = {64, 256};

    const auto zero = estimate_seminorm(chain, Eigen::VectorXd::Zero(2), grid, 100, 5, true);
    for (const double v : zero.values) CHECK(v == 0.0);
    for (const double e : zero.std_errors) CHECK(e > 0.0);

    // iid forecast vanishes identically, so the estimate is exactly zero.
    const auto iid = benchmark_iid_chain();
    const Observable f = Observable::centered(iid, benchmark_f());
    StateFunction y = iid.kernel() * f.values();
    const auto est = estimate_seminorm(iid, y, grid, 100, 5, true);
    for (const double v : est.values) CHECK(v == 0.0);

    const std::vector<int> bad = {256, 64};
    CHECK_THROWS_AS(estimate_seminorm(chain, Eigen::VectorXd::Zero(2), bad, 10, 5, true),
                    DimensionMismatch);
}

TEST_CASE("estimate_seminorm: deterministic, exec-independent, m-monotone") {
    const auto chain = benchmark_chain();
    const Observable f(chain, benchmark_f());
    const std::vector<int> grid = {512};
    const auto measure = spectral_measure(chain, f);

    double prev = std::numeric_limits<double>::infinity();
    for (const int m : {1, 4, 16, 64}) {
        StateFunction y = StateFunction::Zero(2);
        StateFunction power = f.values();
        for (int i = 1; i <= m; ++i) {
            power = chain.kernel() * power;
            y += power;
        }
        y /= static_cast<double>(m);

        const auto omp = estimate_seminorm(chain, y, grid, 800, 31, true, Exec::OpenMP);
        const auto ser = estimate_seminorm(chain, y, grid, 800, 31, true, Exec::Serial);
        CHECK(omp.values == ser.values);
        CHECK(omp.std_errors == ser.std_errors);

        // spectral ceiling for the running-max seminorm
        const double ceiling = std::sqrt(reversible_seminorm_bound(measure, m));
        CHECK(omp.values[0] <= ceiling + 3.0 * omp.std_errors[0]);
        CHECK(omp.values[0] <= prev + 3.0 * omp.std_errors[0]);
        prev = omp.values[0];
    }
}

TEST_CASE("max_sq_partial_sum: zero observable and exec equality") {
    const auto chain = benchmark_chain();
    const Observable zero(chain, Eigen::VectorXd::Zero(2));
    const auto stat = max_sq_partial_sum(chain, zero, 128, 200, 5);
    CHECK(stat.value == 0.0);

    const Observable f(chain, benchmark_f());
    const auto omp = max_sq_partial_sum(chain, f, 256, 500, 11, Exec::OpenMP);
    const auto ser = max_sq_partial_sum(chain, f, 256, 500, 11, Exec::Serial);
    CHECK(omp.value == ser.value);
    CHECK(omp.std_error == ser.std_error);
}

TEST_CASE("verify_rio: iid right side is exactly 8 n ||f||^2") {
    const auto chain = iid_sign_chain();
    const Observable f(chain, sign_f());
    const int n = 512;
    const auto report = verify_rio(chain, f, n, 1500, 17);
    CHECK(report.rhs_exact == doctest::Approx(8.0 * n).epsilon(1e-12));
    CHECK(report.margin > 0.0);

    const Observable zero(chain, Eigen::VectorXd::Zero(2));
    const auto degenerate = verify_rio(chain, zero, 64, 100, 17);
    CHECK(degenerate.lhs_estimate == 0.0);
    CHECK(degenerate.rhs_exact == 0.0);
    CHECK(degenerate.margin == 0.0);
}

TEST_CASE("verify_rio: benchmark margin at n = 1000") {
    const auto chain = benchmark_chain();
    const Observable f(chain, benchmark_f());
    const auto report = verify_rio(chain, f, 1000, 1500, 19);
    CHECK(report.margin > 0.0);
}

TEST_CASE("inequality right sides: benchmark closed forms") {
    // On the benchmark every conditional quantity lives on the single
    // centered eigen-direction, so each right side collapses to geometric
    // sums in 0.6.
    const auto chain = benchmark_chain();
    const Observable f(chain, benchmark_f());
    const int n = 10;

    // Rio: E|X_0 E_0(S_k - S_1)| = ||f||^2 sum_{j=1}^{k-1} 0.6^j.
    double conditional = 0.0;
    for (int k = 2; k <= n; ++k) {
        conditional += 3.0 * 1.5 * (1.0 - std::pow(0.6, k - 1));
    }
    CHECK(verify_rio(chain, f, n, 50, 3).rhs_exact ==
          doctest::Approx(8.0 * n * 3.0 + 16.0 * conditional).epsilon(1e-12));

    // Dyadic form: ||E_0(S_{2^j})|| = sqrt(3) (1 - 0.6^{2^j}) / 0.4 for
    // j = 0..r-1 with 2^{r-1} < n <= 2^r (r = 4 at n = 10).
    int r = 0;
    while ((1 << r) < n) ++r;
    double dyadic = 0.0;
    for (int j = 0; j < r; ++j) {
        dyadic += std::sqrt(3.0) * (1.0 - std::pow(0.6, 1 << j)) / 0.4 /
                  std::pow(2.0, 0.5 * j);
    }
    const double base = 2.0 * std::sqrt(3.0) + 3.0 * dyadic;
    CHECK(verify_pu(chain, f, n, 50, 3).rhs_exact ==
          doctest::Approx(n * base * base).epsilon(1e-12));

    // Projection increments sum to sqrt(3) * 0.8 / 0.4 = 2 sqrt(3), so the
    // right side is exactly 4 n * 12 = 48 n.
    CHECK(verify_dm(chain, f, n, 50, 3).rhs_exact ==
          doctest::Approx(48.0 * n).epsilon(1e-10));
}

TEST_CASE("verify_pu: iid right side matches the dyadic closed form") {
    const auto chain = iid_sign_chain();
    const Observable f(chain, sign_f());
    const int n = 512;  // r = 9
    double dyadic = 0.0;
    for (int j = 0; j <= 8; ++j) dyadic += std::pow(2.0, -0.5 * j);
    const double expected = n * (2.0 + 3.0 * dyadic) * (2.0 + 3.0 * dyadic);
    const auto report = verify_pu(chain, f, n, 1500, 23);
    CHECK(report.rhs_exact == doctest::Approx(expected).epsilon(1e-12));
    CHECK(report.margin > 0.0);
}

TEST_CASE("verify_dm: iid right side is 4 n ||f||^2, periodic chain is not regular") {
    const auto chain = iid_sign_chain();
    const Observable f(chain, sign_f());
    const int n = 512;
    const auto report = verify_dm(chain, f, n, 1500, 29);
    CHECK(report.rhs_exact == doctest::Approx(4.0 * n).epsilon(1e-10));
    CHECK(report.margin > 0.0);

    const auto cycle = cycle3_chain();
    Eigen::VectorXd g(3);
    g << 1.0, -0.5, -0.5;
    CHECK_THROWS_AS(verify_dm(cycle, Observable(cycle, g), 64, 100, 3), NotRegular);
}

TEST_CASE("verify_lw: benchmark right side is (24n + 3) * 7.5") {
    const auto chain = benchmark_chain();
    const Observable f(chain, benchmark_f());
    const int n = 512;
    const auto report = verify_lw(chain, f, n, 1500, 37);
    CHECK(report.rhs_exact == doctest::Approx((24.0 * n + 3.0) * 7.5).epsilon(1e-10));
    CHECK(report.margin > 0.0);

    const auto iid = iid_sign_chain();
    const Observable g(iid, sign_f());
    const auto iid_report = verify_lw(iid, g, n, 1000, 37);
    CHECK(iid_report.rhs_exact == doctest::Approx(24.0 * n + 3.0).epsilon(1e-10));

    const auto cycle = cycle3_chain();
    Eigen::VectorXd h(3);
    h << 1.0, -0.5, -0.5;
    CHECK_THROWS_AS(verify_lw(cycle, Observable(cycle, h), 64, 100, 3), NotReversible);
}

TEST_CASE("inequality margins hold on random reversible chains") {
    std::mt19937_64 rng(4099);
    for (int trial = 0; trial < 5; ++trial) {
        const int ns = 2 + static_cast<int>(rng() % 7);
        const auto chain = build_chain(random_reversible_kernel(ns, rng));
        const Observable f(chain, random_centered_values(chain, rng));
        const std::uint64_t seed = rng();
        CHECK(verify_rio(chain, f, 256, 1000, seed).margin >= 0.0);
        CHECK(verify_pu(chain, f, 256, 1000, seed).margin >= 0.0);
        CHECK(verify_dm(chain, f, 256, 1000, seed).margin >= 0.0);
        CHECK(verify_lw(chain, f, 256, 1000, seed).margin >= 0.0);
    }
}

TEST_CASE("fclt_statistics: degenerate coboundary observable") {
    const auto chain = benchmark_chain();
    // f = (I - Q) g for a nonzero invariant g: the martingale part vanishes
    // identically and sigma^2 = 0.
    const Eigen::VectorXd g = Eigen::VectorXd::Constant(2, 2.0);
    const Eigen::VectorXd cob = g - chain.kernel() * g;
    CHECK_THROWS_AS(fclt_statistics(chain, Observable(chain, cob), 256, 200, 7),
                    DegenerateVariance);
}

TEST_CASE("fclt_statistics: smoke run on the iid benchmark") {
    const auto chain = iid_sign_chain();
    const Observable f(chain, sign_f());
    const auto report = fclt_statistics(chain, f, 2000, 500, 101);
    CHECK(report.sigma2 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(report.terminal_distance < report.threshold);
    CHECK(report.runmax_distance < report.runmax_threshold);
    REQUIRE(report.groups.size() == 2);
    for (const auto& group : report.groups) {
        CHECK(group.count > 100);
        CHECK(group.terminal_distance < group.threshold);
        CHECK(group.runmax_distance < group.runmax_threshold);
    }
    CHECK(report.pass());

    const auto again = fclt_statistics(chain, f, 2000, 500, 101);
    CHECK(again.terminal_distance == report.terminal_distance);
    const auto serial = fclt_statistics(chain, f, 2000, 500, 101, Exec::Serial);
    CHECK(serial.terminal_distance == report.terminal_distance);
    CHECK(serial.runmax_distance == report.runmax_distance);
}

TEST_CASE("ks helpers: known samples") {
    // Empirical CDF of {Phi^{-1}(1/4), Phi^{-1}(3/4)} against Phi: the gap is
    // exactly 1/4 at each sample point.
    std::vector<double> sample = {-0.6744897501960817, 0.6744897501960817};
    CHECK(ks_to_standard_normal(sample) == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(ks_threshold(2000) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(ks_threshold(500) > 0.05);
}

TEST_CASE("residual_decay_curve: zero observable and benchmark decay") {
    const auto chain = benchmark_chain();
    const Observable zero(chain, Eigen::VectorXd::Zero(2));
    const std::vector<int> grid = {100, 1000};
    const auto flat = residual_decay_curve(chain, zero, grid, 100, 7);
    for (const double v : flat.values) CHECK(v == 0.0);

    const Observable f(chain, benchmark_f());
    const auto curve = residual_decay_curve(chain, f, grid, 1000, 7);
    CHECK(curve.values[1] < curve.values[0]);

    const auto serial = residual_decay_curve(chain, f, grid, 1000, 7, Exec::Serial);
    CHECK(serial.values == curve.values);
    CHECK(serial.std_errors == curve.std_errors);
}

TEST_CASE("decreasing trends co-occur across the m grid") {
    const auto chain = benchmark_chain();
    const Observable f(chain, benchmark_f());
    const std::vector<int> m_grid = {1, 4, 16, 64};
    const std::vector<int> n_grid = {1024};
    const int replicas = 800;

    std::vector<double> seminorms, distances, residuals;
    const auto limit = limit_diff_kernel(chain, f);
    const auto batch = simulate(chain, 1024, 300, 555);
    for (const int m : m_grid) {
        StateFunction y = StateFunction::Zero(2);
        StateFunction power = f.values();
        for (int i = 1; i <= m; ++i) {
            power = chain.kernel() * power;
            y += power;
        }
        y /= static_cast<double>(m);
        seminorms.push_back(
            estimate_seminorm(chain, y, n_grid, replicas, 555, true).values[0]);
        distances.push_back(diff_distance(chain, diff_kernel_m(chain, f, m), limit));

        const auto kernel = diff_kernel_m(chain, f, m);
        std::vector<DecompositionTrace> traces;
        for (int r = 0; r < batch.replicas; ++r) {
            const auto span = batch.path(r);
            traces.push_back(decompose_trajectory(
                chain, f, std::vector<int>(span.begin(), span.end()), kernel));
        }
        residuals.push_back(residual_max_statistic(traces, 1024).value);
    }
    CHECK(spearman(seminorms, distances) > 0.9);
    CHECK(spearman(seminorms, residuals) > 0.9);
    CHECK(spearman(distances, residuals) > 0.9);
}
