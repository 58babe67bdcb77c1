#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include "martkit/chain.hpp"
#include "martkit/spectral.hpp"
#include "test_support.hpp"

using namespace martkit;
using namespace testsupport;

namespace {

Eigen::VectorXd cycle_character() {
    Eigen::VectorXd f(3);
    f << 1.0, -0.5, -0.5;  // real part of the first cyclic character
    return f;
}

}  // namespace

TEST_CASE("structure_flags: every two-state chain satisfies detailed balance") {
    std::mt19937_64 rng(211);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int trial = 0; trial < 10; ++trial) {
        const auto chain = build_chain(two_state_kernel(u(rng), u(rng)));
        const auto flags = structure_flags(chain);
        CHECK(flags.reversible);
        CHECK(flags.normal);
    }
}

TEST_CASE("structure_flags: 3-cycle is normal but not reversible") {
    const auto flags = structure_flags(cycle3_chain());
    CHECK_FALSE(flags.reversible);
    CHECK(flags.normal);
}

TEST_CASE("structure_flags: generic 3-state chain is neither") {
    Eigen::MatrixXd k(3, 3);
    k << 0.6, 0.3, 0.1,
         0.2, 0.5, 0.3,
         0.4, 0.1, 0.5;
    const auto chain = build_chain(k);
    const auto flags = structure_flags(chain);
    CHECK_FALSE(flags.reversible);
    // one balance cell, checked directly
    CHECK(std::abs(chain.pi()(0) * k(0, 1) - chain.pi()(1) * k(1, 0)) > 1e-6);
    CHECK_FALSE(flags.normal);
    CHECK_THROWS_AS(spectral_measure(chain, Observable::centered(chain, cycle_character())),
                    NotNormalOperator);
}

TEST_CASE("structure_flags: reversible implies normal on random reversible chains") {
    std::mt19937_64 rng(223);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 7);
        const auto chain = build_chain(random_reversible_kernel(n, rng));
        const auto flags = structure_flags(chain);
        CHECK(flags.reversible);
        CHECK(flags.normal);
    }
}

TEST_CASE("spectral_measure: iid puts all observable mass at zero") {
    Eigen::VectorXd law(3);
    law << 0.2, 0.5, 0.3;
    const auto chain = iid_chain(law);
    Eigen::VectorXd raw(3);
    raw << 2.0, -1.0, 1.0;
    const Observable f = Observable::centered(chain, raw);
    const auto measure = spectral_measure(chain, f);
    const double f_norm_sq = inner_product_pi(chain, f.values(), f.values());
    CHECK(measure.total_weight() == doctest::Approx(f_norm_sq).epsilon(1e-10));
    for (std::size_t i = 0; i < measure.points.size(); ++i) {
        if (measure.weights[i] > 1e-12) {
            CHECK(std::abs(measure.points[i]) < 1e-10);
        }
    }
}

TEST_CASE("spectral_measure: benchmark has a single atom at 0.6 with weight 3") {
    const auto chain = benchmark_chain();
    const Observable f(chain, benchmark_f());
    const auto measure = spectral_measure(chain, f);
    REQUIRE(measure.reversible);
    CHECK(measure.total_weight() == doctest::Approx(3.0).epsilon(1e-10));
    double atom_weight = 0.0;
    for (std::size_t i = 0; i < measure.points.size(); ++i) {
        if (measure.weights[i] > 1e-12) {
            CHECK(measure.points[i].real() == doctest::Approx(0.6).epsilon(1e-10));
            atom_weight += measure.weights[i];
        }
    }
    CHECK(atom_weight == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("spectral_measure: 3-cycle character sits at the cube roots of unity") {
    const auto chain = cycle3_chain();
    const Observable f = Observable::centered(chain, cycle_character());
    const auto measure = spectral_measure(chain, f);
    CHECK_FALSE(measure.reversible);
    CHECK(measure.total_weight() == doctest::Approx(0.5).epsilon(1e-10));
    for (std::size_t i = 0; i < measure.points.size(); ++i) {
        if (measure.weights[i] > 1e-12) {
            CHECK(std::abs(measure.points[i]) == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(measure.points[i].real() == doctest::Approx(-0.5).epsilon(1e-9));
            CHECK(measure.weights[i] == doctest::Approx(0.25).epsilon(1e-9));
        }
    }
}

TEST_CASE("spectral_measure: random circulant chains exercise the complex branch") {
    // Rows are rotations of one positive probability vector: such kernels
    // commute with the cyclic shift, so they are normal (generically not
    // reversible) with complex spectra strictly inside the unit disk.
    std::mt19937_64 rng(241);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 4 + static_cast<int>(rng() % 5);
        Eigen::VectorXd c(n);
        for (int i = 0; i < n; ++i) c(i) = u(rng);
        c /= c.sum();
        Eigen::MatrixXd kernel(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) kernel(i, j) = c((j - i + n) % n);
        }
        const auto chain = build_chain(kernel);
        CHECK(structure_flags(chain).normal);

        const Observable f(chain, random_centered_values(chain, rng));
        const auto measure = spectral_measure(chain, f);
        const double f_norm_sq = inner_product_pi(chain, f.values(), f.values());
        CHECK(measure.total_weight() == doctest::Approx(f_norm_sq).epsilon(1e-10));

        bool complex_mass = false;
        for (std::size_t i = 0; i < measure.points.size(); ++i) {
            CHECK(std::abs(measure.points[i]) <= 1.0 + 1e-12);
            if (measure.weights[i] > 1e-10 &&
                std::abs(measure.points[i].imag()) > 1e-10) {
                complex_mass = true;
            }
        }
        CHECK(complex_mass);

        StateFunction power = f.values();
        for (int k = 0; k <= 10; ++k) {
            std::complex<double> spectral(0.0, 0.0);
            for (std::size_t i = 0; i < measure.points.size(); ++i) {
                spectral += measure.weights[i] * std::pow(measure.points[i], k);
            }
            CHECK(std::abs(spectral.real() -
                           inner_product_pi(chain, f.values(), power)) < 1e-9);
            CHECK(std::abs(spectral.imag()) < 1e-9);
            power = chain.kernel() * power;
        }
        for (int k = 1; k <= 32; ++k) {
            CHECK_NOTHROW(conditional_norm_identity(chain, f, measure, k));
        }

        double prev = normal_integral_and_bound(measure, 4).plus_bound;
        for (const int m : {8, 16, 32, 64}) {
            const double cur = normal_integral_and_bound(measure, m).plus_bound;
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
    }
}

TEST_CASE("spectral_measure: moment identity on normal chains") {
    std::mt19937_64 rng(227);
    const auto check_moments = [](const FiniteMarkovChain& chain, const Observable& f) {
        const auto measure = spectral_measure(chain, f);
        StateFunction power = f.values();
        for (int k = 0; k <= 10; ++k) {
            std::complex<double> spectral(0.0, 0.0);
            for (std::size_t i = 0; i < measure.points.size(); ++i) {
                spectral += measure.weights[i] * std::pow(measure.points[i], k);
            }
            const double projective = inner_product_pi(chain, f.values(), power);
            CHECK(std::abs(spectral.real() - projective) < 1e-9);
            CHECK(std::abs(spectral.imag()) < 1e-9);
            power = chain.kernel() * power;
        }
    };

    check_moments(benchmark_chain(),
                  Observable(benchmark_chain(), benchmark_f()));
    check_moments(cycle3_chain(), Observable::centered(cycle3_chain(), cycle_character()));
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 7);
        const auto chain = build_chain(random_reversible_kernel(n, rng));
        check_moments(chain, Observable(chain, random_centered_values(chain, rng)));
    }
}

TEST_CASE("kv_integral: closed forms and error paths") {
    const auto chain = benchmark_chain();
    const Observable f(chain, benchmark_f());
    CHECK(kv_integral(spectral_measure(chain, f)) == doctest::Approx(7.5).epsilon(1e-10));

    const auto iid = iid_sign_chain();
    const Observable g(iid, sign_f());
    CHECK(kv_integral(spectral_measure(iid, g)) == doctest::Approx(1.0).epsilon(1e-10));

    const Observable zero(chain, Eigen::VectorXd::Zero(2));
    CHECK(kv_integral(spectral_measure(chain, zero)) == doctest::Approx(0.0));

    SpectralMeasure with_mass_at_one;
    with_mass_at_one.reversible = true;
    with_mass_at_one.points = {{1.0, 0.0}, {0.5, 0.0}};
    with_mass_at_one.weights = {0.5, 0.5};
    CHECK_THROWS_AS(kv_integral(with_mass_at_one), WeightAtOne);

    SpectralMeasure complex_measure;
    complex_measure.reversible = false;
    CHECK_THROWS_AS(kv_integral(complex_measure), NotReversible);
}

TEST_CASE("kv_integral: agrees with the covariance series") {
    std::mt19937_64 rng(229);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 7);
        const auto chain = build_chain(random_reversible_kernel(n, rng));
        const Observable f(chain, random_centered_values(chain, rng));
        const double kv = kv_integral(spectral_measure(chain, f));
        CHECK(kv == doctest::Approx(covariance_series(chain, f.values(), 2000))
                        .epsilon(1e-8));
    }
}

TEST_CASE("reversible_seminorm_bound: closed forms") {
    const auto iid = iid_sign_chain();
    const Observable g(iid, sign_f());
    const auto iid_measure = spectral_measure(iid, g);
    // Only the constant term of the geometric sum survives at lambda = 0.
    for (const int m : {1, 2, 8, 64}) {
        CHECK(reversible_seminorm_bound(iid_measure, m) ==
              doctest::Approx(27.0 / (static_cast<double>(m) * m)).epsilon(1e-10));
    }

    const auto chain = benchmark_chain();
    const Observable f(chain, benchmark_f());
    CHECK(reversible_seminorm_bound(spectral_measure(chain, f), 1) ==
          doctest::Approx(202.5).epsilon(1e-10));

    const Observable zero(chain, Eigen::VectorXd::Zero(2));
    CHECK(reversible_seminorm_bound(spectral_measure(chain, zero), 4) ==
          doctest::Approx(0.0));
}

TEST_CASE("bounds decrease along the dyadic m grid") {
    std::mt19937_64 rng(233);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 7);
        const auto chain = build_chain(random_reversible_kernel(n, rng));
        if (l20_spectral_radius(chain) > 0.95) continue;
        const Observable f(chain, random_centered_values(chain, rng));
        const auto measure = spectral_measure(chain, f);
        double prev = reversible_seminorm_bound(measure, 4);
        for (const int m : {8, 16, 32, 64}) {
            const double cur = reversible_seminorm_bound(measure, m);
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
        CHECK(reversible_seminorm_bound(measure, 64) <
              reversible_seminorm_bound(measure, 4) + 1e-12);

        double prev_plus = normal_integral_and_bound(measure, 4).plus_bound;
        for (const int m : {8, 16, 32, 64}) {
            const double cur = normal_integral_and_bound(measure, m).plus_bound;
            CHECK(cur <= prev_plus + 1e-12);
            prev_plus = cur;
        }
    }
}

TEST_CASE("normal_integral_and_bound: reversible input matches kv, cycle closed form") {
    const auto chain = benchmark_chain();
    const Observable f(chain, benchmark_f());
    const auto measure = spectral_measure(chain, f);
    const auto bounds = normal_integral_and_bound(measure, 4);
    // all atoms real below 1: |1 - lambda| = 1 - lambda
    CHECK(bounds.normcond_integral == doctest::Approx(kv_integral(measure)).epsilon(1e-10));

    const auto cycle = cycle3_chain();
    const Observable character = Observable::centered(cycle, cycle_character());
    const auto cycle_bounds = normal_integral_and_bound(spectral_measure(cycle, character), 1);
    // both atoms at distance sqrt(3) from 1, total weight 1/2
    CHECK(cycle_bounds.normcond_integral ==
          doctest::Approx(0.5 / std::sqrt(3.0)).epsilon(1e-9));
    CHECK(cycle_bounds.plus_bound ==
          doctest::Approx(4.0 * 0.5 / std::sqrt(3.0)).epsilon(1e-9));

    const Observable zero(chain, Eigen::VectorXd::Zero(2));
    const auto zero_bounds = normal_integral_and_bound(spectral_measure(chain, zero), 3);
    CHECK(zero_bounds.normcond_integral == 0.0);
    CHECK(zero_bounds.plus_bound == 0.0);
}

TEST_CASE("conditional_norm_identity: closed forms and agreement") {
    const auto iid = iid_sign_chain();
    const Observable g(iid, sign_f());
    const auto iid_measure = spectral_measure(iid, g);
    for (const int k : {1, 2, 5, 17}) {
        CHECK(conditional_norm_identity(iid, g, iid_measure, k) ==
              doctest::Approx(1.0).epsilon(1e-10));
    }

    const auto chain = benchmark_chain();
    const Observable f(chain, benchmark_f());
    const auto measure = spectral_measure(chain, f);
    CHECK(conditional_norm_identity(chain, f, measure, 1) ==
          doctest::Approx(3.0).epsilon(1e-10));
    const double geo3 = (1.0 - std::pow(0.6, 3)) / 0.4;
    CHECK(conditional_norm_identity(chain, f, measure, 3) ==
          doctest::Approx(3.0 * geo3 * geo3).epsilon(1e-10));
}

TEST_CASE("conditional_norm_identity: holds up to k = 64 on normal chains") {
    std::mt19937_64 rng(239);
    const auto exercise = [](const FiniteMarkovChain& chain, const Observable& f) {
        const auto measure = spectral_measure(chain, f);
        for (int k = 1; k <= 64; ++k) {
            CHECK_NOTHROW(conditional_norm_identity(chain, f, measure, k));
        }
    };
    exercise(benchmark_chain(), Observable(benchmark_chain(), benchmark_f()));
    exercise(cycle3_chain(), Observable::centered(cycle3_chain(), cycle_character()));
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 7);
        const auto chain = build_chain(random_reversible_kernel(n, rng));
        exercise(chain, Observable(chain, random_centered_values(chain, rng)));
    }
}
