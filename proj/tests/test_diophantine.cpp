#include "kamred/diophantine.hpp"
#include "kamred/error.hpp"
#include "kamred/parallel.hpp"

#include <doctest.h>

using namespace kamred;

namespace {

// Direct enumeration of the box |k_m| <= K restricted to |k|_1 <= K.
bool scan0_oracle(const std::vector<double>& w, double gamma, double tau, int K) {
    for (int a = -K; a <= K; ++a)
        for (int b = -K; b <= K; ++b) {
            const int n1 = std::abs(a) + std::abs(b);
            if (n1 == 0 || n1 > K) continue;
            if (std::abs(a * w[0] + b * w[1]) < gamma * std::pow(n1, -tau)) return false;
        }
    return true;
}

bool scan1_oracle_1d(double w, double gamma, double tau, int K) {
    for (int k = -K; k <= K; ++k) {
        const int k0max = static_cast<int>(std::ceil(2.0 * std::abs(k) * 2.0)) + 2;
        for (int k0 = -k0max; k0 <= k0max; ++k0) {
            if (k == 0 && k0 == 0) continue;
            if (std::abs(k * w + k0) < gamma / (1.0 + std::pow(std::abs(k), tau))) return false;
        }
    }
    return true;
}

} // namespace

TEST_SUITE("diophantine") {

TEST_CASE("Omega0 membership") {
    CHECK(is_diophantine_0({1.5}, {0.1, 1.0, 50}));
    DivisorScan s = scan_diophantine_0({1.0, 1.0}, {1e-6, 2.5, 10});
    CHECK_FALSE(s.accepted);
    CHECK(std::abs(s.k[0] + s.k[1]) == 0);
    CHECK(s.divisor == 0.0);
    const std::vector<double> cube{std::cbrt(2.0), std::cbrt(4.0)};
    CHECK(is_diophantine_0(cube, {1e-3, 2.5, 50}));
    CHECK(scan0_oracle(cube, 1e-3, 2.5, 50));
}

TEST_CASE("Omega0 agrees with exhaustive enumeration on random frequencies") {
    for (std::uint64_t i = 0; i < 200; ++i) {
        auto w = sample_frequency(2, 99, i);
        for (double g : {1e-3, 1e-2, 5e-2})
            CHECK(is_diophantine_0(w, {g, 1.5, 20}) == scan0_oracle(w, g, 1.5, 20));
    }
}

TEST_CASE("Omega1 membership") {
    DivisorScan s = scan_diophantine_1({2.0}, {1.0, 1.2, 10});
    CHECK_FALSE(s.accepted);
    CHECK(std::abs(s.k[0] * 2 + s.k0) == 0);
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    CHECK(is_diophantine_1({golden}, {0.05, 1.2, 40}));
    CHECK(scan1_oracle_1d(golden, 0.05, 1.2, 40));
    for (std::uint64_t i = 0; i < 300; ++i) {
        double w = sample_frequency(1, 5, i)[0];
        CHECK(is_diophantine_1({w}, {0.05, 1.2, 15}) == scan1_oracle_1d(w, 0.05, 1.2, 15));
    }
    // k = 0 row: |k0| >= 1 > gamma
    CHECK(is_diophantine_1({1.5}, {1.0 - 1e-9, 1.0, 0 + 1}) == scan1_oracle_1d(1.5, 1.0 - 1e-9, 1.0, 1));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(DiophantineParams({1e-3, 0.5, 10}).validate(2), Error);
    CHECK_THROWS_AS(check_frequency_box({0.5, 1.5}), Error);
    CHECK_THROWS_AS(excluded_measure(2, {1e-3, 2.5, 20}, DiophantineSet::Omega0, 100, 1), Error);
}

TEST_CASE("tail stability") {
    const std::vector<double> cube{std::cbrt(2.0), std::cbrt(4.0)};
    DiophantineParams p{1e-3, 2.5, 25};
    if (tail_stable_0(cube, p)) CHECK(is_diophantine_0(cube, {p.gamma, p.tau, 2 * p.Kmax}));
    CHECK_FALSE(tail_stable_0({1.0, 1.0}, p));
}

TEST_CASE("excluded measure") {
    SUBCASE("small gamma") {
        MeasureEstimate m = excluded_measure(2, {1e-4, 2.5, 50}, DiophantineSet::Omega0, 20000, 7);
        CHECK(m.fraction < 0.01);
        CHECK(m.samples == 20000);
    }
    SUBCASE("gamma = 0 excludes nothing") {
        MeasureEstimate m = excluded_measure(2, {0.0, 2.5, 50}, DiophantineSet::Omega0, 20000, 7);
        CHECK(m.fraction == 0.0);
        CHECK(m.failures == 0);
    }
    SUBCASE("linear scaling in gamma") {
        MeasureEstimate a = excluded_measure(2, {1e-3, 2.5, 50}, DiophantineSet::Omega0, 1000000, 7);
        MeasureEstimate b = excluded_measure(2, {2e-3, 2.5, 50}, DiophantineSet::Omega0, 1000000, 7);
        const double ratio = b.fraction / a.fraction;
        CHECK(ratio >= 1.5);
        CHECK(ratio <= 2.5);
        const double p = a.fraction;
        CHECK(a.ci95 == doctest::Approx(1.96 * std::sqrt(p * (1 - p) / 1e6)).epsilon(1e-9));
    }
    SUBCASE("monotone in gamma and tau") {
        double prev = -1.0;
        for (double g : {5e-3, 1e-2, 2e-2}) {
            double f = excluded_measure(2, {g, 2.5, 30}, DiophantineSet::Omega0, 20000, 3).fraction;
            CHECK(f >= prev);
            prev = f;
        }
        prev = 2.0;
        for (double t : {1.5, 2.0, 2.5}) {
            double f = excluded_measure(2, {1e-2, t, 30}, DiophantineSet::Omega1, 20000, 3).fraction;
            CHECK(f <= prev);
            prev = f;
        }
    }
    SUBCASE("sampling is reproducible and independent of order") {
        auto w = sample_frequency(3, 11, 12345);
        CHECK(w == sample_frequency(3, 11, 12345));
        for (double c : w) {
            CHECK(c >= 1.0);
            CHECK(c <= 2.0);
        }
        MeasureEstimate a = excluded_measure(2, {1e-2, 2.5, 30}, DiophantineSet::Omega0, 20000, 3);
        MeasureEstimate b = excluded_measure(2, {1e-2, 2.5, 30}, DiophantineSet::Omega0, 20000, 3);
        CHECK(a.failures == b.failures);
    }
}

TEST_CASE("resonance width") {
    SUBCASE("flat lambda") {
        // lambda_i - lambda_j = const: s is linear along the sweep with slope |k|
        LambdaFamily flat = [](int j, const std::vector<double>&) { return 2.0 * j; };
        ResonanceQuery q{3, 1, {-2, -1}, 1.0, 0.1};
        ResonanceWidth w = resonance_width(flat, q, 1.0, 0.0, {1.5, 1.5}, 20000);
        // s(r) = 4 - 4.5 - 3 r vanishes at r = -1/6, inside the box
        const double width = 2.0 * 0.1 * 2.0 / 3.0;
        CHECK(w.measured == doctest::Approx(width * std::sqrt(2.0)).epsilon(1e-9));
        CHECK(w.measured <= w.bound);
        CHECK(w.nonempty);
    }
    SUBCASE("empty set below the emptiness threshold") {
        LambdaFamily lin = [](int j, const std::vector<double>&) { return 1.0 * j; };
        ResonanceQuery q{20, 1, {1}, 1.0, 0.2};
        ResonanceWidth w = resonance_width(lin, q, 1.0, 0.0, {1.5});
        CHECK(w.predicted_empty);
        CHECK_FALSE(w.nonempty);
        CHECK(w.measured == 0.0);
    }
    SUBCASE("perturbed harmonic spectrum over random queries") {
        const double eps = 0.01;
        LambdaFamily lam = [eps](int j, const std::vector<double>& w) {
            double a = counter_uniform(17, j, 0) - 0.5, b = counter_uniform(17, j, 1) - 0.5, c = 6.0 * counter_uniform(17, j, 2);
            return j + 0.5 + eps * std::sin(a * w[0] + b * w[1] + c);
        };
        int nonempty = 0;
        for (std::uint64_t t = 0; t < 100; ++t) {
            ResonanceQuery q;
            q.i = 1 + static_cast<int>(10 * counter_uniform(23, t, 0));
            q.j = 1 + static_cast<int>(10 * counter_uniform(23, t, 1));
            if (q.i == q.j) q.j = q.i + 1;
            q.k = {static_cast<int>(9 * counter_uniform(23, t, 2)) - 4, static_cast<int>(9 * counter_uniform(23, t, 3)) - 4};
            if (is_zero(q.k)) q.k = {1, 0};
            q.alpha = 0.01 + 0.24 * counter_uniform(23, t, 4);
            ResonanceWidth w;
            CHECK_NOTHROW(w = resonance_width(lam, q, 0.5, 0.05, sample_frequency(2, 29, t), 4000));
            CHECK(w.hypothesis_ok);
            CHECK(w.measured <= w.bound * (1.0 + 1e-9));
            if (w.predicted_empty) CHECK_FALSE(w.nonempty);
            nonempty += w.nonempty;
        }
        CHECK(nonempty > 0);
    }
    SUBCASE("degenerate query") {
        LambdaFamily lin = [](int j, const std::vector<double>&) { return 1.0 * j; };
        CHECK_THROWS_AS(resonance_width(lin, {2, 2, {0}, 1.0, 0.1}, 1.0, 0.0, {1.5}), Error);
    }
}

}
