#include <doctest.h>

#include <cmath>

#include "dca/analysis.hpp"

using namespace dca;
using namespace dca::analysis;

namespace {

Rational frac(unsigned long num, unsigned long den) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

}  // namespace

TEST_CASE("tau reproduces the cost table") {
    const char* rows[3][6] = {
        {"1329.7", "1279.0", "1253.4", "1255.0", "1296.1", "1406.5"},
        {"1991.0", "1911.0", "1864.6", "1851.0", "1880.7", "1982.3"},
        {"2652.3", "2543.0", "2475.8", "2447.0", "2465.3", "2558.0"},
    };
    const std::size_t sizes[3] = {1024, 1536, 2048};
    for (int r = 0; r < 3; ++r)
        for (unsigned t = 3; t <= 8; ++t) CHECK(format_fixed(tau(sizes[r], t), 1) == rows[r][t - 3]);

    // 1982.25 sits exactly on a rounding boundary.
    CHECK(tau(1536, 8) == frac(7929, 4));
    CHECK(format_fixed(Rational(-5, 4), 1) == "-1.3");
}

TEST_CASE("cost components") {
    for (std::size_t n : {16u, 1024u, 1536u}) {
        for (unsigned t = 1; t <= 12; ++t) {
            const CostReport c = cost(n, t);
            CHECK(c.squares == Rational(static_cast<unsigned long>(n)));
            CHECK(c.table == Rational((1ul << t) - 1));
            CHECK(c.multiplies == frac(n, t) * (1 - Rational(1, 1ul << t)));
            CHECK(c.tau == c.table + c.squares + c.multiplies);
            CHECK(c.tau == tau(n, t));
        }
    }
}

TEST_CASE("tau is convex in t") {
    for (std::size_t n : {64u, 1024u, 1536u, 2048u, 4096u})
        for (unsigned t = 2; t <= 11; ++t) CHECK(tau(n, t - 1) + tau(n, t + 1) >= 2 * tau(n, t));
}

TEST_CASE("optimal_t") {
    CHECK(optimal_t(1024, 1, 12) == 5);
    CHECK(optimal_t(1536, 1, 12) == 6);
    CHECK(optimal_t(2048, 1, 12) == 6);
    CHECK(optimal_t(100, 7, 7) == 7);

    unsigned best = 1;
    for (unsigned t = 2; t <= 8; ++t)
        if (tau(16, t) < tau(16, best)) best = t;
    CHECK(optimal_t(16, 1, 8) == best);
    CHECK_THROWS_AS(optimal_t(16, 5, 4), PreconditionError);
}

TEST_CASE("digit moments") {
    const Moments m6 = digit_moments(1536, 6);
    CHECK(m6.expectation == 4);
    CHECK(m6.variance == Rational(63, 16));
    const Moments m5 = digit_moments(1536, 5);
    CHECK(m5.expectation == Rational(48, 5));
    CHECK(m5.variance == Rational(93, 10));

    const Moments b5 = digit_moments(1536, 5, MomentMode::Block);
    CHECK(b5.expectation == frac(308, 32));
    CHECK(digit_moments(1536, 6, MomentMode::Block).expectation == m6.expectation);
}

TEST_CASE("binomial pmf and cumulative") {
    CHECK(std::abs(to_double(cumulative(256, 4, 64)) - 0.629) <= 0.001);
    CHECK(std::abs(to_double(cumulative(308, 4, 32)) - 0.0351) <= 0.0005);
    CHECK(format_sig(to_double(cumulative(256, 4, 64))) == "0.629");
    CHECK(format_sig(to_double(cumulative(308, 4, 32))) == "0.0351");

    for (std::size_t blocks : {1u, 6u, 64u, 308u}) {
        for (std::uint64_t w : {2u, 4u, 64u}) {
            Rational total = 0;
            Rational mean = 0;
            Rational prev = -1;
            for (std::size_t z = 0; z <= blocks; ++z) {
                total += pmf(blocks, z, w);
                mean += Rational(static_cast<unsigned long>(z)) * pmf(blocks, z, w);
                const Rational c = cumulative(blocks, z, w);
                CHECK(c >= prev);
                prev = c;
            }
            CHECK(total == 1);
            CHECK(mean == frac(blocks, w));
            CHECK(cumulative(blocks, blocks, w) == 1);
        }
    }
    CHECK(pmf(10, 11, 4) == 0);
    CHECK_THROWS_AS(pmf(10, 1, 1), PreconditionError);
}

TEST_CASE("search space bits") {
    CHECK(std::abs(search_space_bits(256, 4) - 27.4) <= 0.05);
    CHECK(std::abs(search_space_bits(308, 4) - 28.5) <= 0.05);
    CHECK(search_space_bits(100, 0) == 0.0);
    double prev = -1;
    for (std::size_t k = 0; k <= 64; ++k) {
        const double v = search_space_bits(64, k);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(search_space_bits(64, 64) == doctest::Approx(64.0));
}

TEST_CASE("countermeasure space bound") {
    CHECK(std::abs(countermeasure_space_bits(1536, 4, 20) - 109.9767) <= 0.001);
    CHECK(std::abs(countermeasure_space_bits(1536, 6, 4) - 27.4) <= 0.05);
    CHECK(countermeasure_space_bits(120, 4, 30) == doctest::Approx(30.0));
    CHECK_THROWS_AS(countermeasure_space_bits(120, 4, 31), PreconditionError);
}

TEST_CASE("pass probability and expected counts") {
    for (std::uint64_t w : {4u, 16u, 64u}) {
        const std::size_t blocks = 40;
        for (std::size_t z = 0; z <= blocks; ++z) {
            const Rational p = pass_probability(w, blocks, z);
            if (z > 0) CHECK(p < pass_probability(w, blocks, z - 1));

            const ExpectedCounts c = expected_counts(w, blocks, z);
            const Rational pz = pmf(blocks, z, w);
            CHECK(c.coefficients == Rational(w) * pz);
            CHECK(c.positions == Rational(static_cast<unsigned long>(z)) * c.coefficients);
            CHECK(c.nonzero_coefficients == Rational(w - 1) * pz);
            CHECK(c.nonzero_positions == Rational(static_cast<unsigned long>(z)) * c.nonzero_coefficients);

            Int choose;
            mpz_bin_uiui(choose.get_mpz_t(), blocks, z);
            CHECK(c.nonzero_coefficients / Rational(choose) == p);
        }
        Rational base = 1 - Rational(1, w);
        Rational power = 1;
        for (std::size_t i = 0; i < blocks; ++i) power *= base;
        CHECK(expected_counts(w, blocks, 0).coefficients == Rational(w) * power);
    }
}

TEST_CASE("empirical digit histogram") {
    SUBCASE("t = 6") {
        const DigitHistogram h = empirical_digit_histogram(1536, 6, 10000, 1);
        CHECK(h.blocks == 256);
        CHECK((h.mode == 3 || h.mode == 4));
        CHECK(h.max_deviation < 0.015);
        std::uint64_t total = 0;
        for (auto c : h.counts) total += c;
        CHECK(total == 10000u * 64u);
        // 3 sigma of the pooled mean around n / (t 2^t) = 4
        const double sigma = std::sqrt(3.9375 / 10000.0);
        CHECK(std::abs(h.mean - 4.0) < 3 * sigma);
    }
    SUBCASE("t = 5 is roughly symmetric around 9.6") {
        const DigitHistogram h = empirical_digit_histogram(1536, 5, 10000, 2);
        CHECK(std::abs(h.mean - 9.625) < 3 * std::sqrt(9.3 / 10000.0));
        CHECK(std::abs(h.mean - 9.6) < 0.1);
        CHECK((h.mode == 9 || h.mode == 10));
        CHECK(std::abs(h.frequencies[7] - h.frequencies[12]) < 0.03);
    }
    SUBCASE("one trial") {
        const DigitHistogram h = empirical_digit_histogram(64, 2, 1, 3);
        CHECK(h.max_deviation <= 1.0);
        CHECK(h.trials == 1);
    }
    SUBCASE("thread count does not change the result") {
        const DigitHistogram a = empirical_digit_histogram(512, 4, 5000, 9, 1);
        const DigitHistogram b = empirical_digit_histogram(512, 4, 5000, 9, 4);
        CHECK(a.counts == b.counts);
    }
    CHECK_THROWS_AS(empirical_digit_histogram(64, 2, 0, 3), PreconditionError);
}

TEST_CASE("display helpers") {
    CHECK(format_fixed(Rational(12534, 10), 1) == "1253.4");
    CHECK(format_fixed(Rational(1, 3), 3) == "0.333");
    CHECK(format_fixed(Rational(2, 3), 0) == "1");
    CHECK(format_sig(109.97668, 7) == "109.9767");
    CHECK(log2_int(Int(1) << 200) == doctest::Approx(200.0));
}
