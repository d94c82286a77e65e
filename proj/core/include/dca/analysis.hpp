#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dca/bigint.hpp"

namespace dca::analysis {

using Rational = mpq_class;

/// Expected coprocessor operations for one signature, split by phase.
struct CostReport {
    std::size_t n = 0;
    unsigned t = 0;
    Rational table;       // 2^t - 1
    Rational squares;     // n
    Rational multiplies;  // (n/t)(1 - 2^-t)
    Rational tau;
};

CostReport cost(std::size_t n, unsigned t);
Rational tau(std::size_t n, unsigned t);

/// argmin of tau over [t_lo, t_hi]; ties go to the smaller t.
unsigned optimal_t(std::size_t n, unsigned t_lo, unsigned t_hi);

/// Formula mode uses n/(t 2^t) as the mean; block mode uses B = ceil(n/t)
/// Bernoulli(2^-t) trials. They agree when t divides n.
enum class MomentMode { Formula, Block };

struct Moments {
    Rational expectation;
    Rational variance;
};

Moments digit_moments(std::size_t n, unsigned t, MomentMode mode = MomentMode::Formula);

/// P(X = z) for X ~ Binomial(B, 1/w).
Rational pmf(std::size_t blocks, std::size_t z, std::uint64_t w);
/// P(X <= k).
Rational cumulative(std::size_t blocks, std::size_t k, std::uint64_t w);

/// log2 of sum_{z <= k} C(B, z).
double search_space_bits(std::size_t blocks, std::size_t k);

/// (w - 1)^{B - z + 1} / w^B: chance that one z-subset passes a check.
Rational pass_probability(std::uint64_t w, std::size_t blocks, std::size_t z);

struct ExpectedCounts {
    Rational coefficients;          // W_z  = w p(B, z)
    Rational positions;             // B_z  = z w p(B, z)
    Rational nonzero_coefficients;  // W'_z = (w - 1) p(B, z)
    Rational nonzero_positions;     // B'_z = z (w - 1) p(B, z)
};

ExpectedCounts expected_counts(std::uint64_t w, std::size_t blocks, std::size_t z);

/// Search space when every coefficient occupies at most z_max of the
/// ceil(n/t) blocks.
double countermeasure_space_bits(std::size_t n, unsigned t, std::size_t z_max);

struct DigitHistogram {
    std::size_t n = 0;
    unsigned t = 0;
    std::size_t blocks = 0;
    std::uint64_t trials = 0;
    std::vector<std::uint64_t> counts;  // counts[z], z in [0, B]
    std::vector<double> frequencies;
    double mean = 0.0;
    double max_deviation = 0.0;  // max_z |frequency - pmf|
    std::size_t mode = 0;
};

/// Samples `trials` uniform digit vectors of B blocks and tallies how many
/// blocks carry each coefficient (all 2^t coefficients pooled). Work is
/// split over fixed seed streams, so the result does not depend on
/// `threads`.
DigitHistogram empirical_digit_histogram(std::size_t n, unsigned t, std::uint64_t trials, std::uint64_t seed,
                                         unsigned threads = 1);

double to_double(const Rational& q);
double log2_int(const Int& x);

/// Half-up decimal rounding of an exact rational.
std::string format_fixed(const Rational& q, int decimals);
/// Three significant digits.
std::string format_sig(double x, int digits = 3);

}  // namespace dca::analysis
