#include "dca/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <thread>

#include "dca/rsa_core.hpp"

namespace dca::analysis {

namespace {

Int binomial(std::size_t n, std::size_t k) {
    Int r;
    mpz_bin_uiui(r.get_mpz_t(), n, k);
    return r;
}

Int power(std::uint64_t base, std::size_t exp) {
    Int r;
    mpz_ui_pow_ui(r.get_mpz_t(), base, exp);
    return r;
}

Rational canonical(Rational q) {
    q.canonicalize();
    return q;
}

constexpr std::uint64_t kSamplesPerStream = 1024;

}  // namespace

CostReport cost(std::size_t n, unsigned t) {
    if (n == 0 || t == 0) throw PreconditionError("cost: n and t must be >= 1");
    CostReport r;
    r.n = n;
    r.t = t;
    const Int w = Int(1) << t;
    r.table = Rational(w - 1);
    r.squares = Rational(Int(n));
    r.multiplies = canonical(Rational(Int(n), Int(t)) * canonical(Rational(w - 1, w)));
    r.tau = r.table + r.squares + r.multiplies;
    return r;
}

Rational tau(std::size_t n, unsigned t) { return cost(n, t).tau; }

unsigned optimal_t(std::size_t n, unsigned t_lo, unsigned t_hi) {
    if (t_lo == 0 || t_hi < t_lo) throw PreconditionError("optimal_t: empty or invalid range");
    unsigned best = t_lo;
    Rational best_tau = tau(n, t_lo);
    for (unsigned t = t_lo + 1; t <= t_hi; ++t) {
        Rational v = tau(n, t);
        if (v < best_tau) {
            best_tau = v;
            best = t;
        }
    }
    return best;
}

Moments digit_moments(std::size_t n, unsigned t, MomentMode mode) {
    if (n == 0 || t == 0) throw PreconditionError("digit_moments: n and t must be >= 1");
    const Int w = Int(1) << t;
    Rational trials = mode == MomentMode::Formula ? canonical(Rational(Int(n), Int(t)))
                                                  : Rational(Int(block_count(n, t)));
    Moments m;
    m.expectation = canonical(trials / Rational(w));
    m.variance = canonical(m.expectation * canonical(Rational(w - 1, w)));
    return m;
}

Rational pmf(std::size_t blocks, std::size_t z, std::uint64_t w) {
    if (w < 2) throw PreconditionError("pmf: w must be >= 2");
    if (z > blocks) return 0;
    return canonical(Rational(binomial(blocks, z) * power(w - 1, blocks - z), power(w, blocks)));
}

Rational cumulative(std::size_t blocks, std::size_t k, std::uint64_t w) {
    if (w < 2) throw PreconditionError("cumulative: w must be >= 2");
    Int numerator = 0;
    for (std::size_t z = 0; z <= std::min(k, blocks); ++z)
        numerator += binomial(blocks, z) * power(w - 1, blocks - z);
    return canonical(Rational(numerator, power(w, blocks)));
}

double log2_int(const Int& x) {
    if (x <= 0) throw PreconditionError("log2_int: non-positive argument");
    long exp = 0;
    const double mant = mpz_get_d_2exp(&exp, x.get_mpz_t());
    return static_cast<double>(exp) + std::log2(mant);
}

double search_space_bits(std::size_t blocks, std::size_t k) {
    if (k > blocks) throw PreconditionError("search_space_bits: k exceeds B");
    Int sum = 0;
    for (std::size_t z = 0; z <= k; ++z) sum += binomial(blocks, z);
    return log2_int(sum);
}

Rational pass_probability(std::uint64_t w, std::size_t blocks, std::size_t z) {
    if (w < 2 || z > blocks) throw PreconditionError("pass_probability: need w >= 2 and z <= B");
    return canonical(Rational(power(w - 1, blocks - z + 1), power(w, blocks)));
}

ExpectedCounts expected_counts(std::uint64_t w, std::size_t blocks, std::size_t z) {
    const Rational p = pmf(blocks, z, w);
    const Rational wq{Int(static_cast<unsigned long>(w))};
    const Rational w1{Int(static_cast<unsigned long>(w - 1))};
    const Rational zq{Int(z)};
    ExpectedCounts c;
    c.coefficients = canonical(wq * p);
    c.positions = canonical(zq * wq * p);
    c.nonzero_coefficients = canonical(w1 * p);
    c.nonzero_positions = canonical(zq * w1 * p);
    return c;
}

double countermeasure_space_bits(std::size_t n, unsigned t, std::size_t z_max) {
    const std::size_t blocks = block_count(n, t);
    if (z_max > blocks) throw PreconditionError("countermeasure_space_bits: z_max exceeds B");
    return search_space_bits(blocks, z_max);
}

DigitHistogram empirical_digit_histogram(std::size_t n, unsigned t, std::uint64_t trials, std::uint64_t seed,
                                         unsigned threads) {
    if (trials == 0) throw PreconditionError("empirical_digit_histogram: trials must be >= 1");
    if (t == 0 || t > 20) throw PreconditionError("empirical_digit_histogram: t must be in [1, 20]");
    DigitHistogram h;
    h.n = n;
    h.t = t;
    h.blocks = block_count(n, t);
    h.trials = trials;
    const std::uint64_t w = std::uint64_t{1} << t;

    const std::uint64_t streams = (trials + kSamplesPerStream - 1) / kSamplesPerStream;
    std::vector<std::vector<std::uint64_t>> partial(streams, std::vector<std::uint64_t>(h.blocks + 1, 0));
    auto run_stream = [&](std::uint64_t s) {
        std::mt19937_64 engine(derive_seed(seed, s));
        std::uniform_int_distribution<std::uint64_t> digit(0, w - 1);
        std::vector<std::size_t> tally(w);
        const std::uint64_t begin = s * kSamplesPerStream;
        const std::uint64_t end = std::min(trials, begin + kSamplesPerStream);
        for (std::uint64_t i = begin; i < end; ++i) {
            std::fill(tally.begin(), tally.end(), 0);
            for (std::size_t b = 0; b < h.blocks; ++b) ++tally[digit(engine)];
            for (std::size_t x : tally) ++partial[s][x];
        }
    };
    const unsigned workers = std::max(1u, threads);
    std::vector<std::thread> pool;
    for (unsigned id = 0; id < workers; ++id)
        pool.emplace_back([&, id] {
            for (std::uint64_t s = id; s < streams; s += workers) run_stream(s);
        });
    for (auto& th : pool) th.join();

    h.counts.assign(h.blocks + 1, 0);
    for (const auto& p : partial)
        for (std::size_t z = 0; z <= h.blocks; ++z) h.counts[z] += p[z];

    const double total = static_cast<double>(trials * w);
    h.frequencies.resize(h.blocks + 1);
    double mean = 0.0;
    for (std::size_t z = 0; z <= h.blocks; ++z) {
        h.frequencies[z] = static_cast<double>(h.counts[z]) / total;
        mean += static_cast<double>(z) * h.frequencies[z];
        h.max_deviation = std::max(h.max_deviation, std::abs(h.frequencies[z] - to_double(pmf(h.blocks, z, w))));
    }
    h.mean = mean;
    h.mode = static_cast<std::size_t>(std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
    return h;
}

double to_double(const Rational& q) { return q.get_d(); }

std::string format_fixed(const Rational& q, int decimals) {
    const bool negative = q < 0;
    Rational a = negative ? Rational(-q) : q;
    const Int scale = power(10, static_cast<std::size_t>(decimals));
    // floor(a * scale + 1/2)
    Rational scaled = a * Rational(scale) + Rational(1, 2);
    Int rounded;
    mpz_fdiv_q(rounded.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
    std::string digits = rounded.get_str();
    if (decimals > 0) {
        if (digits.size() <= static_cast<std::size_t>(decimals))
            digits.insert(0, static_cast<std::size_t>(decimals) + 1 - digits.size(), '0');
        digits.insert(digits.size() - static_cast<std::size_t>(decimals), ".");
    }
    return (negative && rounded != 0 ? "-" : "") + digits;
}

std::string format_sig(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

}  // namespace dca::analysis
