#include <benchmark/benchmark.h>

#include "dca/analysis.hpp"
#include "dca/campaign.hpp"

using namespace dca;

namespace {

Int unit_message(const KeyPair& key, std::uint64_t seed) {
    Rng rng(seed);
    for (;;) {
        Int m = rng.range(2, key.n_mod - 1);
        Int g;
        mpz_gcd(g.get_mpz_t(), m.get_mpz_t(), key.n_mod.get_mpz_t());
        if (g == 1) return m;
    }
}

void BM_Sign2tAry(benchmark::State& state) {
    const auto nbits = static_cast<std::size_t>(state.range(0));
    const auto t = static_cast<unsigned>(state.range(1));
    const KeyPair key = generate_keypair(nbits, std::nullopt, 1);
    const Int m = unit_message(key, 2);
    const WindowedExponent w = decompose(key.d, t, key.nbits);
    for (auto _ : state) {
        const PrecompTable table = precompute_table(m, t, key.n_mod);
        benchmark::DoNotOptimize(sign_2t_ary(m, w, key.n_mod, table));
    }
}
BENCHMARK(BM_Sign2tAry)->ArgsProduct({{512, 1024, 2048}, {1, 4, 5, 6}});

void BM_ModexpOracle(benchmark::State& state) {
    const KeyPair key = generate_keypair(static_cast<std::size_t>(state.range(0)), std::nullopt, 1);
    const Int m = unit_message(key, 2);
    for (auto _ : state) benchmark::DoNotOptimize(modexp_oracle(m, key.d, key.n_mod));
}
BENCHMARK(BM_ModexpOracle)->Arg(512)->Arg(1024)->Arg(2048);

void BM_CollectSignatures(benchmark::State& state) {
    const KeyPair key = generate_keypair(static_cast<std::size_t>(state.range(0)), std::nullopt, 1);
    const Int m = unit_message(key, 2);
    const auto t = static_cast<unsigned>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(collect_dca_signatures(key, m, t));
}
BENCHMARK(BM_CollectSignatures)->Args({256, 4})->Args({512, 5});

void BM_DSearch(benchmark::State& state) {
    const auto nbits = static_cast<std::size_t>(state.range(0));
    const auto threads = static_cast<unsigned>(state.range(1));
    const KeyPair key = generate_keypair(nbits, std::nullopt, 3);
    const Int m = unit_message(key, 4);
    const PositionCheckerSet checkers = build_checkers(collect_dca_signatures(key, m, 4));
    const std::size_t blocks = block_count(key.nbits, 4);
    SearchOptions opts;
    opts.threads = threads;
    for (auto _ : state) benchmark::DoNotOptimize(d_search(checkers, blocks, blocks, opts));
}
BENCHMARK(BM_DSearch)->Args({128, 1})->Args({256, 1})->Args({256, 4})->Unit(benchmark::kMillisecond);

void BM_SmallEAttack(benchmark::State& state) {
    const KeyPair key = generate_keypair(512, Int(65537), 5);
    const Int m = unit_message(key, 6);
    const PositionCheckerSet checkers = build_checkers(collect_dca_signatures(key, m, 5));
    const std::size_t blocks = block_count(key.nbits, 5);
    for (auto _ : state) benchmark::DoNotOptimize(small_e_attack(checkers, blocks, blocks, key.e));
}
BENCHMARK(BM_SmallEAttack)->Unit(benchmark::kMillisecond);

void BM_NaiveAttack(benchmark::State& state) {
    const KeyPair key = generate_keypair(256, std::nullopt, 7);
    const Int m = unit_message(key, 8);
    const Device device = make_device(key, 4);
    for (auto _ : state) benchmark::DoNotOptimize(naive_attack(device, m, key.n_mod, 4, 64));
}
BENCHMARK(BM_NaiveAttack)->Unit(benchmark::kMillisecond);

void BM_CountermeasureSpace(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(analysis::countermeasure_space_bits(1536, 4, 20));
}
BENCHMARK(BM_CountermeasureSpace);

void BM_DigitHistogram(benchmark::State& state) {
    const auto threads = static_cast<unsigned>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(analysis::empirical_digit_histogram(1536, 6, 10000, 1, threads));
}
BENCHMARK(BM_DigitHistogram)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
