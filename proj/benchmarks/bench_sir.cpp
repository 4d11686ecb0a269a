#include <benchmark/benchmark.h>

#include <epidhgnn/sir.hpp>

using namespace epidhgnn;

static void SirStep(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const int e = 11;
    Rng rng(3);
    std::vector<Contact> contacts;
    for (int v = 0; v < n; ++v) {
        contacts.push_back({0, static_cast<int>(rng.uniformInt(0, e - 1)), v});
    }
    const auto inc = buildIncidence(contacts, n, e);
    std::vector<SirState> frame(static_cast<std::size_t>(n), SirState::Susceptible);
    for (int v = 0; v < n / 10; ++v) frame[static_cast<std::size_t>(v)] = SirState::Infected;
    PathogenParams params{0.001, 0.01, 1.0, 1, SirMode::Hyperedge};
    for (auto _ : state) {
        auto next = stepSir(inc, frame, params, rng);
        benchmark::DoNotOptimize(next.data());
    }
    state.SetComplexityN(n);
}
BENCHMARK(SirStep)->RangeMultiplier(4)->Range(512, 32768)->Complexity();
