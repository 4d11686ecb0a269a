#include <benchmark/benchmark.h>

#include <epidhgnn/model.hpp>
#include <epidhgnn/rng.hpp>

using namespace epidhgnn;

namespace {

TimestepStructure partitionStructure(int n, int e, Rng& rng) {
    std::vector<Contact> contacts;
    for (int v = 0; v < n; ++v) {
        contacts.push_back({0, static_cast<int>(rng.uniformInt(0, e - 1)), v});
    }
    return TimestepStructure::from(buildIncidence(contacts, n, e));
}

}  // namespace

static void HgnnLayerForward(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const int e = 11;
    const int d = 32;
    Rng rng(7);
    const auto structure = partitionStructure(n, e, rng);
    Eigen::MatrixXd x(n, 3);
    for (int i = 0; i < x.size(); ++i) x(i / 3, i % 3) = rng.uniform(-1, 1);
    Eigen::MatrixXd theta(3, d);
    for (int i = 0; i < theta.size(); ++i) theta(i / d, i % d) = rng.uniform(-1, 1);
    for (auto _ : state) {
        auto out = hgnnLayer(structure, x, theta, true);
        benchmark::DoNotOptimize(out.node.data());
    }
    state.SetComplexityN(n);
}
BENCHMARK(HgnnLayerForward)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

static void TemporalConvForward(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const int d = 32, k = 3, frames = 30;
    Rng rng(9);
    std::vector<Eigen::MatrixXd> seq;
    for (int t = 0; t < frames; ++t) {
        Eigen::MatrixXd m(n, d);
        for (int i = 0; i < m.size(); ++i) m(i / d, i % d) = rng.uniform(-1, 1);
        seq.push_back(m);
    }
    std::vector<Eigen::MatrixXd> phi;
    for (int tap = 0; tap < k; ++tap) {
        Eigen::MatrixXd m(d, d);
        for (int i = 0; i < m.size(); ++i) m(i / d, i % d) = rng.uniform(-1, 1);
        phi.push_back(m);
    }
    for (auto _ : state) {
        auto out = temporalConv(seq, phi, Activation::Rectifier);
        benchmark::DoNotOptimize(out.back().data());
    }
}
BENCHMARK(TemporalConvForward)->RangeMultiplier(4)->Range(256, 4096);
