#include <benchmark/benchmark.h>

#include "hstc/conformal.hpp"
#include "hstc/error.hpp"
#include "hstc/hawkes.hpp"
#include "hstc/random.hpp"
#include "hstc/synthetic.hpp"

namespace {

const hstc::SyntheticData& dataset() {
    static const hstc::SyntheticData d = hstc::generate_synthetic(hstc::SyntheticConfig::preset("small"), 1);
    return d;
}

void BM_LikelihoodGradient(benchmark::State& state) {
    const auto& d = dataset();
    for (auto _ : state) benchmark::DoNotOptimize(hstc::log_likelihood_gradient(d.truth, d.panel));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.panel.bins()));
}
BENCHMARK(BM_LikelihoodGradient);

void BM_SimulateBin(benchmark::State& state) {
    const auto& d = dataset();
    const hstc::HawkesState s(d.truth, d.panel.counts);
    const auto k = static_cast<std::size_t>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(hstc::simulate_bin(d.truth, s, k, ++seed));
}
BENCHMARK(BM_SimulateBin)->Arg(10)->Arg(100)->Arg(1000);

void BM_Scores(benchmark::State& state) {
    const auto& d = dataset();
    const auto sc = hstc::simulate_bin(d.truth, d.panel.counts.topRows(150), 10, 3);
    const hstc::CountVector y = d.panel.counts.row(150).transpose();
    const hstc::Vector scale = hstc::standardization_scale(d.panel, {0, 140});
    for (auto _ : state) benchmark::DoNotOptimize(hstc::nonconformity_scores(y, sc, d.topology, scale));
}
BENCHMARK(BM_Scores);

void BM_QuantileRegression(benchmark::State& state) {
    std::vector<double> scores;
    hstc::Rng rng(4);
    for (int i = 0; i < 40; ++i) scores.push_back(rng.uniform(0, 3));
    const auto window = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(hstc::qr_quantile(scores, window, 0.05));
}
BENCHMARK(BM_QuantileRegression)->Arg(3)->Arg(10);

void BM_Pipeline(benchmark::State& state) {
    const auto& d = dataset();
    hstc::PipelineConfig cfg;
    cfg.threads = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(hstc::hst_conformal_pipeline(d.panel, d.topology, {140, 20}, cfg));
}
BENCHMARK(BM_Pipeline)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
    hstc::set_warning_handler([](const std::string&) {});
    benchmark::Initialize(&argc, argv);
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
