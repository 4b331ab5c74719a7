#include <benchmark/benchmark.h>

#include "hotrod/eval.hpp"
#include "hotrod/hawkes.hpp"
#include "hotrod/preprocess.hpp"
#include "hotrod/rng.hpp"
#include "hotrod/ticc.hpp"
#include "support/oracles.hpp"

using namespace hotrod;

namespace {

Eigen::MatrixXd random_ll(int t, int k, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd ll(t, k);
    for (int i = 0; i < t; ++i) {
        for (int j = 0; j < k; ++j) ll(i, j) = rng.normal();
    }
    return ll;
}

void bm_assign_dp(benchmark::State& state) {
    const auto ll = random_ll(static_cast<int>(state.range(0)), 3, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(assign_dp(ll, 10.0));
    }
}
BENCHMARK(bm_assign_dp)->Arg(1440)->Arg(10000);

void bm_toeplitz_glasso(benchmark::State& state) {
    const auto data = oracles::two_regime_series(static_cast<int>(state.range(0)), 100, 2);
    const auto day = oracles::make_day(data.values);
    const auto windows = stack_windows(day, 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_toeplitz_glasso(windows, 2, 0.11, 1.0, 1e-5, 2000));
    }
}
BENCHMARK(bm_toeplitz_glasso)->Arg(500)->Arg(2000);

void bm_sg_filter(benchmark::State& state) {
    const auto values = oracles::ar1_series(static_cast<int>(state.range(0)), 0.7, 1.0, 3);
    auto day = oracles::make_day(
        Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<int>(values.size())));
    for (auto _ : state) {
        benchmark::DoNotOptimize(sg_filter(day.series, SgConfig{}));
    }
}
BENCHMARK(bm_sg_filter)->Arg(1440);

void bm_hawkes_loglik(benchmark::State& state) {
    const auto model = oracles::reference_model();
    const auto seq = simulate(model, static_cast<double>(state.range(0)), 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(loglik(model, seq));
    }
}
BENCHMARK(bm_hawkes_loglik)->Arg(1440);

void bm_hawkes_fit(benchmark::State& state) {
    const auto model = oracles::reference_model();
    std::vector<EventSequence> days;
    for (int d = 0; d < static_cast<int>(state.range(0)); ++d) {
        days.push_back(simulate(model, 1440.0, 100 + static_cast<std::uint64_t>(d)));
    }
    HawkesFitConfig cfg;
    cfg.seed = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_mle(days, 2, model.basis, cfg));
    }
}
BENCHMARK(bm_hawkes_fit)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void bm_rf_train(benchmark::State& state) {
    Rng rng(9);
    const int n = static_cast<int>(state.range(0));
    Eigen::MatrixXd x(n, 72);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < 72; ++c) x(i, c) = rng.normal() + (i % 2 ? 0.5 : -0.5);
        y[static_cast<std::size_t>(i)] = i % 2;
    }
    RfConfig cfg;
    cfg.n_estimators = 30;
    cfg.max_depth = 6;
    cfg.seed = 2;
    for (auto _ : state) {
        benchmark::DoNotOptimize(rf_train(x, y, cfg));
    }
}
BENCHMARK(bm_rf_train)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
