#include <benchmark/benchmark.h>

#include "rflstd/delta.hpp"
#include "rflstd/features.hpp"
#include "rflstd/lstd.hpp"
#include "rflstd/mrp.hpp"
#include "rflstd/theory.hpp"

namespace {

struct Fixture {
    rflstd::MarkovRewardProcess mrp;
    rflstd::StationaryDistribution pi;
    rflstd::TransitionDataset ds;
    rflstd::EmpiricalOperators ops;
    Eigen::MatrixXd S_visited;

    Fixture(int num_states, int n) {
        mrp = rflstd::synthetic_ergodic_mrp(num_states, 20, 0.95, 0);
        pi = rflstd::stationary_distribution(mrp);
        ds = rflstd::pathwise_adjustment(rflstd::sample_path(mrp, pi, n, 42));
        ops = rflstd::build_operators(ds, num_states, mrp.discount);
        S_visited = ops.visited_states(mrp.states);
    }
};

const Fixture &fixture() {
    static const Fixture f(100, 3000);
    return f;
}

const rflstd::TheoryInputs &theory_inputs() {
    static const rflstd::TheoryInputs in = [] {
        const Fixture &f = fixture();
        return rflstd::prepare_theory(f.ops, f.mrp, f.pi, rflstd::Activation{rflstd::ActivationKind::ReLU},
                                      f.ds.rewards);
    }();
    return in;
}

void BM_PhiGram(benchmark::State &state) {
    const Fixture &f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(rflstd::phi_gram(f.mrp.states, rflstd::Activation{rflstd::ActivationKind::ReLU}));
    }
}
BENCHMARK(BM_PhiGram)->Unit(benchmark::kMillisecond);

void BM_LstdFit(benchmark::State &state) {
    const Fixture &f = fixture();
    const int N = static_cast<int>(state.range(0));
    const rflstd::FeatureMap fm(N, 20, rflstd::Activation{rflstd::ActivationKind::ReLU}, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rflstd::lstd_fit(f.ops, fm, f.S_visited, f.ds.rewards, 1e-6));
    }
}
BENCHMARK(BM_LstdFit)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_DeltaSolve(benchmark::State &state) {
    const rflstd::TheoryInputs &in = theory_inputs();
    const double lambda = state.range(0) == 0 ? 1e-9 : 1e-3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(rflstd::delta_fixed_point(in.spectrum, in.m(), in.m(), lambda));
    }
}
BENCHMARK(BM_DeltaSolve)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_TheoryPoint(benchmark::State &state) {
    const rflstd::TheoryInputs &in = theory_inputs();
    for (auto _ : state) {
        const auto de = rflstd::deterministic_equivalent(in, 2 * in.m(), 1e-6);
        benchmark::DoNotOptimize(rflstd::theoretical_true_msbe(in, de));
        benchmark::DoNotOptimize(rflstd::theoretical_empirical_msbe(in, de));
    }
}
BENCHMARK(BM_TheoryPoint)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
