#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "homcrb/fisher.hpp"
#include "homcrb/liegroup.hpp"
#include "homcrb/models.hpp"
#include "homcrb/scoring.hpp"

using namespace homcrb;

namespace {

GroupElement pose() {
  return se3_pose(exp(GroupDescriptor::so3(), Eigen::Vector3d(0, 0, 1)).matrix(),
                  Eigen::Vector3d(0.5, -0.5, 0.25));
}

void BM_ExpLogSe3(benchmark::State& state) {
  const Group G = GroupDescriptor::se3();
  RandomStream rng(1);
  const Eigen::VectorXd x = rng.normal_vector(6) * 0.5;
  for (auto _ : state) {
    const GroupElement g = exp(G, x);
    benchmark::DoNotOptimize(log(g).coords);
  }
}
BENCHMARK(BM_ExpLogSe3);

void BM_PsiSe3(benchmark::State& state) {
  const Group G = GroupDescriptor::se3();
  RandomStream rng(2);
  const AlgebraVector X(G, rng.normal_vector(6) * 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(psi_matrix(X).matrix);
}
BENCHMARK(BM_PsiSe3);

void BM_LandmarkFimMonteCarlo(benchmark::State& state) {
  const LandmarkModel model({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}});
  const GroupElement g = pose();
  for (auto _ : state) {
    RandomStream rng(3);
    benchmark::DoNotOptimize(
        fim(model, g, FimFrame::Reduced, FimMethod::MonteCarloGradient, static_cast<int>(state.range(0)), rng)
            .matrix);
  }
}
BENCHMARK(BM_LandmarkFimMonteCarlo)->Arg(1000)->Arg(10000);

void BM_LandmarkScoring(benchmark::State& state) {
  const LandmarkModel model({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}});
  RandomStream rng(4);
  const auto xs = model.sample(pose(), static_cast<int>(state.range(0)), rng);
  const GroupElement e = GroupElement::identity(model.group());
  for (auto _ : state) benchmark::DoNotOptimize(fisher_scoring(model, xs, e).iterations_used);
}
BENCHMARK(BM_LandmarkScoring)->Arg(100)->Arg(1000)->Arg(10000);

void BM_SpdScoring(benchmark::State& state) {
  const SpdModel model(3);
  RandomStream rng(5);
  const auto xs = model.sample(GroupElement::identity(model.group()), 500, rng);
  const GroupElement e = GroupElement::identity(model.group());
  for (auto _ : state) benchmark::DoNotOptimize(fisher_scoring(model, xs, e).iterations_used);
}
BENCHMARK(BM_SpdScoring);

}  // namespace
BENCHMARK_MAIN();
