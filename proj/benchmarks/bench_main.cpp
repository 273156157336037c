#include "longic/indirect.hpp"
#include "longic/models.hpp"
#include "longic/optimizer.hpp"
#include "longic/pipeline.hpp"
#include "longic/projection.hpp"
#include "longic/synth.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace longic;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct World {
  SyntheticCohort synthetic;
  TrainedModels models;
};

const World& world() {
  static const World w = [] {
    auto spec = default_generator_spec();
    spec.n = 1000;
    World out{generate(spec), {}};
    out.models = train_all(out.synthetic.cohort, ModelConfig{}, 1);
    return out;
  }();
  return w;
}

std::vector<FeatureKind> direct_kinds(const Cohort& c) {
  std::vector<FeatureKind> out;
  for (auto f : c.partition.direct) out.push_back(c.schema.features[f].kind);
  return out;
}

void BM_Project(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<DirectionalCost> dc;
  for (Eigen::Index j = 0; j < n; ++j) dc.push_back({1.0 + std::abs(g(rng)), 1.0 + std::abs(g(rng))});
  const CostModel costs(dc);
  const BudgetSpec b{2.0, {VectorXd::Constant(n, -3.0), VectorXd::Constant(n, 3.0)}};
  const VectorXd x_bar = VectorXd::Zero(n);
  const VectorXd z = VectorXd::NullaryExpr(n, [&] { return 2.0 * g(rng); });
  for (auto _ : state) benchmark::DoNotOptimize(project(costs, b, x_bar, z));
}
BENCHMARK(BM_Project)->Arg(2)->Arg(8)->Arg(64);

void BM_Optimize(benchmark::State& state) {
  const auto& w = world();
  const auto& c = w.synthetic.cohort;
  const auto& vm = w.models.at(static_cast<int>(state.range(0)));
  const auto kinds = direct_kinds(c);
  const VectorXd x = vm.design.X.row(0).transpose();
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimize(*vm.classifier, vm.indirect.get(), x, vm.layout, kinds,
                                      c.cost_model, BudgetSpec{2.0, c.raw_bounds}));
  }
}
BENCHMARK(BM_Optimize)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_SvmFit(benchmark::State& state) {
  const auto& v1 = world().synthetic.cohort.visit(1);
  const auto rows = std::min<Eigen::Index>(state.range(0), v1.X.rows());
  const MatrixXd X = v1.X.topRows(rows);
  const std::vector<int> y(v1.y_next.begin(), v1.y_next.begin() + rows);
  const auto kinds = world().synthetic.cohort.schema.kinds();
  for (auto _ : state) benchmark::DoNotOptimize(fit_svm(X, y, ModelConfig{}.svm, kinds));
}
BENCHMARK(BM_SvmFit)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_IndirectPredict(benchmark::State& state) {
  const auto& vm = world().models.at(1);
  const auto& layout = vm.layout;
  const VectorXd x = vm.design.X.row(0).transpose();
  VectorXd ctx(static_cast<Eigen::Index>(layout.context.size()));
  VectorXd dir(static_cast<Eigen::Index>(layout.direct.size()));
  for (std::size_t k = 0; k < layout.context.size(); ++k) ctx[static_cast<Eigen::Index>(k)] = x[layout.context[k]];
  for (std::size_t k = 0; k < layout.direct.size(); ++k) dir[static_cast<Eigen::Index>(k)] = x[layout.direct[k]];
  MatrixXd J;
  for (auto _ : state) benchmark::DoNotOptimize(vm.indirect->predict_with_jacobian(ctx, dir, J));
}
BENCHMARK(BM_IndirectPredict)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
