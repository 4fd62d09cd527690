#include <benchmark/benchmark.h>

#include <vector>

#include "zkaudit/air/builder.hpp"
#include "zkaudit/air/field.hpp"
#include "zkaudit/commit.hpp"
#include "zkaudit/nn/dataset.hpp"
#include "zkaudit/nn/train.hpp"
#include "zkaudit/protocol.hpp"

namespace {

using namespace zkaudit;

void BM_FieldMul(benchmark::State& state) {
  auto f = air::PrimeField::bn254();
  air::Fe a = f->from_u64(0x1234567890abcdefULL);
  air::Fe b = f->from_i64(-987654321);
  for (auto _ : state) {
    a = f->mul(a, b);
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_FieldMul);

void BM_RoundDivGadget(benchmark::State& state) {
  fxp::FxpSpec spec = fxp::recommender_spec();
  for (auto _ : state) {
    air::CircuitBuilder b(spec);
    auto c = b.constant(spec.scale_factor);
    for (std::int64_t a = 0; a < state.range(0); ++a) benchmark::DoNotOptimize(b.round_div(b.witness(a * 977), c));
    auto circuit = std::move(b).build();
    benchmark::DoNotOptimize(circuit.grid.rows());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RoundDivGadget)->Arg(256)->Arg(4096);

void BM_CheckConstraints(benchmark::State& state) {
  fxp::FxpSpec spec = fxp::recommender_spec();
  air::CircuitBuilder b(spec);
  auto c = b.constant(spec.scale_factor);
  for (std::int64_t a = 0; a < 4096; ++a) b.round_div(b.witness(a * 977), c);
  auto circuit = std::move(b).build();
  for (auto _ : state) benchmark::DoNotOptimize(circuit.check().empty());
}
BENCHMARK(BM_CheckConstraints);

struct StepFixture {
  nn::ModelGraph model = nn::ModelGraph::recommender(200, 200, 8, 16);
  nn::TrainConfig config;
  nn::Weights w;
  std::vector<nn::Example> batch;

  StepFixture() {
    config.spec = fxp::recommender_spec();
    w = nn::init_weights(model, config.spec, 0);
    auto data = nn::rating_examples(nn::synthetic_ratings(200, 200, 64, 3), config.spec);
    batch.assign(data.begin(), data.begin() + 8);
  }
};

void BM_PlainTrainStep(benchmark::State& state) {
  StepFixture fx;
  for (auto _ : state) benchmark::DoNotOptimize(nn::train_step(fx.model, fx.w, fx.batch, fx.config));
}
BENCHMARK(BM_PlainTrainStep);

void BM_StepWitness(benchmark::State& state) {
  StepFixture fx;
  for (auto _ : state) {
    auto wit = nn::emit_step_witness(fx.model, fx.w, fx.batch, fx.config);
    benchmark::DoNotOptimize(wit.circuit.grid.rows());
  }
}
BENCHMARK(BM_StepWitness)->Unit(benchmark::kMillisecond);

void BM_MockProveStep(benchmark::State& state) {
  StepFixture fx;
  auto wit = nn::emit_step_witness(fx.model, fx.w, fx.batch, fx.config);
  protocol::MockBackend backend;
  protocol::Json pub{{"step", 0}};
  for (auto _ : state) benchmark::DoNotOptimize(backend.prove_step(wit.circuit, pub));
}
BENCHMARK(BM_MockProveStep)->Unit(benchmark::kMillisecond);

void BM_MerkleBuild(benchmark::State& state) {
  std::vector<commit::Digest> leaves;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    leaves.push_back(commit::hash(commit::Tag::kExample, std::vector<std::uint8_t>{static_cast<std::uint8_t>(i),
                                                                                  static_cast<std::uint8_t>(i >> 8)}));
  }
  for (auto _ : state) benchmark::DoNotOptimize(commit::build_merkle(leaves).root());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MerkleBuild)->Arg(1024)->Arg(16384);

}  // namespace

BENCHMARK_MAIN();
