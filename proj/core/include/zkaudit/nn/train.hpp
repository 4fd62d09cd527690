#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "zkaudit/air/builder.hpp"
#include "zkaudit/nn/context.hpp"
#include "zkaudit/nn/model.hpp"

namespace zkaudit::nn {

// One training example. Id-input models read `ids` (one per embedding);
// feature models read `features` (raw at the model SF). MSE reads `target`
// (raw), cross-entropy reads `label`.
struct Example {
  std::vector<std::size_t> ids;
  std::vector<std::int64_t> features;
  std::vector<std::int64_t> target;
  std::size_t label = 0;

  friend bool operator==(const Example&, const Example&) = default;
};

// Per-example values retained by the forward pass.
struct ExampleActs {
  std::vector<std::size_t> ids;
  std::vector<Wires> onehot;  // per embedding; empty when ids are used directly
  std::vector<Wires> in;      // input of each layer (empty for embedding/concat)
  Wires out;
};

struct ForwardResult {
  std::vector<ExampleActs> acts;
  std::vector<std::vector<std::int64_t>> predictions;
};

// Negated loss gradient per parameter tensor; zero for frozen layers.
struct GradientSet {
  std::vector<fxp::FxpTensor> deltas;
};

// Wire-level passes shared by plain evaluation and witness synthesis.
// `onehot` selects the data-independent embedding lookup (one-hot dot
// product) over direct indexing; both give identical values.
std::vector<Wires> param_wires(Ctx& ctx, const Weights& weights);
ExampleActs forward_example(Ctx& ctx, const ModelGraph& model, const std::vector<Wires>& params, const Example& ex,
                            bool onehot);
std::vector<Wires> backward_batch(Ctx& ctx, const ModelGraph& model, const std::vector<Wires>& params,
                                  const std::vector<ExampleActs>& acts, std::span<const Example> batch, bool onehot);
std::vector<Wires> sgd_wires(Ctx& ctx, const ModelGraph& model, const std::vector<Wires>& params,
                             const std::vector<Wires>& deltas, std::int64_t eta_raw);

ForwardResult forward_fxp(const ModelGraph& model, const Weights& weights, std::span<const Example> batch);
GradientSet backward_fxp(const ModelGraph& model, const Weights& weights, const ForwardResult& fwd,
                         std::span<const Example> batch);
// w' = w + round_div(eta * dw, SF) for every trainable parameter.
Weights sgd_step(const ModelGraph& model, const Weights& weights, const GradientSet& grads, const TrainConfig& config);
// forward, backward and update in one call.
Weights train_step(const ModelGraph& model, const Weights& weights, std::span<const Example> batch,
                   const TrainConfig& config);

struct StepWitness {
  air::Circuit circuit;
  Weights post;
  std::vector<std::vector<air::Cell>> pre_cells;   // per parameter tensor
  std::vector<std::vector<air::Cell>> post_cells;  // designated outputs
  air::PackedLayout forward_layout;                // one instance per example
};

// Witness grid for one SGD step: forward passes (packed, one per example),
// backward pass and update. Its constraint structure depends only on the
// model, config and batch size.
StepWitness emit_step_witness(const ModelGraph& model, const Weights& weights, std::span<const Example> batch,
                              const TrainConfig& config);

// Placeholder inputs with the right shapes, used to re-synthesize the
// constraint system without the private data.
std::vector<Example> dummy_batch(const ModelGraph& model, std::size_t size);
Weights zero_weights(const ModelGraph& model, const fxp::FxpSpec& spec);

// Example indices of each step: consecutive chunks of `batch` from every
// epoch's ordering, the last chunk of an epoch possibly short.
std::vector<std::vector<std::size_t>> step_batches(const std::vector<std::vector<std::size_t>>& orders,
                                                   std::size_t batch);

using StepHook = std::function<void(std::size_t step, std::span<const std::size_t> indices, const Weights& pre,
                                    const Weights& post)>;

Weights train_fxp(const ModelGraph& model, Weights weights, const std::vector<Example>& data,
                  const std::vector<std::vector<std::size_t>>& orders, const TrainConfig& config,
                  const StepHook& hook = {});

std::vector<std::vector<std::int64_t>> predict_fxp(const ModelGraph& model, const Weights& weights,
                                                   std::span<const Example> data);
// Mean squared error in real units over all outputs.
double mse_fxp(const ModelGraph& model, const Weights& weights, std::span<const Example> data);
double accuracy_fxp(const ModelGraph& model, const Weights& weights, std::span<const Example> data);

}  // namespace zkaudit::nn
