#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zkaudit/fxp.hpp"

namespace zkaudit::nn {

enum class LayerKind { kEmbedding, kConcat, kDense, kReLU6, kSoftmax };
enum class Loss { kMSE, kCrossEntropy };

struct Layer {
  LayerKind kind = LayerKind::kDense;
  std::size_t vocab = 0;  // embedding
  std::size_t dim = 0;    // embedding
  std::size_t in = 0;     // dense
  std::size_t out = 0;    // dense
  bool bias = true;       // dense
  bool frozen = false;

  static Layer embedding(std::size_t vocab, std::size_t dim) { return {LayerKind::kEmbedding, vocab, dim}; }
  static Layer dense(std::size_t in, std::size_t out, bool bias = true) {
    return {LayerKind::kDense, 0, 0, in, out, bias};
  }
  static Layer concat() { return {LayerKind::kConcat}; }
  static Layer relu6() { return {LayerKind::kReLU6}; }
  static Layer softmax() { return {LayerKind::kSoftmax}; }

  friend bool operator==(const Layer&, const Layer&) = default;
};

enum class ParamRole { kTable, kWeight, kBias };

struct ParamRef {
  std::size_t layer;
  ParamRole role;
  std::vector<std::size_t> shape;
};

// A sequential network. A model either starts with one or more Embedding
// layers (one id per embedding, merged by Concat when there are several) or
// takes a dense feature vector. Softmax may only appear last and pairs with
// the cross-entropy loss.
struct ModelGraph {
  std::vector<Layer> layers;
  Loss loss = Loss::kMSE;

  // Throws Error(kValidation) when shapes do not compose.
  void validate() const;

  std::size_t embedding_count() const;
  // Width of the feature input; 0 for id-input models.
  std::size_t feature_dim() const;
  std::size_t output_dim() const;
  // Parameter tensors in canonical order: per layer, table or weight then bias.
  std::vector<ParamRef> params() const;

  nlohmann::ordered_json to_json() const;
  static ModelGraph from_json(const nlohmann::json& j);

  // Users and items embedded at `dim`, concatenated, dense to `hidden`,
  // ReLU6, dense to one rating.
  static ModelGraph recommender(std::size_t users, std::size_t items, std::size_t dim, std::size_t hidden);
  static ModelGraph mlp(std::size_t in, std::size_t hidden, std::size_t classes);

  friend bool operator==(const ModelGraph&, const ModelGraph&) = default;
};

struct Weights {
  fxp::FxpSpec spec;
  std::vector<fxp::FxpTensor> tensors;

  friend bool operator==(const Weights&, const Weights&) = default;
};

struct TrainConfig {
  fxp::FxpSpec spec;
  double learning_rate = 0.01;
  std::size_t batch_size = 8;
  std::size_t epochs = 1;
  std::uint64_t init_seed = 0;
  std::size_t columns = 16;
  std::size_t max_rows = std::size_t{1} << 22;

  // Throws Error(kValidation); a learning rate that quantizes to 0 is
  // rejected because it would make every step a no-op.
  void validate() const;
  std::int64_t eta_raw() const;

  nlohmann::ordered_json to_json() const;
  // The fixed-point spec is stored beside the config, not inside it.
  static TrainConfig from_json(const nlohmann::json& j, const fxp::FxpSpec& spec);
};

// Initial parameters as reals: uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]
// from a seeded mt19937_64 (fan_in = dim for embedding tables).
std::vector<std::vector<double>> init_real(const ModelGraph& model, std::uint64_t seed);
Weights quantize_weights(const ModelGraph& model, const std::vector<std::vector<double>>& reals,
                         const fxp::FxpSpec& spec);
Weights init_weights(const ModelGraph& model, const fxp::FxpSpec& spec, std::uint64_t seed);

nlohmann::ordered_json spec_to_json(const fxp::FxpSpec& spec);
fxp::FxpSpec spec_from_json(const nlohmann::json& j);

}  // namespace zkaudit::nn
