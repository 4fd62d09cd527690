#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "zkaudit/nn/model.hpp"

namespace zkaudit::nn {

// Real-valued example for the floating-point twin.
struct FloatExample {
  std::vector<std::size_t> ids;
  std::vector<double> features;
  std::vector<double> target;
  std::size_t label = 0;
};

// Parameters in the same canonical order as Weights.
using FloatWeights = std::vector<std::vector<double>>;

std::vector<std::vector<double>> predict_float(const ModelGraph& model, const FloatWeights& w,
                                               std::span<const FloatExample> data);
// Batch loss: mean over examples of squared error (summed over outputs) or of
// -log softmax[label].
double loss_float(const ModelGraph& model, const FloatWeights& w, std::span<const FloatExample> batch);
// -dL/dw for every parameter; zero for frozen layers.
FloatWeights neg_gradient_float(const ModelGraph& model, const FloatWeights& w, std::span<const FloatExample> batch);

// Plain SGD over the same step batches as the fixed-point trainer.
FloatWeights train_float(const ModelGraph& model, FloatWeights w, const std::vector<FloatExample>& data,
                         const std::vector<std::vector<std::size_t>>& orders, const TrainConfig& config);

double mse_float(const ModelGraph& model, const FloatWeights& w, std::span<const FloatExample> data);
double accuracy_float(const ModelGraph& model, const FloatWeights& w, std::span<const FloatExample> data);

}  // namespace zkaudit::nn
