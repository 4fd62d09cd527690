#include "zkaudit/nn/float_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "zkaudit/error.hpp"
#include "zkaudit/nn/train.hpp"

namespace zkaudit::nn {
namespace {

struct Acts {
  std::vector<std::vector<double>> in;  // per layer
  std::vector<double> out;
};

struct Index {
  std::vector<int> table, weight, bias;
};

Index index_params(const ModelGraph& model) {
  Index ix;
  ix.table.assign(model.layers.size(), -1);
  ix.weight.assign(model.layers.size(), -1);
  ix.bias.assign(model.layers.size(), -1);
  auto refs = model.params();
  for (std::size_t p = 0; p < refs.size(); ++p) {
    int i = static_cast<int>(p);
    switch (refs[p].role) {
      case ParamRole::kTable: ix.table[refs[p].layer] = i; break;
      case ParamRole::kWeight: ix.weight[refs[p].layer] = i; break;
      case ParamRole::kBias: ix.bias[refs[p].layer] = i; break;
    }
  }
  return ix;
}

Acts forward(const ModelGraph& model, const Index& ix, const FloatWeights& w, const FloatExample& ex) {
  Acts a;
  a.in.resize(model.layers.size());
  std::vector<double> cur;
  std::size_t n_emb = model.embedding_count();
  std::size_t k0 = n_emb;
  if (n_emb > 0) {
    if (ex.ids.size() != n_emb) throw Error(Errc::kShapeMismatch, "example id count differs from the model");
    for (std::size_t j = 0; j < n_emb; ++j) {
      const Layer& l = model.layers[j];
      if (ex.ids[j] >= l.vocab) throw Error(Errc::kDomainMiss, "id outside vocabulary");
      const auto& t = w[ix.table[j]];
      cur.insert(cur.end(), t.begin() + static_cast<std::ptrdiff_t>(ex.ids[j] * l.dim),
                 t.begin() + static_cast<std::ptrdiff_t>((ex.ids[j] + 1) * l.dim));
    }
    if (k0 < model.layers.size() && model.layers[k0].kind == LayerKind::kConcat) ++k0;
  } else {
    if (ex.features.size() != model.feature_dim()) throw Error(Errc::kShapeMismatch, "feature width differs");
    cur = ex.features;
  }
  for (std::size_t k = k0; k < model.layers.size(); ++k) {
    const Layer& l = model.layers[k];
    a.in[k] = cur;
    if (l.kind == LayerKind::kDense) {
      const auto& wt = w[ix.weight[k]];
      std::vector<double> y(l.out);
      for (std::size_t j = 0; j < l.out; ++j) {
        double acc = l.bias ? w[ix.bias[k]][j] : 0.0;
        for (std::size_t i = 0; i < l.in; ++i) acc += wt[j * l.in + i] * cur[i];
        y[j] = acc;
      }
      cur = std::move(y);
    } else if (l.kind == LayerKind::kReLU6) {
      for (auto& x : cur) x = std::clamp(x, 0.0, 6.0);
    } else if (l.kind == LayerKind::kSoftmax) {
      double m = *std::max_element(cur.begin(), cur.end());
      double s = 0;
      for (auto& x : cur) s += (x = std::exp(x - m));
      for (auto& x : cur) x /= s;
    }
  }
  a.out = std::move(cur);
  return a;
}

}  // namespace

std::vector<std::vector<double>> predict_float(const ModelGraph& model, const FloatWeights& w,
                                               std::span<const FloatExample> data) {
  Index ix = index_params(model);
  std::vector<std::vector<double>> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(forward(model, ix, w, ex).out);
  return out;
}

double loss_float(const ModelGraph& model, const FloatWeights& w, std::span<const FloatExample> batch) {
  auto preds = predict_float(model, w, batch);
  double total = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (model.loss == Loss::kMSE) {
      for (std::size_t k = 0; k < preds[b].size(); ++k) {
        double e = preds[b][k] - batch[b].target.at(k);
        total += e * e;
      }
    } else {
      total -= std::log(preds[b].at(batch[b].label));
    }
  }
  return total / static_cast<double>(batch.size());
}

FloatWeights neg_gradient_float(const ModelGraph& model, const FloatWeights& w, std::span<const FloatExample> batch) {
  Index ix = index_params(model);
  FloatWeights g(w.size());
  for (std::size_t p = 0; p < w.size(); ++p) g[p].assign(w[p].size(), 0.0);
  const double nb = static_cast<double>(batch.size());
  const std::size_t n_emb = model.embedding_count();
  std::size_t first = model.layers.size();
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const Layer& l = model.layers[k];
    if ((l.kind == LayerKind::kDense || l.kind == LayerKind::kEmbedding) && !l.frozen) {
      first = k;
      break;
    }
  }
  if (first == model.layers.size()) return g;
  for (const auto& ex : batch) {
    Acts a = forward(model, ix, w, ex);
    std::vector<double> d(a.out.size());
    std::size_t last = model.layers.size() - 1;
    if (model.loss == Loss::kMSE) {
      for (std::size_t k = 0; k < d.size(); ++k) d[k] = 2.0 * (ex.target.at(k) - a.out[k]) / nb;
    } else {
      if (ex.label >= d.size()) throw Error(Errc::kLabelOutOfRange, "label outside class range");
      for (std::size_t k = 0; k < d.size(); ++k) d[k] = ((k == ex.label ? 1.0 : 0.0) - a.out[k]) / nb;
      --last;
    }
    for (std::size_t k = last + 1; k-- > 0;) {
      if (k < first) break;
      const Layer& l = model.layers[k];
      if (l.kind == LayerKind::kDense) {
        const auto& x = a.in[k];
        const auto& wt = w[ix.weight[k]];
        if (!l.frozen) {
          auto& gw = g[ix.weight[k]];
          for (std::size_t j = 0; j < l.out; ++j) {
            for (std::size_t i = 0; i < l.in; ++i) gw[j * l.in + i] += d[j] * x[i];
            if (l.bias) g[ix.bias[k]][j] += d[j];
          }
        }
        std::vector<double> next(l.in, 0.0);
        for (std::size_t i = 0; i < l.in; ++i) {
          for (std::size_t j = 0; j < l.out; ++j) next[i] += wt[j * l.in + i] * d[j];
        }
        d = std::move(next);
      } else if (l.kind == LayerKind::kReLU6) {
        const auto& x = a.in[k];
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= (x[i] > 0.0 && x[i] < 6.0) ? 1.0 : 0.0;
      } else if (l.kind == LayerKind::kEmbedding && !l.frozen && k < n_emb) {
        std::size_t offset = 0;
        for (std::size_t j = 0; j < k; ++j) offset += model.layers[j].dim;
        auto& gt = g[ix.table[k]];
        for (std::size_t c = 0; c < l.dim; ++c) gt[ex.ids[k] * l.dim + c] += d[offset + c];
      }
    }
  }
  return g;
}

FloatWeights train_float(const ModelGraph& model, FloatWeights w, const std::vector<FloatExample>& data,
                         const std::vector<std::vector<std::size_t>>& orders, const TrainConfig& config) {
  model.validate();
  auto steps = step_batches(orders, config.batch_size);
  std::vector<FloatExample> batch;
  for (const auto& idx : steps) {
    batch.clear();
    for (auto i : idx) batch.push_back(data.at(i));
    auto g = neg_gradient_float(model, w, batch);
    for (std::size_t p = 0; p < w.size(); ++p) {
      for (std::size_t i = 0; i < w[p].size(); ++i) w[p][i] += config.learning_rate * g[p][i];
    }
  }
  return w;
}

double mse_float(const ModelGraph& model, const FloatWeights& w, std::span<const FloatExample> data) {
  auto preds = predict_float(model, w, data);
  double total = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = 0; k < preds[i].size(); ++k) {
      double e = preds[i][k] - data[i].target.at(k);
      total += e * e;
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

double accuracy_float(const ModelGraph& model, const FloatWeights& w, std::span<const FloatExample> data) {
  auto preds = predict_float(model, w, data);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto best = std::max_element(preds[i].begin(), preds[i].end()) - preds[i].begin();
    if (static_cast<std::size_t>(best) == data[i].label) ++hits;
  }
  return data.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace zkaudit::nn
