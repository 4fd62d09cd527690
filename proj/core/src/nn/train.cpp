#include "zkaudit/nn/train.hpp"

#include <algorithm>
#include <string>

#include "zkaudit/error.hpp"

namespace zkaudit::nn {
namespace {

struct LayerParams {
  int table = -1;
  int weight = -1;
  int bias = -1;
};

std::vector<LayerParams> layer_params(const ModelGraph& model) {
  std::vector<LayerParams> out(model.layers.size());
  auto params = model.params();
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& lp = out[params[p].layer];
    int idx = static_cast<int>(p);
    switch (params[p].role) {
      case ParamRole::kTable: lp.table = idx; break;
      case ParamRole::kWeight: lp.weight = idx; break;
      case ParamRole::kBias: lp.bias = idx; break;
    }
  }
  return out;
}

void check_weights(const ModelGraph& model, const Weights& w) {
  auto params = model.params();
  if (params.size() != w.tensors.size()) {
    throw Error(Errc::kShapeMismatch, "model has " + std::to_string(params.size()) + " parameter tensors, weights have " +
                                          std::to_string(w.tensors.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (w.tensors[i].shape() != params[i].shape) {
      throw Error(Errc::kShapeMismatch, "parameter tensor " + std::to_string(i) + " has the wrong shape");
    }
  }
}

bool has_params(const Layer& l) { return l.kind == LayerKind::kEmbedding || l.kind == LayerKind::kDense; }

// Index of the first layer whose parameters are updated; layers.size() if none.
std::size_t first_trainable(const ModelGraph& model) {
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    if (has_params(model.layers[k]) && !model.layers[k].frozen) return k;
  }
  return model.layers.size();
}

Wires zeros(std::size_t n) { return Wires(n); }

Weights to_weights(const ModelGraph& model, const std::vector<Wires>& wires, const fxp::FxpSpec& spec) {
  auto params = model.params();
  Weights out{spec, {}};
  for (std::size_t p = 0; p < params.size(); ++p) out.tensors.emplace_back(params[p].shape, values(wires[p]), spec);
  return out;
}

}  // namespace

std::vector<Wires> param_wires(Ctx& ctx, const Weights& weights) {
  std::vector<Wires> out;
  out.reserve(weights.tensors.size());
  for (const auto& t : weights.tensors) {
    for (auto v : t.raw()) fxp::check_range(v, ctx.spec());
    out.push_back(ctx.inputs(t.raw()));
  }
  return out;
}

ExampleActs forward_example(Ctx& ctx, const ModelGraph& model, const std::vector<Wires>& params, const Example& ex,
                            bool onehot) {
  const auto lp = layer_params(model);
  const std::int64_t sf = ctx.spec().scale_factor;
  const std::size_t n_layers = model.layers.size();
  const std::size_t n_emb = model.embedding_count();
  ExampleActs a;
  a.ids = ex.ids;
  a.in.resize(n_layers);
  Wires cur;
  std::size_t k0 = n_emb;
  if (n_emb > 0) {
    if (ex.ids.size() != n_emb) {
      throw Error(Errc::kShapeMismatch, "example carries " + std::to_string(ex.ids.size()) + " ids, model expects " +
                                            std::to_string(n_emb));
    }
    for (std::size_t j = 0; j < n_emb; ++j) {
      const Layer& l = model.layers[j];
      const Wires& table = params[lp[j].table];
      std::size_t id = ex.ids[j];
      if (id >= l.vocab) {
        throw Error(Errc::kDomainMiss, "id " + std::to_string(id) + " outside vocabulary of " + std::to_string(l.vocab));
      }
      if (onehot) {
        Wires oh = ctx.one_hot(id, l.vocab);
        Wires col(l.vocab);
        for (std::size_t k = 0; k < l.dim; ++k) {
          for (std::size_t v = 0; v < l.vocab; ++v) col[v] = table[v * l.dim + k];
          cur.push_back(ctx.dot(oh, col));
        }
        a.onehot.push_back(std::move(oh));
      } else {
        for (std::size_t k = 0; k < l.dim; ++k) cur.push_back(table[id * l.dim + k]);
      }
    }
    if (k0 < n_layers && model.layers[k0].kind == LayerKind::kConcat) ++k0;
  } else {
    if (ex.features.size() != model.feature_dim()) {
      throw Error(Errc::kShapeMismatch, "example has " + std::to_string(ex.features.size()) + " features, model expects " +
                                            std::to_string(model.feature_dim()));
    }
    for (auto v : ex.features) fxp::check_range(v, ctx.spec());
    cur = ctx.inputs(ex.features);
  }
  for (std::size_t k = k0; k < n_layers; ++k) {
    const Layer& l = model.layers[k];
    a.in[k] = cur;
    switch (l.kind) {
      case LayerKind::kDense: {
        const Wires& w = params[lp[k].weight];
        Wires q;
        q.reserve(l.out);
        for (std::size_t j = 0; j < l.out; ++j) {
          std::span<const Wire> row(w.data() + j * l.in, l.in);
          q.push_back(ctx.rdiv(ctx.dot(row, cur), sf));
        }
        cur = l.bias ? ctx.add(params[lp[k].bias], q) : q;
        for (const auto& y : cur) fxp::check_range(y.v, ctx.spec());
        break;
      }
      case LayerKind::kReLU6: cur = ctx.relu6(cur); break;
      case LayerKind::kSoftmax: cur = ctx.softmax(cur); break;
      case LayerKind::kEmbedding:
      case LayerKind::kConcat: throw Error(Errc::kValidation, "misplaced embedding or concat layer");
    }
  }
  a.out = std::move(cur);
  return a;
}

std::vector<Wires> backward_batch(Ctx& ctx, const ModelGraph& model, const std::vector<Wires>& params,
                                  const std::vector<ExampleActs>& acts, std::span<const Example> batch, bool onehot) {
  const auto lp = layer_params(model);
  const auto refs = model.params();
  const std::int64_t sf = ctx.spec().scale_factor;
  const std::size_t nb = batch.size();
  if (nb == 0 || acts.size() != nb) throw Error(Errc::kShapeMismatch, "backward pass needs one activation per example");
  const auto bsz = static_cast<std::int64_t>(nb);

  std::vector<Wires> deltas(refs.size());
  for (std::size_t p = 0; p < refs.size(); ++p) deltas[p] = zeros(params[p].size());
  const std::size_t first = first_trainable(model);
  if (first == model.layers.size()) return deltas;

  std::size_t last = model.layers.size() - 1;
  std::vector<Wires> d(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const Wires& y = acts[b].out;
    if (model.loss == Loss::kMSE) {
      if (batch[b].target.size() != y.size()) throw Error(Errc::kShapeMismatch, "target width differs from the output");
      Wires t = ctx.inputs(batch[b].target);
      Wires diff = ctx.sub(t, y);
      d[b] = ctx.rdiv(ctx.scale(diff, ctx.constant(2)), bsz);
    } else {
      if (batch[b].label >= y.size()) {
        throw Error(Errc::kLabelOutOfRange, "label " + std::to_string(batch[b].label) + " with " +
                                                std::to_string(y.size()) + " classes");
      }
      Wires oh = ctx.one_hot(batch[b].label, y.size());
      d[b] = ctx.rdiv(ctx.sub(ctx.scale(oh, ctx.constant(sf)), y), bsz);
    }
  }
  if (model.loss == Loss::kCrossEntropy) --last;

  for (std::size_t k = last + 1; k-- > 0;) {
    if (k < first) break;
    const Layer& l = model.layers[k];
    switch (l.kind) {
      case LayerKind::kDense: {
        const Wires& w = params[lp[k].weight];
        if (!l.frozen) {
          Wires& dw = deltas[lp[k].weight];
          Wires dj(nb), xi(nb);
          for (std::size_t j = 0; j < l.out; ++j) {
            for (std::size_t b = 0; b < nb; ++b) dj[b] = d[b][j];
            for (std::size_t i = 0; i < l.in; ++i) {
              for (std::size_t b = 0; b < nb; ++b) xi[b] = acts[b].in[k][i];
              dw[j * l.in + i] = ctx.rdiv(ctx.dot(dj, xi), sf);
            }
            if (l.bias) deltas[lp[k].bias][j] = ctx.sum(dj);
          }
        }
        if (k > first) {
          Wires col(l.out);
          for (std::size_t b = 0; b < nb; ++b) {
            Wires next(l.in);
            for (std::size_t i = 0; i < l.in; ++i) {
              for (std::size_t j = 0; j < l.out; ++j) col[j] = w[j * l.in + i];
              next[i] = ctx.rdiv(ctx.dot(col, d[b]), sf);
            }
            d[b] = std::move(next);
          }
        }
        break;
      }
      case LayerKind::kReLU6:
        for (std::size_t b = 0; b < nb; ++b) d[b] = ctx.mul(d[b], ctx.relu6_grad(acts[b].in[k]));
        break;
      case LayerKind::kConcat: break;
      case LayerKind::kEmbedding: {
        if (l.frozen) break;
        std::size_t offset = 0;
        for (std::size_t j = 0; j < k; ++j) offset += model.layers[j].dim;
        Wires& de = deltas[lp[k].table];
        if (onehot) {
          Wires ohv(nb), dk(nb);
          for (std::size_t v = 0; v < l.vocab; ++v) {
            for (std::size_t b = 0; b < nb; ++b) ohv[b] = acts[b].onehot[k][v];
            for (std::size_t c = 0; c < l.dim; ++c) {
              for (std::size_t b = 0; b < nb; ++b) dk[b] = d[b][offset + c];
              de[v * l.dim + c] = ctx.dot(ohv, dk);
            }
          }
        } else {
          for (std::size_t b = 0; b < nb; ++b) {
            std::size_t id = acts[b].ids[k];
            for (std::size_t c = 0; c < l.dim; ++c) de[id * l.dim + c].v += d[b][offset + c].v;
          }
        }
        break;
      }
      case LayerKind::kSoftmax: throw Error(Errc::kValidation, "softmax is only supported as the final layer");
    }
  }
  return deltas;
}

std::vector<Wires> sgd_wires(Ctx& ctx, const ModelGraph& model, const std::vector<Wires>& params,
                             const std::vector<Wires>& deltas, std::int64_t eta_raw) {
  const auto refs = model.params();
  const std::int64_t sf = ctx.spec().scale_factor;
  std::vector<Wires> out(refs.size());
  Wire eta = ctx.constant(eta_raw);
  for (std::size_t p = 0; p < refs.size(); ++p) {
    if (model.layers[refs[p].layer].frozen) {
      out[p] = params[p];
      continue;
    }
    Wires step = ctx.rdiv(ctx.scale(deltas[p], eta), sf);
    out[p] = ctx.add(params[p], step);
    for (const auto& w : out[p]) fxp::check_range(w.v, ctx.spec());
  }
  return out;
}

ForwardResult forward_fxp(const ModelGraph& model, const Weights& weights, std::span<const Example> batch) {
  model.validate();
  check_weights(model, weights);
  Ctx ctx(weights.spec);
  auto params = param_wires(ctx, weights);
  ForwardResult out;
  for (const auto& ex : batch) {
    out.acts.push_back(forward_example(ctx, model, params, ex, false));
    out.predictions.push_back(values(out.acts.back().out));
  }
  return out;
}

GradientSet backward_fxp(const ModelGraph& model, const Weights& weights, const ForwardResult& fwd,
                         std::span<const Example> batch) {
  model.validate();
  check_weights(model, weights);
  Ctx ctx(weights.spec);
  auto params = param_wires(ctx, weights);
  auto deltas = backward_batch(ctx, model, params, fwd.acts, batch, false);
  GradientSet g;
  auto refs = model.params();
  for (std::size_t p = 0; p < refs.size(); ++p) g.deltas.emplace_back(refs[p].shape, values(deltas[p]), weights.spec);
  return g;
}

Weights sgd_step(const ModelGraph& model, const Weights& weights, const GradientSet& grads, const TrainConfig& config) {
  check_weights(model, weights);
  if (grads.deltas.size() != weights.tensors.size()) throw Error(Errc::kShapeMismatch, "gradient count mismatch");
  if (!(config.spec == weights.spec)) throw Error(Errc::kValidation, "weights and config use different specs");
  Ctx ctx(weights.spec);
  std::vector<Wires> params, deltas;
  for (std::size_t p = 0; p < weights.tensors.size(); ++p) {
    if (grads.deltas[p].shape() != weights.tensors[p].shape()) throw Error(Errc::kShapeMismatch, "gradient shape mismatch");
    params.push_back(ctx.inputs(weights.tensors[p].raw()));
    deltas.push_back(ctx.inputs(grads.deltas[p].raw()));
  }
  return to_weights(model, sgd_wires(ctx, model, params, deltas, config.eta_raw()), weights.spec);
}

Weights train_step(const ModelGraph& model, const Weights& weights, std::span<const Example> batch,
                   const TrainConfig& config) {
  check_weights(model, weights);
  Ctx ctx(weights.spec);
  auto params = param_wires(ctx, weights);
  std::vector<ExampleActs> acts;
  acts.reserve(batch.size());
  for (const auto& ex : batch) acts.push_back(forward_example(ctx, model, params, ex, false));
  auto deltas = backward_batch(ctx, model, params, acts, batch, false);
  return to_weights(model, sgd_wires(ctx, model, params, deltas, config.eta_raw()), weights.spec);
}

StepWitness emit_step_witness(const ModelGraph& model, const Weights& weights, std::span<const Example> batch,
                              const TrainConfig& config) {
  model.validate();
  config.validate();
  check_weights(model, weights);
  if (!(config.spec == weights.spec)) throw Error(Errc::kValidation, "weights and config use different specs");
  if (batch.empty()) throw Error(Errc::kInvalidArgument, "empty batch");
  air::CircuitBuilder builder(config.spec, config.columns, 0, config.max_rows);
  Ctx ctx(config.spec, &builder);
  auto params = param_wires(ctx, weights);
  std::vector<ExampleActs> acts(batch.size());
  auto layout = builder.pack(batch.size(), [&](air::CircuitBuilder&, std::size_t i) {
    acts[i] = forward_example(ctx, model, params, batch[i], true);
  });
  auto deltas = backward_batch(ctx, model, params, acts, batch, true);
  auto post = sgd_wires(ctx, model, params, deltas, config.eta_raw());

  StepWitness out{std::move(builder).build(), to_weights(model, post, config.spec), {}, {}, std::move(layout)};
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::vector<air::Cell> pre, fin;
    for (const auto& w : params[p]) pre.push_back(*w.cell);
    for (const auto& w : post[p]) fin.push_back(*w.cell);
    out.pre_cells.push_back(std::move(pre));
    out.post_cells.push_back(std::move(fin));
  }
  return out;
}

std::vector<Example> dummy_batch(const ModelGraph& model, std::size_t size) {
  Example ex;
  ex.ids.assign(model.embedding_count(), 0);
  ex.features.assign(model.feature_dim(), 0);
  if (model.loss == Loss::kMSE) ex.target.assign(model.output_dim(), 0);
  return std::vector<Example>(size, ex);
}

Weights zero_weights(const ModelGraph& model, const fxp::FxpSpec& spec) {
  Weights w{spec, {}};
  for (const auto& p : model.params()) w.tensors.emplace_back(p.shape, spec);
  return w;
}

std::vector<std::vector<std::size_t>> step_batches(const std::vector<std::vector<std::size_t>>& orders,
                                                   std::size_t batch) {
  if (batch == 0) throw Error(Errc::kValidation, "batch size must be at least 1");
  std::vector<std::vector<std::size_t>> out;
  for (const auto& order : orders) {
    for (std::size_t pos = 0; pos < order.size(); pos += batch) {
      std::size_t end = std::min(order.size(), pos + batch);
      out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return out;
}

Weights train_fxp(const ModelGraph& model, Weights weights, const std::vector<Example>& data,
                  const std::vector<std::vector<std::size_t>>& orders, const TrainConfig& config,
                  const StepHook& hook) {
  model.validate();
  config.validate();
  auto steps = step_batches(orders, config.batch_size);
  std::vector<Example> batch;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    batch.clear();
    for (auto i : steps[s]) {
      if (i >= data.size()) throw Error(Errc::kInvalidArgument, "traversal index outside the dataset");
      batch.push_back(data[i]);
    }
    Weights post = train_step(model, weights, batch, config);
    if (hook) hook(s, steps[s], weights, post);
    weights = std::move(post);
  }
  return weights;
}

std::vector<std::vector<std::int64_t>> predict_fxp(const ModelGraph& model, const Weights& weights,
                                                   std::span<const Example> data) {
  return forward_fxp(model, weights, data).predictions;
}

double mse_fxp(const ModelGraph& model, const Weights& weights, std::span<const Example> data) {
  auto preds = predict_fxp(model, weights, data);
  const double sf = static_cast<double>(weights.spec.scale_factor);
  double total = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = 0; k < preds[i].size(); ++k) {
      double e = static_cast<double>(preds[i][k] - data[i].target.at(k)) / sf;
      total += e * e;
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

double accuracy_fxp(const ModelGraph& model, const Weights& weights, std::span<const Example> data) {
  auto preds = predict_fxp(model, weights, data);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto best = std::max_element(preds[i].begin(), preds[i].end()) - preds[i].begin();
    if (static_cast<std::size_t>(best) == data[i].label) ++hits;
  }
  return data.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace zkaudit::nn
