#include "zkaudit/nn/model.hpp"

#include <cmath>
#include <random>

#include "zkaudit/error.hpp"

namespace zkaudit::nn {
namespace {

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kEmbedding: return "embedding";
    case LayerKind::kConcat: return "concat";
    case LayerKind::kDense: return "dense";
    case LayerKind::kReLU6: return "relu6";
    case LayerKind::kSoftmax: return "softmax";
  }
  return "?";
}

LayerKind kind_from(const std::string& s) {
  if (s == "embedding") return LayerKind::kEmbedding;
  if (s == "concat") return LayerKind::kConcat;
  if (s == "dense") return LayerKind::kDense;
  if (s == "relu6") return LayerKind::kReLU6;
  if (s == "softmax") return LayerKind::kSoftmax;
  throw Error(Errc::kValidation, "unknown layer kind '" + s + "'");
}

[[noreturn]] void invalid(const std::string& msg) { throw Error(Errc::kValidation, msg); }

}  // namespace

std::size_t ModelGraph::embedding_count() const {
  std::size_t n = 0;
  while (n < layers.size() && layers[n].kind == LayerKind::kEmbedding) ++n;
  return n;
}

std::size_t ModelGraph::feature_dim() const {
  if (embedding_count() > 0 || layers.empty()) return 0;
  return layers.front().kind == LayerKind::kDense ? layers.front().in : 0;
}

void ModelGraph::validate() const {
  if (layers.empty()) invalid("model has no layers");
  std::size_t e = embedding_count();
  std::size_t i = e;
  std::size_t width = 0;
  if (e > 0) {
    for (std::size_t k = 0; k < e; ++k) {
      if (layers[k].vocab == 0 || layers[k].dim == 0) invalid("embedding layers need vocab and dim");
      width += layers[k].dim;
    }
    if (i < layers.size() && layers[i].kind == LayerKind::kConcat) {
      ++i;
    } else if (e > 1) {
      invalid("several embeddings must be merged by a concat layer");
    }
  } else if (layers[0].kind != LayerKind::kDense) {
    invalid("feature-input models must start with a dense layer");
  } else {
    width = layers[0].in;
  }
  for (; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    switch (l.kind) {
      case LayerKind::kEmbedding: invalid("embedding layers must lead the model");
      case LayerKind::kConcat: invalid("concat must directly follow the embedding layers");
      case LayerKind::kDense:
        if (l.in != width) {
          invalid("dense layer " + std::to_string(i) + " expects width " + std::to_string(l.in) + " but receives " +
                  std::to_string(width));
        }
        if (l.out == 0) invalid("dense layer with zero outputs");
        width = l.out;
        break;
      case LayerKind::kReLU6: break;
      case LayerKind::kSoftmax:
        if (i + 1 != layers.size()) invalid("softmax must be the last layer");
        break;
    }
  }
  if (width == 0) invalid("model output is empty");
  bool ends_softmax = layers.back().kind == LayerKind::kSoftmax;
  if (loss == Loss::kCrossEntropy && (!ends_softmax || width < 2)) {
    invalid("cross-entropy needs a softmax output over at least two classes");
  }
  if (loss == Loss::kMSE && ends_softmax) invalid("mean-squared error over a softmax output is not supported");
}

std::size_t ModelGraph::output_dim() const {
  std::size_t width = 0;
  std::size_t e = embedding_count();
  for (std::size_t k = 0; k < e; ++k) width += layers[k].dim;
  for (const auto& l : layers) {
    if (l.kind == LayerKind::kDense) width = l.out;
  }
  return width;
}

std::vector<ParamRef> ModelGraph::params() const {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    if (l.kind == LayerKind::kEmbedding) {
      out.push_back({i, ParamRole::kTable, {l.vocab, l.dim}});
    } else if (l.kind == LayerKind::kDense) {
      out.push_back({i, ParamRole::kWeight, {l.out, l.in}});
      if (l.bias) out.push_back({i, ParamRole::kBias, {l.out}});
    }
  }
  return out;
}

nlohmann::ordered_json ModelGraph::to_json() const {
  nlohmann::ordered_json layers_j = nlohmann::ordered_json::array();
  for (const auto& l : layers) {
    nlohmann::ordered_json lj;
    lj["kind"] = kind_name(l.kind);
    if (l.kind == LayerKind::kEmbedding) {
      lj["vocab"] = l.vocab;
      lj["dim"] = l.dim;
    } else if (l.kind == LayerKind::kDense) {
      lj["in"] = l.in;
      lj["out"] = l.out;
      lj["bias"] = l.bias;
    }
    lj["frozen"] = l.frozen;
    layers_j.push_back(lj);
  }
  nlohmann::ordered_json j;
  j["layers"] = layers_j;
  j["loss"] = loss == Loss::kMSE ? "mse" : "cross_entropy";
  return j;
}

ModelGraph ModelGraph::from_json(const nlohmann::json& j) {
  try {
    ModelGraph g;
    for (const auto& lj : j.at("layers")) {
      Layer l;
      l.kind = kind_from(lj.at("kind").get<std::string>());
      if (l.kind == LayerKind::kEmbedding) {
        l.vocab = lj.at("vocab").get<std::size_t>();
        l.dim = lj.at("dim").get<std::size_t>();
      } else if (l.kind == LayerKind::kDense) {
        l.in = lj.at("in").get<std::size_t>();
        l.out = lj.at("out").get<std::size_t>();
        l.bias = lj.value("bias", true);
      }
      l.frozen = lj.value("frozen", false);
      g.layers.push_back(l);
    }
    std::string loss = j.at("loss").get<std::string>();
    if (loss == "mse") {
      g.loss = Loss::kMSE;
    } else if (loss == "cross_entropy") {
      g.loss = Loss::kCrossEntropy;
    } else {
      invalid("unknown loss '" + loss + "'");
    }
    g.validate();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParse, std::string("model: ") + e.what());
  }
}

ModelGraph ModelGraph::recommender(std::size_t users, std::size_t items, std::size_t dim, std::size_t hidden) {
  ModelGraph g;
  g.layers = {Layer::embedding(users, dim), Layer::embedding(items, dim), Layer::concat(),
              Layer::dense(2 * dim, hidden), Layer::relu6(), Layer::dense(hidden, 1)};
  g.loss = Loss::kMSE;
  g.validate();
  return g;
}

ModelGraph ModelGraph::mlp(std::size_t in, std::size_t hidden, std::size_t classes) {
  ModelGraph g;
  g.layers = {Layer::dense(in, hidden), Layer::relu6(), Layer::dense(hidden, classes), Layer::softmax()};
  g.loss = Loss::kCrossEntropy;
  g.validate();
  return g;
}

void TrainConfig::validate() const {
  spec.validate();
  if (batch_size < 1) throw Error(Errc::kValidation, "batch_size must be at least 1");
  if (epochs < 1) throw Error(Errc::kValidation, "epochs must be at least 1");
  if (!(learning_rate >= 0.0)) throw Error(Errc::kValidation, "learning_rate must be nonnegative");
  if (columns < 10) throw Error(Errc::kValidation, "circuits need at least 10 columns");
  if (batch_size >= static_cast<std::size_t>(spec.range_limit())) {
    throw Error(Errc::kValidation, "batch_size must be below 2^N");
  }
  if (eta_raw() < 1) {
    throw Error(Errc::kValidation, "learning rate " + std::to_string(learning_rate) + " quantizes to 0 at SF " +
                                       std::to_string(spec.scale_factor));
  }
}

std::int64_t TrainConfig::eta_raw() const { return fxp::quantize(learning_rate, spec).raw; }

nlohmann::ordered_json spec_to_json(const fxp::FxpSpec& spec) {
  nlohmann::ordered_json j;
  j["scale_factor"] = spec.scale_factor;
  j["range_bits"] = spec.range_bits;
  j["field_modulus"] = spec.field_modulus.to_hex();
  return j;
}

fxp::FxpSpec spec_from_json(const nlohmann::json& j) {
  try {
    fxp::FxpSpec spec;
    spec.scale_factor = j.at("scale_factor").get<std::int64_t>();
    spec.range_bits = j.at("range_bits").get<int>();
    spec.field_modulus = U256::from_hex(j.at("field_modulus").get<std::string>());
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParse, std::string("fixed-point spec: ") + e.what());
  }
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["learning_rate_raw"] = eta_raw();
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["init_seed"] = init_seed;
  j["columns"] = columns;
  j["max_rows"] = max_rows;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, const fxp::FxpSpec& spec) {
  try {
    TrainConfig c;
    c.spec = spec;
    c.learning_rate = static_cast<double>(j.at("learning_rate_raw").get<std::int64_t>()) /
                      static_cast<double>(c.spec.scale_factor);
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    c.columns = j.at("columns").get<std::size_t>();
    c.max_rows = j.at("max_rows").get<std::size_t>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParse, std::string("train config: ") + e.what());
  }
}

std::vector<std::vector<double>> init_real(const ModelGraph& model, std::uint64_t seed) {
  model.validate();
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> out;
  for (const auto& p : model.params()) {
    const Layer& l = model.layers[p.layer];
    std::size_t fan_in = l.kind == LayerKind::kEmbedding ? l.dim : l.in;
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::size_t count = 1;
    for (auto d : p.shape) count *= d;
    std::vector<double> v(count);
    for (auto& x : v) {
      // 53 random bits -> [0, 1); independent of the standard library's
      // distribution implementations.
      double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      x = (2.0 * u - 1.0) * bound;
    }
    out.push_back(std::move(v));
  }
  return out;
}

Weights quantize_weights(const ModelGraph& model, const std::vector<std::vector<double>>& reals,
                         const fxp::FxpSpec& spec) {
  auto params = model.params();
  if (params.size() != reals.size()) throw Error(Errc::kShapeMismatch, "parameter count mismatch");
  Weights w{spec, {}};
  for (std::size_t i = 0; i < params.size(); ++i) {
    w.tensors.push_back(fxp::FxpTensor::from_real(params[i].shape, reals[i], spec));
  }
  return w;
}

Weights init_weights(const ModelGraph& model, const fxp::FxpSpec& spec, std::uint64_t seed) {
  return quantize_weights(model, init_real(model, seed), spec);
}

}  // namespace zkaudit::nn
