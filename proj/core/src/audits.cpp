#include "zkaudit/audits.hpp"

#include <cmath>
#include <future>
#include <numeric>

#include "zkaudit/error.hpp"

namespace zkaudit::audits {
namespace {

template <class F>
auto parse_params(const char* kind, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParse, std::string(kind) + " params: " + e.what());
  }
}

void require_recommender(const nn::ModelGraph& model) {
  if (model.embedding_count() != 2 || model.output_dim() != 1) {
    throw Error(Errc::kInvalidArgument, "audit needs a (user, item) recommender with one output");
  }
}

const protocol::TrainingTranscript& only_transcript(const std::vector<const protocol::TrainingTranscript*>& ts,
                                                    std::size_t expected = 1) {
  if (ts.size() != expected || !ts[0]) throw Error(Errc::kInvalidArgument, "wrong number of training transcripts");
  return *ts[0];
}

air::CircuitBuilder make_builder(const nn::TrainConfig& config) {
  return air::CircuitBuilder(config.spec, config.columns, 0, config.max_rows);
}

}  // namespace

std::uint64_t hoeffding_samples(double epsilon, double delta) {
  if (!(epsilon > 0 && epsilon < 1) || !(delta > 0 && delta < 1)) {
    throw Error(Errc::kInvalidArgument, "epsilon and delta must lie in (0, 1)");
  }
  return static_cast<std::uint64_t>(std::ceil(std::log(2.0 / delta) / (2.0 * epsilon * epsilon)));
}

std::vector<std::size_t> sample_positions(commit::RandomStream& rs, std::size_t population, std::size_t n) {
  if (population == 0) throw Error(Errc::kInvalidArgument, "cannot sample from an empty population");
  std::vector<std::size_t> out(n);
  for (auto& p : out) p = static_cast<std::size_t>(rs.uniform(population));
  return out;
}

QuantileEstimate estimate_quantile(std::span<const std::int64_t> scores, std::int64_t item_score,
                                   std::span<const std::size_t> positions, double epsilon, double delta) {
  if (positions.empty()) throw Error(Errc::kInsufficientSamples, "no samples");
  QuantileEstimate q;
  for (auto p : positions) {
    if (p >= scores.size()) throw Error(Errc::kDomainMiss, "sample position outside the population");
    if (scores[p] <= item_score) ++q.below;
  }
  q.samples = positions.size();
  q.quantile = static_cast<double>(q.below) / static_cast<double>(q.samples);
  q.epsilon = epsilon;
  q.delta = delta;
  return q;
}

nn::Wire score_wire(nn::Ctx& ctx, const nn::ModelGraph& model, const std::vector<nn::Wires>& params,
                    std::size_t user, std::size_t item) {
  nn::Example ex;
  ex.ids = {user, item};
  return nn::forward_example(ctx, model, params, ex, false).out.at(0);
}

std::int64_t score(const nn::ModelGraph& model, const nn::Weights& weights, std::size_t user, std::size_t item) {
  require_recommender(model);
  nn::Ctx ctx(weights.spec);
  auto params = nn::param_wires(ctx, weights);
  return score_wire(ctx, model, params, user, item).v;
}

// --- censorship ---

CensorshipAudit::CensorshipAudit(Params p) : p_(std::move(p)) {
  std::uint64_t need = hoeffding_samples(p_.epsilon, p_.delta);
  if (!p_.exhaustive) {
    if (p_.samples == 0) p_.samples = need;
    if (p_.samples < need) {
      throw Error(Errc::kInsufficientSamples, std::to_string(p_.samples) + " samples give no (" +
                                                  std::to_string(p_.epsilon) + ", " + std::to_string(p_.delta) +
                                                  ") guarantee; need " + std::to_string(need));
    }
  } else {
    p_.samples = 0;
  }
}

std::unique_ptr<CensorshipAudit> CensorshipAudit::from_params(const Json& j) {
  return parse_params("censorship", [&] {
    Params p;
    p.user = j.at("user").get<std::size_t>();
    p.item = j.at("item").get<std::size_t>();
    p.epsilon = j.at("epsilon").get<double>();
    p.delta = j.at("delta").get<double>();
    p.exhaustive = j.at("exhaustive").get<bool>();
    p.population = j.at("population").get<std::vector<std::size_t>>();
    p.samples = j.at("samples").get<std::size_t>();
    return std::make_unique<CensorshipAudit>(std::move(p));
  });
}

Json CensorshipAudit::params() const {
  Json j;
  j["user"] = p_.user;
  j["item"] = p_.item;
  j["epsilon"] = p_.epsilon;
  j["delta"] = p_.delta;
  j["exhaustive"] = p_.exhaustive;
  j["population"] = p_.population;
  j["samples"] = p_.samples;
  return j;
}

std::size_t CensorshipAudit::sample_count() const { return p_.samples; }

std::vector<std::size_t> CensorshipAudit::sampled_items(const protocol::TrainingTranscript& t) const {
  require_recommender(t.model);
  std::vector<std::size_t> pop = p_.population;
  if (pop.empty()) {
    pop.resize(t.model.layers[1].vocab);
    std::iota(pop.begin(), pop.end(), std::size_t{0});
  }
  if (p_.exhaustive) return pop;
  commit::RandomStream rs(t.merkle_root, "censorship");
  auto pos = sample_positions(rs, pop.size(), p_.samples);
  std::vector<std::size_t> out;
  out.reserve(pos.size());
  for (auto p : pos) out.push_back(pop[p]);
  return out;
}

protocol::AuditRun CensorshipAudit::synthesize(const protocol::TrainingTranscript& t, const nn::Weights& w) const {
  const auto items = sampled_items(t);
  const unsigned bits = static_cast<unsigned>(t.config.spec.range_bits) + 1;
  auto b = make_builder(t.config);
  nn::Ctx ctx(t.config.spec, &b);
  auto params = nn::param_wires(ctx, w);
  nn::Wire sx = score_wire(ctx, t.model, params, p_.user, p_.item);
  nn::Wires scores(items.size());
  b.pack(items.size(), [&](air::CircuitBuilder&, std::size_t i) {
    scores[i] = score_wire(ctx, t.model, params, p_.user, items[i]);
  });
  nn::Wires below_bits;
  below_bits.reserve(scores.size());
  for (const auto& s : scores) below_bits.push_back(ctx.less_equal(s, sx, bits));
  nn::Wire below = ctx.sum(below_bits);

  protocol::AuditRun run;
  run.output["item_score_raw"] = sx.v;
  run.output["samples"] = items.size();
  run.output["below"] = below.v;
  run.output["quantile"] = static_cast<double>(below.v) / static_cast<double>(items.size());
  run.circuits.push_back(std::move(b).build());
  return run;
}

protocol::AuditRun CensorshipAudit::run(const std::vector<protocol::TrainedArm>& arms) const {
  return synthesize(*arms.at(0).transcript, *arms.at(0).weights);
}

std::vector<air::Circuit> CensorshipAudit::synthesize_public(
    const std::vector<const protocol::TrainingTranscript*>& ts) const {
  const auto& t = only_transcript(ts);
  return std::move(synthesize(t, nn::zero_weights(t.model, t.config.spec)).circuits);
}

QuantileEstimate censorship_estimate(const protocol::AuditReport& report) {
  if (report.kind != "censorship") throw Error(Errc::kInvalidArgument, "not a censorship report");
  return parse_params("censorship", [&] {
    QuantileEstimate q;
    q.below = report.output.at("below").get<std::size_t>();
    q.samples = report.output.at("samples").get<std::size_t>();
    q.quantile = report.output.at("quantile").get<double>();
    q.epsilon = report.params.at("epsilon").get<double>();
    q.delta = report.params.at("delta").get<double>();
    return q;
  });
}

// --- copyright ---

std::int64_t inverse_norm_hint(std::int64_t norm2, std::int64_t sf) {
  if (norm2 <= 0) throw Error(Errc::kZeroNorm, "feature vector has zero norm");
  const i128 k = 4 * static_cast<i128>(sf) * sf * sf * sf;
  auto sq = [&](std::int64_t w, int d) {
    i128 a = 2 * static_cast<i128>(w) + d;
    return a * a * norm2;
  };
  auto w = static_cast<std::int64_t>(std::llround(static_cast<double>(sf) * static_cast<double>(sf) /
                                                   std::sqrt(static_cast<double>(norm2))));
  if (w < 1) w = 1;
  while (sq(w, 1) <= k) ++w;
  while (w > 1 && sq(w, -1) > k) --w;
  return w;
}

namespace {

nn::Wire hint_wire(nn::Ctx& ctx, const nn::Wire& norm2) {
  const std::int64_t sf = ctx.spec().scale_factor;
  const i128 k128 = 4 * static_cast<i128>(sf) * sf * sf * sf;
  if (k128 >= (static_cast<i128>(1) << 62)) {
    throw Error(Errc::kRangeOverflow, "cosine similarity needs 4 SF^4 < 2^62");
  }
  nn::Wire w = ctx.input(inverse_norm_hint(norm2.v, sf));
  nn::Wire one = ctx.constant(1);
  nn::Wire two_w = ctx.mul(ctx.constant(2), w);
  nn::Wire lo = ctx.sub(two_w, one);
  nn::Wire hi = ctx.add(two_w, one);
  nn::Wire k = ctx.constant(static_cast<std::int64_t>(k128));
  nn::Wire t1 = ctx.sub(k, ctx.mul(ctx.mul(lo, lo), norm2));
  nn::Wire t2 = ctx.sub(ctx.sub(ctx.mul(ctx.mul(hi, hi), norm2), k), one);
  nn::Wires slack{t1, t2};
  ctx.range_check(slack, 62);
  return w;
}

}  // namespace

nn::Wire cosine_wire(nn::Ctx& ctx, const nn::Wires& x, const nn::Wires& c) {
  if (x.size() != c.size()) {
    throw Error(Errc::kDimensionMismatch, "feature dimensions " + std::to_string(x.size()) + " and " +
                                              std::to_string(c.size()) + " differ");
  }
  const std::int64_t sf = ctx.spec().scale_factor;
  nn::Wire d = ctx.rdiv(ctx.dot(x, c), sf);
  nn::Wire ux = hint_wire(ctx, ctx.dot(x, x));
  nn::Wire uc = hint_wire(ctx, ctx.dot(c, c));
  nn::Wire t = ctx.rdiv(ctx.mul(d, ux), sf);
  return ctx.rdiv(ctx.mul(t, uc), sf);
}

std::int64_t cosine_raw(std::span<const std::int64_t> x, std::span<const std::int64_t> c, const fxp::FxpSpec& spec) {
  nn::Ctx ctx(spec);
  return cosine_wire(ctx, ctx.inputs(x), ctx.inputs(c)).v;
}

CopyrightAudit::CopyrightAudit(std::vector<std::int64_t> claimant, double tau,
                               std::vector<std::vector<std::int64_t>> features)
    : claimant_(std::move(claimant)), tau_(tau), items_(features.size()), dim_(claimant_.size()),
      features_(std::move(features)) {
  if (!(tau_ >= 0 && tau_ <= 1)) throw Error(Errc::kInvalidArgument, "tau must lie in [0, 1]");
  if (claimant_.empty()) throw Error(Errc::kDimensionMismatch, "empty claimant vector");
  if (std::all_of(claimant_.begin(), claimant_.end(), [](std::int64_t v) { return v == 0; })) {
    throw Error(Errc::kZeroNorm, "claimant vector has zero norm");
  }
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].size() != dim_) {
      throw Error(Errc::kDimensionMismatch, "item " + std::to_string(i) + " has " +
                                                std::to_string(features_[i].size()) + " features, claimant has " +
                                                std::to_string(dim_));
    }
  }
}

std::unique_ptr<CopyrightAudit> CopyrightAudit::from_params(const Json& j) {
  return parse_params("copyright", [&] {
    auto a = std::make_unique<CopyrightAudit>(j.at("claimant").get<std::vector<std::int64_t>>(),
                                              j.at("tau").get<double>(), std::vector<std::vector<std::int64_t>>{});
    a->items_ = j.at("items").get<std::size_t>();
    if (j.at("dim").get<std::size_t>() != a->dim_) throw Error(Errc::kDimensionMismatch, "dim disagrees with claimant");
    return a;
  });
}

Json CopyrightAudit::params() const {
  Json j;
  j["claimant"] = claimant_;
  j["tau"] = tau_;
  j["items"] = items_;
  j["dim"] = dim_;
  return j;
}

protocol::AuditRun CopyrightAudit::synthesize(const fxp::FxpSpec& spec, const nn::TrainConfig& config,
                                              const std::vector<std::vector<std::int64_t>>& features) const {
  const unsigned bits = static_cast<unsigned>(spec.range_bits) + 1;
  const std::int64_t tau_raw = fxp::quantize(tau_, spec).raw;
  auto b = make_builder(config);
  nn::Ctx ctx(spec, &b);
  nn::Wires c = ctx.inputs(claimant_);
  nn::Wire tau = ctx.constant(tau_raw);
  Json sims = Json::array();
  Json flags = Json::array();
  bool any = false;
  for (std::size_t i = 0; i < features.size(); ++i) {
    nn::Wire cos;
    try {
      cos = cosine_wire(ctx, ctx.inputs(features[i]), c);
    } catch (const Error& e) {
      throw Error(e.code(), "item " + std::to_string(i) + ": " + e.what());
    }
    bool flagged = ctx.less_equal(tau, cos, bits).v == 1;
    any = any || flagged;
    sims.push_back(cos.v);
    flags.push_back(flagged);
  }
  protocol::AuditRun run;
  run.output["scale_factor"] = spec.scale_factor;
  run.output["tau_raw"] = tau_raw;
  run.output["similarity_raw"] = sims;
  run.output["flagged"] = flags;
  run.output["verdict"] = any ? "flag" : "pass";
  run.circuits.push_back(std::move(b).build());
  return run;
}

protocol::AuditRun CopyrightAudit::run(const std::vector<protocol::TrainedArm>& arms) const {
  const auto& t = *arms.at(0).transcript;
  return synthesize(t.config.spec, t.config, features_);
}

std::vector<air::Circuit> CopyrightAudit::synthesize_public(
    const std::vector<const protocol::TrainingTranscript*>& ts) const {
  const auto& t = only_transcript(ts);
  std::vector<std::int64_t> unit(dim_, 0);
  unit[0] = t.config.spec.scale_factor;
  std::vector<std::vector<std::int64_t>> dummy(items_, unit);
  return std::move(synthesize(t.config.spec, t.config, dummy).circuits);
}

void write_copyright_csv(std::ostream& os, const protocol::AuditReport& report) {
  if (report.kind != "copyright") throw Error(Errc::kInvalidArgument, "not a copyright report");
  parse_params("copyright", [&] {
    const auto& sims = report.output.at("similarity_raw");
    const auto& flags = report.output.at("flagged");
    const auto sf = static_cast<double>(report.output.at("scale_factor").get<std::int64_t>());
    os << "item,similarity,similarity_raw,flagged\n";
    for (std::size_t i = 0; i < sims.size(); ++i) {
      auto raw = sims[i].get<std::int64_t>();
      os << i << ',' << static_cast<double>(raw) / sf << ',' << raw << ',' << (flags.at(i).get<bool>() ? "true" : "false")
         << '\n';
    }
    return 0;
  });
}

// --- demographic ---

DemographicAudit::DemographicAudit(std::size_t categories, std::vector<std::size_t> labels)
    : categories_(categories), items_(labels.size()), labels_(std::move(labels)) {
  if (categories_ == 0) throw Error(Errc::kInvalidArgument, "need at least one category");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= categories_) {
      throw Error(Errc::kLabelOutOfRange, "item " + std::to_string(i) + " has label " + std::to_string(labels_[i]) +
                                              " outside [0, " + std::to_string(categories_) + ")");
    }
  }
}

std::unique_ptr<DemographicAudit> DemographicAudit::from_params(const Json& j) {
  return parse_params("demographic", [&] {
    auto a = std::make_unique<DemographicAudit>(j.at("categories").get<std::size_t>(), std::vector<std::size_t>{});
    a->items_ = j.at("items").get<std::size_t>();
    return a;
  });
}

Json DemographicAudit::params() const {
  Json j;
  j["categories"] = categories_;
  j["items"] = items_;
  return j;
}

protocol::AuditRun DemographicAudit::synthesize(const nn::TrainConfig& config,
                                                const std::vector<std::size_t>& labels) const {
  if (labels.empty()) throw Error(Errc::kInvalidArgument, "no labels");
  const auto& spec = config.spec;
  auto b = make_builder(config);
  nn::Ctx ctx(spec, &b);
  std::vector<nn::Wires> columns(categories_);
  for (auto label : labels) {
    nn::Wires oh = ctx.one_hot(label, categories_);
    for (std::size_t k = 0; k < categories_; ++k) columns[k].push_back(oh[k]);
  }
  nn::Wire sf = ctx.constant(spec.scale_factor);
  const auto n = static_cast<std::int64_t>(labels.size());
  Json counts = Json::array();
  Json raw = Json::array();
  Json props = Json::array();
  for (std::size_t k = 0; k < categories_; ++k) {
    nn::Wire count = ctx.sum(columns[k]);
    nn::Wire p = ctx.rdiv(ctx.mul(count, sf), n);
    counts.push_back(count.v);
    raw.push_back(p.v);
    props.push_back(static_cast<double>(p.v) / static_cast<double>(spec.scale_factor));
  }
  protocol::AuditRun run;
  run.output["counts"] = counts;
  run.output["proportions_raw"] = raw;
  run.output["proportions"] = props;
  run.circuits.push_back(std::move(b).build());
  return run;
}

protocol::AuditRun DemographicAudit::run(const std::vector<protocol::TrainedArm>& arms) const {
  return synthesize(arms.at(0).transcript->config, labels_);
}

std::vector<air::Circuit> DemographicAudit::synthesize_public(
    const std::vector<const protocol::TrainingTranscript*>& ts) const {
  const auto& t = only_transcript(ts);
  return std::move(synthesize(t.config, std::vector<std::size_t>(items_, 0)).circuits);
}

// --- counterfactual ---

CounterfactualAudit::CounterfactualAudit(std::size_t item, double remove_fraction)
    : item_(item), remove_fraction_(remove_fraction) {
  if (!(remove_fraction_ >= 0 && remove_fraction_ <= 1)) {
    throw Error(Errc::kInvalidArgument, "remove_fraction must lie in [0, 1]");
  }
}

std::unique_ptr<CounterfactualAudit> CounterfactualAudit::from_params(const Json& j) {
  return parse_params("counterfactual", [&] {
    if (j.at("metric").get<std::string>() != "item_mean_score") throw Error(Errc::kParse, "unknown metric");
    return std::make_unique<CounterfactualAudit>(j.at("item").get<std::size_t>(),
                                                 j.at("remove_fraction").get<double>());
  });
}

Json CounterfactualAudit::params() const {
  Json j;
  j["metric"] = "item_mean_score";
  j["item"] = item_;
  j["remove_fraction"] = remove_fraction_;
  return j;
}

namespace {

nn::Wire mean_score_wire(nn::Ctx& ctx, air::CircuitBuilder* b, const nn::ModelGraph& model,
                         const std::vector<nn::Wires>& params, std::size_t item) {
  require_recommender(model);
  const std::size_t users = model.layers[0].vocab;
  nn::Wires scores(users);
  auto one = [&](std::size_t u) { scores[u] = score_wire(ctx, model, params, u, item); };
  if (b) {
    b->pack(users, [&](air::CircuitBuilder&, std::size_t u) { one(u); });
  } else {
    for (std::size_t u = 0; u < users; ++u) one(u);
  }
  return ctx.rdiv(ctx.sum(scores), static_cast<std::int64_t>(users));
}

}  // namespace

std::int64_t item_mean_score(const nn::ModelGraph& model, const nn::Weights& weights, std::size_t item) {
  nn::Ctx ctx(weights.spec);
  auto params = nn::param_wires(ctx, weights);
  return mean_score_wire(ctx, nullptr, model, params, item).v;
}

air::Circuit CounterfactualAudit::metric_circuit(const protocol::TrainingTranscript& t, const nn::Weights& w,
                                                 std::int64_t& metric) const {
  auto b = make_builder(t.config);
  nn::Ctx ctx(t.config.spec, &b);
  auto params = nn::param_wires(ctx, w);
  metric = mean_score_wire(ctx, &b, t.model, params, item_).v;
  return std::move(b).build();
}

protocol::AuditRun CounterfactualAudit::run(const std::vector<protocol::TrainedArm>& arms) const {
  if (arms.size() != 2) throw Error(Errc::kInvalidArgument, "counterfactual audit needs two arms");
  if (!(arms[0].transcript->config.spec == arms[1].transcript->config.spec)) {
    throw Error(Errc::kInvalidArgument, "arms use different fixed-point formats");
  }
  protocol::AuditRun run;
  std::int64_t a = 0;
  std::int64_t b = 0;
  run.circuits.push_back(metric_circuit(*arms[0].transcript, *arms[0].weights, a));
  run.circuits.push_back(metric_circuit(*arms[1].transcript, *arms[1].weights, b));
  const double sf = static_cast<double>(arms[0].transcript->config.spec.scale_factor);
  run.output["a_raw"] = a;
  run.output["b_raw"] = b;
  run.output["delta_raw"] = b - a;
  run.output["a"] = static_cast<double>(a) / sf;
  run.output["b"] = static_cast<double>(b) / sf;
  run.output["delta"] = static_cast<double>(b - a) / sf;
  return run;
}

std::vector<air::Circuit> CounterfactualAudit::synthesize_public(
    const std::vector<const protocol::TrainingTranscript*>& ts) const {
  if (ts.size() != 2 || !ts[0] || !ts[1]) throw Error(Errc::kInvalidArgument, "counterfactual audit needs two transcripts");
  std::vector<air::Circuit> out;
  std::int64_t ignored = 0;
  for (const auto* t : ts) out.push_back(metric_circuit(*t, nn::zero_weights(t->model, t->config.spec), ignored));
  return out;
}

std::vector<nn::Example> remove_item_examples(const std::vector<nn::Example>& data, std::size_t item, double fraction) {
  if (!(fraction >= 0 && fraction <= 1)) throw Error(Errc::kInvalidArgument, "fraction must lie in [0, 1]");
  std::size_t k = 0;
  for (const auto& ex : data) k += ex.ids.size() >= 2 && ex.ids[1] == item;
  auto drop = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(k)));
  std::vector<nn::Example> out;
  out.reserve(data.size() - drop);
  for (const auto& ex : data) {
    if (drop > 0 && ex.ids.size() >= 2 && ex.ids[1] == item) {
      --drop;
      continue;
    }
    out.push_back(ex);
  }
  return out;
}

CounterfactualResult counterfactual_audit(const std::vector<nn::Example>& data, const nn::ModelGraph& model,
                                          const nn::TrainConfig& config_a, const nn::TrainConfig& config_b,
                                          std::size_t item, double remove_fraction,
                                          std::span<const std::uint8_t> salt_seed,
                                          const protocol::ProofBackend& backend,
                                          const protocol::ProveOptions& options) {
  CounterfactualAudit fn(item, remove_fraction);
  std::vector<nn::Example> data_b = remove_item_examples(data, item, remove_fraction);
  auto arm = [&](const char* name, const std::vector<nn::Example>& d, const nn::TrainConfig& cfg) {
    try {
      return protocol::zkaudit_t_prove(d, model, cfg, salt_seed, backend, options);
    } catch (const Error& e) {
      throw Error(e.code(), std::string("arm ") + name + ": " + e.what());
    }
  };
  auto fut_b = std::async(std::launch::async, [&] { return arm("B", data_b, config_b); });
  CounterfactualResult r;
  try {
    r.a = arm("A", data, config_a);
  } catch (...) {
    fut_b.wait();
    throw;
  }
  r.b = fut_b.get();
  std::vector<protocol::TrainedArm> arms{{&r.a.transcript, &r.a.final_weights, r.a.final_salt},
                                         {&r.b.transcript, &r.b.final_weights, r.b.final_salt}};
  r.report = protocol::zkaudit_i_prove(fn, arms, backend);
  return r;
}

protocol::AuditRun WeightsHashAudit::run(const std::vector<protocol::TrainedArm>& arms) const {
  protocol::AuditRun run;
  run.output["commitment"] = arms.at(0).transcript->final_commitment.hex();
  return run;
}

std::unique_ptr<protocol::AuditFunction> resolve(const std::string& kind, const Json& params) {
  if (kind == "censorship") return CensorshipAudit::from_params(params);
  if (kind == "copyright") return CopyrightAudit::from_params(params);
  if (kind == "demographic") return DemographicAudit::from_params(params);
  if (kind == "counterfactual") return CounterfactualAudit::from_params(params);
  if (kind == "weights-hash") {
    if (!params.is_object() || !params.empty()) throw Error(Errc::kParse, "weights-hash takes no params");
    return std::make_unique<WeightsHashAudit>();
  }
  return nullptr;
}

}  // namespace zkaudit::audits
