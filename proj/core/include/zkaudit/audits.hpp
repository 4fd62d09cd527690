#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "zkaudit/commit.hpp"
#include "zkaudit/nn/context.hpp"
#include "zkaudit/nn/dataset.hpp"
#include "zkaudit/nn/model.hpp"
#include "zkaudit/nn/train.hpp"
#include "zkaudit/protocol.hpp"

namespace zkaudit::audits {

using protocol::Json;

// ceil(ln(2 / delta) / (2 eps^2)); kInvalidArgument unless both lie in (0, 1).
std::uint64_t hoeffding_samples(double epsilon, double delta);

struct QuantileEstimate {
  double quantile = 0;
  std::size_t below = 0;  // samples scoring at most the item (ties count)
  std::size_t samples = 0;
  double epsilon = 0;
  double delta = 0;
};

// `n` uniform draws with replacement from [0, population).
std::vector<std::size_t> sample_positions(commit::RandomStream& rs, std::size_t population, std::size_t n);
QuantileEstimate estimate_quantile(std::span<const std::int64_t> scores, std::int64_t item_score,
                                   std::span<const std::size_t> positions, double epsilon, double delta);

// Recommender score of (user, item): the model output at the given weights.
// Works with or without a builder attached to `ctx`.
nn::Wire score_wire(nn::Ctx& ctx, const nn::ModelGraph& model, const std::vector<nn::Wires>& params,
                    std::size_t user, std::size_t item);
std::int64_t score(const nn::ModelGraph& model, const nn::Weights& weights, std::size_t user, std::size_t item);

// Audit that a given (user, item) pair is not ranked suspiciously low: the
// fraction of population items scoring at most the item, over samples drawn
// from the Merkle root.
class CensorshipAudit : public protocol::AuditFunction {
 public:
  struct Params {
    std::size_t user = 0;
    std::size_t item = 0;
    double epsilon = 0.05;
    double delta = 0.1;
    // Score every population item once instead of sampling.
    bool exhaustive = false;
    // Item ids the quantile is taken over; empty means all items.
    std::vector<std::size_t> population;
    // 0 means hoeffding_samples(epsilon, delta); fewer is kInsufficientSamples.
    std::size_t samples = 0;
  };

  explicit CensorshipAudit(Params p);
  static std::unique_ptr<CensorshipAudit> from_params(const Json& j);

  std::string kind() const override { return "censorship"; }
  Json params() const override;
  protocol::AuditRun run(const std::vector<protocol::TrainedArm>& arms) const override;
  std::vector<air::Circuit> synthesize_public(const std::vector<const protocol::TrainingTranscript*>& ts) const override;

  std::size_t sample_count() const;
  // Population item ids scored, in order.
  std::vector<std::size_t> sampled_items(const protocol::TrainingTranscript& t) const;

 private:
  protocol::AuditRun synthesize(const protocol::TrainingTranscript& t, const nn::Weights& w) const;

  Params p_;
};

QuantileEstimate censorship_estimate(const protocol::AuditReport& report);

// Fixed-point cosine similarity at the context's SF. The inverse norms are
// witness hints w with (2w - 1)^2 |x|^2 <= 4 SF^4 < (2w + 1)^2 |x|^2, pinned
// by range checks.
nn::Wire cosine_wire(nn::Ctx& ctx, const nn::Wires& x, const nn::Wires& c);
std::int64_t cosine_raw(std::span<const std::int64_t> x, std::span<const std::int64_t> c, const fxp::FxpSpec& spec);
// Nearest integer to SF^2 / sqrt(norm2) in the sense above.
std::int64_t inverse_norm_hint(std::int64_t norm2, std::int64_t sf);

// Flags every training item whose feature vector has cosine similarity at
// least tau with the claimant's. Item features are private to the prover;
// the verifier's instance only knows their count and dimension.
class CopyrightAudit : public protocol::AuditFunction {
 public:
  CopyrightAudit(std::vector<std::int64_t> claimant, double tau, std::vector<std::vector<std::int64_t>> features);
  static std::unique_ptr<CopyrightAudit> from_params(const Json& j);

  std::string kind() const override { return "copyright"; }
  Json params() const override;
  protocol::AuditRun run(const std::vector<protocol::TrainedArm>& arms) const override;
  std::vector<air::Circuit> synthesize_public(const std::vector<const protocol::TrainingTranscript*>& ts) const override;

 private:
  protocol::AuditRun synthesize(const fxp::FxpSpec& spec, const nn::TrainConfig& config,
                                const std::vector<std::vector<std::int64_t>>& features) const;

  std::vector<std::int64_t> claimant_;
  double tau_;
  std::size_t items_;
  std::size_t dim_;
  std::vector<std::vector<std::int64_t>> features_;
};

// item,similarity,similarity_raw,flagged per line after a header.
void write_copyright_csv(std::ostream& os, const protocol::AuditReport& report);

// Per-category counts and proportions of per-item labels.
class DemographicAudit : public protocol::AuditFunction {
 public:
  DemographicAudit(std::size_t categories, std::vector<std::size_t> labels);
  static std::unique_ptr<DemographicAudit> from_params(const Json& j);

  std::string kind() const override { return "demographic"; }
  Json params() const override;
  protocol::AuditRun run(const std::vector<protocol::TrainedArm>& arms) const override;
  std::vector<air::Circuit> synthesize_public(const std::vector<const protocol::TrainingTranscript*>& ts) const override;

 private:
  protocol::AuditRun synthesize(const nn::TrainConfig& config, const std::vector<std::size_t>& labels) const;

  std::size_t categories_;
  std::size_t items_;
  std::vector<std::size_t> labels_;
};

// Mean predicted score of one item over all users, evaluated on two trained
// arms; reports both values and their difference (B - A).
class CounterfactualAudit : public protocol::AuditFunction {
 public:
  CounterfactualAudit(std::size_t item, double remove_fraction);
  static std::unique_ptr<CounterfactualAudit> from_params(const Json& j);

  std::string kind() const override { return "counterfactual"; }
  Json params() const override;
  std::size_t arms() const override { return 2; }
  protocol::AuditRun run(const std::vector<protocol::TrainedArm>& arms) const override;
  std::vector<air::Circuit> synthesize_public(const std::vector<const protocol::TrainingTranscript*>& ts) const override;

 private:
  air::Circuit metric_circuit(const protocol::TrainingTranscript& t, const nn::Weights& w, std::int64_t& metric) const;

  std::size_t item_;
  double remove_fraction_;
};

// Mean over users of score(user, item), rounded to the model SF.
std::int64_t item_mean_score(const nn::ModelGraph& model, const nn::Weights& weights, std::size_t item);

// Drops the first round(fraction * k) of the k examples whose second id is
// `item`, keeping the rest in order.
std::vector<nn::Example> remove_item_examples(const std::vector<nn::Example>& data, std::size_t item, double fraction);

struct CounterfactualResult {
  protocol::ProveResult a;
  protocol::ProveResult b;
  protocol::AuditReport report;
};

// Trains and proves both arms (B on the reduced dataset), then proves the
// metric. Training failures are rethrown naming the arm.
CounterfactualResult counterfactual_audit(const std::vector<nn::Example>& data, const nn::ModelGraph& model,
                                          const nn::TrainConfig& config_a, const nn::TrainConfig& config_b,
                                          std::size_t item, double remove_fraction,
                                          std::span<const std::uint8_t> salt_seed,
                                          const protocol::ProofBackend& backend,
                                          const protocol::ProveOptions& options = {});

// Echoes the weight commitment; no circuits.
class WeightsHashAudit : public protocol::AuditFunction {
 public:
  std::string kind() const override { return "weights-hash"; }
  Json params() const override { return Json::object(); }
  protocol::AuditRun run(const std::vector<protocol::TrainedArm>& arms) const override;
  std::vector<air::Circuit> synthesize_public(const std::vector<const protocol::TrainingTranscript*>&) const override {
    return {};
  }
};

// Verifier-side reconstruction from a report's kind and params; nullptr for
// unknown kinds.
std::unique_ptr<protocol::AuditFunction> resolve(const std::string& kind, const Json& params);

}  // namespace zkaudit::audits
