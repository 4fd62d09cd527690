#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "zkaudit/air/builder.hpp"
#include "zkaudit/commit.hpp"
#include "zkaudit/nn/model.hpp"
#include "zkaudit/nn/train.hpp"

namespace zkaudit::protocol {

using commit::Digest;
using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;
inline constexpr std::string_view kTrainingFormat = "zkaudit-training";
inline constexpr std::string_view kAuditFormat = "zkaudit-audit";
inline constexpr std::string_view kTraversalScheme = "fisher-yates/sha256-stream/merkle-root";

struct StepProof {
  Digest grid;
  Digest constraints;
  Digest binding;
  friend bool operator==(const StepProof&, const StepProof&) = default;
};

Digest grid_digest(const air::Grid& grid);
Digest constraint_digest(const air::Circuit& circuit);

// Proving system interface. `expected_constraints` is the verifier's own
// digest of the constraint system the proof must be about.
class ProofBackend {
 public:
  virtual ~ProofBackend() = default;
  virtual std::string name() const = 0;
  virtual StepProof prove_step(const air::Circuit& circuit, const Json& public_inputs) const = 0;
  virtual bool verify_step(const StepProof& proof, const Json& public_inputs, const Digest& expected_constraints,
                           const air::Circuit* witness = nullptr) const = 0;
};

// Stand-in for a SNARK: the proof is a digest of the witness grid, a digest
// of the constraint system and a hash binding both to the public inputs.
// Proving refuses unsatisfied witnesses; verification compares the
// constraint digest and the binding, and re-checks every constraint when the
// witness is supplied. It is binding but not hiding.
class MockBackend final : public ProofBackend {
 public:
  std::string name() const override { return "mock"; }
  StepProof prove_step(const air::Circuit& circuit, const Json& public_inputs) const override;
  bool verify_step(const StepProof& proof, const Json& public_inputs, const Digest& expected_constraints,
                   const air::Circuit* witness = nullptr) const override;
};

Digest binding_digest(const Digest& grid, const Digest& constraints, const Json& public_inputs);

Json proof_to_json(const StepProof& p);
StepProof proof_from_json(const Json& j);

struct StepRecord {
  std::size_t index = 0;
  std::size_t epoch = 0;
  std::vector<std::size_t> positions;  // into the sorted commitment list
  Digest pre;
  Digest post;
  StepProof proof;
  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct TrainingTranscript {
  std::string hash = std::string(commit::kHashName);
  std::string backend = "mock";
  nn::ModelGraph model;
  nn::TrainConfig config;
  std::vector<Digest> commitments;  // sorted
  Digest merkle_root;
  std::string traversal = std::string(kTraversalScheme);
  commit::Salt initial_salt{};
  Digest initial_commitment;
  std::vector<StepRecord> steps;
  Digest final_commitment;

  Json to_json() const;
  // Throws Error(kParse) on schema violations.
  static TrainingTranscript from_json(const Json& j);
  // Canonical text: fixed key order, two-space indent, trailing newline.
  std::string serialize() const;
  static TrainingTranscript parse(std::string_view text);
  // Digest of the canonical text.
  Digest digest() const;
  // Digest of everything fixed before training starts; steps commit to it.
  Digest statement_digest() const;
};

// Salted example commitments in ascending order. `order[k]` is the dataset
// index at sorted position k; `salts` follow the sorted order.
struct DatasetCommitment {
  std::vector<Digest> commitments;
  std::vector<std::size_t> order;
  std::vector<commit::Salt> salts;
  Digest root;
};

DatasetCommitment commit_dataset(const std::vector<nn::Example>& dataset, std::span<const std::uint8_t> salt_seed);

struct ProveResult {
  TrainingTranscript transcript;
  nn::Weights final_weights;
  commit::Salt final_salt{};
  // Dataset in sorted-commitment order (the order traversal positions use).
  std::vector<nn::Example> sorted_examples;
  std::vector<commit::Salt> sorted_salts;
  std::vector<air::Circuit> witnesses;  // kept only on request
};

struct ProveOptions {
  bool keep_witnesses = false;
  // Worker threads for witness synthesis and proving; 0 means hardware
  // concurrency. The weight trajectory itself is computed sequentially.
  std::size_t threads = 1;
  // Called after each step is proven, from a worker thread (serialized).
  std::function<void(std::size_t step, std::size_t total)> progress;
};

// Commits to the dataset, derives the traversal from the Merkle root and
// proves every SGD step. `salt_seed` is the prover's secret; it derives the
// example salts and all weight salts except the public initial one. Errors
// from a step are rethrown with the step index in the message.
ProveResult zkaudit_t_prove(const std::vector<nn::Example>& dataset, const nn::ModelGraph& model,
                            const nn::TrainConfig& config, std::span<const std::uint8_t> salt_seed,
                            const ProofBackend& backend, const ProveOptions& options = {});

enum class RejectReason {
  kMalformed,
  kVersion,
  kHeader,
  kOrdering,
  kMerkleRoot,
  kTraversal,
  kStepCount,
  kInitialCommitment,
  kChain,
  kStepProofMismatch,
  kFinalCommitment,
  kTranscriptMismatch,
  kWeightCommitmentMismatch,
  kUnknownAudit,
  kAuditProofCount,
};

std::string_view reject_name(RejectReason r);

struct Verdict {
  bool accepted = true;
  std::optional<RejectReason> reason;
  std::string detail;

  static Verdict accept() { return {}; }
  static Verdict reject(RejectReason r, std::string detail) { return {false, r, std::move(detail)}; }
};

// Re-synthesizes step constraint systems from public data; caches one per
// batch size.
class StepStructureCache {
 public:
  Digest expected(const nn::ModelGraph& model, const nn::TrainConfig& config, std::size_t batch);

 private:
  std::mutex mu_;
  std::map<std::size_t, Digest> cache_;
};

Verdict zkaudit_t_verify(const TrainingTranscript& t, const ProofBackend& backend);
// Parses first: malformed or non-canonical bytes reject as kMalformed.
Verdict zkaudit_t_verify_text(std::string_view text, const ProofBackend& backend);

// --- audit phase ---

struct TrainedArm {
  const TrainingTranscript* transcript = nullptr;
  const nn::Weights* weights = nullptr;
  commit::Salt final_salt{};
};

struct AuditRun {
  Json output;
  std::vector<air::Circuit> circuits;
};

// An audit function F. The prover's instance may hold private data; the
// verifier's instance is rebuilt from (kind, params) alone and must produce
// circuits with the same constraint structure.
class AuditFunction {
 public:
  virtual ~AuditFunction() = default;
  virtual std::string kind() const = 0;
  virtual Json params() const = 0;
  virtual std::size_t arms() const { return 1; }
  virtual AuditRun run(const std::vector<TrainedArm>& arms) const = 0;
  virtual std::vector<air::Circuit> synthesize_public(const std::vector<const TrainingTranscript*>& ts) const = 0;
};

using AuditResolver = std::function<std::unique_ptr<AuditFunction>(const std::string& kind, const Json& params)>;

struct TrainingRef {
  Digest transcript;
  Digest final_commitment;
  friend bool operator==(const TrainingRef&, const TrainingRef&) = default;
};

struct AuditReport {
  std::string kind;
  Json params;
  std::vector<TrainingRef> training;
  Json output;
  std::vector<StepProof> proofs;

  Json to_json() const;
  static AuditReport from_json(const Json& j);
  std::string serialize() const;
  static AuditReport parse(std::string_view text);
};

Json audit_public_inputs(const AuditReport& r, std::size_t index);

// Checks that each arm's weights open its transcript's final commitment
// (kWeightCommitmentMismatch otherwise), runs F and proves its circuits.
AuditReport zkaudit_i_prove(const AuditFunction& fn, const std::vector<TrainedArm>& arms, const ProofBackend& backend);

Verdict zkaudit_i_verify(const AuditReport& report, const std::vector<const TrainingTranscript*>& transcripts,
                         const AuditResolver& resolve, const ProofBackend& backend);
Verdict zkaudit_i_verify_text(std::string_view report_text, const std::vector<const TrainingTranscript*>& transcripts,
                              const AuditResolver& resolve, const ProofBackend& backend);

// lambda - log2(D + 4T): bits left after a union bound over D dataset
// commitments and 4 hashes, commitments or proofs per step.
double security_bits(double lambda, std::uint64_t dataset_size, std::uint64_t steps);

}  // namespace zkaudit::protocol
