#include "zkaudit/protocol.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>
#include <string>

#include "zkaudit/error.hpp"

namespace zkaudit::protocol {
namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::kParse, what); }

void expect_keys(const Json& j, std::initializer_list<const char*> keys, const char* what) {
  if (!j.is_object()) malformed(std::string(what) + " must be an object");
  if (j.size() != keys.size()) malformed(std::string(what) + " has unexpected fields");
  for (const char* k : keys) {
    if (!j.contains(k)) malformed(std::string(what) + " lacks '" + k + "'");
  }
}

Digest digest_at(const Json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string()) malformed(std::string(key) + " must be a hex string");
  return Digest::from_hex(v.get<std::string>());
}

std::size_t size_at(const Json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) malformed(std::string(key) + " must be a nonnegative integer");
  return v.get<std::size_t>();
}

std::string string_at(const Json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string()) malformed(std::string(key) + " must be a string");
  return v.get<std::string>();
}

Json digests_json(const std::vector<Digest>& ds) {
  Json a = Json::array();
  for (const auto& d : ds) a.push_back(d.hex());
  return a;
}

Json training_json(const std::vector<TrainingRef>& refs) {
  Json a = Json::array();
  for (const auto& r : refs) a.push_back(Json{{"transcript", r.transcript.hex()}, {"final_commitment", r.final_commitment.hex()}});
  return a;
}

Json step_public_inputs(const Digest& statement, const StepRecord& s) {
  Json j;
  j["statement"] = statement.hex();
  j["step"] = s.index;
  j["epoch"] = s.epoch;
  j["positions"] = s.positions;
  j["pre"] = s.pre.hex();
  j["post"] = s.post.hex();
  return j;
}

std::size_t steps_per_epoch(std::size_t n, std::size_t batch) { return (n + batch - 1) / batch; }

template <class F>
auto with_parse_errors(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParse, e.what());
  }
}

}  // namespace

Digest grid_digest(const air::Grid& grid) {
  commit::Sha256 h(commit::Tag::kGrid);
  air::encode_witness(grid, h);
  return h.finish();
}

Digest constraint_digest(const air::Circuit& circuit) {
  commit::Sha256 h(commit::Tag::kConstraints);
  air::encode_constraint_system(circuit.grid, circuit.constraints, circuit.tables, h);
  return h.finish();
}

Digest binding_digest(const Digest& grid, const Digest& constraints, const Json& public_inputs) {
  commit::Sha256 h(commit::Tag::kBinding);
  h.digest(grid);
  h.digest(constraints);
  h.str(public_inputs.dump());
  return h.finish();
}

StepProof MockBackend::prove_step(const air::Circuit& circuit, const Json& public_inputs) const {
  auto report = circuit.check();
  if (!report.empty()) {
    throw Error(Errc::kUnsatisfiedWitness, "witness violates " + std::to_string(report.size()) +
                                               " constraint(s): " + report.summary());
  }
  StepProof p;
  p.grid = grid_digest(circuit.grid);
  p.constraints = constraint_digest(circuit);
  p.binding = binding_digest(p.grid, p.constraints, public_inputs);
  return p;
}

bool MockBackend::verify_step(const StepProof& proof, const Json& public_inputs, const Digest& expected_constraints,
                              const air::Circuit* witness) const {
  if (proof.constraints != expected_constraints) return false;
  if (proof.binding != binding_digest(proof.grid, proof.constraints, public_inputs)) return false;
  if (witness) {
    if (grid_digest(witness->grid) != proof.grid) return false;
    if (constraint_digest(*witness) != proof.constraints) return false;
    if (!witness->check().empty()) return false;
  }
  return true;
}

Json proof_to_json(const StepProof& p) {
  Json j;
  j["grid"] = p.grid.hex();
  j["constraints"] = p.constraints.hex();
  j["binding"] = p.binding.hex();
  return j;
}

StepProof proof_from_json(const Json& j) {
  expect_keys(j, {"grid", "constraints", "binding"}, "proof");
  return {digest_at(j, "grid"), digest_at(j, "constraints"), digest_at(j, "binding")};
}

// --- training transcript ---

namespace {

Json statement_json(const TrainingTranscript& t) {
  Json j;
  j["format"] = kTrainingFormat;
  j["version"] = kFormatVersion;
  Json header;
  header["hash"] = t.hash;
  header["backend"] = t.backend;
  header["fxp"] = nn::spec_to_json(t.config.spec);
  header["model"] = t.model.to_json();
  header["config"] = t.config.to_json();
  j["header"] = header;
  j["dataset"] = Json{{"size", t.commitments.size()}, {"commitments", digests_json(t.commitments)}};
  j["merkle_root"] = t.merkle_root.hex();
  j["traversal"] = Json{{"scheme", t.traversal}};
  j["initial_weights"] = Json{{"salt", commit::salt_hex(t.initial_salt)}, {"commitment", t.initial_commitment.hex()}};
  return j;
}

}  // namespace

Json TrainingTranscript::to_json() const {
  Json j = statement_json(*this);
  Json steps_j = Json::array();
  for (const auto& s : steps) {
    Json sj;
    sj["index"] = s.index;
    sj["epoch"] = s.epoch;
    sj["positions"] = s.positions;
    sj["pre"] = s.pre.hex();
    sj["post"] = s.post.hex();
    sj["proof"] = proof_to_json(s.proof);
    steps_j.push_back(sj);
  }
  j["steps"] = steps_j;
  j["final_commitment"] = final_commitment.hex();
  return j;
}

TrainingTranscript TrainingTranscript::from_json(const Json& j) {
  return with_parse_errors([&] {
    expect_keys(j, {"format", "version", "header", "dataset", "merkle_root", "traversal", "initial_weights", "steps",
                    "final_commitment"},
                "transcript");
    if (string_at(j, "format") != kTrainingFormat) malformed("not a training transcript");
    if (!j.at("version").is_number_integer()) malformed("version must be an integer");
    TrainingTranscript t;
    const auto& h = j.at("header");
    expect_keys(h, {"hash", "backend", "fxp", "model", "config"}, "header");
    t.hash = string_at(h, "hash");
    t.backend = string_at(h, "backend");
    t.model = nn::ModelGraph::from_json(h.at("model"));
    const auto& cfg = h.at("config");
    expect_keys(cfg, {"learning_rate_raw", "batch_size", "epochs", "init_seed", "columns", "max_rows"}, "config");
    expect_keys(h.at("fxp"), {"scale_factor", "range_bits", "field_modulus"}, "fxp");
    t.config = nn::TrainConfig::from_json(cfg, nn::spec_from_json(h.at("fxp")));
    const auto& d = j.at("dataset");
    expect_keys(d, {"size", "commitments"}, "dataset");
    if (!d.at("commitments").is_array()) malformed("commitments must be an array");
    for (const auto& c : d.at("commitments")) {
      if (!c.is_string()) malformed("commitment must be a hex string");
      t.commitments.push_back(Digest::from_hex(c.get<std::string>()));
    }
    if (size_at(d, "size") != t.commitments.size()) malformed("dataset size disagrees with the commitment list");
    t.merkle_root = digest_at(j, "merkle_root");
    expect_keys(j.at("traversal"), {"scheme"}, "traversal");
    t.traversal = string_at(j.at("traversal"), "scheme");
    const auto& iw = j.at("initial_weights");
    expect_keys(iw, {"salt", "commitment"}, "initial_weights");
    t.initial_salt = commit::salt_from_hex(string_at(iw, "salt"));
    t.initial_commitment = digest_at(iw, "commitment");
    if (!j.at("steps").is_array()) malformed("steps must be an array");
    for (const auto& sj : j.at("steps")) {
      expect_keys(sj, {"index", "epoch", "positions", "pre", "post", "proof"}, "step");
      StepRecord s;
      s.index = size_at(sj, "index");
      s.epoch = size_at(sj, "epoch");
      if (!sj.at("positions").is_array()) malformed("positions must be an array");
      for (const auto& p : sj.at("positions")) {
        if (!p.is_number_unsigned()) malformed("positions must be nonnegative integers");
        s.positions.push_back(p.get<std::size_t>());
      }
      s.pre = digest_at(sj, "pre");
      s.post = digest_at(sj, "post");
      s.proof = proof_from_json(sj.at("proof"));
      t.steps.push_back(std::move(s));
    }
    t.final_commitment = digest_at(j, "final_commitment");
    return t;
  });
}

std::string TrainingTranscript::serialize() const { return to_json().dump(2) + "\n"; }

TrainingTranscript TrainingTranscript::parse(std::string_view text) {
  return with_parse_errors([&] { return from_json(nlohmann::ordered_json::parse(text)); });
}

Digest TrainingTranscript::digest() const {
  std::string s = serialize();
  return commit::hash(commit::Tag::kTranscript,
                      std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

Digest TrainingTranscript::statement_digest() const {
  std::string s = statement_json(*this).dump();
  return commit::hash(commit::Tag::kTranscript,
                      std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

DatasetCommitment commit_dataset(const std::vector<nn::Example>& dataset, std::span<const std::uint8_t> salt_seed) {
  const std::size_t n = dataset.size();
  if (n == 0) throw Error(Errc::kInvalidArgument, "cannot commit to an empty dataset");
  std::vector<commit::SaltedCommitment> cs;
  cs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    cs.push_back(commit::commit_example(dataset[i], commit::derive_salt(salt_seed, "example", i)));
  }
  DatasetCommitment dc;
  dc.order.resize(n);
  std::iota(dc.order.begin(), dc.order.end(), std::size_t{0});
  std::sort(dc.order.begin(), dc.order.end(), [&](std::size_t a, std::size_t b) { return cs[a].digest < cs[b].digest; });
  for (auto i : dc.order) {
    dc.commitments.push_back(cs[i].digest);
    dc.salts.push_back(cs[i].salt);
  }
  dc.root = commit::build_merkle(dc.commitments).root();
  return dc;
}

ProveResult zkaudit_t_prove(const std::vector<nn::Example>& dataset, const nn::ModelGraph& model,
                            const nn::TrainConfig& config, std::span<const std::uint8_t> salt_seed,
                            const ProofBackend& backend, const ProveOptions& options) {
  model.validate();
  config.validate();
  if (dataset.empty()) throw Error(Errc::kInvalidArgument, "cannot train on an empty dataset");
  const std::size_t n = dataset.size();

  DatasetCommitment dc = commit_dataset(dataset, salt_seed);
  ProveResult out;
  TrainingTranscript& t = out.transcript;
  t.backend = backend.name();
  t.model = model;
  t.config = config;
  t.commitments = std::move(dc.commitments);
  t.merkle_root = dc.root;
  for (auto i : dc.order) out.sorted_examples.push_back(dataset[i]);
  out.sorted_salts = std::move(dc.salts);
  auto orders = commit::derive_traversal(t.merkle_root, n, config.epochs);
  auto batches = nn::step_batches(orders, config.batch_size);

  nn::Weights w = nn::init_weights(model, config.spec, config.init_seed);
  t.initial_salt = commit::derive_salt(salt_seed, "initial-weights", 0);
  t.initial_commitment = commit::commit_weights(w, t.initial_salt).digest;
  const Digest statement = t.statement_digest();
  const std::size_t spe = steps_per_epoch(n, config.batch_size);

  // Plain fixed-point pass first: it fixes every step's input weights, so the
  // witnesses can then be synthesized and proven independently.
  std::vector<nn::Weights> traj;
  traj.reserve(batches.size() + 1);
  traj.push_back(std::move(w));
  std::vector<std::vector<nn::Example>> step_data(batches.size());
  for (std::size_t s = 0; s < batches.size(); ++s) {
    for (auto p : batches[s]) step_data[s].push_back(out.sorted_examples[p]);
    try {
      traj.push_back(nn::train_step(model, traj.back(), step_data[s], config));
    } catch (const Error& e) {
      throw Error(e.code(), "step " + std::to_string(s) + ": " + e.what());
    }
  }
  std::vector<commit::Salt> salts(batches.size() + 1);
  std::vector<Digest> commits(batches.size() + 1);
  salts[0] = t.initial_salt;
  commits[0] = t.initial_commitment;
  for (std::size_t s = 1; s <= batches.size(); ++s) {
    salts[s] = commit::derive_salt(salt_seed, "weights", s);
    commits[s] = commit::commit_weights(traj[s], salts[s]).digest;
  }

  t.steps.resize(batches.size());
  std::vector<std::optional<air::Circuit>> kept(options.keep_witnesses ? batches.size() : 0);
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex mu;
  std::optional<std::pair<std::size_t, Error>> failure;
  auto worker = [&] {
    for (;;) {
      std::size_t s = next.fetch_add(1);
      if (s >= batches.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure && failure->first < s) return;
      }
      try {
        nn::StepWitness wit = nn::emit_step_witness(model, traj[s], step_data[s], config);
        if (!(wit.post == traj[s + 1])) {
          throw Error(Errc::kUnsatisfiedWitness, "witness update disagrees with the plain update");
        }
        StepRecord& rec = t.steps[s];
        rec.index = s;
        rec.epoch = s / spe;
        rec.positions = batches[s];
        rec.pre = commits[s];
        rec.post = commits[s + 1];
        rec.proof = backend.prove_step(wit.circuit, step_public_inputs(statement, rec));
        if (options.keep_witnesses) kept[s].emplace(std::move(wit.circuit));
      } catch (const Error& e) {
        std::lock_guard lock(mu);
        if (!failure || s < failure->first) {
          failure.emplace(s, Error(e.code(), "step " + std::to_string(s) + ": " + e.what()));
        }
        continue;
      }
      if (options.progress) {
        std::lock_guard lock(mu);
        options.progress(++done, batches.size());
      }
    }
  };
  std::size_t threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
  threads = std::min(threads, std::max<std::size_t>(1, batches.size()));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) throw failure->second;
  for (auto& c : kept) out.witnesses.push_back(std::move(*c));

  Digest pre = commits.back();
  commit::Salt salt = salts.back();
  w = std::move(traj.back());
  t.final_commitment = pre;
  out.final_weights = std::move(w);
  out.final_salt = salt;
  return out;
}

std::string_view reject_name(RejectReason r) {
  switch (r) {
    case RejectReason::kMalformed: return "malformed";
    case RejectReason::kVersion: return "version";
    case RejectReason::kHeader: return "header";
    case RejectReason::kOrdering: return "ordering";
    case RejectReason::kMerkleRoot: return "merkle-root";
    case RejectReason::kTraversal: return "traversal";
    case RejectReason::kStepCount: return "step-count";
    case RejectReason::kInitialCommitment: return "initial-commitment";
    case RejectReason::kChain: return "chain";
    case RejectReason::kStepProofMismatch: return "step-proof-mismatch";
    case RejectReason::kFinalCommitment: return "final-commitment";
    case RejectReason::kTranscriptMismatch: return "transcript-mismatch";
    case RejectReason::kWeightCommitmentMismatch: return "weight-commitment-mismatch";
    case RejectReason::kUnknownAudit: return "unknown-audit";
    case RejectReason::kAuditProofCount: return "audit-proof-count";
  }
  return "unknown";
}

Digest StepStructureCache::expected(const nn::ModelGraph& model, const nn::TrainConfig& config, std::size_t batch) {
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(batch); it != cache_.end()) return it->second;
  }
  auto wit = nn::emit_step_witness(model, nn::zero_weights(model, config.spec), nn::dummy_batch(model, batch), config);
  Digest d = constraint_digest(wit.circuit);
  std::lock_guard lock(mu_);
  cache_.emplace(batch, d);
  return d;
}

Verdict zkaudit_t_verify(const TrainingTranscript& t, const ProofBackend& backend) {
  using R = RejectReason;
  if (t.hash != commit::kHashName) return Verdict::reject(R::kHeader, "unsupported hash '" + t.hash + "'");
  if (t.backend != backend.name()) return Verdict::reject(R::kHeader, "transcript backend '" + t.backend + "' differs");
  try {
    t.model.validate();
    t.config.validate();
  } catch (const Error& e) {
    return Verdict::reject(R::kHeader, e.what());
  }
  const std::size_t n = t.commitments.size();
  if (n == 0) return Verdict::reject(R::kOrdering, "empty dataset");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(t.commitments[i - 1] < t.commitments[i])) {
      return Verdict::reject(R::kOrdering, "commitments " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                               " are not in strictly increasing order");
    }
  }
  if (commit::build_merkle(t.commitments).root() != t.merkle_root) {
    return Verdict::reject(R::kMerkleRoot, "Merkle root does not match the commitments");
  }
  if (t.traversal != kTraversalScheme) return Verdict::reject(R::kTraversal, "unknown traversal scheme");
  auto batches = nn::step_batches(commit::derive_traversal(t.merkle_root, n, t.config.epochs), t.config.batch_size);
  if (t.steps.size() != batches.size()) {
    return Verdict::reject(R::kStepCount, "expected " + std::to_string(batches.size()) + " steps, found " +
                                              std::to_string(t.steps.size()));
  }
  const std::size_t spe = steps_per_epoch(n, t.config.batch_size);
  for (std::size_t s = 0; s < batches.size(); ++s) {
    const auto& st = t.steps[s];
    if (st.index != s || st.epoch != s / spe || st.positions != batches[s]) {
      return Verdict::reject(R::kTraversal, "step " + std::to_string(s) + " does not follow the derived traversal");
    }
  }
  nn::Weights w0 = nn::init_weights(t.model, t.config.spec, t.config.init_seed);
  if (commit::commit_weights(w0, t.initial_salt).digest != t.initial_commitment) {
    return Verdict::reject(R::kInitialCommitment, "initial weights do not open the initial commitment");
  }
  Digest prev = t.initial_commitment;
  for (std::size_t s = 0; s < t.steps.size(); ++s) {
    if (t.steps[s].pre != prev) {
      return Verdict::reject(R::kChain, "step " + std::to_string(s) + " does not start from the previous commitment");
    }
    prev = t.steps[s].post;
  }
  StepStructureCache cache;
  const Digest statement = t.statement_digest();
  for (const auto& st : t.steps) {
    Digest expected;
    try {
      expected = cache.expected(t.model, t.config, st.positions.size());
    } catch (const Error& e) {
      return Verdict::reject(R::kHeader, std::string("cannot synthesize the step circuit: ") + e.what());
    }
    if (!backend.verify_step(st.proof, step_public_inputs(statement, st), expected)) {
      return Verdict::reject(R::kStepProofMismatch, "proof of step " + std::to_string(st.index) + " does not verify");
    }
  }
  if (t.final_commitment != prev) return Verdict::reject(R::kFinalCommitment, "final commitment is not the last step's output");
  return Verdict::accept();
}

namespace {

std::optional<Verdict> precheck(std::string_view text, nlohmann::ordered_json& j) {
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    return Verdict::reject(RejectReason::kMalformed, e.what());
  }
  if (!j.is_object() || !j.contains("version") || !j["version"].is_number_integer()) {
    return Verdict::reject(RejectReason::kMalformed, "missing version");
  }
  if (j["version"].get<std::int64_t>() != kFormatVersion) {
    return Verdict::reject(RejectReason::kVersion, "unsupported version " + j["version"].dump());
  }
  return std::nullopt;
}

}  // namespace

Verdict zkaudit_t_verify_text(std::string_view text, const ProofBackend& backend) {
  nlohmann::ordered_json j;
  if (auto v = precheck(text, j)) return *v;
  TrainingTranscript t;
  try {
    t = TrainingTranscript::from_json(j);
  } catch (const Error& e) {
    return Verdict::reject(RejectReason::kMalformed, e.what());
  }
  if (t.serialize() != text) return Verdict::reject(RejectReason::kMalformed, "transcript is not in canonical form");
  return zkaudit_t_verify(t, backend);
}

// --- audit phase ---

Json AuditReport::to_json() const {
  Json j;
  j["format"] = kAuditFormat;
  j["version"] = kFormatVersion;
  j["kind"] = kind;
  j["params"] = params;
  j["training"] = training_json(training);
  j["output"] = output;
  Json ps = Json::array();
  for (const auto& p : proofs) ps.push_back(proof_to_json(p));
  j["proofs"] = ps;
  return j;
}

AuditReport AuditReport::from_json(const Json& j) {
  return with_parse_errors([&] {
    expect_keys(j, {"format", "version", "kind", "params", "training", "output", "proofs"}, "report");
    if (string_at(j, "format") != kAuditFormat) malformed("not an audit report");
    AuditReport r;
    r.kind = string_at(j, "kind");
    r.params = j.at("params");
    if (!j.at("training").is_array()) malformed("training must be an array");
    for (const auto& tj : j.at("training")) {
      expect_keys(tj, {"transcript", "final_commitment"}, "training entry");
      r.training.push_back({digest_at(tj, "transcript"), digest_at(tj, "final_commitment")});
    }
    r.output = j.at("output");
    if (!j.at("proofs").is_array()) malformed("proofs must be an array");
    for (const auto& pj : j.at("proofs")) r.proofs.push_back(proof_from_json(pj));
    return r;
  });
}

std::string AuditReport::serialize() const { return to_json().dump(2) + "\n"; }

AuditReport AuditReport::parse(std::string_view text) {
  return with_parse_errors([&] { return from_json(nlohmann::ordered_json::parse(text)); });
}

Json audit_public_inputs(const AuditReport& r, std::size_t index) {
  Json j;
  j["kind"] = r.kind;
  j["params"] = r.params;
  j["training"] = training_json(r.training);
  j["output"] = r.output;
  j["index"] = index;
  return j;
}

AuditReport zkaudit_i_prove(const AuditFunction& fn, const std::vector<TrainedArm>& arms, const ProofBackend& backend) {
  if (arms.size() != fn.arms()) {
    throw Error(Errc::kInvalidArgument, fn.kind() + " audit needs " + std::to_string(fn.arms()) + " trained model(s)");
  }
  AuditReport r;
  r.kind = fn.kind();
  r.params = fn.params();
  for (std::size_t a = 0; a < arms.size(); ++a) {
    const auto& arm = arms[a];
    if (!arm.transcript || !arm.weights) throw Error(Errc::kInvalidArgument, "incomplete trained arm");
    if (commit::commit_weights(*arm.weights, arm.final_salt).digest != arm.transcript->final_commitment) {
      throw Error(Errc::kWeightCommitmentMismatch,
                  "weights of arm " + std::to_string(a) + " do not open the transcript's final commitment");
    }
    r.training.push_back({arm.transcript->digest(), arm.transcript->final_commitment});
  }
  AuditRun run = fn.run(arms);
  r.output = std::move(run.output);
  for (std::size_t i = 0; i < run.circuits.size(); ++i) {
    r.proofs.push_back(backend.prove_step(run.circuits[i], audit_public_inputs(r, i)));
  }
  return r;
}

Verdict zkaudit_i_verify(const AuditReport& report, const std::vector<const TrainingTranscript*>& transcripts,
                         const AuditResolver& resolve, const ProofBackend& backend) {
  using R = RejectReason;
  if (transcripts.size() != report.training.size()) {
    return Verdict::reject(R::kTranscriptMismatch, "report refers to " + std::to_string(report.training.size()) +
                                                       " transcript(s), " + std::to_string(transcripts.size()) + " given");
  }
  for (std::size_t a = 0; a < transcripts.size(); ++a) {
    if (!transcripts[a] || transcripts[a]->digest() != report.training[a].transcript) {
      return Verdict::reject(R::kTranscriptMismatch, "transcript " + std::to_string(a) + " is not the one audited");
    }
    if (transcripts[a]->final_commitment != report.training[a].final_commitment) {
      return Verdict::reject(R::kWeightCommitmentMismatch, "echoed weight commitment differs from the transcript");
    }
  }
  std::unique_ptr<AuditFunction> fn;
  std::vector<air::Circuit> circuits;
  try {
    fn = resolve ? resolve(report.kind, report.params) : nullptr;
    if (!fn) return Verdict::reject(R::kUnknownAudit, "no audit function '" + report.kind + "'");
    if (fn->params().dump() != report.params.dump()) {
      return Verdict::reject(R::kUnknownAudit, "audit parameters are not in canonical form");
    }
    circuits = fn->synthesize_public(transcripts);
  } catch (const Error& e) {
    return Verdict::reject(R::kUnknownAudit, e.what());
  }
  if (circuits.size() != report.proofs.size()) {
    return Verdict::reject(R::kAuditProofCount, "expected " + std::to_string(circuits.size()) + " proofs, found " +
                                                    std::to_string(report.proofs.size()));
  }
  for (std::size_t i = 0; i < circuits.size(); ++i) {
    if (!backend.verify_step(report.proofs[i], audit_public_inputs(report, i), constraint_digest(circuits[i]))) {
      return Verdict::reject(R::kStepProofMismatch, "audit proof " + std::to_string(i) + " does not verify");
    }
  }
  return Verdict::accept();
}

Verdict zkaudit_i_verify_text(std::string_view report_text, const std::vector<const TrainingTranscript*>& transcripts,
                              const AuditResolver& resolve, const ProofBackend& backend) {
  nlohmann::ordered_json j;
  if (auto v = precheck(report_text, j)) return *v;
  AuditReport r;
  try {
    r = AuditReport::from_json(j);
  } catch (const Error& e) {
    return Verdict::reject(RejectReason::kMalformed, e.what());
  }
  if (r.serialize() != report_text) return Verdict::reject(RejectReason::kMalformed, "report is not in canonical form");
  return zkaudit_i_verify(r, transcripts, resolve, backend);
}

double security_bits(double lambda, std::uint64_t dataset_size, std::uint64_t steps) {
  long double events = static_cast<long double>(dataset_size) + 4.0L * static_cast<long double>(steps);
  if (events < 1) throw Error(Errc::kInvalidArgument, "D + 4T must be at least 1");
  return static_cast<double>(static_cast<long double>(lambda) - std::log2(events));
}

}  // namespace zkaudit::protocol
