#include <gtest/gtest.h>

#include "zkaudit/audits.hpp"
#include "zkaudit/error.hpp"
#include "zkaudit/nn/dataset.hpp"
#include "zkaudit/protocol.hpp"

using namespace zkaudit;
using protocol::RejectReason;
using protocol::TrainingTranscript;

namespace {

std::vector<std::uint8_t> seed(std::string_view s) { return {s.begin(), s.end()}; }

struct Fixture {
  std::vector<nn::Example> data;
  nn::ModelGraph model = nn::ModelGraph::recommender(6, 6, 2, 3);
  nn::TrainConfig config;
  protocol::MockBackend backend;
  protocol::ProveResult result;

  // 8 examples, batch 4, 2 epochs: four proven steps.
  explicit Fixture(std::string_view salt_seed = "fixture") {
    config.learning_rate = 0.05;
    config.batch_size = 4;
    config.epochs = 2;
    data = nn::rating_examples(nn::synthetic_ratings(6, 6, 8, 2), config.spec);
    protocol::ProveOptions opts;
    opts.keep_witnesses = true;
    result = protocol::zkaudit_t_prove(data, model, config, seed(salt_seed), backend, opts);
  }
  const TrainingTranscript& t() const { return result.transcript; }
};

const Fixture& shared() {
  static const Fixture f;
  return f;
}

std::optional<RejectReason> verdict(const TrainingTranscript& t) {
  protocol::MockBackend backend;
  return protocol::zkaudit_t_verify(t, backend).reason;
}

void flip(commit::Digest& d) { d.bytes[5] ^= 0x10; }

}  // namespace

TEST(Transcript, HonestRunAcceptsWithExpectedShape) {
  const auto& f = shared();
  ASSERT_EQ(f.t().steps.size(), 4u);
  EXPECT_EQ(f.t().commitments.size(), 8u);
  EXPECT_EQ(f.result.witnesses.size(), 4u);
  auto v = protocol::zkaudit_t_verify(f.t(), f.backend);
  EXPECT_TRUE(v.accepted) << v.detail;
  EXPECT_TRUE(protocol::zkaudit_t_verify_text(f.t().serialize(), f.backend).accepted);
  EXPECT_EQ(f.t().steps[2].epoch, 1u);
  EXPECT_EQ(f.t().final_commitment, f.t().steps.back().post);
  EXPECT_EQ(commit::commit_weights(f.result.final_weights, f.result.final_salt).digest, f.t().final_commitment);
}

TEST(Transcript, WitnessesSatisfyAndVerifyAgainstProofs) {
  const auto& f = shared();
  protocol::StepStructureCache cache;
  auto expected = cache.expected(f.model, f.config, 4);
  for (std::size_t s = 0; s < f.result.witnesses.size(); ++s) {
    const auto& w = f.result.witnesses[s];
    EXPECT_TRUE(w.check().empty());
    EXPECT_EQ(protocol::constraint_digest(w), expected);
    EXPECT_EQ(f.t().steps[s].proof.grid, protocol::grid_digest(w.grid));
  }
}

TEST(Transcript, ProveRefusesUnsatisfiedWitness) {
  const auto& f = shared();
  air::Circuit bad = f.result.witnesses[0];
  const auto& field = bad.grid.field();
  bool changed = false;
  for (std::uint32_t r = 0; r < bad.grid.rows() && !changed; ++r) {
    for (std::uint32_t c = 0; c < bad.grid.cols() && !changed; ++c) {
      for (std::uint32_t s = 0; s < bad.grid.selector_count(); ++s) {
        if (bad.grid.selector(s, r) && bad.grid.is_assigned({r, c})) {
          bad.grid.assign({r, c}, field.add(bad.grid.value({r, c}), field.one()));
          changed = true;
          break;
        }
      }
    }
  }
  ASSERT_TRUE(changed);
  try {
    f.backend.prove_step(bad, protocol::Json::object());
    FAIL() << "unsatisfied witness was proven";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kUnsatisfiedWitness);
  }
  auto honest = f.backend.prove_step(f.result.witnesses[0], protocol::Json::object());
  auto cs = protocol::constraint_digest(f.result.witnesses[0]);
  EXPECT_TRUE(f.backend.verify_step(honest, protocol::Json::object(), cs, &f.result.witnesses[0]));
  EXPECT_FALSE(f.backend.verify_step(honest, protocol::Json::object(), cs, &bad));
  EXPECT_FALSE(f.backend.verify_step(honest, protocol::Json{{"x", 1}}, cs));
}

TEST(Transcript, DeterministicAcrossRunsAndThreadCounts) {
  const auto& f = shared();
  Fixture again;
  EXPECT_EQ(again.t().serialize(), f.t().serialize());
  protocol::ProveOptions opts;
  opts.threads = 3;
  auto threaded = protocol::zkaudit_t_prove(f.data, f.model, f.config, seed("fixture"), f.backend, opts);
  EXPECT_EQ(threaded.transcript.serialize(), f.t().serialize());
  Fixture other("another-seed");
  EXPECT_NE(other.t().merkle_root, f.t().merkle_root);
}

TEST(Transcript, CanonicalTextIsAFixedPoint) {
  const auto& f = shared();
  std::string text = f.t().serialize();
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(TrainingTranscript::parse(text).serialize(), text);
  EXPECT_EQ(TrainingTranscript::parse(text).digest(), f.t().digest());
  auto j = protocol::Json::parse(text);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"format", "version", "header", "dataset", "merkle_root", "traversal",
                                            "initial_weights", "steps", "final_commitment"}));
}

TEST(TranscriptText, MalformedAndVersion) {
  const auto& f = shared();
  std::string text = f.t().serialize();
  auto reason = [&](const std::string& s) { return protocol::zkaudit_t_verify_text(s, f.backend).reason; };
  EXPECT_EQ(reason(text.substr(0, text.size() / 2)), RejectReason::kMalformed);
  EXPECT_EQ(reason(" " + text), RejectReason::kMalformed);
  EXPECT_EQ(reason("[]"), RejectReason::kMalformed);
  auto j = protocol::Json::parse(text);
  j["version"] = 2;
  EXPECT_EQ(reason(j.dump(2) + "\n"), RejectReason::kVersion);
  j = protocol::Json::parse(text);
  j["extra"] = 1;
  EXPECT_EQ(reason(j.dump(2) + "\n"), RejectReason::kMalformed);
  j = protocol::Json::parse(text);
  j.erase("final_commitment");
  EXPECT_EQ(reason(j.dump(2) + "\n"), RejectReason::kMalformed);
  j = protocol::Json::parse(text);
  j["format"] = "zkaudit-audit";
  EXPECT_EQ(reason(j.dump(2) + "\n"), RejectReason::kMalformed);
  EXPECT_THROW(TrainingTranscript::parse("{"), Error);
}

TEST(TranscriptTamper, Header) {
  auto t = shared().t();
  t.hash = "md5";
  EXPECT_EQ(verdict(t), RejectReason::kHeader);
  t = shared().t();
  t.backend = "groth16";
  EXPECT_EQ(verdict(t), RejectReason::kHeader);
}

TEST(TranscriptTamper, OrderingAndRoot) {
  auto t = shared().t();
  std::swap(t.commitments[0], t.commitments[1]);
  EXPECT_EQ(verdict(t), RejectReason::kOrdering);
  t = shared().t();
  flip(t.merkle_root);
  EXPECT_EQ(verdict(t), RejectReason::kMerkleRoot);
  t = shared().t();
  flip(t.commitments[3]);
  auto r = verdict(t);
  EXPECT_TRUE(r == RejectReason::kMerkleRoot || r == RejectReason::kOrdering);
}

TEST(TranscriptTamper, TraversalAndStepCount) {
  auto t = shared().t();
  t.traversal = "sequential";
  EXPECT_EQ(verdict(t), RejectReason::kTraversal);
  t = shared().t();
  std::swap(t.steps[0].positions[0], t.steps[0].positions[1]);
  EXPECT_EQ(verdict(t), RejectReason::kTraversal);
  t = shared().t();
  t.steps[1].epoch = 1;
  EXPECT_EQ(verdict(t), RejectReason::kTraversal);
  t = shared().t();
  t.steps.pop_back();
  EXPECT_EQ(verdict(t), RejectReason::kStepCount);
  t = shared().t();
  t.config.epochs = 3;
  EXPECT_EQ(verdict(t), RejectReason::kStepCount);
}

TEST(TranscriptTamper, CommitmentsAndChain) {
  auto t = shared().t();
  t.initial_salt[0] ^= 1;
  EXPECT_EQ(verdict(t), RejectReason::kInitialCommitment);
  t = shared().t();
  t.config.init_seed += 1;
  EXPECT_EQ(verdict(t), RejectReason::kInitialCommitment);
  t = shared().t();
  flip(t.steps[2].pre);
  EXPECT_EQ(verdict(t), RejectReason::kChain);
  t = shared().t();
  flip(t.final_commitment);
  EXPECT_EQ(verdict(t), RejectReason::kFinalCommitment);
}

TEST(TranscriptTamper, ProofsBindStepData) {
  auto t = shared().t();
  flip(t.steps[1].proof.grid);
  EXPECT_EQ(verdict(t), RejectReason::kStepProofMismatch);
  t = shared().t();
  flip(t.steps[1].proof.constraints);
  EXPECT_EQ(verdict(t), RejectReason::kStepProofMismatch);
  // A consistent chain through a substituted commitment still fails the
  // binding of the proofs on either side.
  t = shared().t();
  flip(t.steps[1].post);
  t.steps[2].pre = t.steps[1].post;
  EXPECT_EQ(verdict(t), RejectReason::kStepProofMismatch);
  // The learning rate is bound through the statement digest.
  t = shared().t();
  t.config.learning_rate *= 2;
  EXPECT_EQ(verdict(t), RejectReason::kStepProofMismatch);
  t = shared().t();
  std::swap(t.steps[0].proof, t.steps[1].proof);
  EXPECT_EQ(verdict(t), RejectReason::kStepProofMismatch);
}

TEST(Transcript, BatchLargerThanDatasetGivesOneStepPerEpoch) {
  nn::TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.epochs = 3;
  auto model = nn::ModelGraph::recommender(6, 6, 2, 3);
  auto data = nn::rating_examples(nn::synthetic_ratings(6, 6, 5, 1), cfg.spec);
  protocol::MockBackend backend;
  auto r = protocol::zkaudit_t_prove(data, model, cfg, seed("big-batch"), backend);
  ASSERT_EQ(r.transcript.steps.size(), 3u);
  EXPECT_EQ(r.transcript.steps[2].positions.size(), 5u);
  EXPECT_TRUE(protocol::zkaudit_t_verify(r.transcript, backend).accepted);
}

TEST(Transcript, DatasetCommitmentOrder) {
  const auto& f = shared();
  auto dc = protocol::commit_dataset(f.data, seed("fixture"));
  EXPECT_EQ(dc.commitments, f.t().commitments);
  EXPECT_EQ(dc.root, f.t().merkle_root);
  for (std::size_t k = 0; k < dc.order.size(); ++k) {
    EXPECT_EQ(commit::commit_example(f.data[dc.order[k]], dc.salts[k]).digest, dc.commitments[k]);
    EXPECT_EQ(f.result.sorted_examples[k], f.data[dc.order[k]]);
  }
}

TEST(Audit, WeightsHashRoundTrip) {
  const auto& f = shared();
  audits::WeightsHashAudit fn;
  protocol::TrainedArm arm{&f.t(), &f.result.final_weights, f.result.final_salt};
  auto report = protocol::zkaudit_i_prove(fn, {arm}, f.backend);
  EXPECT_EQ(report.output["commitment"], f.t().final_commitment.hex());
  EXPECT_TRUE(report.proofs.empty());
  auto v = protocol::zkaudit_i_verify(report, {&f.t()}, audits::resolve, f.backend);
  EXPECT_TRUE(v.accepted) << v.detail;
  std::string text = report.serialize();
  EXPECT_EQ(protocol::AuditReport::parse(text).serialize(), text);
  EXPECT_TRUE(protocol::zkaudit_i_verify_text(text, {&f.t()}, audits::resolve, f.backend).accepted);
}

TEST(Audit, TamperedWeightsAreRefused) {
  const auto& f = shared();
  audits::WeightsHashAudit fn;
  nn::Weights w = f.result.final_weights;
  w.tensors[0][0] += 1;
  protocol::TrainedArm arm{&f.t(), &w, f.result.final_salt};
  try {
    protocol::zkaudit_i_prove(fn, {arm}, f.backend);
    FAIL() << "tampered weights were accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kWeightCommitmentMismatch);
  }
}

TEST(Audit, VerifierRejections) {
  const auto& f = shared();
  audits::WeightsHashAudit fn;
  protocol::TrainedArm arm{&f.t(), &f.result.final_weights, f.result.final_salt};
  auto report = protocol::zkaudit_i_prove(fn, {arm}, f.backend);
  auto reason = [&](const protocol::AuditReport& r, const TrainingTranscript& t) {
    return protocol::zkaudit_i_verify(r, {&t}, audits::resolve, f.backend).reason;
  };
  Fixture other("other");
  EXPECT_EQ(reason(report, other.t()), RejectReason::kTranscriptMismatch);
  auto r = report;
  flip(r.training[0].final_commitment);
  EXPECT_EQ(reason(r, f.t()), RejectReason::kWeightCommitmentMismatch);
  r = report;
  r.kind = "made-up";
  EXPECT_EQ(reason(r, f.t()), RejectReason::kUnknownAudit);
  r = report;
  r.proofs.push_back(protocol::StepProof{});
  EXPECT_EQ(reason(r, f.t()), RejectReason::kAuditProofCount);
  EXPECT_EQ(protocol::zkaudit_i_verify(report, {}, audits::resolve, f.backend).reason,
            RejectReason::kTranscriptMismatch);
}

TEST(Audit, MutatedOutputFailsProofs) {
  const auto& f = shared();
  audits::DemographicAudit fn(2, {0, 1, 1, 0, 1, 1});
  protocol::TrainedArm arm{&f.t(), &f.result.final_weights, f.result.final_salt};
  auto report = protocol::zkaudit_i_prove(fn, {arm}, f.backend);
  ASSERT_FALSE(report.proofs.empty());
  EXPECT_TRUE(protocol::zkaudit_i_verify(report, {&f.t()}, audits::resolve, f.backend).accepted);
  auto r = report;
  r.output["counts"][0] = 3;
  EXPECT_EQ(protocol::zkaudit_i_verify(r, {&f.t()}, audits::resolve, f.backend).reason,
            RejectReason::kStepProofMismatch);
}

TEST(SecurityBits, UnionBoundArithmetic) {
  EXPECT_DOUBLE_EQ(protocol::security_bits(128, 16, 4), 123.0);
  EXPECT_DOUBLE_EQ(protocol::security_bits(128, 1, 0), 128.0);
  double loss = 128 - protocol::security_bits(128, 16, 5'000'000);
  EXPECT_GT(loss, 22);
  EXPECT_LT(loss, 25);
  EXPECT_THROW(protocol::security_bits(128, 0, 0), Error);
  EXPECT_EQ(protocol::reject_name(RejectReason::kChain), "chain");
}
