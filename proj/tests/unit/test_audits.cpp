#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "zkaudit/audits.hpp"
#include "zkaudit/error.hpp"
#include "zkaudit/nn/dataset.hpp"

using namespace zkaudit;
using protocol::RejectReason;

namespace {

std::vector<std::uint8_t> seed(std::string_view s) { return {s.begin(), s.end()}; }

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no zkaudit::Error thrown";
  return Errc::kValidation;
}

struct Trained {
  std::vector<nn::Example> data;
  nn::ModelGraph model = nn::ModelGraph::recommender(8, 8, 2, 4);
  nn::TrainConfig config;
  protocol::MockBackend backend;
  protocol::ProveResult result;

  Trained() {
    config.learning_rate = 0.05;
    config.batch_size = 6;
    config.epochs = 2;
    data = nn::rating_examples(nn::synthetic_ratings(8, 8, 18, 4), config.spec);
    result = protocol::zkaudit_t_prove(data, model, config, seed("audits"), backend);
  }
  protocol::TrainedArm arm() const { return {&result.transcript, &result.final_weights, result.final_salt}; }
  bool verifies(const protocol::AuditReport& r) const {
    auto v = protocol::zkaudit_i_verify(r, {&result.transcript}, audits::resolve, backend);
    if (!v.accepted) ADD_FAILURE() << v.detail;
    return v.accepted;
  }
};

const Trained& trained() {
  static const Trained t;
  return t;
}

}  // namespace

TEST(Hoeffding, QuotedSampleCounts) {
  EXPECT_EQ(audits::hoeffding_samples(0.05, 0.1), 600u);
  EXPECT_EQ(audits::hoeffding_samples(0.01, 0.1), 14979u);
}

TEST(Hoeffding, SmallestCountMeetingTheBound) {
  // n is minimal with 2 exp(-2 n eps^2) <= delta.
  for (double eps : {0.02, 0.05, 0.1, 0.2, 0.3}) {
    for (double delta : {0.01, 0.05, 0.1, 0.3}) {
      auto n = static_cast<double>(audits::hoeffding_samples(eps, delta));
      EXPECT_LE(2 * std::exp(-2 * n * eps * eps), delta * (1 + 1e-12));
      EXPECT_GT(2 * std::exp(-2 * (n - 1) * eps * eps), delta);
    }
  }
}

TEST(Hoeffding, MonotoneAndValidated) {
  EXPECT_GT(audits::hoeffding_samples(0.04, 0.1), audits::hoeffding_samples(0.05, 0.1));
  EXPECT_GT(audits::hoeffding_samples(0.05, 0.05), audits::hoeffding_samples(0.05, 0.1));
  EXPECT_EQ(code_of([] { audits::hoeffding_samples(0, 0.1); }), Errc::kInvalidArgument);
  EXPECT_EQ(code_of([] { audits::hoeffding_samples(0.1, 1); }), Errc::kInvalidArgument);
}

TEST(Quantile, CountsTiesAsBelow) {
  std::vector<std::int64_t> scores{10, 20, 30, 40};
  std::vector<std::size_t> pos{0, 1, 2, 3, 1};
  auto e = audits::estimate_quantile(scores, 20, pos, 0.05, 0.1);
  EXPECT_EQ(e.below, 3u);
  EXPECT_EQ(e.samples, 5u);
  EXPECT_DOUBLE_EQ(e.quantile, 0.6);
}

TEST(Quantile, SamplePositionsInRange) {
  commit::RandomStream rs(commit::hash(commit::Tag::kNode, seed("q")));
  auto pos = audits::sample_positions(rs, 13, 1000);
  ASSERT_EQ(pos.size(), 1000u);
  std::vector<int> hist(13, 0);
  for (auto p : pos) {
    ASSERT_LT(p, 13u);
    ++hist[p];
  }
  for (int h : hist) EXPECT_GT(h, 40);
}

TEST(Quantile, CoverageOverManyStreams) {
  std::vector<std::int64_t> scores(400);
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = static_cast<std::int64_t>(i);
  int covered = 0, trials = 300;
  for (int t = 0; t < trials; ++t) {
    commit::RandomStream rs(commit::hash(commit::Tag::kNode, seed("cov" + std::to_string(t))));
    auto pos = audits::sample_positions(rs, scores.size(), 600);
    // True quantile: 100 of 400 score at most 99.
    auto e = audits::estimate_quantile(scores, 99, pos, 0.05, 0.1);
    if (std::abs(e.quantile - 0.25) <= 0.05) ++covered;
  }
  EXPECT_GE(covered, static_cast<int>(0.9 * trials));
}

TEST(Censorship, ExhaustiveTopItemHasQuantileOne) {
  const auto& t = trained();
  std::size_t user = 1, best = 0;
  std::int64_t best_score = INT64_MIN;
  for (std::size_t item = 0; item < 8; ++item) {
    auto s = audits::score(t.model, t.result.final_weights, user, item);
    if (s > best_score) best_score = s, best = item;
  }
  audits::CensorshipAudit::Params p;
  p.user = user;
  p.item = best;
  p.exhaustive = true;
  audits::CensorshipAudit fn(p);
  auto report = protocol::zkaudit_i_prove(fn, {t.arm()}, t.backend);
  auto est = audits::censorship_estimate(report);
  EXPECT_DOUBLE_EQ(est.quantile, 1.0);
  EXPECT_EQ(est.samples, 8u);
  EXPECT_EQ(report.output["item_score_raw"].get<std::int64_t>(), best_score);
  EXPECT_TRUE(t.verifies(report));
}

TEST(Censorship, SampledAuditMatchesPlainEstimate) {
  const auto& t = trained();
  audits::CensorshipAudit::Params p;
  p.user = 2;
  p.item = 5;
  audits::CensorshipAudit fn(p);
  EXPECT_EQ(fn.sample_count(), 600u);
  auto report = protocol::zkaudit_i_prove(fn, {t.arm()}, t.backend);
  auto est = audits::censorship_estimate(report);
  EXPECT_EQ(est.samples, 600u);
  std::vector<std::int64_t> scores;
  for (std::size_t item = 0; item < 8; ++item) scores.push_back(audits::score(t.model, t.result.final_weights, 2, item));
  auto items = fn.sampled_items(t.result.transcript);
  std::size_t below = 0;
  for (auto i : items) below += scores[i] <= scores[5];
  EXPECT_EQ(est.below, below);
  EXPECT_TRUE(t.verifies(report));

  auto tampered = report;
  tampered.output["below"] = below + 1;
  EXPECT_EQ(protocol::zkaudit_i_verify(tampered, {&t.result.transcript}, audits::resolve, t.backend).reason,
            RejectReason::kStepProofMismatch);
  tampered = report;
  tampered.params["samples"] = 601;
  EXPECT_FALSE(protocol::zkaudit_i_verify(tampered, {&t.result.transcript}, audits::resolve, t.backend).accepted);
}

TEST(Censorship, InsufficientSamplesAndPopulation) {
  const auto& t = trained();
  audits::CensorshipAudit::Params p;
  p.samples = 100;
  EXPECT_EQ(code_of([&] {
              audits::CensorshipAudit fn(p);
              protocol::zkaudit_i_prove(fn, {t.arm()}, t.backend);
            }),
            Errc::kInsufficientSamples);
  p.samples = 0;
  p.population = {1, 3, 5};
  p.item = 3;
  audits::CensorshipAudit fn(p);
  for (auto i : fn.sampled_items(t.result.transcript)) EXPECT_TRUE(i == 1 || i == 3 || i == 5);
  auto back = audits::CensorshipAudit::from_params(fn.params());
  EXPECT_EQ(back->params().dump(), fn.params().dump());
}

TEST(Cosine, HintBracketsTheInverseNorm) {
  std::mt19937_64 rng(2);
  const std::int64_t sf = 1 << 10;
  for (int i = 0; i < 2000; ++i) {
    std::int64_t norm2 = 1 + static_cast<std::int64_t>(rng() % (std::int64_t{1} << 30));
    std::int64_t w = audits::inverse_norm_hint(norm2, sf);
    i128 target = static_cast<i128>(4) * sf * sf * sf * sf;
    ASSERT_LE(static_cast<i128>(2 * w - 1) * (2 * w - 1) * norm2, target);
    ASSERT_GT(static_cast<i128>(2 * w + 1) * (2 * w + 1) * norm2, target);
  }
  EXPECT_EQ(code_of([] { audits::inverse_norm_hint(0, 8); }), Errc::kZeroNorm);
}

TEST(Cosine, ExactCasesAndErrors) {
  fxp::FxpSpec spec;
  spec.scale_factor = 1 << 10;
  std::vector<std::int64_t> x{300, -200, 100};
  // Norms go through fixed-point square roots, so parallel vectors land within 4 ulps.
  EXPECT_NEAR(audits::cosine_raw(x, x, spec), spec.scale_factor, 4);
  std::vector<std::int64_t> e1{1024, 0, 0}, e2{0, 1024, 0};
  EXPECT_EQ(audits::cosine_raw(e1, e2, spec), 0);
  std::vector<std::int64_t> neg{-300, 200, -100};
  EXPECT_NEAR(audits::cosine_raw(x, neg, spec), -spec.scale_factor, 4);
  EXPECT_EQ(audits::cosine_raw(x, neg, spec), -audits::cosine_raw(x, x, spec));
  std::vector<std::int64_t> zero{0, 0, 0}, short_v{1, 2};
  EXPECT_EQ(code_of([&] { audits::cosine_raw(x, zero, spec); }), Errc::kZeroNorm);
  EXPECT_EQ(code_of([&] { audits::cosine_raw(x, short_v, spec); }), Errc::kDimensionMismatch);
}

TEST(Cosine, WithinFourUlpsOfTheRealValue) {
  fxp::FxpSpec spec;
  spec.scale_factor = 1 << 10;
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::int64_t> d(-3000, 3000);
  for (int t = 0; t < 3000; ++t) {
    std::vector<std::int64_t> x(6), c(6);
    for (auto& v : x) v = d(rng);
    for (auto& v : c) v = d(rng);
    double dot = 0, nx = 0, nc = 0;
    for (int i = 0; i < 6; ++i) {
      dot += double(x[i]) * c[i];
      nx += double(x[i]) * x[i];
      nc += double(c[i]) * c[i];
    }
    if (nx == 0 || nc == 0) continue;
    double real = dot / std::sqrt(nx * nc);
    double got = static_cast<double>(audits::cosine_raw(x, c, spec)) / spec.scale_factor;
    ASSERT_LE(std::abs(got - real), 4.0 / spec.scale_factor);
  }
}

TEST(Copyright, FlagsTheCopiedItemAndVerifies) {
  const auto& t = trained();
  const auto sf = t.config.spec.scale_factor;
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::int64_t> d(-sf, sf);
  std::vector<std::vector<std::int64_t>> features(8, std::vector<std::int64_t>(4));
  for (auto& f : features) {
    for (auto& v : f) v = d(rng);
  }
  auto claimant = features[6];
  audits::CopyrightAudit fn(claimant, 0.99, features);
  auto report = protocol::zkaudit_i_prove(fn, {t.arm()}, t.backend);
  const auto& out = report.output;
  EXPECT_EQ(out["similarity_raw"][6].get<std::int64_t>(), sf);
  EXPECT_TRUE(out["flagged"][6].get<bool>());
  EXPECT_EQ(out["verdict"], "flag");
  std::int64_t tau_raw = out["tau_raw"].get<std::int64_t>();
  EXPECT_EQ(tau_raw, fxp::quantize(0.99, t.config.spec).raw);
  for (std::size_t i = 0; i < features.size(); ++i) {
    std::int64_t cos = audits::cosine_raw(features[i], claimant, t.config.spec);
    EXPECT_EQ(out["similarity_raw"][i].get<std::int64_t>(), cos);
    EXPECT_EQ(out["flagged"][i].get<bool>(), tau_raw <= cos);
  }
  EXPECT_TRUE(t.verifies(report));

  std::ostringstream csv;
  audits::write_copyright_csv(csv, report);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "item,similarity,similarity_raw,flagged");

  auto tampered = report;
  tampered.output["flagged"][6] = false;
  EXPECT_FALSE(protocol::zkaudit_i_verify(tampered, {&t.result.transcript}, audits::resolve, t.backend).accepted);
}

TEST(Copyright, ThresholdBoundaryIsInclusive) {
  const auto& t = trained();
  const auto& spec = t.config.spec;
  std::vector<std::vector<std::int64_t>> features{{spec.scale_factor, 0}, {spec.scale_factor, spec.scale_factor}};
  std::vector<std::int64_t> claimant{spec.scale_factor, 0};
  std::int64_t cos1 = audits::cosine_raw(features[1], claimant, spec);
  // tau exactly at the second item's fixed-point similarity flags it.
  double tau = static_cast<double>(cos1) / spec.scale_factor;
  audits::CopyrightAudit at(claimant, tau, features);
  auto report = protocol::zkaudit_i_prove(at, {t.arm()}, t.backend);
  EXPECT_TRUE(report.output["flagged"][1].get<bool>());
  audits::CopyrightAudit above(claimant, tau + 1.0 / spec.scale_factor, features);
  report = protocol::zkaudit_i_prove(above, {t.arm()}, t.backend);
  EXPECT_FALSE(report.output["flagged"][1].get<bool>());
  EXPECT_TRUE(report.output["flagged"][0].get<bool>());
}

TEST(Demographic, CountsAndProportions) {
  const auto& t = trained();
  audits::DemographicAudit fn(3, {0, 1, 2, 2, 1, 2, 2, 0});
  auto report = protocol::zkaudit_i_prove(fn, {t.arm()}, t.backend);
  EXPECT_EQ(report.output["counts"], protocol::Json::parse("[2, 2, 4]"));
  EXPECT_EQ(report.output["proportions_raw"][2].get<std::int64_t>(), t.config.spec.scale_factor / 2);
  EXPECT_DOUBLE_EQ(report.output["proportions"][0].get<double>(), 0.25);
  EXPECT_TRUE(t.verifies(report));
  EXPECT_EQ(code_of([] { audits::DemographicAudit(2, {0, 2}); }), Errc::kLabelOutOfRange);
}

TEST(Counterfactual, RemovalHelper) {
  std::vector<nn::Example> data;
  for (std::size_t i = 0; i < 10; ++i) data.push_back(nn::Example{{i, i % 3}, {}, {std::int64_t(i)}, 0});
  // Items equal to 1 sit at positions 1, 4, 7.
  auto out = audits::remove_item_examples(data, 1, 0.5);
  EXPECT_EQ(out.size(), 8u);
  EXPECT_EQ(out[1].ids[0], 2u);
  EXPECT_EQ(out[5].ids[0], 7u);
  EXPECT_EQ(audits::remove_item_examples(data, 1, 0.0).size(), 10u);
  EXPECT_EQ(audits::remove_item_examples(data, 1, 1.0).size(), 7u);
}

TEST(Counterfactual, IdenticalArmsGiveZeroDelta) {
  const auto& t = trained();
  auto r = audits::counterfactual_audit(t.data, t.model, t.config, t.config, 3, 0.0, seed("cf"), t.backend);
  EXPECT_EQ(r.report.output["delta_raw"].get<std::int64_t>(), 0);
  EXPECT_EQ(r.a.transcript.serialize(), r.b.transcript.serialize());
  auto v = protocol::zkaudit_i_verify(r.report, {&r.a.transcript, &r.b.transcript}, audits::resolve, t.backend);
  EXPECT_TRUE(v.accepted) << v.detail;
}

TEST(Counterfactual, RemovingAnItemMovesTheMetric) {
  const auto& t = trained();
  std::size_t item = t.data[0].ids[1];
  auto r = audits::counterfactual_audit(t.data, t.model, t.config, t.config, item, 1.0, seed("cf"), t.backend);
  const auto& out = r.report.output;
  std::int64_t a = out["a_raw"].get<std::int64_t>(), b = out["b_raw"].get<std::int64_t>();
  EXPECT_NE(a, b);
  EXPECT_EQ(out["delta_raw"].get<std::int64_t>(), b - a);
  EXPECT_EQ(a, audits::item_mean_score(t.model, r.a.final_weights, item));
  EXPECT_EQ(b, audits::item_mean_score(t.model, r.b.final_weights, item));
  EXPECT_LT(r.b.transcript.commitments.size(), r.a.transcript.commitments.size());
  EXPECT_TRUE(protocol::zkaudit_i_verify(r.report, {&r.a.transcript, &r.b.transcript}, audits::resolve, t.backend)
                  .accepted);
  // Swapped arms do not verify.
  EXPECT_FALSE(protocol::zkaudit_i_verify(r.report, {&r.b.transcript, &r.a.transcript}, audits::resolve, t.backend)
                   .accepted);
}

TEST(Resolve, KnownKindsRoundTripParams) {
  EXPECT_EQ(audits::resolve("nope", protocol::Json::object()), nullptr);
  audits::DemographicAudit d(2, {0, 1, 1});
  EXPECT_EQ(audits::resolve("demographic", d.params())->params().dump(), d.params().dump());
  audits::CounterfactualAudit c(4, 0.25);
  EXPECT_EQ(audits::resolve("counterfactual", c.params())->arms(), 2u);
  EXPECT_NE(audits::resolve("weights-hash", protocol::Json::object()), nullptr);
}
