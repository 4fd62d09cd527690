// Acceptance suite: one PASS/FAIL line per criterion. The process fails if a
// criterion fails that was not listed with --expect-fail, or if a listed one
// passes.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zkaudit/air/builder.hpp"
#include "zkaudit/air/encode.hpp"
#include "zkaudit/audits.hpp"
#include "zkaudit/commit.hpp"
#include "zkaudit/nn/dataset.hpp"
#include "zkaudit/nn/float_trainer.hpp"
#include "zkaudit/nn/train.hpp"
#include "zkaudit/protocol.hpp"

using namespace zkaudit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::uint8_t> seed_bytes(std::string_view s) { return {s.begin(), s.end()}; }

// --- 1 ---

Outcome rounded_division_exact() {
  auto t0 = std::chrono::steady_clock::now();
  fxp::FxpSpec spec;
  std::uint64_t total = 0, agree = 0, violations = 0;
  for (std::int64_t c = 1; c < 256; ++c) {
    air::CircuitBuilder b(spec);
    std::vector<air::Cell> q;
    q.reserve(1 << 16);
    for (std::int64_t a = 0; a < (1 << 16); ++a) q.push_back(b.round_div(b.fresh(a), b.fresh(c)).b);
    air::Circuit circuit = std::move(b).build();
    violations += circuit.check().size();
    for (std::int64_t a = 0; a < (1 << 16); ++a) {
      // A non-tie quotient is at least 1/(2c) from a tie, far above double
      // rounding error, and ties a/c = k + 1/2 are exact in double.
      auto oracle = static_cast<std::int64_t>(std::floor(static_cast<double>(a) / static_cast<double>(c) + 0.5));
      auto got = circuit.grid.field().to_i64(circuit.grid.value(q[a]));
      ++total;
      if (got && *got == oracle) ++agree;
    }
  }
  double secs = seconds_since(t0);
  return {agree == total && violations == 0 && secs < 60,
          fmt("%llu/%llu agree, %llu violations, %.1f s", (unsigned long long)agree, (unsigned long long)total,
              (unsigned long long)violations, secs)};
}

// --- 2 ---

Outcome division_soundness() {
  // N = 10 keeps every candidate quotient b' < 2^N enumerable; the gate then
  // forces the remainder, so enumerating b' covers every remainder.
  fxp::FxpSpec spec;
  spec.range_bits = 10;
  spec.scale_factor = 32;
  const std::int64_t nb = spec.range_limit();
  air::CircuitBuilder b(spec);
  std::vector<std::uint32_t> rows;
  for (std::int64_t i = 0; i < nb; ++i) rows.push_back(b.round_div(b.fresh(0), b.fresh(1)).b.row);
  air::Circuit circuit = std::move(b).build();
  const air::PrimeField& f = circuit.grid.field();

  std::uint64_t counterexamples = 0, missing = 0, cases = 0;
  for (std::int64_t c = 1; c < 32; ++c) {
    for (std::int64_t a = 0; a < 1024; ++a) {
      air::Fe two_a_c = f.from_i64(2 * a + c);
      for (std::int64_t bp = 0; bp < nb; ++bp) {
        std::uint32_t row = rows[bp];
        air::Fe r = f.sub(two_a_c, f.from_i64(2 * c * bp));
        circuit.grid.assign({row, 0}, f.from_i64(a));
        circuit.grid.assign({row, 1}, f.from_i64(c));
        circuit.grid.assign({row, 2}, f.from_i64(bp));
        circuit.grid.assign({row, 3}, r);
        circuit.grid.assign({row, 4}, f.sub(f.from_i64(2 * c - 1), r));
        circuit.grid.assign({row, 5}, f.from_i64(c - 1));
      }
      std::set<std::size_t> bad;
      for (const auto& v : circuit.check().violations) {
        if (v.row) bad.insert(*v.row);
      }
      std::int64_t honest = static_cast<std::int64_t>(std::floor((a + 0.5 * c) / c));
      for (std::int64_t bp = 0; bp < nb; ++bp) {
        bool satisfied = !bad.count(rows[bp]);
        if (satisfied && bp != honest) ++counterexamples;
        if (!satisfied && bp == honest) ++missing;
      }
      ++cases;
    }
  }
  return {counterexamples == 0 && missing == 0,
          fmt("%llu (a, c) pairs x %lld quotients: %llu counterexamples, honest rejected %llu",
              (unsigned long long)cases, (long long)nb, (unsigned long long)counterexamples,
              (unsigned long long)missing)};
}

// --- 3 ---

Outcome softmax_toy() {
  fxp::FxpSpec spec;
  spec.scale_factor = 1000;
  air::CircuitBuilder b(spec);
  std::int64_t x0 = fxp::quantize(std::log(0.5), spec).raw;
  std::vector<air::Operand> xs{b.witness(x0), b.witness(0)};
  auto cells = b.softmax(xs);
  auto val = [&](air::Cell c) { return b.signed_value(c); };
  std::vector<std::int64_t> e{val(cells.e[0]), val(cells.e[1])};
  std::int64_t s = val(cells.s);
  std::vector<std::int64_t> y{val(cells.y[0]), val(cells.y[1])};
  air::Circuit circuit = std::move(b).build();
  auto report = circuit.check();
  std::vector<std::int64_t> y_oracle;
  for (auto ei : e) y_oracle.push_back(std::lround(1000.0 * static_cast<double>(ei) / static_cast<double>(s)));
  bool ok = e == std::vector<std::int64_t>{500, 1000} && s == 1500 && y == std::vector<std::int64_t>{333, 667} &&
            y == y_oracle && report.empty();
  return {ok, fmt("e = [%lld, %lld], s = %lld, y = [%lld, %lld], %zu violations", (long long)e[0], (long long)e[1],
                  (long long)s, (long long)y[0], (long long)y[1], report.size())};
}

// --- 4 ---

Outcome hoeffding_counts() {
  auto a = audits::hoeffding_samples(0.05, 0.1);
  auto b = audits::hoeffding_samples(0.01, 0.1);
  return {a == 600 && b == 14979, fmt("(0.05, 0.1) -> %llu, (0.01, 0.1) -> %llu", (unsigned long long)a,
                                      (unsigned long long)b)};
}

// --- 5 and 6 ---

struct ScaleSweep {
  double float_mse = 0;
  double mse8 = 0;
  double mse13 = 0;
  double mse15 = 0;
  int draws = 0;
  double secs = 0;
};

// Mean test MSE over independent draws of the desk task: 200 users and items,
// 1,000 synthetic ratings, 80/20 split, embedding dim 8, 5 epochs.
ScaleSweep scale_sweep() {
  auto t0 = std::chrono::steady_clock::now();
  ScaleSweep out;
  out.draws = 16;
  for (int s = 1; s <= out.draws; ++s) {
    auto ratings = nn::synthetic_ratings(200, 200, 1000, s);
    auto split = nn::split_indices(ratings.size(), 0.2, 100 + s);
    auto train = nn::select(ratings, split.train);
    auto test = nn::select(ratings, split.test);
    auto model = nn::ModelGraph::recommender(200, 200, 8, 16);
    auto orders = commit::derive_traversal(commit::hash(commit::Tag::kExample, std::vector<std::uint8_t>{std::uint8_t(s)}),
                                           train.size(), 5);
    nn::TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.batch_size = 8;
    cfg.epochs = 5;
    auto fw = nn::train_float(model, nn::init_real(model, s), nn::rating_float_examples(train), orders, cfg);
    out.float_mse += nn::mse_float(model, fw, nn::rating_float_examples(test));
    for (int lg : {8, 13, 15}) {
      fxp::FxpSpec spec;
      spec.scale_factor = std::int64_t{1} << lg;
      cfg.spec = spec;
      auto w = nn::train_fxp(model, nn::init_weights(model, spec, s), nn::rating_examples(train, spec), orders, cfg);
      double m = nn::mse_fxp(model, w, nn::rating_examples(test, spec));
      (lg == 8 ? out.mse8 : lg == 13 ? out.mse13 : out.mse15) += m;
    }
  }
  out.float_mse /= out.draws;
  out.mse8 /= out.draws;
  out.mse13 /= out.draws;
  out.mse15 /= out.draws;
  out.secs = seconds_since(t0);
  return out;
}

Outcome parity(const ScaleSweep& s) {
  double rel = std::abs(s.mse13 / s.float_mse - 1);
  return {rel <= 0.05 && s.secs < 300, fmt("mean over %d draws: SF 2^13 %.4f vs float %.4f (%.2f%%), %.1f s", s.draws,
                                           s.mse13, s.float_mse, 100 * rel, s.secs)};
}

Outcome degradation(const ScaleSweep& s) {
  double low = s.mse8 / s.mse13 - 1;
  double high = std::abs(s.mse15 / s.mse13 - 1);
  return {low >= 0.02 && high <= 0.02,
          fmt("mean over %d draws: 2^8 %.4f (%+.2f%%, need >= +2%%), 2^15 %.4f (%.2f%%, need <= 2%%) vs 2^13 %.4f",
              s.draws, s.mse8, 100 * low, s.mse15, 100 * high, s.mse13)};
}

// --- 7 ---

std::vector<air::Cell> constrained_cells(const air::Circuit& c) {
  std::set<air::Cell> cells;
  std::vector<std::pair<std::uint32_t, std::set<std::uint32_t>>> by_selector;
  auto add_cols = [&](std::uint32_t sel, std::set<std::uint32_t> cols) { by_selector.emplace_back(sel, std::move(cols)); };
  for (const auto& k : c.constraints) {
    if (const auto* e = std::get_if<air::EqualityConstraint>(&k)) {
      cells.insert(e->a);
      cells.insert(e->b);
    } else if (const auto* g = std::get_if<air::GateConstraint>(&k)) {
      std::set<std::uint32_t> cols;
      for (const auto& m : g->poly.terms()) cols.insert(m.columns.begin(), m.columns.end());
      add_cols(g->selector, std::move(cols));
    } else if (const auto* l = std::get_if<air::LookupConstraint>(&k)) {
      add_cols(l->selector, {l->columns.begin(), l->columns.end()});
    }
  }
  for (const auto& [sel, cols] : by_selector) {
    for (std::uint32_t row = 0; row < c.grid.rows(); ++row) {
      if (!c.grid.selector(sel, row)) continue;
      for (auto col : cols) cells.insert({row, col});
    }
  }
  return {cells.begin(), cells.end()};
}

Outcome witness_completeness() {
  auto t0 = std::chrono::steady_clock::now();
  auto ratings = nn::synthetic_ratings(200, 200, 1000, 1);
  auto split = nn::split_indices(ratings.size(), 0.2, 101);
  fxp::FxpSpec spec;
  auto data = nn::rating_examples(nn::select(ratings, split.train), spec);
  auto model = nn::ModelGraph::recommender(200, 200, 8, 16);
  nn::TrainConfig cfg;
  cfg.spec = spec;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 8;
  cfg.epochs = 5;
  auto committed = protocol::commit_dataset(data, seed_bytes("acceptance-7"));
  std::vector<nn::Example> sorted;
  for (auto i : committed.order) sorted.push_back(data[i]);
  auto orders = commit::derive_traversal(committed.root, sorted.size(), cfg.epochs);

  std::size_t steps = 0, clean = 0, post_match = 0;
  std::vector<air::Circuit> kept;
  nn::StepHook hook = [&](std::size_t step, std::span<const std::size_t> idx, const nn::Weights& pre,
                          const nn::Weights& post) {
    std::vector<nn::Example> batch;
    for (auto i : idx) batch.push_back(sorted[i]);
    auto wit = nn::emit_step_witness(model, pre, batch, cfg);
    ++steps;
    if (wit.circuit.check().empty()) ++clean;
    if (wit.post == post) ++post_match;
    if (step % 125 == 0) kept.push_back(std::move(wit.circuit));
  };
  nn::train_fxp(model, nn::init_weights(model, spec, 1), sorted, orders, cfg, hook);

  std::mt19937_64 rng(7);
  std::size_t caught = 0, trials = 100;
  for (std::size_t t = 0; t < trials; ++t) {
    air::Circuit& c = kept[t % kept.size()];
    auto cells = constrained_cells(c);
    air::Cell cell = cells[rng() % cells.size()];
    air::Fe old = c.grid.value(cell);
    const auto& f = c.grid.field();
    air::Fe delta = f.from_u64(1 + rng() % 1000);
    c.grid.assign(cell, (rng() & 1) ? f.add(old, delta) : f.sub(old, delta));
    if (!c.check().empty()) ++caught;
    c.grid.assign(cell, old);
  }
  bool ok = steps > 0 && clean == steps && post_match == steps && caught == trials;
  return {ok, fmt("%zu/%zu step grids satisfied (post weights match %zu), %zu/%zu perturbations caught, %.1f s", clean,
                  steps, post_match, caught, trials, seconds_since(t0))};
}

// --- 8 ---

struct SmallRun {
  std::vector<nn::Example> data;
  nn::ModelGraph model;
  nn::TrainConfig config;
};

SmallRun small_run() {
  SmallRun r;
  r.config.spec = fxp::FxpSpec{};
  r.data = nn::rating_examples(nn::synthetic_ratings(20, 20, 24, 5), r.config.spec);
  r.model = nn::ModelGraph::recommender(20, 20, 4, 8);
  r.config.learning_rate = 0.05;
  r.config.batch_size = 4;
  r.config.epochs = 2;
  return r;
}

// One mutation per leaf: hex digits and other characters change, numbers
// move, booleans flip. The result stays canonical text so parsing succeeds.
void leaf_mutations(const protocol::Json& j, const std::function<void(const protocol::Json::json_pointer&)>& visit,
                    const protocol::Json::json_pointer& at = protocol::Json::json_pointer()) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) leaf_mutations(v, visit, at / k);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) leaf_mutations(j[i], visit, at / i);
  } else {
    visit(at);
  }
}

protocol::Json mutate_leaf(protocol::Json v, std::mt19937_64& rng) {
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.empty()) return "x";
    std::size_t i = rng() % s.size();
    char c = s[i];
    s[i] = std::isxdigit(static_cast<unsigned char>(c)) ? (c == '0' ? '1' : '0') : (c == 'a' ? 'b' : 'a');
    return s;
  }
  if (v.is_boolean()) return !v.get<bool>();
  if (v.is_number_float()) return v.get<double>() * 2 + 0.5;
  if (v.is_number_unsigned()) return v.get<std::uint64_t>() + 1;
  if (v.is_number_integer()) return v.get<std::int64_t>() + 1;
  return 0;
}

Outcome transcript_suite() {
  auto r = small_run();
  protocol::MockBackend backend;
  auto proved = protocol::zkaudit_t_prove(r.data, r.model, r.config, seed_bytes("acceptance-8"), backend);
  std::string text = proved.transcript.serialize();
  bool honest = protocol::zkaudit_t_verify_text(text, backend).accepted;
  bool fixed_point = protocol::TrainingTranscript::parse(text).serialize() == text;

  std::mt19937_64 rng(8);
  auto root = protocol::Json::parse(text);
  std::size_t leaves = 0, leaf_rejects = 0;
  std::vector<std::string> escaped;
  leaf_mutations(root, [&](const protocol::Json::json_pointer& p) {
    auto copy = root;
    copy[p] = mutate_leaf(copy[p], rng);
    std::string mutated = copy.dump(2) + "\n";
    ++leaves;
    if (!protocol::zkaudit_t_verify_text(mutated, backend).accepted) {
      ++leaf_rejects;
    } else {
      escaped.push_back(p.to_string());
    }
  });

  std::size_t flips = 200, flip_rejects = 0;
  for (std::size_t i = 0; i < flips; ++i) {
    std::string m = text;
    std::size_t pos = rng() % m.size();
    m[pos] = static_cast<char>(m[pos] ^ (1 << (rng() % 7)));
    if (!protocol::zkaudit_t_verify_text(m, backend).accepted) ++flip_rejects;
  }
  std::string detail = fmt("honest %s, canonical fixed point %s, leaf mutations %zu/%zu rejected, byte flips %zu/%zu "
                           "rejected",
                           honest ? "accepted" : "REJECTED", fixed_point ? "yes" : "no", leaf_rejects, leaves,
                           flip_rejects, flips);
  if (!escaped.empty()) detail += ", accepted: " + escaped.front();
  return {honest && fixed_point && leaves >= 50 && leaf_rejects == leaves && flip_rejects == flips, detail};
}

// --- 9 ---

Outcome determinism() {
  auto r = small_run();
  protocol::MockBackend backend;
  auto a = protocol::zkaudit_t_prove(r.data, r.model, r.config, seed_bytes("acceptance-9"), backend);
  auto b = protocol::zkaudit_t_prove(r.data, r.model, r.config, seed_bytes("acceptance-9"), backend);
  bool same = a.transcript.serialize() == b.transcript.serialize();

  auto cf = audits::counterfactual_audit(r.data, r.model, r.config, r.config, 3, 0.0, seed_bytes("acceptance-9"),
                                         backend);
  std::int64_t delta = cf.report.output.at("delta_raw").get<std::int64_t>();
  bool arms_same = cf.a.transcript.serialize() == cf.b.transcript.serialize();
  auto verdict = protocol::zkaudit_i_verify(cf.report, {&cf.a.transcript, &cf.b.transcript}, audits::resolve, backend);
  return {same && delta == 0 && arms_same && verdict.accepted,
          fmt("reruns byte-identical %s, identical arms delta_raw = %lld, arm transcripts identical %s, report %s",
              same ? "yes" : "no", (long long)delta, arms_same ? "yes" : "no",
              verdict.accepted ? "verifies" : "rejected")};
}

// --- 10 ---

Outcome security_bits() {
  double small = protocol::security_bits(128, 16, 4);
  double large = protocol::security_bits(128, 16, 5'000'000);
  double loss = 128 - large;
  return {small == 123.0 && loss >= 22 && loss <= 25,
          fmt("(128, 16, 4) = %.4f, T = 5e6 loses %.2f bits", small, loss)};
}

// --- 11 ---

Outcome censorship_coverage() {
  auto t0 = std::chrono::steady_clock::now();
  const double eps = 0.05, delta = 0.1;
  // Population scores 1..1000 with the item at 500: exactly half score at
  // most the item.
  std::vector<std::int64_t> scores(1000);
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = static_cast<std::int64_t>(i) + 1;
  const std::int64_t item = 500;
  const double truth = 0.5;
  std::size_t n = audits::hoeffding_samples(eps, delta);
  int trials = 1000, covered = 0;
  for (int t = 0; t < trials; ++t) {
    std::string label = "coverage-" + std::to_string(t);
    auto root = commit::hash(commit::Tag::kNode, seed_bytes(label));
    commit::RandomStream rs(root, "censorship");
    auto pos = audits::sample_positions(rs, scores.size(), n);
    auto est = audits::estimate_quantile(scores, item, pos, eps, delta);
    if (std::abs(est.quantile - truth) <= eps) ++covered;
  }
  double coverage = static_cast<double>(covered) / trials;
  double secs = seconds_since(t0);
  return {coverage >= 0.87 && secs < 120,
          fmt("%d trials of %zu samples: coverage %.3f, %.1f s", trials, n, coverage, secs)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zkaudit acceptance suite"};
  std::vector<int> expect_fail;
  std::vector<int> only;
  app.add_option("--expect-fail", expect_fail, "Criteria known to fail (documented)");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  std::optional<ScaleSweep> sweep;
  auto get_sweep = [&]() -> const ScaleSweep& {
    if (!sweep) sweep = scale_sweep();
    return *sweep;
  };
  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"rounded-division exactness", rounded_division_exact},
      {"division soundness", division_soundness},
      {"softmax toy case", softmax_toy},
      {"hoeffding counts", hoeffding_counts},
      {"fixed-point/float parity at 2^13", [&] { return parity(get_sweep()); }},
      {"scale-factor degradation trend", [&] { return degradation(get_sweep()); }},
      {"witness completeness and soundness", witness_completeness},
      {"transcript round trip and tamper suite", transcript_suite},
      {"determinism", determinism},
      {"security bits", security_bits},
      {"censorship-audit coverage", censorship_coverage},
  };

  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    bool expected = std::find(expect_fail.begin(), expect_fail.end(), id) != expect_fail.end();
    std::printf("%s %2d %s: %s%s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str(),
                !o.pass && expected ? " [expected failure]" : (o.pass && expected ? " [unexpected pass]" : ""));
    std::fflush(stdout);
    if (o.pass == expected) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
