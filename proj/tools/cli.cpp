#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "CLI11.hpp"
#include "run_config.hpp"
#include "zkaudit/audits.hpp"
#include "zkaudit/commit.hpp"
#include "zkaudit/error.hpp"
#include "zkaudit/nn/dataset.hpp"
#include "zkaudit/protocol.hpp"

namespace zkaudit::cli {
namespace {

namespace fs = std::filesystem;
using protocol::Json;

int exit_code(Errc c) {
  switch (c) {
    case Errc::kIo:
    case Errc::kParse:
      return kExitIo;
    case Errc::kRangeOverflow:
    case Errc::kDivisionByZero:
    case Errc::kCapacityExceeded:
    case Errc::kDomainMiss:
    case Errc::kWidthExceeded:
    case Errc::kUnsatisfiedWitness:
    case Errc::kUnassignedCell:
      return kExitAbort;
    case Errc::kWeightCommitmentMismatch:
      return kExitCommitment;
    default:
      return kExitValidation;
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Temp file plus rename, so readers never see a partial file.
void write_atomic(const fs::path& p, const std::string& content) {
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  fs::path tmp = p;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::kIo, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(Errc::kIo, "short write to " + tmp.string());
  }
  fs::rename(tmp, p, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(Errc::kIo, "cannot move output into place at " + p.string());
  }
}

Json parse_json(const std::string& text, const fs::path& p) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParse, p.string() + " is not valid JSON");
  }
}

std::size_t threads_from_env() {
  const char* v = std::getenv("ZKAUDIT_THREADS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  unsigned long n = std::strtoul(v, &end, 10);
  if (*end != '\0' || n == 0) throw Error(Errc::kValidation, "ZKAUDIT_THREADS must be a positive integer");
  return n;
}

Overrides parse_sets(const std::vector<std::string>& sets) {
  Overrides o;
  for (const auto& s : sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(Errc::kValidation, "--set expects key=value, got '" + s + "'");
    o[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return o;
}

// --- prover state: final weights and salt, kept next to the transcript ---

Json state_json(const protocol::ProveResult& r) {
  Json j;
  j["format"] = "zkaudit-prover-state";
  j["version"] = protocol::kFormatVersion;
  j["transcript"] = r.transcript.digest().hex();
  j["final_salt"] = commit::salt_hex(r.final_salt);
  Json ts = Json::array();
  for (const auto& t : r.final_weights.tensors) {
    Json tj;
    tj["shape"] = t.shape();
    tj["raw"] = std::vector<std::int64_t>(t.raw().begin(), t.raw().end());
    ts.push_back(tj);
  }
  j["weights"] = ts;
  return j;
}

struct ProverState {
  commit::Digest transcript;
  nn::Weights weights;
  commit::Salt salt{};
};

ProverState load_state(const fs::path& p, const fxp::FxpSpec& spec) {
  Json j = parse_json(read_file(p), p);
  try {
    ProverState s;
    s.transcript = commit::Digest::from_hex(j.at("transcript").get<std::string>());
    s.salt = commit::salt_from_hex(j.at("final_salt").get<std::string>());
    s.weights.spec = spec;
    for (const auto& tj : j.at("weights")) {
      s.weights.tensors.emplace_back(tj.at("shape").get<std::vector<std::size_t>>(),
                                     tj.at("raw").get<std::vector<std::int64_t>>(), spec);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParse, p.string() + ": " + e.what());
  }
}

// --- commands ---

struct Common {
  std::string config;
  std::vector<std::string> sets;
};

RunConfig load(const Common& c) { return load_run_config(c.config, parse_sets(c.sets)); }

int cmd_commit(const Common& c) {
  RunConfig rc = load(c);
  auto data = load_data(rc);
  auto dc = protocol::commit_dataset(data.train, rc.salt_seed);
  auto orders = commit::derive_traversal(dc.root, dc.commitments.size(), rc.train.epochs);
  Json j;
  j["format"] = "zkaudit-commitments";
  j["version"] = protocol::kFormatVersion;
  j["hash"] = commit::kHashName;
  j["size"] = dc.commitments.size();
  j["merkle_root"] = dc.root.hex();
  Json cs = Json::array();
  for (const auto& d : dc.commitments) cs.push_back(d.hex());
  j["commitments"] = cs;
  j["traversal"] = Json{{"scheme", protocol::kTraversalScheme}, {"epochs", orders}};
  write_atomic(rc.output("commitments.json"), j.dump(2) + "\n");
  std::cout << "committed " << dc.commitments.size() << " examples\n"
            << "merkle root " << dc.root.hex() << "\n"
            << "wrote " << rc.output("commitments.json").string() << "\n";
  return kExitOk;
}

int cmd_train_prove(const Common& c) {
  RunConfig rc = load(c);
  fs::path cpath = rc.output("commitments.json");
  if (!fs::exists(cpath)) throw Error(Errc::kIo, cpath.string() + " not found; run 'zkaudit commit' first");
  Json cj = parse_json(read_file(cpath), cpath);
  auto data = load_data(rc);
  auto dc = protocol::commit_dataset(data.train, rc.salt_seed);
  std::string posted;
  try {
    posted = cj.at("merkle_root").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::kParse, cpath.string() + " lacks a merkle_root");
  }
  if (posted != dc.root.hex()) {
    std::cerr << "error: dataset no longer matches the posted commitments in " << cpath.string() << "\n";
    return kExitCommitment;
  }
  protocol::MockBackend backend;
  protocol::ProveOptions opts;
  opts.threads = threads_from_env();
  std::size_t last_pct = 0;
  opts.progress = [&](std::size_t done, std::size_t total) {
    std::size_t pct = done * 10 / total;
    if (pct != last_pct || done == total) {
      last_pct = pct;
      std::cout << "  proved " << done << "/" << total << " steps\n" << std::flush;
    }
  };
  auto r = protocol::zkaudit_t_prove(data.train, rc.model, rc.train, rc.salt_seed, backend, opts);
  write_atomic(rc.output("transcript.zka.json"), r.transcript.serialize());
  write_atomic(rc.output("prover-state.json"), state_json(r).dump(2) + "\n");
  std::cout << "steps " << r.transcript.steps.size() << "\n"
            << "final commitment " << r.transcript.final_commitment.hex() << "\n"
            << "wrote " << rc.output("transcript.zka.json").string() << "\n";
  if (!data.test.empty()) {
    std::cout << "test MSE " << nn::mse_fxp(rc.model, r.final_weights, data.test) << "\n";
  }
  return kExitOk;
}

struct TranscriptFile {
  std::string text;
  protocol::TrainingTranscript t;
};

// Reads and verifies a transcript. Unparsable JSON throws kParse; every other
// defect comes back as a rejecting verdict.
protocol::Verdict read_transcript(const fs::path& p, TranscriptFile& out) {
  out.text = read_file(p);
  parse_json(out.text, p);
  protocol::MockBackend backend;
  auto v = protocol::zkaudit_t_verify_text(out.text, backend);
  if (v.accepted) out.t = protocol::TrainingTranscript::parse(out.text);
  return v;
}

void print_reject(const std::string& what, const protocol::Verdict& v) {
  std::cout << "reject " << what << ": " << protocol::reject_name(*v.reason) << ": " << v.detail << "\n";
}

struct VerifyArgs {
  std::string transcript;
  std::string transcript_b;
  std::string report;
};

int cmd_verify(const VerifyArgs& a) {
  TranscriptFile ta;
  TranscriptFile tb;
  if (auto v = read_transcript(a.transcript, ta); !v.accepted) {
    print_reject(a.transcript, v);
    return kExitReject;
  }
  std::cout << "transcript " << a.transcript << ": accept (" << ta.t.steps.size() << " steps)\n";
  std::vector<const protocol::TrainingTranscript*> ts{&ta.t};
  if (!a.transcript_b.empty()) {
    if (auto v = read_transcript(a.transcript_b, tb); !v.accepted) {
      print_reject(a.transcript_b, v);
      return kExitReject;
    }
    std::cout << "transcript " << a.transcript_b << ": accept (" << tb.t.steps.size() << " steps)\n";
    ts.push_back(&tb.t);
  }
  if (!a.report.empty()) {
    std::string text = read_file(a.report);
    parse_json(text, a.report);
    protocol::MockBackend backend;
    auto v = protocol::zkaudit_i_verify_text(text, ts, audits::resolve, backend);
    if (!v.accepted) {
      print_reject(a.report, v);
      return kExitReject;
    }
    std::cout << "report " << a.report << ": accept\n";
  }
  return kExitOk;
}

struct AuditArgs {
  Common common;
  std::string transcript;
  std::string out;
};

// Loads and verifies the training transcript, opens the prover state and
// proves `fn` over it.
int run_single_arm_audit(const AuditArgs& a, const protocol::AuditFunction& fn, protocol::AuditReport& report,
                         RunConfig& rc) {
  rc = load(a.common);
  fs::path tpath = a.transcript.empty() ? rc.output("transcript.zka.json") : fs::path(a.transcript);
  TranscriptFile tf;
  if (auto v = read_transcript(tpath, tf); !v.accepted) {
    print_reject(tpath.string(), v);
    return kExitReject;
  }
  ProverState st = load_state(rc.output("prover-state.json"), tf.t.config.spec);
  if (st.transcript != tf.t.digest()) {
    throw Error(Errc::kWeightCommitmentMismatch, "prover state belongs to a different transcript");
  }
  protocol::MockBackend backend;
  report = protocol::zkaudit_i_prove(fn, {{&tf.t, &st.weights, st.salt}}, backend);
  fs::path out = a.out.empty() ? rc.output(fn.kind() + ".zka.json") : fs::path(a.out);
  write_atomic(out, report.serialize());
  std::cout << "wrote " << out.string() << "\n";
  return kExitOk;
}

struct CensorArgs {
  std::size_t user = 0;
  std::size_t item = 0;
  double epsilon = 0.05;
  double delta = 0.1;
  bool exhaustive = false;
  std::size_t samples = 0;
  std::vector<std::size_t> population;
};

int cmd_censor(const AuditArgs& a, const CensorArgs& c) {
  audits::CensorshipAudit::Params p;
  p.user = c.user;
  p.item = c.item;
  p.epsilon = c.epsilon;
  p.delta = c.delta;
  p.exhaustive = c.exhaustive;
  p.samples = c.samples;
  p.population = c.population;
  audits::CensorshipAudit fn(p);
  protocol::AuditReport report;
  RunConfig rc;
  if (int rcode = run_single_arm_audit(a, fn, report, rc); rcode != kExitOk) return rcode;
  auto q = audits::censorship_estimate(report);
  std::cout << "item " << c.item << " for user " << c.user << ": quantile " << q.quantile << " (" << q.below << " of "
            << q.samples << " samples score at most the item";
  if (!c.exhaustive) std::cout << "; within " << q.epsilon << " with probability " << 1 - q.delta;
  std::cout << ")\n";
  return kExitOk;
}

std::vector<std::vector<std::int64_t>> read_features(const fs::path& p, std::int64_t sf) {
  std::vector<std::vector<std::int64_t>> out;
  auto check_sf = [&](const nn::VectorFile& v) {
    if (v.scale_factor != sf) {
      throw Error(Errc::kValidation, "feature file scale factor " + std::to_string(v.scale_factor) +
                                         " differs from the model's " + std::to_string(sf));
    }
  };
  if (fs::is_directory(p)) {
    for (const auto& v : nn::read_vector_dir(p)) {
      check_sf(v);
      if (v.shape.size() != 1) throw Error(Errc::kDimensionMismatch, "per-item feature files must be 1-D");
      out.push_back(v.data);
    }
    return out;
  }
  auto v = nn::read_vectors(p);
  check_sf(v);
  if (v.shape.size() == 1) return {v.data};
  if (v.shape.size() != 2) throw Error(Errc::kDimensionMismatch, "feature matrix must be 2-D (items x dim)");
  for (std::size_t i = 0; i < v.shape[0]; ++i) {
    out.emplace_back(v.data.begin() + static_cast<std::ptrdiff_t>(i * v.shape[1]),
                     v.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * v.shape[1]));
  }
  return out;
}

struct CopyrightArgs {
  std::string features;
  std::string claimant;
  double tau = 0.9;
  std::string csv;
};

int cmd_copyright(const AuditArgs& a, const CopyrightArgs& c) {
  RunConfig pre = load(a.common);
  const std::int64_t sf = pre.train.spec.scale_factor;
  auto features = read_features(c.features, sf);
  auto claimant = read_features(c.claimant, sf);
  if (fs::is_directory(c.claimant) || claimant.size() != 1) {
    throw Error(Errc::kDimensionMismatch, "claimant must be a single 1 x dim feature file");
  }
  audits::CopyrightAudit fn(claimant[0], c.tau, std::move(features));
  protocol::AuditReport report;
  RunConfig rc;
  if (int rcode = run_single_arm_audit(a, fn, report, rc); rcode != kExitOk) return rcode;
  const auto& flags = report.output.at("flagged");
  std::size_t flagged = 0;
  for (const auto& f : flags) flagged += f.get<bool>();
  std::cout << "verdict " << report.output.at("verdict").get<std::string>() << ": " << flagged << " of " << flags.size()
            << " items at or above similarity " << c.tau << "\n";
  if (!c.csv.empty()) {
    std::ostringstream ss;
    audits::write_copyright_csv(ss, report);
    write_atomic(c.csv, ss.str());
    std::cout << "wrote " << c.csv << "\n";
  }
  return kExitOk;
}

std::vector<std::size_t> read_labels(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::vector<std::size_t> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(line, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != line.size() || line.front() == '-') {
      throw Error(Errc::kValidation, p.string() + ":" + std::to_string(lineno) + ": expected a category index");
    }
    out.push_back(v);
  }
  return out;
}

struct DemographicArgs {
  std::string labels;
  std::size_t categories = 0;
};

int cmd_demographic(const AuditArgs& a, const DemographicArgs& d) {
  audits::DemographicAudit fn(d.categories, read_labels(d.labels));
  protocol::AuditReport report;
  RunConfig rc;
  if (int rcode = run_single_arm_audit(a, fn, report, rc); rcode != kExitOk) return rcode;
  const auto& counts = report.output.at("counts");
  const auto& props = report.output.at("proportions");
  for (std::size_t k = 0; k < counts.size(); ++k) {
    std::cout << "category " << k << ": " << counts[k].get<std::int64_t>() << " items, proportion "
              << props[k].get<double>() << "\n";
  }
  return kExitOk;
}

struct CounterfactualArgs {
  std::size_t item = 0;
  double remove_fraction = 0.5;
  std::vector<std::string> sets_b;
};

int cmd_counterfactual(const AuditArgs& a, const CounterfactualArgs& c) {
  RunConfig rc = load(a.common);
  Overrides ob = parse_sets(a.common.sets);
  for (const auto& [k, v] : parse_sets(c.sets_b)) ob[k] = v;
  RunConfig rc_b = load_run_config(a.common.config, ob);
  if (!(rc_b.model == rc.model)) throw Error(Errc::kValidation, "both arms must share the model architecture");
  auto data = load_data(rc);
  protocol::MockBackend backend;
  protocol::ProveOptions opts;
  opts.threads = threads_from_env();
  auto r = audits::counterfactual_audit(data.train, rc.model, rc.train, rc_b.train, c.item, c.remove_fraction,
                                        rc.salt_seed, backend, opts);
  write_atomic(rc.output("transcript-a.zka.json"), r.a.transcript.serialize());
  write_atomic(rc.output("transcript-b.zka.json"), r.b.transcript.serialize());
  fs::path out = a.out.empty() ? rc.output("counterfactual.zka.json") : fs::path(a.out);
  write_atomic(out, r.report.serialize());
  const auto& o = r.report.output;
  std::cout << "arm A: " << r.a.transcript.steps.size() << " steps, arm B: " << r.b.transcript.steps.size()
            << " steps\n"
            << "mean score of item " << c.item << ": A " << o.at("a").get<double>() << ", B " << o.at("b").get<double>()
            << ", delta " << o.at("delta").get<double>() << " (raw " << o.at("delta_raw").get<std::int64_t>() << ")\n"
            << "wrote " << rc.output("transcript-a.zka.json").string() << ", "
            << rc.output("transcript-b.zka.json").string() << ", " << out.string() << "\n";
  return kExitOk;
}

struct SecurityArgs {
  double lambda = 128;
  std::uint64_t dataset_size = 0;
  std::uint64_t steps = 0;
  std::string transcript;
};

int cmd_security_bits(const SecurityArgs& s) {
  std::uint64_t d = s.dataset_size;
  std::uint64_t t = s.steps;
  if (!s.transcript.empty()) {
    auto tr = protocol::TrainingTranscript::parse(read_file(s.transcript));
    d = tr.commitments.size();
    t = tr.steps.size();
  }
  if (!(s.lambda > 0)) throw Error(Errc::kValidation, "lambda must be positive");
  double bits = protocol::security_bits(s.lambda, d, t);
  std::cout << "lambda " << s.lambda << ", D " << d << ", T " << t << ": " << bits << " bits (loss "
            << s.lambda - bits << ")\n";
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Verifiable training and audits of fixed-point recommenders"};
  app.require_subcommand(1);
  app.footer(
      "Exit status: 0 ok, 1 verification rejected, 2 I/O or malformed file, 3 invalid config or input,\n"
      "4 training or audit aborted (range or capacity), 5 commitment mismatch.\n"
      "ZKAUDIT_THREADS sets the number of proving threads.");

  auto add_common = [](CLI::App* sc, Common& c) {
    sc->add_option("--config", c.config, "run config (TOML)")->required();
    sc->add_option("--set", c.sets, "override a config key, e.g. train.epochs=2");
  };

  Common commit_args;
  auto* commit_cmd = app.add_subcommand("commit", "commit to the dataset and derive the traversal");
  add_common(commit_cmd, commit_args);

  Common train_args;
  auto* train_cmd = app.add_subcommand("train-prove", "train with a proof per SGD step");
  add_common(train_cmd, train_args);

  VerifyArgs verify_args;
  auto* verify_cmd = app.add_subcommand("verify", "verify a training transcript and optionally an audit report");
  verify_cmd->add_option("transcript", verify_args.transcript, "training transcript")->required();
  verify_cmd->add_option("--transcript-b", verify_args.transcript_b, "second transcript (counterfactual reports)");
  verify_cmd->add_option("--report", verify_args.report, "audit report");

  auto* audit_cmd = app.add_subcommand("audit", "prove an audit over trained weights");
  audit_cmd->require_subcommand(1);
  auto add_audit = [&](CLI::App* sc, AuditArgs& a) {
    add_common(sc, a.common);
    sc->add_option("--transcript", a.transcript, "training transcript (default: <output.dir>/transcript.zka.json)");
    sc->add_option("--out", a.out, "report path (default: <output.dir>/<kind>.zka.json)");
  };

  AuditArgs censor_a;
  CensorArgs censor;
  auto* censor_cmd = audit_cmd->add_subcommand("censor", "quantile of an item's score for a user");
  add_audit(censor_cmd, censor_a);
  censor_cmd->add_option("--user", censor.user)->required();
  censor_cmd->add_option("--item", censor.item)->required();
  censor_cmd->add_option("--epsilon", censor.epsilon, "quantile tolerance")->capture_default_str();
  censor_cmd->add_option("--delta", censor.delta, "failure probability")->capture_default_str();
  censor_cmd->add_option("--samples", censor.samples, "sample count (default: Hoeffding bound)");
  censor_cmd->add_option("--population", censor.population, "item ids to rank against (default: all)")
      ->delimiter(',');
  censor_cmd->add_flag("--exhaustive", censor.exhaustive, "score every population item once");

  AuditArgs copy_a;
  CopyrightArgs copy;
  auto* copy_cmd = audit_cmd->add_subcommand("copyright", "cosine similarity of item features to a claimant's");
  add_audit(copy_cmd, copy_a);
  copy_cmd->add_option("--features", copy.features, "items x dim .zkv file or directory of 1-D .zkv files")->required();
  copy_cmd->add_option("--claimant", copy.claimant, "dim or 1 x dim .zkv file")->required();
  copy_cmd->add_option("--tau", copy.tau, "similarity threshold in [0, 1]")->capture_default_str();
  copy_cmd->add_option("--csv", copy.csv, "write per-item verdicts as CSV");

  AuditArgs demo_a;
  DemographicArgs demo;
  auto* demo_cmd = audit_cmd->add_subcommand("demographic", "category counts and proportions");
  add_audit(demo_cmd, demo_a);
  demo_cmd->add_option("--labels", demo.labels, "one category index per line")->required();
  demo_cmd->add_option("--categories", demo.categories, "number of categories")->required();

  AuditArgs cf_a;
  CounterfactualArgs cf;
  auto* cf_cmd = audit_cmd->add_subcommand("counterfactual", "train twice and compare an item's mean score");
  add_audit(cf_cmd, cf_a);
  cf_cmd->add_option("--item", cf.item)->required();
  cf_cmd->add_option("--remove-fraction", cf.remove_fraction, "share of the item's ratings dropped in arm B")
      ->capture_default_str();
  cf_cmd->add_option("--set-b", cf.sets_b, "config override for arm B only");

  SecurityArgs sec;
  auto* sec_cmd = app.add_subcommand("security-bits", "bits of security left after the union bound");
  sec_cmd->add_option("--lambda", sec.lambda, "bits of security of the primitives")->capture_default_str();
  sec_cmd->add_option("--dataset-size", sec.dataset_size, "D");
  sec_cmd->add_option("--steps", sec.steps, "T");
  sec_cmd->add_option("--transcript", sec.transcript, "read D and T from a transcript");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*commit_cmd) return cmd_commit(commit_args);
    if (*train_cmd) return cmd_train_prove(train_args);
    if (*verify_cmd) return cmd_verify(verify_args);
    if (*censor_cmd) return cmd_censor(censor_a, censor);
    if (*copy_cmd) return cmd_copyright(copy_a, copy);
    if (*demo_cmd) return cmd_demographic(demo_a, demo);
    if (*cf_cmd) return cmd_counterfactual(cf_a, cf);
    if (*sec_cmd) return cmd_security_bits(sec);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitValidation;
}

}  // namespace zkaudit::cli
