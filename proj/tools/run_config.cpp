#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <set>

#include "CLI11.hpp"
#include "zkaudit/error.hpp"
#include "zkaudit/nn/dataset.hpp"

namespace zkaudit::cli {
namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "data.ratings",      "data.synthetic_ratings", "data.synthetic_seed", "data.test_fraction",
      "data.split_seed",   "model.users",            "model.items",         "model.dim",
      "model.hidden",      "fxp.scale_factor",       "fxp.range_bits",      "train.learning_rate",
      "train.batch_size",  "train.epochs",           "train.init_seed",     "train.columns",
      "train.max_rows",    "salt.seed",              "salt.file",           "output.dir"};
  return keys;
}

[[noreturn]] void invalid(const std::string& key, const std::string& what) {
  throw Error(Errc::kValidation, key + ": " + what);
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

template <class T>
T parse_int(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) invalid(key, "expected an integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) invalid(key, "expected a number, got '" + v + "'");
    return d;
  } catch (const std::logic_error&) {
    invalid(key, "expected a number, got '" + v + "'");
  }
}

std::vector<std::uint8_t> parse_hex(const std::string& key, const std::string& v) {
  if (v.empty() || v.size() % 2 != 0) invalid(key, "expected an even-length hex string");
  std::vector<std::uint8_t> out(v.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto [p, ec] = std::from_chars(v.data() + 2 * i, v.data() + 2 * i + 2, out[i], 16);
    if (ec != std::errc() || p != v.data() + 2 * i + 2) invalid(key, "expected a hex string");
  }
  return out;
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& file, const Overrides& overrides) {
  std::map<std::string, std::string> kv;
  try {
    for (const auto& item : CLI::ConfigTOML().from_file(file.string())) {
      if (item.name == "++" || item.name == "--") continue;
      if (item.inputs.size() != 1) invalid(item.fullname(), "expected a single value");
      kv[item.fullname()] = unquote(item.inputs[0]);
    }
  } catch (const CLI::FileError& e) {
    throw Error(Errc::kIo, "cannot read config " + file.string());
  } catch (const CLI::ParseError& e) {
    throw Error(Errc::kValidation, "config " + file.string() + ": " + e.what());
  }
  for (const auto& [k, v] : overrides) kv[k] = unquote(v);
  for (const auto& [k, v] : kv) {
    if (!known_keys().count(k)) invalid(k, "unknown key");
  }

  RunConfig rc;
  rc.base_dir = file.parent_path();
  auto path_of = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() ? p : rc.base_dir / p;
  };
  auto get = [&](const std::string& k) -> const std::string* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto require = [&](const std::string& k) -> const std::string& {
    const std::string* v = get(k);
    if (!v) invalid(k, "required");
    return *v;
  };

  if (auto v = get("data.ratings")) rc.ratings = path_of(*v);
  if (auto v = get("data.synthetic_ratings")) rc.synthetic_ratings = parse_int<std::size_t>("data.synthetic_ratings", *v);
  if (auto v = get("data.synthetic_seed")) rc.synthetic_seed = parse_int<std::uint64_t>("data.synthetic_seed", *v);
  if (auto v = get("data.test_fraction")) rc.test_fraction = parse_double("data.test_fraction", *v);
  if (auto v = get("data.split_seed")) rc.split_seed = parse_int<std::uint64_t>("data.split_seed", *v);
  if (rc.ratings.has_value() == (rc.synthetic_ratings > 0)) {
    invalid("data", "set exactly one of 'ratings' and 'synthetic_ratings'");
  }
  if (!(rc.test_fraction >= 0 && rc.test_fraction < 1)) invalid("data.test_fraction", "must lie in [0, 1)");

  fxp::FxpSpec spec = fxp::recommender_spec();
  if (auto v = get("fxp.scale_factor")) spec.scale_factor = parse_int<std::int64_t>("fxp.scale_factor", *v);
  if (auto v = get("fxp.range_bits")) spec.range_bits = parse_int<int>("fxp.range_bits", *v);

  auto users = parse_int<std::size_t>("model.users", require("model.users"));
  auto items = parse_int<std::size_t>("model.items", require("model.items"));
  std::size_t dim = 8;
  std::size_t hidden = 16;
  if (auto v = get("model.dim")) dim = parse_int<std::size_t>("model.dim", *v);
  if (auto v = get("model.hidden")) hidden = parse_int<std::size_t>("model.hidden", *v);
  if (users == 0 || items == 0 || dim == 0 || hidden == 0) invalid("model", "sizes must be positive");
  rc.model = nn::ModelGraph::recommender(users, items, dim, hidden);

  rc.train.spec = spec;
  if (auto v = get("train.learning_rate")) rc.train.learning_rate = parse_double("train.learning_rate", *v);
  if (auto v = get("train.batch_size")) rc.train.batch_size = parse_int<std::size_t>("train.batch_size", *v);
  if (auto v = get("train.epochs")) rc.train.epochs = parse_int<std::size_t>("train.epochs", *v);
  if (auto v = get("train.init_seed")) rc.train.init_seed = parse_int<std::uint64_t>("train.init_seed", *v);
  if (auto v = get("train.columns")) rc.train.columns = parse_int<std::size_t>("train.columns", *v);
  if (auto v = get("train.max_rows")) rc.train.max_rows = parse_int<std::size_t>("train.max_rows", *v);
  spec.validate();
  rc.model.validate();
  rc.train.validate();

  const std::string* seed_hex = get("salt.seed");
  const std::string* seed_file = get("salt.file");
  if ((seed_hex != nullptr) == (seed_file != nullptr)) invalid("salt", "set exactly one of 'seed' and 'file'");
  if (seed_hex) {
    rc.salt_seed = parse_hex("salt.seed", *seed_hex);
  } else {
    std::ifstream in(path_of(*seed_file), std::ios::binary);
    if (!in) throw Error(Errc::kIo, "cannot read salt file " + path_of(*seed_file).string());
    rc.salt_seed.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (rc.salt_seed.empty()) invalid("salt.file", "salt file is empty");
  }
  rc.output_dir = path_of(get("output.dir") ? *get("output.dir") : std::string("out"));
  return rc;
}

LoadedData load_data(const RunConfig& rc) {
  const auto& layers = rc.model.layers;
  std::size_t users = layers[0].vocab;
  std::size_t items = layers[1].vocab;
  std::vector<nn::Rating> ratings;
  if (rc.ratings) {
    if (!std::filesystem::exists(*rc.ratings)) throw Error(Errc::kIo, "dataset " + rc.ratings->string() + " not found");
    ratings = nn::read_ratings_csv(*rc.ratings);
  } else {
    ratings = nn::synthetic_ratings(users, items, rc.synthetic_ratings, rc.synthetic_seed);
  }
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    if (ratings[i].user >= users || ratings[i].item >= items) {
      throw Error(Errc::kValidation, "rating " + std::to_string(i) + " refers to an id outside the model vocabulary");
    }
  }
  if (ratings.empty()) throw Error(Errc::kValidation, "dataset is empty");
  auto all = nn::rating_examples(ratings, rc.train.spec);
  LoadedData d;
  if (rc.test_fraction > 0) {
    auto split = nn::split_indices(all.size(), rc.test_fraction, rc.split_seed);
    d.train = nn::select(all, split.train);
    d.test = nn::select(all, split.test);
  } else {
    d.train = std::move(all);
  }
  return d;
}

}  // namespace zkaudit::cli
