#include "zkaudit/nn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "zkaudit/error.hpp"

namespace zkaudit::nn {
namespace {

constexpr char kMagic[8] = {'Z', 'K', 'A', 'V', 'E', 'C', '0', '1'};

// Box-Muller over the portable uniform draw; std::normal_distribution is not
// reproducible across standard libraries.
double normal(std::mt19937_64& rng) {
  double u1 = unit_uniform(rng());
  double u2 = unit_uniform(rng());
  return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t below(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(unit_uniform(rng()) * n); }

template <class T>
void put_le(std::ostream& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <class T>
T get_le(std::istream& in, const std::filesystem::path& path) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    int c = in.get();
    if (c == EOF) throw Error(Errc::kParse, path.string() + ": truncated vector file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<T>(v);
}

}  // namespace

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

std::vector<Rating> read_ratings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::vector<Rating> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',')) {
      throw Error(Errc::kParse, path.string() + ":" + std::to_string(lineno) + ": expected user,item,rating");
    }
    try {
      std::size_t pa = 0, pb = 0, pc = 0;
      unsigned long u = std::stoul(a, &pa);
      unsigned long it = std::stoul(b, &pb);
      double r = std::stod(c, &pc);
      if (pa != a.size() || pb != b.size() || pc != c.size()) throw std::invalid_argument("trailing");
      out.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(it), r});
    } catch (const std::logic_error&) {
      if (lineno == 1 && out.empty()) continue;
      throw Error(Errc::kParse, path.string() + ":" + std::to_string(lineno) + ": malformed row '" + line + "'");
    }
  }
  return out;
}

void write_ratings_csv(const std::filesystem::path& path, const std::vector<Rating>& ratings) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << "user_id,item_id,rating\n";
  for (const auto& r : ratings) {
    std::ostringstream v;
    v.precision(17);
    v << r.rating;
    out << r.user << ',' << r.item << ',' << v.str() << '\n';
  }
  if (!out) throw Error(Errc::kIo, "write failed for " + path.string());
}

std::vector<Rating> synthetic_ratings(std::size_t users, std::size_t items, std::size_t count, std::uint64_t seed) {
  if (users == 0 || items == 0) throw Error(Errc::kInvalidArgument, "need at least one user and one item");
  if (count > users * items) throw Error(Errc::kInvalidArgument, "more ratings requested than (user, item) pairs");
  std::mt19937_64 rng(seed);
  constexpr std::size_t kRank = 2;
  std::vector<double> ub(users), ib(items), uf(users * kRank), vf(items * kRank);
  for (auto& x : ub) x = 0.5 * normal(rng);
  for (auto& x : ib) x = 0.7 * normal(rng);
  for (auto& x : uf) x = 0.6 * normal(rng);
  for (auto& x : vf) x = 0.6 * normal(rng);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<Rating> out;
  out.reserve(count);
  while (out.size() < count) {
    std::size_t u = below(rng, users), i = below(rng, items);
    if (!seen.emplace(u, i).second) continue;
    double r = 3.0 + ub[u] + ib[i] + 0.2 * normal(rng);
    for (std::size_t k = 0; k < kRank; ++k) r += uf[u * kRank + k] * vf[i * kRank + k];
    out.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(i), std::clamp(r, 1.0, 5.0)});
  }
  return out;
}

std::vector<Example> rating_examples(const std::vector<Rating>& ratings, const fxp::FxpSpec& spec) {
  std::vector<Example> out;
  out.reserve(ratings.size());
  for (const auto& r : ratings) {
    Example ex;
    ex.ids = {r.user, r.item};
    ex.target = {fxp::quantize(r.rating, spec).raw};
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<FloatExample> rating_float_examples(const std::vector<Rating>& ratings) {
  std::vector<FloatExample> out;
  out.reserve(ratings.size());
  for (const auto& r : ratings) out.push_back({{r.user, r.item}, {}, {r.rating}, 0});
  return out;
}

Split split_indices(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw Error(Errc::kInvalidArgument, "test fraction outside [0, 1)");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[below(rng, i)]);
  auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * (1.0 - test_fraction)));
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return s;
}

VectorFile read_vectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kMagic)) {
    throw Error(Errc::kParse, path.string() + ": not a vector file");
  }
  VectorFile v;
  v.scale_factor = static_cast<std::int64_t>(get_le<std::uint64_t>(in, path));
  auto ndim = get_le<std::uint32_t>(in, path);
  if (ndim == 0 || ndim > 8) throw Error(Errc::kParse, path.string() + ": bad dimension count");
  std::size_t count = 1;
  for (std::uint32_t d = 0; d < ndim; ++d) {
    v.shape.push_back(static_cast<std::size_t>(get_le<std::uint64_t>(in, path)));
    count *= v.shape.back();
  }
  if (count > (std::size_t{1} << 32)) throw Error(Errc::kParse, path.string() + ": tensor too large");
  v.data.resize(count);
  for (auto& x : v.data) x = static_cast<std::int64_t>(get_le<std::uint64_t>(in, path));
  if (in.peek() != EOF) throw Error(Errc::kParse, path.string() + ": trailing bytes");
  return v;
}

void write_vectors(const std::filesystem::path& path, const VectorFile& v) {
  std::size_t count = 1;
  for (auto d : v.shape) count *= d;
  if (v.shape.empty() || count != v.data.size()) throw Error(Errc::kShapeMismatch, "vector data does not match its shape");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out.write(kMagic, 8);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(v.scale_factor));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.shape.size()));
  for (auto d : v.shape) put_le<std::uint64_t>(out, d);
  for (auto x : v.data) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(x));
  if (!out) throw Error(Errc::kIo, "write failed for " + path.string());
}

std::vector<VectorFile> read_vector_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(Errc::kIo, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".zkv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<VectorFile> out;
  for (const auto& f : files) out.push_back(read_vectors(f));
  return out;
}

}  // namespace zkaudit::nn
