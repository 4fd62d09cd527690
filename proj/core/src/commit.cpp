#include "zkaudit/commit.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include <openssl/evp.h>

#include "zkaudit/error.hpp"

namespace zkaudit::commit {
namespace {

int hex_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string to_hex(std::span<const std::uint8_t> b) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(b.size() * 2);
  for (auto x : b) {
    s.push_back(kDigits[x >> 4]);
    s.push_back(kDigits[x & 15]);
  }
  return s;
}

void from_hex(std::string_view s, std::span<std::uint8_t> out, const char* what) {
  if (s.size() != out.size() * 2) throw Error(Errc::kParse, std::string(what) + " must be " + std::to_string(out.size() * 2) + " hex digits");
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_val(s[2 * i]), lo = hex_val(s[2 * i + 1]);
    if (hi < 0 || lo < 0 || std::isupper(static_cast<unsigned char>(s[2 * i])) ||
        std::isupper(static_cast<unsigned char>(s[2 * i + 1]))) {
      throw Error(Errc::kParse, std::string(what) + " must be lowercase hex");
    }
    out[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
}

}  // namespace

std::string Digest::hex() const { return to_hex(bytes); }

Digest Digest::from_hex(std::string_view s) {
  Digest d;
  commit::from_hex(s, d.bytes, "digest");
  return d;
}

std::string salt_hex(const Salt& s) { return to_hex(s); }

Salt salt_from_hex(std::string_view s) {
  Salt out{};
  from_hex(s, out, "salt");
  return out;
}

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
  if (!ctx_ || EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::kInvalidArgument, "SHA-256 unavailable");
  }
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Sha256::write(std::span<const std::uint8_t> bytes) {
  if (done_) throw Error(Errc::kInvalidArgument, "hash already finalized");
  if (!bytes.empty()) EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), bytes.data(), bytes.size());
}

Digest Sha256::finish() {
  if (done_) throw Error(Errc::kInvalidArgument, "hash already finalized");
  Digest d;
  unsigned len = 0;
  EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), d.bytes.data(), &len);
  done_ = true;
  return d;
}

Digest hash(Tag tag, std::span<const std::uint8_t> payload) {
  Sha256 h(tag);
  h.write(payload);
  return h.finish();
}

Salt derive_salt(std::span<const std::uint8_t> seed, std::string_view purpose, std::uint64_t index) {
  Sha256 h(Tag::kSalt);
  h.u64(seed.size());
  h.write(seed);
  h.str(purpose);
  h.u64(index);
  Digest d = h.finish();
  Salt s{};
  std::copy_n(d.bytes.begin(), s.size(), s.begin());
  return s;
}

void encode_example(const nn::Example& ex, air::ByteSink& out) {
  out.u64(ex.ids.size());
  for (auto id : ex.ids) out.u64(id);
  out.u64(ex.features.size());
  for (auto v : ex.features) out.i64(v);
  out.u64(ex.target.size());
  for (auto v : ex.target) out.i64(v);
  out.u64(ex.label);
}

void encode_weights(const nn::Weights& w, air::ByteSink& out) {
  out.i64(w.spec.scale_factor);
  out.u32(static_cast<std::uint32_t>(w.spec.range_bits));
  for (auto limb : w.spec.field_modulus.limbs) out.u64(limb);
  out.u64(w.tensors.size());
  for (const auto& t : w.tensors) {
    out.u64(t.shape().size());
    for (auto d : t.shape()) out.u64(d);
    for (auto v : t.raw()) out.i64(v);
  }
}

SaltedCommitment commit_example(const nn::Example& ex, const Salt& salt) {
  Sha256 h(Tag::kExample);
  h.write(salt);
  encode_example(ex, h);
  return {h.finish(), salt};
}

SaltedCommitment commit_weights(const nn::Weights& w, const Salt& salt) {
  Sha256 h(Tag::kWeights);
  h.write(salt);
  encode_weights(w, h);
  return {h.finish(), salt};
}

Digest MerkleTree::leaf_hash(const Digest& commitment) {
  Sha256 h(Tag::kLeaf);
  h.digest(commitment);
  return h.finish();
}

Digest MerkleTree::node_hash(const Digest& left, const Digest& right) {
  Sha256 h(Tag::kNode);
  h.digest(left);
  h.digest(right);
  return h.finish();
}

MerkleTree::MerkleTree(std::vector<Digest> commitments) {
  if (commitments.empty()) throw Error(Errc::kEmptyLeaves, "Merkle tree over zero leaves");
  std::vector<Digest> level;
  level.reserve(commitments.size());
  for (const auto& c : commitments) level.push_back(leaf_hash(c));
  levels_.push_back(std::move(level));
  // A single leaf still gets one node level, so the root is H(node || l || l).
  do {
    const auto& cur = levels_.back();
    std::vector<Digest> next;
    next.reserve((cur.size() + 1) / 2);
    for (std::size_t i = 0; i < cur.size(); i += 2) {
      next.push_back(node_hash(cur[i], i + 1 < cur.size() ? cur[i + 1] : cur[i]));
    }
    levels_.push_back(std::move(next));
  } while (levels_.back().size() > 1);
}

std::vector<MerkleStep> MerkleTree::proof(std::size_t index) const {
  if (index >= size()) throw Error(Errc::kInvalidArgument, "leaf index out of range");
  std::vector<MerkleStep> path;
  for (std::size_t l = 0; l + 1 < levels_.size(); ++l) {
    const auto& cur = levels_[l];
    std::size_t sib = index ^ 1;
    if (sib >= cur.size()) sib = index;
    path.push_back({cur[sib], (index & 1) != 0});
    index /= 2;
  }
  return path;
}

bool MerkleTree::verify(const Digest& commitment, std::span<const MerkleStep> path, const Digest& root) {
  Digest acc = leaf_hash(commitment);
  for (const auto& step : path) acc = step.sibling_on_left ? node_hash(step.sibling, acc) : node_hash(acc, step.sibling);
  return acc == root;
}

MerkleTree build_merkle(std::vector<Digest> commitments) { return MerkleTree(std::move(commitments)); }

RandomStream::RandomStream(const Digest& root, std::string_view purpose) {
  Sha256 h(Tag::kRandomness);
  h.digest(root);
  if (!purpose.empty()) h.str(purpose);
  block_ = h.finish();
}

std::uint64_t RandomStream::next_u64() {
  if (used_ == block_.bytes.size()) {
    Sha256 h(Tag::kRandomness);
    h.digest(block_);
    block_ = h.finish();
    used_ = 0;
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(block_.bytes[used_ + i]) << (8 * i);
  used_ += 8;
  return v;
}

std::uint64_t RandomStream::uniform(std::uint64_t bound) {
  if (bound == 0) throw Error(Errc::kInvalidArgument, "uniform over an empty range");
  // Largest multiple of bound not exceeding 2^64; draws at or above it are
  // rejected so every residue is equally likely.
  const std::uint64_t rem = (std::numeric_limits<std::uint64_t>::max() % bound + 1) % bound;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - rem;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x > limit);
  return x % bound;
}

std::vector<std::vector<std::size_t>> derive_traversal(const Digest& root, std::size_t n, std::size_t epochs) {
  if (n == 0) throw Error(Errc::kInvalidArgument, "traversal over zero examples");
  RandomStream stream(root);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t e = 0; e < epochs; ++e) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[stream.uniform(i + 1)]);
    out.push_back(std::move(perm));
  }
  return out;
}

void sort_commitments(std::vector<Digest>& ds) { std::sort(ds.begin(), ds.end()); }

}  // namespace zkaudit::commit
