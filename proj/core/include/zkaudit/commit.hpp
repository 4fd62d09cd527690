#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zkaudit/air/encode.hpp"
#include "zkaudit/nn/model.hpp"
#include "zkaudit/nn/train.hpp"

namespace zkaudit::commit {

struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const;
  // Throws Error(kParse) unless given 64 hex digits.
  static Digest from_hex(std::string_view s);

  friend auto operator<=>(const Digest&, const Digest&) = default;
};

// One-byte domain separation prefixes.
enum class Tag : std::uint8_t {
  kLeaf = 0,
  kNode = 1,
  kWeights = 2,
  kRandomness = 3,
  kExample = 4,
  kGrid = 5,
  kConstraints = 6,
  kBinding = 7,
  kTranscript = 8,
  kSalt = 9,
  kAudit = 10,
};

inline constexpr std::string_view kHashName = "sha256";

// Streaming SHA-256 usable as a canonical-encoding sink.
class Sha256 final : public air::ByteSink {
 public:
  Sha256();
  explicit Sha256(Tag tag) : Sha256() { u8(static_cast<std::uint8_t>(tag)); }
  ~Sha256() override;
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void write(std::span<const std::uint8_t> bytes) override;
  void digest(const Digest& d) { write(d.bytes); }
  Digest finish();

 private:
  void* ctx_;
  bool done_ = false;
};

Digest hash(Tag tag, std::span<const std::uint8_t> payload);

using Salt = std::array<std::uint8_t, 16>;

std::string salt_hex(const Salt& s);
Salt salt_from_hex(std::string_view s);

// First 16 bytes of H(salt-tag || seed || purpose || index).
Salt derive_salt(std::span<const std::uint8_t> seed, std::string_view purpose, std::uint64_t index);

struct SaltedCommitment {
  Digest digest;
  Salt salt{};
  friend bool operator==(const SaltedCommitment&, const SaltedCommitment&) = default;
};

void encode_example(const nn::Example& ex, air::ByteSink& out);
// Layer order, row-major raw int64 little-endian, preceded by the fixed-point spec.
void encode_weights(const nn::Weights& w, air::ByteSink& out);

// H(tag || salt || payload).
SaltedCommitment commit_example(const nn::Example& ex, const Salt& salt);
SaltedCommitment commit_weights(const nn::Weights& w, const Salt& salt);

struct MerkleStep {
  Digest sibling;
  bool sibling_on_left = false;
};

// Leaves are H(leaf-tag || commitment); nodes H(node-tag || left || right);
// an odd level duplicates its last node.
class MerkleTree {
 public:
  // Throws Error(kEmptyLeaves) on an empty list.
  explicit MerkleTree(std::vector<Digest> commitments);

  const Digest& root() const { return levels_.back().front(); }
  std::size_t size() const { return levels_.front().size(); }
  const Digest& leaf(std::size_t i) const { return levels_.front().at(i); }

  std::vector<MerkleStep> proof(std::size_t index) const;
  static bool verify(const Digest& commitment, std::span<const MerkleStep> path, const Digest& root);

  static Digest leaf_hash(const Digest& commitment);
  static Digest node_hash(const Digest& left, const Digest& right);

 private:
  std::vector<std::vector<Digest>> levels_;
};

MerkleTree build_merkle(std::vector<Digest> commitments);

// Random-oracle stream H(r-tag || root [|| purpose]), then H(r-tag || prev),
// consumed eight bytes at a time.
class RandomStream {
 public:
  explicit RandomStream(const Digest& root, std::string_view purpose = {});

  std::uint64_t next_u64();
  // Uniform in [0, bound) by rejection sampling.
  std::uint64_t uniform(std::uint64_t bound);

 private:
  Digest block_;
  std::size_t used_ = 0;
};

// One Fisher-Yates permutation of [0, n) per epoch, all from one stream.
std::vector<std::vector<std::size_t>> derive_traversal(const Digest& root, std::size_t n, std::size_t epochs);

void sort_commitments(std::vector<Digest>& ds);

}  // namespace zkaudit::commit
