#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "zkaudit/commit.hpp"
#include "zkaudit/error.hpp"

using namespace zkaudit;
using commit::Digest;

namespace {

// Produced by tests/golden/make_commit_golden.py with hashlib only.
nlohmann::json golden() {
  std::ifstream in(std::string(ZKAUDIT_GOLDEN_DIR) + "/commit_golden.json");
  return nlohmann::json::parse(in);
}

std::vector<std::uint8_t> bytes(std::string_view s) { return {s.begin(), s.end()}; }

std::vector<Digest> plain_digests(std::size_t n) {
  std::vector<Digest> out;
  for (std::size_t i = 0; i < n; ++i) {
    commit::Sha256 h;
    h.u8(static_cast<std::uint8_t>(i));
    out.push_back(h.finish());
  }
  return out;
}

}  // namespace

TEST(Commit, TaggedHashMatchesGolden) {
  EXPECT_EQ(commit::hash(commit::Tag::kExample, bytes("abc")).hex(), golden()["tagged_abc"]);
}

TEST(Commit, SaltAndExampleCommitmentMatchGolden) {
  auto g = golden();
  auto salt = commit::derive_salt(bytes("golden-seed"), "example", 3);
  EXPECT_EQ(commit::salt_hex(salt), g["salt"]);
  nn::Example ex;
  ex.ids = {3, 7};
  ex.target = {4 * 8192};
  EXPECT_EQ(commit::commit_example(ex, salt).digest.hex(), g["example_commitment"]);
  EXPECT_EQ(commit::salt_from_hex(commit::salt_hex(salt)), salt);
}

TEST(Commit, SaltsHideAndBind) {
  nn::Example ex;
  ex.ids = {1, 2};
  ex.target = {100};
  auto s1 = commit::derive_salt(bytes("seed"), "example", 0);
  auto s2 = commit::derive_salt(bytes("seed"), "example", 1);
  EXPECT_NE(commit::commit_example(ex, s1).digest, commit::commit_example(ex, s2).digest);
  nn::Example other = ex;
  other.target = {101};
  EXPECT_NE(commit::commit_example(ex, s1).digest, commit::commit_example(other, s1).digest);
  EXPECT_NE(commit::derive_salt(bytes("seed"), "weights", 0), s1);
}

TEST(Commit, DigestHex) {
  auto d = commit::hash(commit::Tag::kLeaf, bytes("x"));
  EXPECT_EQ(Digest::from_hex(d.hex()), d);
  EXPECT_THROW(Digest::from_hex("abc"), Error);
  EXPECT_THROW(Digest::from_hex(std::string(64, 'g')), Error);
}

TEST(Merkle, RootsMatchGolden) {
  auto g = golden();
  EXPECT_EQ(commit::build_merkle(plain_digests(5)).root().hex(), g["merkle_root_5"]);
  EXPECT_EQ(commit::build_merkle(plain_digests(1)).root().hex(), g["merkle_root_1"]);
  EXPECT_THROW(commit::build_merkle({}), Error);
}

TEST(Merkle, ProofsVerifyForEveryLeafAndSize) {
  for (std::size_t n : {1u, 2u, 3u, 7u, 8u, 13u}) {
    auto ds = plain_digests(n);
    commit::MerkleTree tree(ds);
    for (std::size_t i = 0; i < n; ++i) {
      auto path = tree.proof(i);
      ASSERT_TRUE(commit::MerkleTree::verify(ds[i], path, tree.root())) << n << " " << i;
      auto wrong = ds[(i + 1) % n];
      if (n > 1) ASSERT_FALSE(commit::MerkleTree::verify(wrong, path, tree.root()));
      if (!path.empty()) {
        path[0].sibling.bytes[0] ^= 1;
        ASSERT_FALSE(commit::MerkleTree::verify(ds[i], path, tree.root()));
      }
    }
  }
}

TEST(RandomStream, MatchesGolden) {
  auto g = golden();
  commit::RandomStream rs(commit::build_merkle(plain_digests(5)).root(), "censorship");
  for (const auto& v : g["stream_censorship"]) EXPECT_EQ(std::to_string(rs.next_u64()), v.get<std::string>());
}

TEST(RandomStream, UniformStaysInRange) {
  commit::RandomStream rs(commit::hash(commit::Tag::kNode, bytes("u")));
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 7000; ++i) {
    auto v = rs.uniform(7);
    ASSERT_LT(v, 7u);
    ++hist[v];
  }
  for (int h : hist) EXPECT_GT(h, 800);
  EXPECT_THROW(rs.uniform(0), Error);
}

TEST(Traversal, MatchesGoldenAndIsPermutation) {
  auto g = golden();
  auto root = commit::build_merkle(plain_digests(5)).root();
  auto orders = commit::derive_traversal(root, 7, 2);
  ASSERT_EQ(orders.size(), 2u);
  for (std::size_t e = 0; e < 2; ++e) EXPECT_EQ(orders[e], g["traversal_7x2"][e].get<std::vector<std::size_t>>());
  auto big = commit::derive_traversal(root, 500, 3);
  for (const auto& perm : big) {
    std::set<std::size_t> seen(perm.begin(), perm.end());
    ASSERT_EQ(seen.size(), 500u);
    ASSERT_EQ(*seen.rbegin(), 499u);
  }
  EXPECT_NE(big[0], big[1]);
  auto other = commit::derive_traversal(commit::build_merkle(plain_digests(6)).root(), 500, 1);
  EXPECT_NE(other[0], big[0]);
}

TEST(Commit, WeightsCommitmentBindsEveryValue) {
  nn::Weights w;
  w.tensors.push_back(fxp::FxpTensor({2}, {5, -7}, w.spec));
  auto salt = commit::derive_salt(bytes("s"), "weights", 1);
  auto c = commit::commit_weights(w, salt);
  EXPECT_EQ(commit::commit_weights(w, salt), c);
  w.tensors[0][1] = -6;
  EXPECT_NE(commit::commit_weights(w, salt).digest, c.digest);
  w.tensors[0][1] = -7;
  w.spec.scale_factor = 1 << 12;
  EXPECT_NE(commit::commit_weights(w, salt).digest, c.digest);
}

TEST(Commit, SortCommitments) {
  auto ds = plain_digests(9);
  commit::sort_commitments(ds);
  EXPECT_TRUE(std::is_sorted(ds.begin(), ds.end()));
}
