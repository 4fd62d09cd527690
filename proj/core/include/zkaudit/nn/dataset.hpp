#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "zkaudit/fxp.hpp"
#include "zkaudit/nn/float_trainer.hpp"
#include "zkaudit/nn/train.hpp"

namespace zkaudit::nn {

struct Rating {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  double rating = 0;
};

// user_id,item_id,rating per line; a non-numeric first line is a header.
std::vector<Rating> read_ratings_csv(const std::filesystem::path& path);
void write_ratings_csv(const std::filesystem::path& path, const std::vector<Rating>& ratings);

// Ratings 3 + user bias + item bias + low-rank interaction + noise, clipped
// to [1, 5], over distinct (user, item) pairs.
std::vector<Rating> synthetic_ratings(std::size_t users, std::size_t items, std::size_t count, std::uint64_t seed);

std::vector<Example> rating_examples(const std::vector<Rating>& ratings, const fxp::FxpSpec& spec);
std::vector<FloatExample> rating_float_examples(const std::vector<Rating>& ratings);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
// Seeded shuffle, then the first round(n * (1 - test_fraction)) go to train.
Split split_indices(std::size_t n, double test_fraction, std::uint64_t seed);

template <class T>
std::vector<T> select(const std::vector<T>& xs, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(xs.at(i));
  return out;
}

// Flat int64 tensor file: magic "ZKAVEC01", u64 scale factor, u32 ndim,
// ndim x u64 dims, then little-endian int64 raw values in row-major order.
struct VectorFile {
  std::int64_t scale_factor = 1;
  std::vector<std::size_t> shape;
  std::vector<std::int64_t> data;
};

VectorFile read_vectors(const std::filesystem::path& path);
void write_vectors(const std::filesystem::path& path, const VectorFile& v);
// Every *.zkv file of a directory in file-name order.
std::vector<VectorFile> read_vector_dir(const std::filesystem::path& dir);

// Uniform double in [0, 1) from 53 bits of a 64-bit draw.
double unit_uniform(std::uint64_t bits);

}  // namespace zkaudit::nn
