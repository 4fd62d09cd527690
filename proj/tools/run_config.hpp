#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zkaudit/nn/model.hpp"
#include "zkaudit/nn/train.hpp"

namespace zkaudit::cli {

// Everything one provider run needs, from a single TOML file. Relative paths
// resolve against the file's directory.
struct RunConfig {
  std::filesystem::path base_dir;

  std::optional<std::filesystem::path> ratings;
  std::size_t synthetic_ratings = 0;
  std::uint64_t synthetic_seed = 1;
  double test_fraction = 0;
  std::uint64_t split_seed = 0;

  nn::ModelGraph model;
  nn::TrainConfig train;

  std::vector<std::uint8_t> salt_seed;
  std::filesystem::path output_dir;

  std::filesystem::path output(const std::string& name) const { return output_dir / name; }
};

// key=value pairs (dotted keys) applied on top of the file.
using Overrides = std::map<std::string, std::string>;

// kIo if the file is unreadable; kValidation on unknown keys, bad values or
// a missing dataset/salt source.
RunConfig load_run_config(const std::filesystem::path& file, const Overrides& overrides = {});

// Training and held-out examples after the configured split.
struct LoadedData {
  std::vector<nn::Example> train;
  std::vector<nn::Example> test;
};
LoadedData load_data(const RunConfig& rc);

}  // namespace zkaudit::cli
