#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "zkaudit/air/builder.hpp"

namespace zkaudit::air {

// Destination for canonical byte encodings (a hasher or a buffer).
class ByteSink {
 public:
  virtual ~ByteSink() = default;
  virtual void write(std::span<const std::uint8_t> bytes) = 0;

  void u8(std::uint8_t v) { write(std::span<const std::uint8_t>(&v, 1)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  // Length-prefixed.
  void str(std::string_view s);
  void bytes(std::span<const std::uint8_t> b) { write(b); }
};

class VectorSink final : public ByteSink {
 public:
  void write(std::span<const std::uint8_t> bytes) override { data.insert(data.end(), bytes.begin(), bytes.end()); }
  std::vector<std::uint8_t> data;
};

// 32-byte little-endian canonical representative.
void encode_fe(const PrimeField& field, const Fe& value, ByteSink& out);

// Advice cells, column-major, each as a presence byte plus value.
void encode_witness(const Grid& grid, ByteSink& out);

// Everything fixed by the circuit's shape: modulus, dimensions, selector
// columns, constraints and tables. Independent of witness values.
void encode_constraint_system(const Grid& grid, const std::vector<Constraint>& constraints,
                              const std::vector<LookupTable>& tables, ByteSink& out);

// Debug dump with hex cells listed column-major; key order is fixed.
nlohmann::ordered_json dump_json(const Circuit& circuit);

}  // namespace zkaudit::air
