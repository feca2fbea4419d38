#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "adanet/tensor.hpp"

namespace adanet::nn {

// Binary layout (all integers little-endian):
//   "ADAN" | u32 version
//   parameter table | optimizer table
//   u32 meta_len | meta_len bytes of "key=value\n" lines
// Table: u32 count, then per entry
//   u32 name_len | name | u8 dtype (1 = f32, 2 = f64) | u32 rank | u64 extents[rank] | raw values
constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { kF32 = 1, kF64 = 2 };

struct TableEntry {
  std::string name;
  DType dtype = DType::kF32;
  Shape shape;
  std::vector<std::uint8_t> bytes;  // little-endian values
};

struct Checkpoint {
  std::vector<TableEntry> parameters;
  std::vector<TableEntry> optimizer;
  std::map<std::string, std::string> meta;

  [[nodiscard]] const TableEntry* find_parameter(const std::string& name) const;
  [[nodiscard]] const TableEntry* find_optimizer(const std::string& name) const;
  // Throws FormatError if the key is absent.
  [[nodiscard]] const std::string& meta_value(const std::string& key) const;
};

template <typename T>
TableEntry to_entry(const std::string& name, const Tensor<T>& t);

// Copies entry values into `dst` in place. Throws FormatError on a shape or
// dtype mismatch.
template <typename T>
void assign_entry(const TableEntry& entry, Tensor<T>& dst);

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt);
// Throws FormatError (bad magic), VersionError, or LengthError (truncation).
Checkpoint deserialize(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace adanet::nn
