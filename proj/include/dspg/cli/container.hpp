#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dspg/numerics/tensor.hpp"

namespace dspg::io {

// On-disk layout (all integers little-endian):
//   "DSPG" | u32 version | u32 chunk count
//   per chunk: u32 name length | name (UTF-8) | u8 dtype | u32 rank | u64 dims[rank]
//   payloads in table order, each product(shape) * dtype size bytes
//   u32 CRC-32 of every preceding byte
enum class DType : std::uint8_t { f32 = 0, i32 = 1, u8 = 2, f64 = 3, u64 = 4 };

inline constexpr std::uint32_t kContainerVersion = 1;

std::size_t dtype_size(DType t);
const char* dtype_name(DType t);

struct Chunk {
  std::string name;
  DType dtype = DType::u8;
  numerics::Shape shape;
  std::vector<std::uint8_t> payload;
};

class Container {
 public:
  void put_f32(const std::string& name, const numerics::Tensor& t);
  void put_f32(const std::string& name, numerics::Shape shape, std::span<const float> v);
  void put_i32(const std::string& name, numerics::Shape shape, std::span<const std::int32_t> v);
  void put_u8(const std::string& name, numerics::Shape shape, std::span<const std::uint8_t> v);
  void put_f64(const std::string& name, numerics::Shape shape, std::span<const double> v);
  void put_u64(const std::string& name, numerics::Shape shape, std::span<const std::uint64_t> v);
  void put_string(const std::string& name, const std::string& s);

  bool has(const std::string& name) const;
  const Chunk& chunk(const std::string& name) const;  // FormatError when absent
  numerics::Tensor get_f32(const std::string& name) const;
  std::vector<std::int32_t> get_i32(const std::string& name) const;
  std::vector<std::uint8_t> get_u8(const std::string& name) const;
  std::vector<double> get_f64(const std::string& name) const;
  std::vector<std::uint64_t> get_u64(const std::string& name) const;
  std::string get_string(const std::string& name) const;

  const std::vector<Chunk>& chunks() const { return chunks_; }

  std::vector<std::uint8_t> serialize() const;
  static Container parse(std::span<const std::uint8_t> bytes);
  // Writes to a temporary sibling and renames, so readers never see a
  // partially written file.
  void write(const std::filesystem::path& path) const;
  static Container read(const std::filesystem::path& path);

 private:
  void put(Chunk chunk);
  const Chunk& typed(const std::string& name, DType want) const;
  std::vector<Chunk> chunks_;
};

}  // namespace dspg::io
