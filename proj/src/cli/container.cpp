#include "dspg/cli/container.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dspg/error.hpp"

namespace dspg::io {

namespace {

static_assert(std::endian::native == std::endian::little, "payloads are copied as little-endian");

class Writer {
 public:
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(s[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto s = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw FormatError("container truncated");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> b) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in bounded pieces.
  std::size_t off = 0;
  while (off < b.size()) {
    const std::size_t n = std::min<std::size_t>(b.size() - off, 1u << 30);
    crc = crc32(crc, b.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

template <class T>
Chunk make_chunk(const std::string& name, DType dtype, numerics::Shape shape, std::span<const T> v) {
  if (numerics::shape_numel(shape) != v.size()) {
    throw DimensionError("chunk '" + name + "': shape " + numerics::shape_string(shape) + " does not hold " +
                         std::to_string(v.size()) + " values");
  }
  Chunk c{name, dtype, std::move(shape), {}};
  c.payload.resize(v.size_bytes());
  if (!v.empty()) std::memcpy(c.payload.data(), v.data(), v.size_bytes());
  return c;
}

template <class T>
std::vector<T> unpack(const Chunk& c) {
  std::vector<T> out(c.payload.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), c.payload.data(), c.payload.size());
  return out;
}

}  // namespace

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::f32:
    case DType::i32:
      return 4;
    case DType::u8:
      return 1;
    case DType::f64:
    case DType::u64:
      return 8;
  }
  throw FormatError("unknown dtype tag " + std::to_string(static_cast<int>(t)));
}

const char* dtype_name(DType t) {
  switch (t) {
    case DType::f32: return "f32";
    case DType::i32: return "i32";
    case DType::u8: return "u8";
    case DType::f64: return "f64";
    case DType::u64: return "u64";
  }
  return "?";
}

void Container::put(Chunk chunk) {
  if (has(chunk.name)) throw FormatError("duplicate chunk name '" + chunk.name + "'");
  chunks_.push_back(std::move(chunk));
}

void Container::put_f32(const std::string& name, const numerics::Tensor& t) { put_f32(name, t.shape(), t.data()); }
void Container::put_f32(const std::string& name, numerics::Shape shape, std::span<const float> v) {
  put(make_chunk(name, DType::f32, std::move(shape), v));
}
void Container::put_i32(const std::string& name, numerics::Shape shape, std::span<const std::int32_t> v) {
  put(make_chunk(name, DType::i32, std::move(shape), v));
}
void Container::put_u8(const std::string& name, numerics::Shape shape, std::span<const std::uint8_t> v) {
  put(make_chunk(name, DType::u8, std::move(shape), v));
}
void Container::put_f64(const std::string& name, numerics::Shape shape, std::span<const double> v) {
  put(make_chunk(name, DType::f64, std::move(shape), v));
}
void Container::put_u64(const std::string& name, numerics::Shape shape, std::span<const std::uint64_t> v) {
  put(make_chunk(name, DType::u64, std::move(shape), v));
}
void Container::put_string(const std::string& name, const std::string& s) {
  put_u8(name, {s.size()}, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

bool Container::has(const std::string& name) const {
  for (const Chunk& c : chunks_)
    if (c.name == name) return true;
  return false;
}

const Chunk& Container::chunk(const std::string& name) const {
  for (const Chunk& c : chunks_)
    if (c.name == name) return c;
  throw FormatError("missing chunk '" + name + "'");
}

const Chunk& Container::typed(const std::string& name, DType want) const {
  const Chunk& c = chunk(name);
  if (c.dtype != want) {
    throw FormatError("chunk '" + name + "' has dtype " + dtype_name(c.dtype) + ", expected " + dtype_name(want));
  }
  return c;
}

numerics::Tensor Container::get_f32(const std::string& name) const {
  const Chunk& c = typed(name, DType::f32);
  return numerics::Tensor(c.shape, unpack<float>(c));
}
std::vector<std::int32_t> Container::get_i32(const std::string& name) const { return unpack<std::int32_t>(typed(name, DType::i32)); }
std::vector<std::uint8_t> Container::get_u8(const std::string& name) const { return typed(name, DType::u8).payload; }
std::vector<double> Container::get_f64(const std::string& name) const { return unpack<double>(typed(name, DType::f64)); }
std::vector<std::uint64_t> Container::get_u64(const std::string& name) const {
  return unpack<std::uint64_t>(typed(name, DType::u64));
}
std::string Container::get_string(const std::string& name) const {
  const auto& p = typed(name, DType::u8).payload;
  return std::string(p.begin(), p.end());
}

std::vector<std::uint8_t> Container::serialize() const {
  Writer w;
  w.raw("DSPG", 4);
  w.u32(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(chunks_.size()));
  for (const Chunk& c : chunks_) {
    w.u32(static_cast<std::uint32_t>(c.name.size()));
    w.raw(c.name.data(), c.name.size());
    w.u8(static_cast<std::uint8_t>(c.dtype));
    w.u32(static_cast<std::uint32_t>(c.shape.size()));
    for (std::size_t d : c.shape) w.u64(d);
  }
  for (const Chunk& c : chunks_) w.raw(c.payload.data(), c.payload.size());
  w.u32(crc32_of(w.bytes));
  return std::move(w.bytes);
}

Container Container::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) throw FormatError("container truncated");
  if (std::memcmp(bytes.data(), "DSPG", 4) != 0) throw FormatError("not a DSPG container (bad magic)");
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (tail.u32() != crc32_of(body)) throw FormatError("container CRC mismatch");

  Reader r(body);
  r.take(4);
  const std::uint32_t version = r.u32();
  if (version != kContainerVersion) {
    throw FormatError("unsupported container version " + std::to_string(version) + " (expected " +
                      std::to_string(kContainerVersion) + ")");
  }
  const std::uint32_t count = r.u32();
  Container out;
  std::vector<Chunk> table;
  for (std::uint32_t i = 0; i < count; ++i) {
    Chunk c;
    const std::uint32_t len = r.u32();
    auto name = r.take(len);
    c.name.assign(name.begin(), name.end());
    c.dtype = static_cast<DType>(r.u8());
    dtype_size(c.dtype);  // validates the tag
    const std::uint32_t rank = r.u32();
    if (rank > 16) throw FormatError("chunk '" + c.name + "' has implausible rank");
    for (std::uint32_t k = 0; k < rank; ++k) c.shape.push_back(static_cast<std::size_t>(r.u64()));
    table.push_back(std::move(c));
  }
  for (Chunk& c : table) {
    const std::size_t n = numerics::shape_numel(c.shape) * dtype_size(c.dtype);
    auto p = r.take(n);
    c.payload.assign(p.begin(), p.end());
    out.put(std::move(c));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after container payloads");
  return out;
}

void Container::write(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArgumentError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ArgumentError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Container Container::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(bytes);
}

}  // namespace dspg::io
