#include "adanet/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "adanet/errors.hpp"

namespace adanet::nn {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  std::vector<std::uint8_t> out;

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw LengthError("checkpoint truncated at byte " + std::to_string(pos_));
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

 private:
  std::uint64_t get_le(std::size_t n) {
    auto s = take(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
    return v;
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::size_t dtype_size(DType d) {
  switch (d) {
    case DType::kF32: return 4;
    case DType::kF64: return 8;
  }
  throw VersionError("unknown checkpoint dtype code");
}

void write_table(Writer& w, const std::vector<TableEntry>& table) {
  w.u32(static_cast<std::uint32_t>(table.size()));
  for (const auto& e : table) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.raw(e.name.data(), e.name.size());
    w.u8(static_cast<std::uint8_t>(e.dtype));
    w.u32(static_cast<std::uint32_t>(e.shape.size()));
    for (auto x : e.shape) w.u64(x);
    w.raw(e.bytes.data(), e.bytes.size());
  }
}

std::vector<TableEntry> read_table(Reader& r) {
  const std::uint32_t count = r.u32();
  std::vector<TableEntry> table;
  for (std::uint32_t i = 0; i < count; ++i) {
    TableEntry e;
    const std::uint32_t name_len = r.u32();
    auto name = r.take(name_len);
    e.name.assign(name.begin(), name.end());
    const std::uint8_t code = r.u8();
    if (code != 1 && code != 2) throw VersionError("checkpoint entry '" + e.name + "' has unknown dtype code");
    e.dtype = static_cast<DType>(code);
    const std::uint32_t rank = r.u32();
    for (std::uint32_t k = 0; k < rank; ++k) e.shape.push_back(r.u64());
    auto payload = r.take(shape_numel(e.shape) * dtype_size(e.dtype));
    e.bytes.assign(payload.begin(), payload.end());
    table.push_back(std::move(e));
  }
  return table;
}

const TableEntry* find_in(const std::vector<TableEntry>& table, const std::string& name) {
  for (const auto& e : table) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

template <typename T>
using UintOf = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;

}  // namespace

const TableEntry* Checkpoint::find_parameter(const std::string& name) const { return find_in(parameters, name); }
const TableEntry* Checkpoint::find_optimizer(const std::string& name) const { return find_in(optimizer, name); }

const std::string& Checkpoint::meta_value(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw FormatError("checkpoint has no '" + key + "' entry");
  return it->second;
}

template <typename T>
TableEntry to_entry(const std::string& name, const Tensor<T>& t) {
  TableEntry e;
  e.name = name;
  e.dtype = sizeof(T) == 4 ? DType::kF32 : DType::kF64;
  e.shape = t.shape();
  e.bytes.reserve(t.numel() * sizeof(T));
  for (T v : t.data()) {
    const auto bits = std::bit_cast<UintOf<T>>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) e.bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return e;
}

template <typename T>
void assign_entry(const TableEntry& entry, Tensor<T>& dst) {
  const DType want = sizeof(T) == 4 ? DType::kF32 : DType::kF64;
  if (entry.dtype != want) throw FormatError("checkpoint entry '" + entry.name + "' has the wrong dtype");
  if (entry.shape != dst.shape()) {
    throw FormatError("checkpoint entry '" + entry.name + "' has shape " + shape_str(entry.shape) + ", expected " +
                      shape_str(dst.shape()));
  }
  auto out = dst.mutable_data();
  for (std::size_t k = 0; k < out.size(); ++k) {
    UintOf<T> bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<UintOf<T>>(entry.bytes[k * sizeof(T) + i]) << (8 * i);
    }
    out[k] = std::bit_cast<T>(bits);
  }
}

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt) {
  Writer w;
  w.raw("ADAN", 4);
  w.u32(kCheckpointVersion);
  write_table(w, ckpt.parameters);
  write_table(w, ckpt.optimizer);
  std::string meta;
  for (const auto& [k, v] : ckpt.meta) meta += k + "=" + v + "\n";
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.raw(meta.data(), meta.size());
  return std::move(w.out);
}

Checkpoint deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "ADAN", 4) != 0) throw FormatError("not a checkpoint (bad magic)");
  r.take(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.parameters = read_table(r);
  ckpt.optimizer = read_table(r);
  const std::uint32_t meta_len = r.u32();
  auto meta = r.take(meta_len);
  std::string text(meta.begin(), meta.end());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = text.find('\n', pos);
    const std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    pos = eol == std::string::npos ? text.size() : eol + 1;
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("malformed checkpoint metadata line '" + line + "'");
    ckpt.meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint metadata");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = serialize(ckpt);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

template TableEntry to_entry(const std::string&, const Tensor<float>&);
template TableEntry to_entry(const std::string&, const Tensor<double>&);
template void assign_entry(const TableEntry&, Tensor<float>&);
template void assign_entry(const TableEntry&, Tensor<double>&);

}  // namespace adanet::nn
