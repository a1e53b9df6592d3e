#include "mrmp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mrmp {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'M', 'R', 'M', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw std::runtime_error("truncated checkpoint: " + path);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& tensors,
                     CheckpointDtype dtype) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<std::uint32_t>(t.shape().size()));
    for (int d : t.shape()) write_u32(out, static_cast<std::uint32_t>(d));
    write_u32(out, static_cast<std::uint32_t>(dtype));
    if (dtype == CheckpointDtype::F64) {
      out.write(reinterpret_cast<const char*>(t.values().data()),
                static_cast<std::streamsize>(t.values().size() * sizeof(double)));
    } else {
      std::vector<float> f(t.values().begin(), t.values().end());
      out.write(reinterpret_cast<const char*>(f.data()),
                static_cast<std::streamsize>(f.size() * sizeof(float)));
    }
  }
  if (!out) throw std::runtime_error("write failure on checkpoint: " + path);
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not an MRMP checkpoint: " + path);
  const std::uint32_t version = read_u32(in, path);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version) + ": " + path);
  const std::uint32_t count = read_u32(in, path);
  std::vector<std::pair<std::string, Tensor>> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len))
      throw std::runtime_error("truncated checkpoint: " + path);
    const std::uint32_t rank = read_u32(in, path);
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<int>(read_u32(in, path));
    const std::uint32_t tag = read_u32(in, path);
    const auto n = static_cast<std::size_t>(shape_size(shape));
    std::vector<real> values(n);
    if (tag == static_cast<std::uint32_t>(CheckpointDtype::F64)) {
      if (!in.read(reinterpret_cast<char*>(values.data()),
                   static_cast<std::streamsize>(n * sizeof(double))))
        throw std::runtime_error("truncated checkpoint: " + path);
    } else if (tag == static_cast<std::uint32_t>(CheckpointDtype::F32)) {
      std::vector<float> f(n);
      if (!in.read(reinterpret_cast<char*>(f.data()),
                   static_cast<std::streamsize>(n * sizeof(float))))
        throw std::runtime_error("truncated checkpoint: " + path);
      for (std::size_t j = 0; j < n; ++j) values[j] = f[j];
    } else {
      throw std::runtime_error("unknown dtype tag " + std::to_string(tag) +
                               " in checkpoint: " + path);
    }
    tensors.emplace_back(std::move(name),
                         Tensor::from(std::move(shape), std::move(values)));
  }
  return tensors;
}

void save_model(const std::string& path, const GcnModel& model,
                CheckpointDtype dtype) {
  save_checkpoint(path, model.named_tensors(), dtype);
}

void load_model(const std::string& path, GcnModel& model) {
  const auto stored = load_checkpoint(path);
  auto target = model.named_tensors();
  for (auto& [name, dst] : target) {
    bool found = false;
    for (const auto& [sname, src] : stored) {
      if (sname != name) continue;
      if (src.shape() != dst.shape())
        throw std::runtime_error("checkpoint tensor '" + name + "' has shape " +
                                 shape_str(src.shape()) + ", model expects " +
                                 shape_str(dst.shape()));
      dst.values() = src.values();
      found = true;
      break;
    }
    if (!found)
      throw std::runtime_error("checkpoint is missing tensor '" + name + "'");
  }
}

}  // namespace mrmp
