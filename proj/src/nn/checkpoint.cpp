#include "nd/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "nd/core/error.hpp"

namespace nd::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

constexpr char kMagic[4] = {'N', 'D', 'C', 'K'};

struct Entry {
  std::uint32_t layer;
  std::uint8_t kind;
  std::string name;
  Shape shape;
};

template <typename T>
std::vector<std::pair<Entry, Tensor<T>*>> entries(Model<T>& model) {
  std::vector<std::pair<Entry, Tensor<T>*>> out;
  auto layer_of = [](const std::string& name) {
    return static_cast<std::uint32_t>(std::stoul(name.substr(0, name.find('.'))));
  };
  for (auto& p : model.named_params()) {
    out.push_back({{layer_of(p.name), 0, p.name, p.param->value.shape()}, &p.param->value});
  }
  for (auto& b : model.named_buffers()) {
    out.push_back({{layer_of(b.name), 1, b.name, b.tensor->shape()}, b.tensor});
  }
  return out;
}

template <typename V>
void put(std::ofstream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

class Reader {
 public:
  Reader(std::ifstream& is, const std::filesystem::path& path) : is_(is), path_(path) {}

  template <typename V>
  V get() {
    V v{};
    bytes(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  }

  void bytes(char* dst, std::size_t n) {
    is_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) {
      throw FormatError("checkpoint " + path_.string() + " is truncated");
    }
  }

 private:
  std::ifstream& is_;
  const std::filesystem::path& path_;
};

}  // namespace

template <typename T>
void save_checkpoint(Model<T>& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw MissingFileError("cannot open " + path.string() + " for writing");
  const auto all = entries(model);
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint8_t>(os, sizeof(T));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(all.size()));
  for (const auto& [e, t] : all) {
    put<std::uint32_t>(os, e.layer);
    put<std::uint8_t>(os, e.kind);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.shape.size()));
    for (std::size_t d : e.shape) put<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(t->ptr()),
             static_cast<std::streamsize>(t->size() * sizeof(T)));
  }
  if (!os) throw FormatError("write to " + path.string() + " failed");
}

template <typename T>
void load_checkpoint(Model<T>& model, const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingFileError("checkpoint " + path.string() + " not found");
  Reader r(is, path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError(path.string() + " is not a checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) + " is not supported");
  }
  const auto width = r.get<std::uint8_t>();
  if (width != sizeof(T)) {
    throw FormatError("checkpoint holds " + std::to_string(width * 8) + "-bit values, model uses " +
                      std::to_string(sizeof(T) * 8) + "-bit");
  }
  auto all = entries(model);
  const auto count = r.get<std::uint32_t>();
  if (count != all.size()) {
    throw FormatError("checkpoint has " + std::to_string(count) + " entries, model expects " +
                      std::to_string(all.size()));
  }
  // Read everything first so a bad file leaves the model untouched.
  std::vector<std::vector<T>> values(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const Entry& want = all[i].first;
    const auto layer = r.get<std::uint32_t>();
    const auto kind = r.get<std::uint8_t>();
    std::string name(r.get<std::uint32_t>(), '\0');
    r.bytes(name.data(), name.size());
    Shape shape(r.get<std::uint32_t>());
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
    if (layer != want.layer || kind != want.kind || name != want.name || shape != want.shape) {
      throw FormatError("checkpoint entry " + std::to_string(i) + " is " + name + " " +
                        to_string(shape) + ", model expects " + want.name + " " +
                        to_string(want.shape));
    }
    values[i].resize(shape_size(shape));
    r.bytes(reinterpret_cast<char*>(values[i].data()), values[i].size() * sizeof(T));
  }
  for (std::uint32_t i = 0; i < count; ++i) all[i].second->storage() = std::move(values[i]);
  model.buffers_loaded();
}

template void save_checkpoint(Model<float>&, const std::filesystem::path&);
template void save_checkpoint(Model<double>&, const std::filesystem::path&);
template void load_checkpoint(Model<float>&, const std::filesystem::path&);
template void load_checkpoint(Model<double>&, const std::filesystem::path&);

}  // namespace nd::nn
