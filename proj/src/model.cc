#include "resmia/model.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "resmia/errors.h"

namespace resmia {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

Model::Model(Architecture arch, ModelParams params)
    : arch_(std::move(arch)), params_(std::move(params)) {
  CheckParams(params_, arch_);
}

ProbVector Model::Query(const ImageTensor& image) {
  queries_.fetch_add(1, std::memory_order_relaxed);
  return Forward(params_, arch_, image);
}

namespace {

constexpr std::string_view kMagic = "RESMIACK";

class Writer {
 public:
  template <typename V>
  void Put(V v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    out_.insert(out_.end(), p, p + sizeof(V));
  }
  void PutBytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  std::vector<char> Take() { return std::move(out_); }

 private:
  std::vector<char> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<char>& bytes) : bytes_(bytes) {}

  template <typename V>
  V Get() {
    V v;
    GetBytes(&v, sizeof(V));
    return v;
  }
  void GetBytes(void* dst, std::size_t n) {
    if (n > bytes_.size() - pos_) {
      throw DataError("checkpoint truncated at byte offset " +
                      std::to_string(pos_));
    }
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<char> EncodeCheckpoint(const Checkpoint& ckpt) {
  CheckParams(ckpt.params, ckpt.arch);
  Writer w;
  w.PutBytes(kMagic.data(), kMagic.size());
  w.Put<std::uint32_t>(kCheckpointVersion);
  w.Put<std::uint64_t>(ckpt.seed);
  w.Put<std::uint64_t>(ckpt.config_hash);
  w.Put<std::uint64_t>(ckpt.query_count);
  const ImageShape& in = ckpt.arch.input();
  w.Put<std::uint32_t>(in.channels);
  w.Put<std::uint32_t>(in.height);
  w.Put<std::uint32_t>(in.width);
  w.Put<std::uint32_t>(ckpt.arch.num_classes());
  w.Put<std::uint32_t>(ckpt.arch.layers().size());
  for (const LayerSpec& l : ckpt.arch.layers()) {
    w.Put<std::uint32_t>(static_cast<std::uint32_t>(l.kind));
    w.Put<std::uint32_t>(l.width);
  }
  w.Put<std::uint32_t>(ckpt.params.blocks.size());
  for (const auto& b : ckpt.params.blocks) {
    w.Put<std::uint32_t>(b.shape.size());
    for (int d : b.shape) w.Put<std::uint32_t>(d);
    w.Put<std::uint64_t>(b.values.size());
    w.PutBytes(b.values.data(), b.values.size() * sizeof(float));
  }
  return w.Take();
}

Checkpoint DecodeCheckpoint(const std::vector<char>& bytes) {
  Reader r(bytes);
  char magic[8];
  r.GetBytes(magic, sizeof(magic));
  if (std::string_view(magic, sizeof(magic)) != kMagic) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  const auto version = r.Get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " +
                    std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.seed = r.Get<std::uint64_t>();
  ckpt.config_hash = r.Get<std::uint64_t>();
  ckpt.query_count = r.Get<std::uint64_t>();
  ImageShape in;
  in.channels = static_cast<int>(r.Get<std::uint32_t>());
  in.height = static_cast<int>(r.Get<std::uint32_t>());
  in.width = static_cast<int>(r.Get<std::uint32_t>());
  const int classes = static_cast<int>(r.Get<std::uint32_t>());
  const auto num_layers = r.Get<std::uint32_t>();
  if (num_layers > 1024) throw DataError("implausible layer count");
  std::vector<LayerSpec> layers;
  for (std::uint32_t i = 0; i < num_layers; ++i) {
    const auto kind = r.Get<std::uint32_t>();
    const auto width = r.Get<std::uint32_t>();
    if (kind > static_cast<std::uint32_t>(LayerKind::kDense)) {
      throw DataError("unknown layer kind code " + std::to_string(kind));
    }
    layers.push_back({static_cast<LayerKind>(kind), static_cast<int>(width)});
  }
  try {
    ckpt.arch = Architecture(in, std::move(layers), classes);
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint architecture invalid: ") +
                    e.what());
  }
  const auto num_blocks = r.Get<std::uint32_t>();
  if (num_blocks > 4096) throw DataError("implausible block count");
  for (std::uint32_t i = 0; i < num_blocks; ++i) {
    ParamBlock<float> b;
    const auto rank = r.Get<std::uint32_t>();
    if (rank > 8) throw DataError("implausible tensor rank");
    for (std::uint32_t k = 0; k < rank; ++k) {
      b.shape.push_back(static_cast<int>(r.Get<std::uint32_t>()));
    }
    const auto count = r.Get<std::uint64_t>();
    if (count > bytes.size()) throw DataError("implausible tensor size");
    b.values.resize(count);
    r.GetBytes(b.values.data(), count * sizeof(float));
    ckpt.params.blocks.push_back(std::move(b));
  }
  if (!r.AtEnd()) throw DataError("trailing bytes after checkpoint");
  try {
    CheckParams(ckpt.params, ckpt.arch);
  } catch (const ShapeError& e) {
    throw DataError(std::string("checkpoint parameters invalid: ") + e.what());
  }
  return ckpt;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::vector<char> bytes = EncodeCheckpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return DecodeCheckpoint(bytes);
}

}  // namespace resmia
