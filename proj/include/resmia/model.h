#ifndef RESMIA_MODEL_H_
#define RESMIA_MODEL_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "resmia/black_box.h"
#include "resmia/nn.h"

namespace resmia {

// Trained classifier exposed through the black-box facade. Query is safe to
// call from several threads; the counter is atomic.
class Model final : public BlackBox {
 public:
  // Throws ShapeError if `params` do not fit `arch`.
  Model(Architecture arch, ModelParams params);

  ProbVector Query(const ImageTensor& image) override;
  std::uint64_t query_count() const override {
    return queries_.load(std::memory_order_relaxed);
  }
  void set_query_count(std::uint64_t n) {
    queries_.store(n, std::memory_order_relaxed);
  }

  const Architecture& architecture() const { return arch_; }
  const ModelParams& params() const { return params_; }

 private:
  Architecture arch_;
  ModelParams params_;
  std::atomic<std::uint64_t> queries_{0};
};

// On-disk model container. Layout (all integers little-endian):
//
//   magic        8 bytes  "RESMIACK"
//   version      u32      currently 1
//   seed         u64      master training seed
//   config_hash  u64      hash of the training configuration
//   query_count  u64
//   input        3 x u32  channels, height, width
//   num_classes  u32
//   num_layers   u32, then per layer: kind u32, width u32
//   num_blocks   u32, then per block:
//                rank u32, rank x u32 dims, count u64, count x f32 values
//
// Layer kinds are encoded in LayerKind declaration order.
struct Checkpoint {
  Architecture arch;
  ModelParams params;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t query_count = 0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<char> EncodeCheckpoint(const Checkpoint& ckpt);
// Throws DataError on a malformed buffer.
Checkpoint DecodeCheckpoint(const std::vector<char>& bytes);

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace resmia

#endif  // RESMIA_MODEL_H_
