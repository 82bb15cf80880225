#ifndef RESMIA_DATASET_H_
#define RESMIA_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <utility>
#include <vector>

#include "resmia/image.h"

namespace resmia {

enum class Split { kTrain, kTest, kSynthetic };
std::string_view SplitName(Split split);

struct Sample {
  ImageTensor image;
  int label = 0;
  // Index within the original split; stable across runs.
  std::int64_t id = 0;
};

struct LabeledDataset {
  std::vector<Sample> samples;
  int num_classes = 0;
  Split split = Split::kSynthetic;

  std::size_t size() const { return samples.size(); }
  // Throws DataError on out-of-range labels, duplicate ids, mixed image
  // shapes, or pixels outside [0, 1].
  void Validate() const;
  std::vector<int> ClassCounts() const;
};

// ---- CIFAR-10 binary batches ----------------------------------------------

inline constexpr int kCifarRecordBytes = 3073;
inline constexpr ImageShape kCifarShape{3, 32, 32};

// Parses one batch file: 3073-byte records of 1 label byte followed by the
// red, green and blue 32x32 planes, row-major. Pixels are divided by 255.
// Ids continue from `first_id`. Throws DataError on a missing file, a
// truncated record (naming its byte offset) or a label byte above 9.
std::vector<Sample> ReadCifarBatch(const std::filesystem::path& path,
                                   std::int64_t first_id = 0);

// Inverse of ReadCifarBatch; pixels are rounded to the nearest 1/255 step.
void WriteCifarBatch(const std::filesystem::path& path,
                     const std::vector<Sample>& samples);

// Reads data_batch_1.bin .. data_batch_5.bin and test_batch.bin.
std::pair<LabeledDataset, LabeledDataset> LoadCifar10(
    const std::filesystem::path& dir);

// First `per_class` samples of each class after a seeded shuffle; ids kept.
// Throws DataError if some class has fewer samples.
LabeledDataset SubsetPerClass(const LabeledDataset& data, int per_class,
                              std::uint64_t seed);

// ---- Synthetic images ------------------------------------------------------

// Each class owns a smooth template: a flat base colour per channel plus a
// few low-frequency cosine waves. A sample adds a per-channel colour offset
// and pixel noise with zero mean on every detail_block x detail_block block,
// so the noise is invisible once the image is pooled by detail_block. With
// detail_variation v > 0 each sample scales its noise by 1 - v * U(0, 1).
struct SyntheticSpec {
  int classes = 10;
  int per_class = 30;
  ImageShape shape{3, 32, 32};
  double color_spread = 0.4;        // range of class base colours
  double color_jitter = 0.1;        // stddev of per-sample colour offset
  double template_amplitude = 0.0;  // amplitude of the low-frequency waves
  double detail_noise = 0.4;        // stddev of per-pixel fine detail
  double detail_variation = 0.0;    // in [0, 1]
  int detail_block = 2;
};

// Class templates (no per-sample variation) derived from `seed`.
std::vector<ImageTensor> SyntheticTemplates(const SyntheticSpec& spec,
                                            std::uint64_t seed);

// Templates depend on `seed` only, so train and test splits generated with
// the same seed share them; the samples differ per split.
LabeledDataset GenerateSynthetic(const SyntheticSpec& spec, Split split,
                                 std::uint64_t seed);

// ---- Membership evaluation set ---------------------------------------------

struct ClientShard {
  int client_id = 0;
  std::vector<Sample> samples;
};

struct EvalMember {
  std::int64_t sample_id;
  int client_id;
};

struct EvalSet {
  std::vector<EvalMember> members;        // drawn from training shards
  std::vector<std::int64_t> non_members;  // drawn from the test split
  std::vector<int> member_class_counts;
  std::vector<int> non_member_class_counts;
};

// Picks `members_per_client` samples from every shard and
// members_per_client * shards.size() samples from `test`. Members are sorted
// by (client, id) and non-members by id. Throws ConfigError when
// `total_non_members` does not balance the member count and DataError when a
// pool is too small.
EvalSet BuildEvalSet(const std::vector<ClientShard>& shards,
                     const LabeledDataset& test, int members_per_client,
                     int total_non_members, std::uint64_t seed);

}  // namespace resmia

#endif  // RESMIA_DATASET_H_
