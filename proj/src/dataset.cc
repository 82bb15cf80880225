#include "resmia/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "resmia/errors.h"
#include "resmia/random.h"

namespace resmia {

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kTest:
      return "test";
    case Split::kSynthetic:
      return "synthetic";
  }
  return "unknown";
}

void LabeledDataset::Validate() const {
  std::set<std::int64_t> ids;
  for (const Sample& s : samples) {
    if (s.label < 0 || s.label >= num_classes) {
      throw DataError("sample " + std::to_string(s.id) + " has label " +
                      std::to_string(s.label) + " outside [0, " +
                      std::to_string(num_classes) + ")");
    }
    if (!ids.insert(s.id).second) {
      throw DataError("duplicate sample id " + std::to_string(s.id));
    }
    if (s.image.shape() != samples.front().image.shape()) {
      throw DataError("sample " + std::to_string(s.id) +
                      " has a different image shape");
    }
    if (!s.image.AllFinite() || !s.image.WithinUnitRange()) {
      throw DataError("sample " + std::to_string(s.id) +
                      " has pixels outside [0, 1]");
    }
  }
}

std::vector<int> LabeledDataset::ClassCounts() const {
  std::vector<int> counts(num_classes, 0);
  for (const Sample& s : samples) ++counts[s.label];
  return counts;
}

std::vector<Sample> ReadCifarBatch(const std::filesystem::path& path,
                                   std::int64_t first_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing CIFAR-10 batch file " + path.string());
  const std::vector<unsigned char> bytes(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t full = bytes.size() / kCifarRecordBytes;
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw DataError(path.string() + ": truncated record at byte offset " +
                    std::to_string(full * kCifarRecordBytes));
  }
  std::vector<Sample> samples;
  samples.reserve(full);
  for (std::size_t r = 0; r < full; ++r) {
    const unsigned char* rec = bytes.data() + r * kCifarRecordBytes;
    if (rec[0] > 9) {
      throw DataError(path.string() + ": label byte " +
                      std::to_string(rec[0]) + " at byte offset " +
                      std::to_string(r * kCifarRecordBytes) + " exceeds 9");
    }
    std::vector<float> pixels(kCifarRecordBytes - 1);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      pixels[i] = static_cast<float>(rec[i + 1]) / 255.0f;
    }
    samples.push_back({ImageTensor(kCifarShape, std::move(pixels)), rec[0],
                       first_id + static_cast<std::int64_t>(r)});
  }
  return samples;
}

void WriteCifarBatch(const std::filesystem::path& path,
                     const std::vector<Sample>& samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const Sample& s : samples) {
    if (s.image.shape() != kCifarShape || s.label < 0 || s.label > 9) {
      throw DataError("sample " + std::to_string(s.id) +
                      " cannot be encoded as a CIFAR-10 record");
    }
    std::string rec(kCifarRecordBytes, '\0');
    rec[0] = static_cast<char>(s.label);
    const auto data = s.image.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const float v = std::clamp(data[i], 0.0f, 1.0f);
      rec[i + 1] = static_cast<char>(std::lround(v * 255.0f));
    }
    out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::pair<LabeledDataset, LabeledDataset> LoadCifar10(
    const std::filesystem::path& dir) {
  LabeledDataset train{{}, 10, Split::kTrain};
  for (int b = 1; b <= 5; ++b) {
    auto batch = ReadCifarBatch(dir / ("data_batch_" + std::to_string(b) + ".bin"),
                                static_cast<std::int64_t>(train.samples.size()));
    std::move(batch.begin(), batch.end(), std::back_inserter(train.samples));
  }
  LabeledDataset test{ReadCifarBatch(dir / "test_batch.bin"), 10,
                      Split::kTest};
  return {std::move(train), std::move(test)};
}

LabeledDataset SubsetPerClass(const LabeledDataset& data, int per_class,
                              std::uint64_t seed) {
  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(DeriveSeed(seed, {seed_tag::kSubset}));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> taken(data.num_classes, 0);
  std::vector<std::size_t> keep;
  for (std::size_t i : order) {
    const int label = data.samples[i].label;
    if (taken[label] < per_class) {
      ++taken[label];
      keep.push_back(i);
    }
  }
  for (int c = 0; c < data.num_classes; ++c) {
    if (taken[c] < per_class) {
      throw DataError("class " + std::to_string(c) + " has only " +
                      std::to_string(taken[c]) + " samples, need " +
                      std::to_string(per_class));
    }
  }
  std::sort(keep.begin(), keep.end());
  LabeledDataset out{{}, data.num_classes, data.split};
  out.samples.reserve(keep.size());
  for (std::size_t i : keep) out.samples.push_back(data.samples[i]);
  return out;
}

namespace {

void CheckSpec(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw ConfigError("synthetic data needs >= 2 classes");
  if (spec.per_class < 0) throw ConfigError("per_class must be >= 0");
  const ImageShape& s = spec.shape;
  if (s.channels <= 0 || s.height <= 0 || s.width <= 0) {
    throw ConfigError("synthetic image dimensions must be positive");
  }
  if (spec.detail_block < 1 || s.height % spec.detail_block != 0 ||
      s.width % spec.detail_block != 0) {
    throw ConfigError("detail_block must divide the image dimensions");
  }
  if (spec.color_jitter < 0 || spec.detail_noise < 0 ||
      spec.template_amplitude < 0 || spec.color_spread < 0) {
    throw ConfigError("synthetic noise parameters must be non-negative");
  }
  if (spec.detail_variation < 0 || spec.detail_variation > 1) {
    throw ConfigError("detail_variation must lie in [0, 1]");
  }
}

}  // namespace

std::vector<ImageTensor> SyntheticTemplates(const SyntheticSpec& spec,
                                            std::uint64_t seed) {
  CheckSpec(spec);
  std::mt19937_64 rng(DeriveSeed(seed, {seed_tag::kTemplates}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> freq(0, 2);
  constexpr int kWaves = 3;
  const ImageShape& s = spec.shape;
  std::vector<ImageTensor> templates;
  for (int c = 0; c < spec.classes; ++c) {
    ImageTensor t(s);
    for (int ch = 0; ch < s.channels; ++ch) {
      const double base = 0.5 + spec.color_spread * (unit(rng) - 0.5);
      double fx[kWaves], fy[kWaves], phase[kWaves];
      for (int w = 0; w < kWaves; ++w) {
        fx[w] = freq(rng);
        fy[w] = freq(rng);
        phase[w] = 2.0 * std::numbers::pi * unit(rng);
      }
      for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
          double field = 0.0;
          for (int w = 0; w < kWaves; ++w) {
            field += std::cos(2.0 * std::numbers::pi *
                                  (fx[w] * x / s.width + fy[w] * y / s.height) +
                              phase[w]);
          }
          t.at(ch, y, x) = static_cast<float>(
              base + spec.template_amplitude * field / kWaves);
        }
      }
    }
    templates.push_back(std::move(t));
  }
  return templates;
}

LabeledDataset GenerateSynthetic(const SyntheticSpec& spec, Split split,
                                 std::uint64_t seed) {
  const std::vector<ImageTensor> templates = SyntheticTemplates(spec, seed);
  std::mt19937_64 rng(
      DeriveSeed(seed, {seed_tag::kSamples, static_cast<std::uint64_t>(split)}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ImageShape& s = spec.shape;
  const int b = spec.detail_block;
  LabeledDataset out{{}, spec.classes, split};
  out.samples.reserve(static_cast<std::size_t>(spec.classes) * spec.per_class);
  std::vector<double> noise(s.size());
  for (int c = 0; c < spec.classes; ++c) {
    for (int i = 0; i < spec.per_class; ++i) {
      ImageTensor img = templates[c];
      // Drawn only when enabled so fixed-amplitude streams stay unchanged.
      const double amplitude =
          spec.detail_noise *
          (spec.detail_variation > 0 ? 1.0 - spec.detail_variation * unit(rng) : 1.0);
      for (double& v : noise) v = normal(rng);
      for (int ch = 0; ch < s.channels; ++ch) {
        const double offset = spec.color_jitter * normal(rng);
        double* plane = noise.data() + static_cast<std::size_t>(ch) * s.height * s.width;
        for (int by = 0; by < s.height; by += b) {
          for (int bx = 0; bx < s.width; bx += b) {
            double mean = 0.0;
            for (int y = by; y < by + b; ++y) {
              for (int x = bx; x < bx + b; ++x) mean += plane[y * s.width + x];
            }
            mean /= b * b;
            for (int y = by; y < by + b; ++y) {
              for (int x = bx; x < bx + b; ++x) {
                const double detail =
                    b > 1 ? plane[y * s.width + x] - mean : plane[y * s.width + x];
                const double v =
                    img.at(ch, y, x) + offset + amplitude * detail;
                img.at(ch, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
              }
            }
          }
        }
      }
      out.samples.push_back(
          {std::move(img), c, static_cast<std::int64_t>(out.samples.size())});
    }
  }
  return out;
}

EvalSet BuildEvalSet(const std::vector<ClientShard>& shards,
                     const LabeledDataset& test, int members_per_client,
                     int total_non_members, std::uint64_t seed) {
  if (shards.empty()) throw ConfigError("no client shards");
  if (members_per_client <= 0) {
    throw ConfigError("members_per_client must be positive");
  }
  const long long members =
      static_cast<long long>(members_per_client) * shards.size();
  if (total_non_members != members) {
    throw ConfigError("unbalanced evaluation set: " + std::to_string(members) +
                      " members vs " + std::to_string(total_non_members) +
                      " non-members");
  }
  EvalSet eval;
  eval.member_class_counts.assign(test.num_classes, 0);
  eval.non_member_class_counts.assign(test.num_classes, 0);
  for (const ClientShard& shard : shards) {
    if (static_cast<int>(shard.samples.size()) < members_per_client) {
      throw DataError("client " + std::to_string(shard.client_id) + " has " +
                      std::to_string(shard.samples.size()) +
                      " samples, need " + std::to_string(members_per_client));
    }
    std::vector<std::size_t> idx(shard.samples.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(DeriveSeed(
        seed, {seed_tag::kEvalSet, static_cast<std::uint64_t>(shard.client_id)}));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(members_per_client);
    std::vector<EvalMember> picked;
    for (std::size_t i : idx) {
      const Sample& s = shard.samples[i];
      picked.push_back({s.id, shard.client_id});
      if (s.label < static_cast<int>(eval.member_class_counts.size())) {
        ++eval.member_class_counts[s.label];
      }
    }
    std::sort(picked.begin(), picked.end(),
              [](const EvalMember& a, const EvalMember& b) {
                return a.sample_id < b.sample_id;
              });
    eval.members.insert(eval.members.end(), picked.begin(), picked.end());
  }
  if (static_cast<long long>(test.samples.size()) < total_non_members) {
    throw DataError("test split has " + std::to_string(test.samples.size()) +
                    " samples, need " + std::to_string(total_non_members));
  }
  std::vector<std::size_t> idx(test.samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(DeriveSeed(seed, {seed_tag::kEvalSet, ~0ULL}));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(total_non_members);
  for (std::size_t i : idx) {
    eval.non_members.push_back(test.samples[i].id);
    ++eval.non_member_class_counts[test.samples[i].label];
  }
  std::sort(eval.non_members.begin(), eval.non_members.end());
  return eval;
}

}  // namespace resmia
