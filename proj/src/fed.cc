#include "resmia/fed.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "resmia/errors.h"
#include "resmia/parallel.h"
#include "resmia/random.h"

namespace resmia {

void FedConfig::Validate() const {
  if (num_clients < 1) throw ConfigError("num_clients must be >= 1");
  if (rounds < 0) throw ConfigError("rounds must be >= 0");
  if (local_epochs < 0) throw ConfigError("local_epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr >= 0.0f)) throw ConfigError("lr must be >= 0");
}

std::vector<ClientShard> Partition(const LabeledDataset& data, int n,
                                   std::uint64_t seed) {
  if (n < 1) throw ConfigError("number of clients must be >= 1");
  if (data.samples.empty()) throw ConfigError("cannot partition an empty dataset");
  if (static_cast<std::size_t>(n) > data.samples.size()) {
    throw ConfigError(std::to_string(n) + " clients exceed dataset size " +
                      std::to_string(data.samples.size()));
  }
  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(DeriveSeed(seed, {seed_tag::kPartition}));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t base = order.size() / n;
  const std::size_t extra = order.size() % n;
  std::vector<ClientShard> shards(n);
  std::size_t pos = 0;
  for (int c = 0; c < n; ++c) {
    const std::size_t len = base + (static_cast<std::size_t>(c) < extra ? 1 : 0);
    shards[c].client_id = c;
    shards[c].samples.reserve(len);
    for (std::size_t k = 0; k < len; ++k) {
      shards[c].samples.push_back(data.samples[order[pos++]]);
    }
  }
  return shards;
}

std::uint64_t LocalTrainSeed(std::uint64_t master, int round, int client) {
  return DeriveSeed(master, {seed_tag::kLocalTrain,
                             static_cast<std::uint64_t>(round),
                             static_cast<std::uint64_t>(client)});
}

ModelParams LocalTrain(const ModelParams& global, const Architecture& arch,
                       const ClientShard& shard, const FedConfig& cfg,
                       int round, double* mean_loss) {
  if (shard.samples.empty()) {
    throw ConfigError("client " + std::to_string(shard.client_id) +
                      " has an empty shard");
  }
  ModelParams params = global;
  std::mt19937_64 rng(LocalTrainSeed(cfg.seed, round, shard.client_id));
  std::vector<std::size_t> order(shard.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<BatchItem> batch;
  double loss_sum = 0.0;
  int steps = 0;
  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t k = start; k < end; ++k) {
        const Sample& s = shard.samples[order[k]];
        batch.push_back({&s.image, s.label});
      }
      LossAndGrads<float> lg = LossAndGradients(params, arch, batch);
      ApplySgdStep(params, lg.grads, cfg.lr);
      loss_sum += lg.loss;
      ++steps;
    }
  }
  if (mean_loss != nullptr) *mean_loss = steps > 0 ? loss_sum / steps : 0.0;
  return params;
}

ModelParams FedAvgAggregate(std::span<const ModelParams> client_params,
                            std::span<const std::size_t> client_sizes) {
  if (client_params.empty()) throw ConfigError("fedavg: no client models");
  if (client_params.size() != client_sizes.size()) {
    throw ConfigError("fedavg: " + std::to_string(client_params.size()) +
                      " models but " + std::to_string(client_sizes.size()) +
                      " sizes");
  }
  const double total = std::accumulate(client_sizes.begin(), client_sizes.end(), 0.0);
  if (total <= 0.0) throw ConfigError("fedavg: total client size is zero");
  for (const ModelParams& p : client_params) {
    if (!p.SameShapeAs(client_params.front())) {
      throw ShapeError("fedavg: client parameter shapes differ");
    }
  }
  ModelParams out = client_params.front();
  std::vector<double> acc;
  for (std::size_t b = 0; b < out.blocks.size(); ++b) {
    acc.assign(out.blocks[b].values.size(), 0.0);
    for (std::size_t c = 0; c < client_params.size(); ++c) {
      const double w = static_cast<double>(client_sizes[c]);
      const auto& v = client_params[c].blocks[b].values;
      for (std::size_t i = 0; i < v.size(); ++i) acc[i] += w * v[i];
    }
    auto& dst = out.blocks[b].values;
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = static_cast<float>(acc[i] / total);
    }
  }
  return out;
}

double Accuracy(const ModelParams& params, const Architecture& arch,
                std::span<const Sample> samples) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const Sample& s : samples) {
    const std::vector<float> logits = Logits(params, arch, s.image);
    const int pred = static_cast<int>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (pred == s.label) ++correct;
  }
  return static_cast<double>(correct) / samples.size();
}

ModelParams InitialParams(const Architecture& arch, const FedConfig& cfg) {
  return InitParams(arch, DeriveSeed(cfg.seed, {seed_tag::kInit}));
}

TrainingResult RunFederatedTraining(const std::vector<ClientShard>& shards,
                                    const LabeledDataset& test,
                                    const Architecture& arch,
                                    const FedConfig& cfg) {
  cfg.Validate();
  if (shards.empty()) throw ConfigError("no client shards");
  TrainingResult result;
  result.params = InitialParams(arch, cfg);
  std::vector<Sample> train_union;
  std::vector<std::size_t> sizes;
  for (const ClientShard& s : shards) {
    sizes.push_back(s.samples.size());
    train_union.insert(train_union.end(), s.samples.begin(), s.samples.end());
  }
  std::vector<ModelParams> local(shards.size());
  std::vector<double> losses(shards.size());
  for (int round = 0; round < cfg.rounds; ++round) {
    const ModelParams& broadcast = result.params;
    ParallelFor(shards.size(), cfg.workers, [&](std::size_t c) {
      local[c] = LocalTrain(broadcast, arch, shards[c], cfg, round, &losses[c]);
    });
    result.params = FedAvgAggregate(local, sizes);
    RoundLog entry;
    entry.round = round + 1;
    entry.mean_client_loss =
        std::accumulate(losses.begin(), losses.end(), 0.0) / losses.size();
    entry.train_acc = Accuracy(result.params, arch, train_union);
    entry.test_acc = Accuracy(result.params, arch, test.samples);
    result.log.push_back(entry);
  }
  return result;
}

void WriteTrainingLog(const std::filesystem::path& path,
                      const std::vector<RoundLog>& log,
                      const std::string& header_comment) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write training log " + path.string());
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "round,train_acc,test_acc,mean_client_loss\n";
  char line[128];
  for (const RoundLog& r : log) {
    std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f\n", r.round,
                  r.train_acc, r.test_acc, r.mean_client_loss);
    out << line;
  }
}

}  // namespace resmia
