#ifndef RESMIA_FED_H_
#define RESMIA_FED_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "resmia/dataset.h"
#include "resmia/nn.h"

namespace resmia {

struct FedConfig {
  int num_clients = 5;
  int rounds = 30;
  int local_epochs = 2;
  int batch_size = 32;
  float lr = 0.05f;
  std::uint64_t seed = 0;
  // Client training fan-out. Results do not depend on it.
  int workers = 1;

  void Validate() const;  // throws ConfigError
};

// Seeded shuffle followed by a contiguous split: the first
// size % n shards receive one extra sample. Throws ConfigError if n < 1 or
// n exceeds the dataset size.
std::vector<ClientShard> Partition(const LabeledDataset& data, int n,
                                   std::uint64_t seed);

// Seed of the mini-batch shuffler for one client in one round.
std::uint64_t LocalTrainSeed(std::uint64_t master, int round, int client);

// `cfg.local_epochs` epochs of mini-batch SGD over `shard` starting from
// `global`. Each epoch reshuffles the shard with a generator seeded once per
// (round, client); the last batch of an epoch may be short.
ModelParams LocalTrain(const ModelParams& global, const Architecture& arch,
                       const ClientShard& shard, const FedConfig& cfg,
                       int round, double* mean_loss = nullptr);

// Weighted elementwise mean with weights client_sizes / total. Throws
// ShapeError on mismatched shapes and ConfigError on empty input or a zero
// total size.
ModelParams FedAvgAggregate(std::span<const ModelParams> client_params,
                            std::span<const std::size_t> client_sizes);

// Fraction of samples whose argmax prediction equals the label.
double Accuracy(const ModelParams& params, const Architecture& arch,
                std::span<const Sample> samples);

struct RoundLog {
  int round = 0;
  double train_acc = 0;
  double test_acc = 0;
  double mean_client_loss = 0;
};

struct TrainingResult {
  ModelParams params;
  std::vector<RoundLog> log;
};

// Broadcast -> local training on every shard -> FedAvg, `cfg.rounds` times,
// starting from InitParams(arch, DeriveSeed(cfg.seed, kInit)). Training
// accuracy is measured on the union of the shards; `test` may be empty.
TrainingResult RunFederatedTraining(const std::vector<ClientShard>& shards,
                                    const LabeledDataset& test,
                                    const Architecture& arch,
                                    const FedConfig& cfg);

ModelParams InitialParams(const Architecture& arch, const FedConfig& cfg);

// CSV with columns round,train_acc,test_acc,mean_client_loss. Lines starting
// with '#' carry `header_comment`.
void WriteTrainingLog(const std::filesystem::path& path,
                      const std::vector<RoundLog>& log,
                      const std::string& header_comment);

}  // namespace resmia

#endif  // RESMIA_FED_H_
