#ifndef RESMIA_EXPERIMENT_H_
#define RESMIA_EXPERIMENT_H_

// Config-driven pipeline behind the command-line tool: train, attack,
// ablate, report.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "resmia/attack.h"
#include "resmia/dataset.h"
#include "resmia/fed.h"
#include "resmia/image.h"
#include "resmia/metrics.h"
#include "resmia/model.h"
#include "resmia/nn.h"

namespace resmia {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr char kDataRootEnv[] = "RESMIA_DATA_ROOT";

struct DatasetConfig {
  std::string kind = "synthetic";  // "synthetic" or "cifar10"
  // cifar10 only. Empty means $RESMIA_DATA_ROOT.
  std::string cifar_dir;
  int train_per_class = 30;  // cifar10 subset size per class
  int test_per_class = 30;   // test split size per class, both kinds
  SyntheticSpec synthetic;   // synthetic only; per_class is the train size
};

struct EvalConfig {
  int members_per_client = 20;
  int non_members = 100;
};

struct TimingConfig {
  bool enabled = true;
  int samples = 100;
  int warmup = 10;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  FedConfig fed;
  // Empty selects Architecture::DeskScale.
  std::vector<LayerSpec> layers;
  ErosionConfig erosion;
  EvalConfig eval;
  TimingConfig timing;
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  // Throws ConfigError on out-of-range values or a missing dataset path.
  void Validate() const;
};

// Missing keys keep their defaults; unknown keys and a wrong schema_version
// are ConfigErrors.
ExperimentConfig ConfigFromJson(const nlohmann::json& j);
nlohmann::json ConfigToJson(const ExperimentConfig& cfg);
ExperimentConfig LoadConfig(const std::filesystem::path& path);

// 64-bit FNV-1a.
std::uint64_t Fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

// Hash of everything that influences outputs; excludes workers and the
// output directory.
std::uint64_t ConfigHash(const ExperimentConfig& cfg);
// Hash of the fields that determine the trained model. Stored in the
// checkpoint and checked before attacking.
std::uint64_t TrainingHash(const ExperimentConfig& cfg);

std::string HexHash(std::uint64_t h);
// "config_hash=<hex> seed=<n>", embedded in every output file.
std::string ProvenanceLine(const ExperimentConfig& cfg);

Architecture BuildArchitecture(const ExperimentConfig& cfg);

struct PreparedData {
  LabeledDataset train;
  LabeledDataset test;
  std::vector<ClientShard> shards;
  Architecture arch;
};

// Loads or generates the data and partitions it across clients.
PreparedData PrepareData(const ExperimentConfig& cfg);

struct TrainOutcome {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  TrainingResult result;
};

// Writes checkpoint.bin and train_log.csv into cfg.output_dir.
TrainOutcome RunTrain(const ExperimentConfig& cfg);

struct AttackOutcome {
  std::vector<AttackRecord> records;
  MetricsReport report;
};

// Default checkpoint location inside cfg.output_dir.
std::filesystem::path DefaultCheckpoint(const ExperimentConfig& cfg);

// Throws ConfigError if the checkpoint was trained with a different
// configuration or architecture.
Checkpoint LoadMatchingCheckpoint(const ExperimentConfig& cfg,
                                  const std::filesystem::path& path);

// Evaluates all three attacks without touching the file system.
AttackOutcome EvaluateCheckpoint(const ExperimentConfig& cfg,
                                 const PreparedData& data,
                                 const Checkpoint& ckpt);

// Writes scores.csv, roc.csv and report.json into cfg.output_dir.
AttackOutcome RunAttack(const ExperimentConfig& cfg,
                        const std::filesystem::path& checkpoint);

struct AblationRow {
  UpsampleMode mode;
  double auc;
  std::vector<std::int64_t> sample_ids;
  std::vector<bool> is_member;
};

std::vector<AblationRow> AblateUpsampling(const ExperimentConfig& cfg,
                                          const PreparedData& data,
                                          const Checkpoint& ckpt);

// Writes ablation.csv (mode,auc_resmia) into cfg.output_dir.
std::vector<AblationRow> RunAblate(const ExperimentConfig& cfg,
                                   const std::filesystem::path& checkpoint);

nlohmann::json ReportToJson(const MetricsReport& report,
                            const ExperimentConfig& cfg);

// Reads scores.csv (and report.json / ablation.csv when present) from `dir`,
// writes summary.txt and roc.csv there and returns the summary text. Throws
// DataError naming the missing scores file.
std::string RunReport(const std::filesystem::path& dir);

}  // namespace resmia

#endif  // RESMIA_EXPERIMENT_H_
