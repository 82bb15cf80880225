#include "resmia/experiment.h"

#include <fstream>
#include <sstream>

#include "gtest/gtest.h"
#include "resmia/errors.h"
#include "resmia/model.h"
#include "support/test_util.h"
#include "support/tiny_config.h"

namespace resmia {
namespace {

using nlohmann::json;
using testing::TempDir;
using testing::TinyConfig;

std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Fnv1aTest, KnownVectors) {
  EXPECT_EQ(Fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(Fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(Fnv1a("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(HexHash(0xabcULL), "0000000000000abc");
}

TEST(ConfigTest, JsonRoundTrip) {
  ExperimentConfig cfg = TinyConfig("out/x");
  cfg.layers = Architecture::DeskScale({3, 16, 16}, 3).layers();
  cfg.erosion.upsample = UpsampleMode::kBilinear;
  const ExperimentConfig back = ConfigFromJson(ConfigToJson(cfg));
  EXPECT_EQ(ConfigToJson(back), ConfigToJson(cfg));
  EXPECT_EQ(ConfigHash(back), ConfigHash(cfg));
}

TEST(ConfigTest, MissingKeysKeepDefaults) {
  const ExperimentConfig cfg = ConfigFromJson(json{{"schema_version", 1}, {"seed", 5}});
  EXPECT_EQ(cfg.seed, 5u);
  EXPECT_EQ(cfg.fed.num_clients, 5);
  EXPECT_EQ(cfg.erosion.steps, 5);
  EXPECT_EQ(cfg.dataset.kind, "synthetic");
  EXPECT_NO_THROW(cfg.Validate());
}

TEST(ConfigTest, RejectsBadDocuments) {
  EXPECT_THROW(ConfigFromJson(json{{"seed", 1}}), ConfigError);
  EXPECT_THROW(ConfigFromJson(json{{"schema_version", 2}}), ConfigError);
  EXPECT_THROW(ConfigFromJson(json{{"schema_version", 1}, {"sed", 1}}), ConfigError);
  EXPECT_THROW(ConfigFromJson(json{{"schema_version", 1}, {"fed", {{"rounds", "many"}}}}),
               ConfigError);
  EXPECT_THROW(ConfigFromJson(json{{"schema_version", 1}, {"erosion", {{"upsample", "cubic"}}}}),
               ConfigError);
  EXPECT_THROW(ConfigFromJson(json{{"schema_version", 1},
                                   {"architecture", {{{"kind", "conv7"}}}}}),
               ConfigError);
}

TEST(ConfigTest, LoadReportsUnreadableOrInvalidFiles) {
  TempDir dir("cfg");
  EXPECT_THROW(LoadConfig(dir.path() / "none.json"), ConfigError);
  std::ofstream(dir.path() / "bad.json") << "{ not json";
  EXPECT_THROW(LoadConfig(dir.path() / "bad.json"), ConfigError);
}

TEST(ConfigTest, ShippedDeskConfigParses) {
  const ExperimentConfig cfg = LoadConfig(std::filesystem::path(RESMIA_SOURCE_DIR) / "configs/desk.json");
  EXPECT_NO_THROW(cfg.Validate());
  EXPECT_EQ(cfg.fed.num_clients, 5);
  EXPECT_EQ(cfg.eval.members_per_client * cfg.fed.num_clients + cfg.eval.non_members, 200);
  EXPECT_EQ(cfg.erosion.steps, 5);
}

TEST(ConfigTest, ValidateCatchesInconsistencies) {
  ExperimentConfig cfg = TinyConfig("o");
  cfg.eval.non_members = 5;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = TinyConfig("o");
  cfg.dataset.kind = "imagenet";
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = TinyConfig("o");
  cfg.dataset.kind = "cifar10";
  cfg.dataset.cifar_dir = "/nonexistent/cifar";
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = TinyConfig("o");
  cfg.erosion.steps = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(ConfigTest, HashIgnoresWorkersAndOutputOnly) {
  const ExperimentConfig base = TinyConfig("a");
  ExperimentConfig other = base;
  other.fed.workers = 4;
  other.output_dir = "b";
  EXPECT_EQ(ConfigHash(base), ConfigHash(other));
  EXPECT_EQ(TrainingHash(base), TrainingHash(other));
  other.seed = 12;
  EXPECT_NE(ConfigHash(base), ConfigHash(other));
  EXPECT_NE(TrainingHash(base), TrainingHash(other));
  ExperimentConfig erosion = base;
  erosion.erosion.steps = 3;
  EXPECT_NE(ConfigHash(base), ConfigHash(erosion));
  EXPECT_EQ(TrainingHash(base), TrainingHash(erosion));
  EXPECT_EQ(ProvenanceLine(base), "config_hash=" + HexHash(ConfigHash(base)) + " seed=11");
}

TEST(PipelineTest, TrainAttackAblateReport) {
  TempDir dir("pipe");
  const ExperimentConfig cfg = TinyConfig(dir.path().string());
  const TrainOutcome train = RunTrain(cfg);
  EXPECT_TRUE(std::filesystem::exists(train.checkpoint));
  EXPECT_EQ(train.result.log.size(), 2u);
  const std::string log = ReadFile(train.log);
  EXPECT_EQ(log.rfind("# " + ProvenanceLine(cfg), 0), 0u);

  const AttackOutcome attack = RunAttack(cfg, train.checkpoint);
  ASSERT_EQ(attack.records.size(), 12u);
  for (const auto& r : attack.records) EXPECT_EQ(r.queries.at(kResMia), cfg.erosion.steps + 1);
  const std::string scores = ReadFile(dir.path() / "scores.csv");
  EXPECT_EQ(scores.rfind("# " + ProvenanceLine(cfg), 0), 0u);
  EXPECT_EQ(ReadFile(dir.path() / "roc.csv").rfind("# " + ProvenanceLine(cfg), 0), 0u);

  const json report = json::parse(ReadFile(dir.path() / "report.json"));
  EXPECT_EQ(report["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(report["config_hash"], HexHash(ConfigHash(cfg)));
  EXPECT_EQ(report["seed"], cfg.seed);
  for (const char* a : {kResMia, kLossAttack, kEntropyAttack}) {
    ASSERT_TRUE(report["attacks"].contains(a));
    for (const char* k : {"auc", "oracle_threshold_accuracy", "fpr_at_tpr80", "threshold"}) {
      EXPECT_TRUE(report["attacks"][a].contains(k)) << a << " " << k;
    }
  }
  EXPECT_EQ(report["attacks"][kResMia]["queries_per_sample"], 5);
  EXPECT_EQ(report["per_client_auc"]["auc"].size(), 3u);
  EXPECT_TRUE(report["per_client_auc"].contains("population_std"));
  EXPECT_EQ(report["erosion"]["upsample"], "nearest");
  EXPECT_TRUE(report["erosion"].contains("bilinear_alignment"));
  EXPECT_TRUE(report["timing"].contains("single_forward_ms"));
  EXPECT_TRUE(report["timing"].contains("resmia_ms"));

  const auto rows = RunAblate(cfg, train.checkpoint);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].mode, UpsampleMode::kNearest);
  EXPECT_EQ(rows[1].mode, UpsampleMode::kBilinear);
  EXPECT_EQ(rows[0].sample_ids, rows[1].sample_ids);
  EXPECT_EQ(rows[0].is_member, rows[1].is_member);
  const std::string ablation = ReadFile(dir.path() / "ablation.csv");
  EXPECT_NE(ablation.find("\nnearest,"), std::string::npos);
  EXPECT_NE(ablation.find("\nbilinear,"), std::string::npos);

  const std::string summary = RunReport(dir.path());
  EXPECT_NE(summary.find("resmia"), std::string::npos);
  EXPECT_NE(summary.find("loss"), std::string::npos);
  EXPECT_NE(summary.find("entropy"), std::string::npos);
  EXPECT_NE(summary.find("bilinear"), std::string::npos);
  const std::string roc_before = ReadFile(dir.path() / "roc.csv");
  EXPECT_EQ(RunReport(dir.path()), summary);
  EXPECT_EQ(ReadFile(dir.path() / "summary.txt"), summary);
  EXPECT_EQ(ReadFile(dir.path() / "roc.csv"), roc_before);
}

TEST(PipelineTest, RerunIsByteIdenticalForAnyWorkerCount) {
  TempDir a("det_a");
  TempDir b("det_b");
  ExperimentConfig ca = TinyConfig(a.path().string());
  ca.timing.enabled = false;
  ExperimentConfig cb = ca;
  cb.output_dir = b.path().string();
  cb.fed.workers = 3;
  RunAttack(ca, RunTrain(ca).checkpoint);
  RunAttack(cb, RunTrain(cb).checkpoint);
  EXPECT_EQ(ReadFile(a.path() / "checkpoint.bin"), ReadFile(b.path() / "checkpoint.bin"));
  EXPECT_EQ(ReadFile(a.path() / "scores.csv"), ReadFile(b.path() / "scores.csv"));
  EXPECT_EQ(ReadFile(a.path() / "train_log.csv"), ReadFile(b.path() / "train_log.csv"));
}

TEST(PipelineTest, ZeroRoundsStoresInitialParams) {
  TempDir dir("zero");
  ExperimentConfig cfg = TinyConfig(dir.path().string());
  cfg.fed.rounds = 0;
  const TrainOutcome out = RunTrain(cfg);
  const Checkpoint ckpt = LoadCheckpoint(out.checkpoint);
  FedConfig fed = cfg.fed;
  fed.seed = cfg.seed;
  const ModelParams init = InitialParams(BuildArchitecture(cfg), fed);
  for (std::size_t i = 0; i < init.blocks.size(); ++i) {
    EXPECT_EQ(ckpt.params.blocks[i].values, init.blocks[i].values);
  }
  std::ifstream in(out.log);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) rows += !line.empty() && line[0] != '#';
  EXPECT_EQ(rows, 1);  // header only
}

TEST(PipelineTest, RejectsCheckpointFromAnotherConfig) {
  TempDir dir("mismatch");
  ExperimentConfig cfg = TinyConfig(dir.path().string());
  const TrainOutcome out = RunTrain(cfg);
  ExperimentConfig other = cfg;
  other.seed = 99;
  EXPECT_THROW(RunAttack(other, out.checkpoint), ConfigError);
  ExperimentConfig arch = cfg;
  arch.layers = {{LayerKind::kFlatten}, {LayerKind::kDense, 3}};
  EXPECT_THROW(RunAttack(arch, out.checkpoint), ConfigError);
  EXPECT_THROW(RunAttack(cfg, dir.path() / "missing.bin"), DataError);
}

TEST(PipelineTest, ReportNamesMissingScoresFile) {
  TempDir dir("noscores");
  try {
    RunReport(dir.path());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("scores.csv"), std::string::npos);
  }
}

TEST(PrepareDataTest, CifarSubsetFromDirectory) {
  TempDir dir("cifar_cfg");
  std::vector<Sample> samples;
  for (int i = 0; i < 20; ++i) {
    samples.push_back({ImageTensor(kCifarShape, std::vector<float>(kCifarShape.size(), (i % 5) / 255.0f)),
                       i % 10, i});
  }
  for (int b = 1; b <= 5; ++b) {
    WriteCifarBatch(dir.path() / ("data_batch_" + std::to_string(b) + ".bin"), samples);
  }
  WriteCifarBatch(dir.path() / "test_batch.bin", samples);
  ExperimentConfig cfg;
  cfg.dataset.kind = "cifar10";
  cfg.dataset.cifar_dir = dir.path().string();
  cfg.dataset.train_per_class = 8;
  cfg.dataset.test_per_class = 2;
  cfg.fed.num_clients = 4;
  cfg.eval.members_per_client = 5;
  cfg.eval.non_members = 20;
  const PreparedData d = PrepareData(cfg);
  EXPECT_EQ(d.train.samples.size(), 80u);
  EXPECT_EQ(d.test.samples.size(), 20u);
  EXPECT_EQ(d.shards.size(), 4u);
  EXPECT_EQ(d.arch.input(), kCifarShape);
  EXPECT_EQ(d.arch.num_classes(), 10);
}

}  // namespace
}  // namespace resmia
