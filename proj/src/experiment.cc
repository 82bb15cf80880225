#include "resmia/experiment.h"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "resmia/errors.h"
#include "resmia/random.h"

namespace resmia {
namespace {

using nlohmann::json;

// Visits every key of `obj`; unknown keys are rejected.
template <typename Fn>
void ForEachKey(const json& obj, std::string_view where, Fn&& fn) {
  if (!obj.is_object()) {
    throw ConfigError(std::string(where) + " must be a JSON object");
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!fn(it.key(), it.value())) {
      throw ConfigError("unknown key '" + it.key() + "' in " +
                        std::string(where));
    }
  }
}

template <typename T>
T Get(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

SyntheticSpec SyntheticFromJson(const json& j) {
  SyntheticSpec s;
  ForEachKey(j, "dataset.synthetic", [&](const std::string& k, const json& v) {
    if (k == "classes") s.classes = Get<int>(v, k);
    else if (k == "per_class") s.per_class = Get<int>(v, k);
    else if (k == "color_spread") s.color_spread = Get<double>(v, k);
    else if (k == "color_jitter") s.color_jitter = Get<double>(v, k);
    else if (k == "template_amplitude") s.template_amplitude = Get<double>(v, k);
    else if (k == "detail_noise") s.detail_noise = Get<double>(v, k);
    else if (k == "detail_variation") s.detail_variation = Get<double>(v, k);
    else if (k == "detail_block") s.detail_block = Get<int>(v, k);
    else if (k == "shape") {
      const auto dims = Get<std::vector<int>>(v, k);
      if (dims.size() != 3) throw ConfigError("dataset.synthetic.shape needs 3 dims");
      s.shape = {dims[0], dims[1], dims[2]};
    } else {
      return false;
    }
    return true;
  });
  return s;
}

json SyntheticToJson(const SyntheticSpec& s) {
  return {{"classes", s.classes},
          {"per_class", s.per_class},
          {"shape", {s.shape.channels, s.shape.height, s.shape.width}},
          {"color_spread", s.color_spread},
          {"color_jitter", s.color_jitter},
          {"template_amplitude", s.template_amplitude},
          {"detail_noise", s.detail_noise},
          {"detail_variation", s.detail_variation},
          {"detail_block", s.detail_block}};
}

json DatasetToJson(const DatasetConfig& d) {
  return {{"kind", d.kind},
          {"cifar_dir", d.cifar_dir},
          {"train_per_class", d.train_per_class},
          {"test_per_class", d.test_per_class},
          {"synthetic", SyntheticToJson(d.synthetic)}};
}

json FedToJson(const FedConfig& f, bool with_workers) {
  json j = {{"num_clients", f.num_clients},
            {"rounds", f.rounds},
            {"local_epochs", f.local_epochs},
            {"batch_size", f.batch_size},
            {"lr", f.lr}};
  if (with_workers) j["workers"] = f.workers;
  return j;
}

json LayersToJson(const std::vector<LayerSpec>& layers) {
  json arr = json::array();
  for (const auto& l : layers) {
    arr.push_back({{"kind", std::string(LayerKindName(l.kind))}, {"width", l.width}});
  }
  return arr;
}

json ErosionToJson(const ErosionConfig& e) {
  return {{"steps", e.steps},
          {"pool_factor", e.pool_factor},
          {"upsample", std::string(UpsampleModeName(e.upsample))}};
}

std::filesystem::path CifarDir(const DatasetConfig& d) {
  if (!d.cifar_dir.empty()) return d.cifar_dir;
  const char* env = std::getenv(kDataRootEnv);
  if (env == nullptr || *env == '\0') {
    throw ConfigError(std::string("cifar10 dataset needs dataset.cifar_dir or $") +
                      kDataRootEnv);
  }
  return env;
}

std::string Fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

void EnsureDir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
}

// Leading "# ..." line of a file, without the marker.
std::string FirstComment(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string line;
  if (in && std::getline(in, line) && line.rfind("# ", 0) == 0) {
    return line.substr(2);
  }
  return "";
}

}  // namespace

void ExperimentConfig::Validate() const {
  fed.Validate();
  if (dataset.kind != "synthetic" && dataset.kind != "cifar10") {
    throw ConfigError("dataset.kind must be synthetic or cifar10, got '" +
                      dataset.kind + "'");
  }
  if (dataset.test_per_class < 1) throw ConfigError("dataset.test_per_class must be >= 1");
  if (dataset.kind == "cifar10") {
    if (dataset.train_per_class < 1) {
      throw ConfigError("dataset.train_per_class must be >= 1");
    }
    const std::filesystem::path dir = CifarDir(dataset);
    if (!std::filesystem::is_directory(dir)) {
      throw ConfigError("cifar10 directory does not exist: " + dir.string());
    }
  } else {
    const SyntheticSpec& s = dataset.synthetic;
    if (s.classes < 2) throw ConfigError("dataset.synthetic.classes must be >= 2");
    if (s.per_class < 1) throw ConfigError("dataset.synthetic.per_class must be >= 1");
    if (s.detail_block < 1 || s.shape.height % s.detail_block != 0 ||
        s.shape.width % s.detail_block != 0) {
      throw ConfigError("dataset.synthetic.detail_block must divide the image size");
    }
    if (s.color_spread < 0 || s.color_jitter < 0 || s.detail_noise < 0 ||
        s.template_amplitude < 0) {
      throw ConfigError("dataset.synthetic noise levels must be >= 0");
    }
    if (s.detail_variation < 0 || s.detail_variation > 1) {
      throw ConfigError("dataset.synthetic.detail_variation must lie in [0, 1]");
    }
  }
  if (eval.members_per_client < 1) throw ConfigError("eval.members_per_client must be >= 1");
  if (eval.non_members != eval.members_per_client * fed.num_clients) {
    throw ConfigError("eval.non_members must equal members_per_client * num_clients");
  }
  if (erosion.steps < 1) throw ConfigError("erosion.steps must be >= 1");
  if (timing.samples < 1 || timing.warmup < 0) {
    throw ConfigError("timing.samples must be >= 1 and timing.warmup >= 0");
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

ExperimentConfig ConfigFromJson(const json& j) {
  ExperimentConfig cfg;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (!j.contains("schema_version")) throw ConfigError("config lacks schema_version");
  const int version = Get<int>(j.at("schema_version"), "schema_version");
  if (version != kConfigSchemaVersion) {
    throw ConfigError("unsupported config schema_version " + std::to_string(version));
  }
  ForEachKey(j, "config", [&](const std::string& k, const json& v) {
    if (k == "schema_version") return true;
    if (k == "seed") cfg.seed = Get<std::uint64_t>(v, k);
    else if (k == "output_dir") cfg.output_dir = Get<std::string>(v, k);
    else if (k == "dataset") {
      ForEachKey(v, "dataset", [&](const std::string& dk, const json& dv) {
        if (dk == "kind") cfg.dataset.kind = Get<std::string>(dv, dk);
        else if (dk == "cifar_dir") cfg.dataset.cifar_dir = Get<std::string>(dv, dk);
        else if (dk == "train_per_class") cfg.dataset.train_per_class = Get<int>(dv, dk);
        else if (dk == "test_per_class") cfg.dataset.test_per_class = Get<int>(dv, dk);
        else if (dk == "synthetic") cfg.dataset.synthetic = SyntheticFromJson(dv);
        else return false;
        return true;
      });
    } else if (k == "fed") {
      ForEachKey(v, "fed", [&](const std::string& fk, const json& fv) {
        if (fk == "num_clients") cfg.fed.num_clients = Get<int>(fv, fk);
        else if (fk == "rounds") cfg.fed.rounds = Get<int>(fv, fk);
        else if (fk == "local_epochs") cfg.fed.local_epochs = Get<int>(fv, fk);
        else if (fk == "batch_size") cfg.fed.batch_size = Get<int>(fv, fk);
        else if (fk == "lr") cfg.fed.lr = Get<float>(fv, fk);
        else if (fk == "workers") cfg.fed.workers = Get<int>(fv, fk);
        else return false;
        return true;
      });
    } else if (k == "architecture") {
      if (!v.is_array()) throw ConfigError("architecture must be a list of layers");
      for (const auto& l : v) {
        LayerSpec spec{LayerKind::kFlatten, 0};
        ForEachKey(l, "architecture layer", [&](const std::string& lk, const json& lv) {
          if (lk == "kind") spec.kind = ParseLayerKind(Get<std::string>(lv, lk));
          else if (lk == "width") spec.width = Get<int>(lv, lk);
          else return false;
          return true;
        });
        cfg.layers.push_back(spec);
      }
    } else if (k == "erosion") {
      ForEachKey(v, "erosion", [&](const std::string& ek, const json& ev) {
        if (ek == "steps") cfg.erosion.steps = Get<int>(ev, ek);
        else if (ek == "pool_factor") cfg.erosion.pool_factor = Get<int>(ev, ek);
        else if (ek == "upsample") cfg.erosion.upsample = ParseUpsampleMode(Get<std::string>(ev, ek));
        else return false;
        return true;
      });
    } else if (k == "eval") {
      ForEachKey(v, "eval", [&](const std::string& ek, const json& ev) {
        if (ek == "members_per_client") cfg.eval.members_per_client = Get<int>(ev, ek);
        else if (ek == "non_members") cfg.eval.non_members = Get<int>(ev, ek);
        else return false;
        return true;
      });
    } else if (k == "timing") {
      ForEachKey(v, "timing", [&](const std::string& tk, const json& tv) {
        if (tk == "enabled") cfg.timing.enabled = Get<bool>(tv, tk);
        else if (tk == "samples") cfg.timing.samples = Get<int>(tv, tk);
        else if (tk == "warmup") cfg.timing.warmup = Get<int>(tv, tk);
        else return false;
        return true;
      });
    } else {
      return false;
    }
    return true;
  });
  return cfg;
}

json ConfigToJson(const ExperimentConfig& cfg) {
  return {{"schema_version", kConfigSchemaVersion},
          {"seed", cfg.seed},
          {"output_dir", cfg.output_dir},
          {"dataset", DatasetToJson(cfg.dataset)},
          {"fed", FedToJson(cfg.fed, true)},
          {"architecture", LayersToJson(cfg.layers)},
          {"erosion", ErosionToJson(cfg.erosion)},
          {"eval",
           {{"members_per_client", cfg.eval.members_per_client},
            {"non_members", cfg.eval.non_members}}},
          {"timing",
           {{"enabled", cfg.timing.enabled},
            {"samples", cfg.timing.samples},
            {"warmup", cfg.timing.warmup}}}};
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return ConfigFromJson(j);
}

std::uint64_t Fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t ConfigHash(const ExperimentConfig& cfg) {
  json j = ConfigToJson(cfg);
  j["fed"].erase("workers");
  j.erase("output_dir");
  return Fnv1a(j.dump());
}

std::uint64_t TrainingHash(const ExperimentConfig& cfg) {
  const json j = {{"seed", cfg.seed},
                  {"dataset", DatasetToJson(cfg.dataset)},
                  {"fed", FedToJson(cfg.fed, false)},
                  {"architecture", LayersToJson(BuildArchitecture(cfg).layers())}};
  return Fnv1a(j.dump());
}

std::string HexHash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

std::string ProvenanceLine(const ExperimentConfig& cfg) {
  return "config_hash=" + HexHash(ConfigHash(cfg)) +
         " seed=" + std::to_string(cfg.seed);
}

Architecture BuildArchitecture(const ExperimentConfig& cfg) {
  const ImageShape input =
      cfg.dataset.kind == "cifar10" ? kCifarShape : cfg.dataset.synthetic.shape;
  const int classes = cfg.dataset.kind == "cifar10" ? 10 : cfg.dataset.synthetic.classes;
  if (cfg.layers.empty()) return Architecture::DeskScale(input, classes);
  return Architecture(input, cfg.layers, classes);
}

PreparedData PrepareData(const ExperimentConfig& cfg) {
  cfg.Validate();
  PreparedData data;
  if (cfg.dataset.kind == "cifar10") {
    auto [train, test] = LoadCifar10(CifarDir(cfg.dataset));
    data.train = SubsetPerClass(train, cfg.dataset.train_per_class,
                                DeriveSeed(cfg.seed, {seed_tag::kSubset, 0}));
    data.test = SubsetPerClass(test, cfg.dataset.test_per_class,
                               DeriveSeed(cfg.seed, {seed_tag::kSubset, 1}));
  } else {
    data.train = GenerateSynthetic(cfg.dataset.synthetic, Split::kTrain, cfg.seed);
    SyntheticSpec test_spec = cfg.dataset.synthetic;
    test_spec.per_class = cfg.dataset.test_per_class;
    data.test = GenerateSynthetic(test_spec, Split::kTest, cfg.seed);
  }
  data.train.Validate();
  data.test.Validate();
  data.shards = Partition(data.train, cfg.fed.num_clients, cfg.seed);
  data.arch = BuildArchitecture(cfg);
  return data;
}

TrainOutcome RunTrain(const ExperimentConfig& cfg) {
  const PreparedData data = PrepareData(cfg);
  FedConfig fed = cfg.fed;
  fed.seed = cfg.seed;
  TrainOutcome out;
  out.result = RunFederatedTraining(data.shards, data.test, data.arch, fed);
  const std::filesystem::path dir = cfg.output_dir;
  EnsureDir(dir);
  out.checkpoint = dir / "checkpoint.bin";
  out.log = dir / "train_log.csv";
  Checkpoint ckpt{data.arch, out.result.params, cfg.seed, TrainingHash(cfg), 0};
  SaveCheckpoint(out.checkpoint, ckpt);
  WriteTrainingLog(out.log, out.result.log, ProvenanceLine(cfg));
  return out;
}

std::filesystem::path DefaultCheckpoint(const ExperimentConfig& cfg) {
  return std::filesystem::path(cfg.output_dir) / "checkpoint.bin";
}

Checkpoint LoadMatchingCheckpoint(const ExperimentConfig& cfg,
                                  const std::filesystem::path& path) {
  Checkpoint ckpt = LoadCheckpoint(path);
  if (!(ckpt.arch == BuildArchitecture(cfg))) {
    throw ConfigError("checkpoint " + path.string() +
                      " has a different architecture than the config");
  }
  if (ckpt.config_hash != TrainingHash(cfg) || ckpt.seed != cfg.seed) {
    throw ConfigError("checkpoint " + path.string() +
                      " was trained with a different configuration (hash " +
                      HexHash(ckpt.config_hash) + ", expected " +
                      HexHash(TrainingHash(cfg)) + ")");
  }
  return ckpt;
}

namespace {

std::vector<int> ClientIds(const PreparedData& data) {
  std::vector<int> ids;
  for (const auto& s : data.shards) ids.push_back(s.client_id);
  return ids;
}

EvalSet BuildConfiguredEvalSet(const ExperimentConfig& cfg,
                               const PreparedData& data) {
  return BuildEvalSet(data.shards, data.test, cfg.eval.members_per_client,
                      cfg.eval.non_members, cfg.seed);
}

}  // namespace

AttackOutcome EvaluateCheckpoint(const ExperimentConfig& cfg,
                                 const PreparedData& data,
                                 const Checkpoint& ckpt) {
  Model model(ckpt.arch, ckpt.params);
  const EvalSet eval = BuildConfiguredEvalSet(cfg, data);
  const std::vector<EvalItem> items = ResolveEvalItems(eval, data.shards, data.test);
  AttackOptions opts;
  opts.erosion = cfg.erosion;
  opts.workers = cfg.fed.workers;
  AttackOutcome out;
  out.records = EvaluateAttacks(model, items, opts);
  const std::vector<int> clients = ClientIds(data);
  out.report = BuildReport(out.records, clients);
  if (cfg.timing.enabled) {
    std::vector<const ImageTensor*> images;
    for (const auto& item : items) images.push_back(item.image);
    out.report.timing = MeasureOverhead(model, images, cfg.erosion,
                                        cfg.timing.samples, cfg.timing.warmup);
    out.report.has_timing = true;
  }
  return out;
}

json ReportToJson(const MetricsReport& report, const ExperimentConfig& cfg) {
  json attacks = json::object();
  for (const auto& [name, s] : report.attacks) {
    attacks[name] = {{"auc", s.auc},
                     {"oracle_threshold_accuracy", s.accuracy},
                     {"threshold", s.threshold},
                     {"fpr_at_tpr80", s.fpr_at_tpr80},
                     {"queries_per_sample", s.queries_per_sample}};
  }
  json per_client = json::object();
  for (const auto& [client, auc] : report.per_client_auc) {
    per_client[std::to_string(client)] = auc;
  }
  json j = {
      {"schema_version", kReportSchemaVersion},
      {"config_hash", HexHash(ConfigHash(cfg))},
      {"seed", cfg.seed},
      {"attacks", attacks},
      {"accuracy_note",
       "oracle-threshold accuracy: best threshold chosen on the evaluation set itself"},
      {"per_client_auc", {{"attack", kResMia},
                          {"auc", per_client},
                          {"population_std", report.per_client_auc_std},
                          {"range", report.per_client_auc_range}}},
      {"eval_set", {{"members", report.members}, {"non_members", report.non_members}}},
      {"queries_issued", report.queries_issued},
      {"erosion",
       {{"steps", cfg.erosion.steps},
        {"pool_factor", cfg.erosion.pool_factor},
        {"upsample", std::string(UpsampleModeName(cfg.erosion.upsample))},
        {"sequence", "x_k = upsample(avg_pool^k(x_0)) by pool_factor^k"},
        {"bilinear_alignment",
         "half-pixel centres: src = (dst + 0.5) / factor - 0.5, clamped at borders"}}}};
  if (report.has_timing) {
    const OverheadTiming& t = report.timing;
    j["timing"] = {{"statistic", "median"},
                   {"threads", 1},
                   {"samples", t.samples},
                   {"warmup", t.warmup},
                   {"single_forward_ms", t.single_forward_ms},
                   {"resmia_ms", t.resmia_ms},
                   {"ratio", t.single_forward_ms > 0 ? t.resmia_ms / t.single_forward_ms : 0.0}};
  }
  return j;
}

AttackOutcome RunAttack(const ExperimentConfig& cfg,
                        const std::filesystem::path& checkpoint) {
  const Checkpoint ckpt = LoadMatchingCheckpoint(cfg, checkpoint);
  const PreparedData data = PrepareData(cfg);
  AttackOutcome out = EvaluateCheckpoint(cfg, data, ckpt);
  const std::filesystem::path dir = cfg.output_dir;
  EnsureDir(dir);
  const std::string provenance = ProvenanceLine(cfg);
  WriteScoresCsv(dir / "scores.csv", out.records, provenance);
  WriteRocCsv(dir / "roc.csv", out.report, provenance);
  WriteText(dir / "report.json", ReportToJson(out.report, cfg).dump(2) + "\n");
  return out;
}

std::vector<AblationRow> AblateUpsampling(const ExperimentConfig& cfg,
                                          const PreparedData& data,
                                          const Checkpoint& ckpt) {
  const EvalSet eval = BuildConfiguredEvalSet(cfg, data);
  const std::vector<EvalItem> items = ResolveEvalItems(eval, data.shards, data.test);
  std::vector<AblationRow> rows;
  for (UpsampleMode mode : {UpsampleMode::kNearest, UpsampleMode::kBilinear}) {
    Model model(ckpt.arch, ckpt.params);
    AttackOptions opts;
    opts.erosion = cfg.erosion;
    opts.erosion.upsample = mode;
    opts.workers = cfg.fed.workers;
    const std::vector<AttackRecord> records = EvaluateAttacks(model, items, opts);
    AblationRow row{mode, Auc(ComputeRoc(ScoresFor(records, kResMia))), {}, {}};
    for (const auto& r : records) {
      row.sample_ids.push_back(r.sample_id);
      row.is_member.push_back(r.is_member);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<AblationRow> RunAblate(const ExperimentConfig& cfg,
                                   const std::filesystem::path& checkpoint) {
  const Checkpoint ckpt = LoadMatchingCheckpoint(cfg, checkpoint);
  const PreparedData data = PrepareData(cfg);
  std::vector<AblationRow> rows = AblateUpsampling(cfg, data, ckpt);
  const std::filesystem::path dir = cfg.output_dir;
  EnsureDir(dir);
  std::string text = "# " + ProvenanceLine(cfg) + "\nmode,auc_resmia\n";
  for (const auto& r : rows) {
    text += std::string(UpsampleModeName(r.mode)) + "," + Fmt("%.17g", r.auc) + "\n";
  }
  WriteText(dir / "ablation.csv", text);
  return rows;
}

std::string RunReport(const std::filesystem::path& dir) {
  const std::filesystem::path scores_path = dir / "scores.csv";
  if (!std::filesystem::exists(scores_path)) {
    throw DataError("missing scores file " + scores_path.string());
  }
  const std::string provenance = FirstComment(scores_path);
  const std::vector<AttackRecord> records = ReadScoresCsv(scores_path);
  const MetricsReport report = BuildReport(records);

  std::ostringstream s;
  s << "# " << provenance << "\n\n";
  s << "Attack performance (accuracy uses the oracle threshold)\n";
  s << "attack    AUC     accuracy  FPR@TPR=0.8  queries/sample\n";
  for (const char* name : {kResMia, kLossAttack, kEntropyAttack}) {
    const AttackSummary& a = report.attacks.at(name);
    char line[128];
    std::snprintf(line, sizeof(line), "%-8s  %.4f  %.4f    %.4f       %d\n", name,
                  a.auc, a.accuracy, a.fpr_at_tpr80, a.queries_per_sample);
    s << line;
  }
  s << "\nPer-client AUC (" << kResMia << ")\nclient  AUC\n";
  for (const auto& [client, auc] : report.per_client_auc) {
    char line[64];
    std::snprintf(line, sizeof(line), "%-6d  %.4f\n", client, auc);
    s << line;
  }
  s << "population std " << Fmt("%.4f", report.per_client_auc_std) << ", range "
    << Fmt("%.4f", report.per_client_auc_range) << "\n";

  const std::filesystem::path report_path = dir / "report.json";
  if (std::filesystem::exists(report_path)) {
    std::ifstream in(report_path, std::ios::binary);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw DataError(report_path.string() + " is not valid JSON: " + e.what());
    }
    if (j.contains("timing")) {
      const json& t = j["timing"];
      s << "\nOverhead (median ms/sample, single thread)\n";
      s << "single forward pass  " << Fmt("%.4f", t.value("single_forward_ms", 0.0)) << "\n";
      s << "Res-MIA (K=" << j["erosion"].value("steps", 0) << ")          "
        << Fmt("%.4f", t.value("resmia_ms", 0.0)) << "\n";
    }
  }
  const std::filesystem::path ablation_path = dir / "ablation.csv";
  if (std::filesystem::exists(ablation_path)) {
    std::ifstream in(ablation_path, std::ios::binary);
    std::string line;
    s << "\nUpsampling ablation (" << kResMia << " AUC)\n";
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("mode,", 0) == 0) continue;
      const auto comma = line.find(',');
      s << line.substr(0, comma) << "  "
        << Fmt("%.4f", std::stod(line.substr(comma + 1))) << "\n";
    }
  }
  const std::string text = s.str();
  WriteText(dir / "summary.txt", text);
  WriteRocCsv(dir / "roc.csv", report, provenance);
  return text;
}

}  // namespace resmia
