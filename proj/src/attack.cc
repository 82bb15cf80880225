#include "resmia/attack.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "resmia/errors.h"
#include "resmia/parallel.h"

namespace resmia {
namespace {

void CheckTrace(const ConfidenceTrace& trace) {
  if (trace.target_probs.size() < 2) {
    throw ConfigError("erosion score needs at least one erosion step");
  }
}

double Median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

std::string FormatScore(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

ConfidenceTrace ComputeConfidenceTrace(BlackBox& model, const ImageTensor& img,
                                       const ErosionConfig& cfg,
                                       ProbVector* base_output) {
  const std::vector<ImageTensor> seq = ErosionSequence(img, cfg);
  ConfidenceTrace trace;
  trace.target_probs.reserve(seq.size());
  trace.max_probs.reserve(seq.size());
  for (std::size_t k = 0; k < seq.size(); ++k) {
    ProbVector p = model.Query(seq[k]);
    ++trace.queries;
    if (k == 0) {
      trace.predicted_class = p.Argmax();
      if (base_output != nullptr) *base_output = p;
    }
    trace.target_probs.push_back(p[trace.predicted_class]);
    trace.max_probs.push_back(p.Max());
  }
  return trace;
}

double ResMiaScore(const ConfidenceTrace& trace) {
  CheckTrace(trace);
  const auto& g = trace.target_probs;
  double sum = 0.0;
  for (std::size_t k = 1; k < g.size(); ++k) sum += g[k - 1] - g[k];
  return sum / static_cast<double>(g.size() - 1);
}

double ResMiaScoreClosedForm(const ConfidenceTrace& trace) {
  CheckTrace(trace);
  const auto& g = trace.target_probs;
  return (g.front() - g.back()) / static_cast<double>(g.size() - 1);
}

double MaxConfidence(const ProbVector& p) { return p.Max(); }

double NegativeEntropy(const ProbVector& p) {
  double s = 0.0;
  for (float v : p.values()) {
    if (v > 0.0f) s += static_cast<double>(v) * std::log(static_cast<double>(v));
  }
  return s;
}

double LossAttackScore(BlackBox& model, const ImageTensor& img) {
  return MaxConfidence(model.Query(img));
}

double EntropyAttackScore(BlackBox& model, const ImageTensor& img) {
  return NegativeEntropy(model.Query(img));
}

std::vector<EvalItem> ResolveEvalItems(const EvalSet& eval,
                                       const std::vector<ClientShard>& shards,
                                       const LabeledDataset& test) {
  std::unordered_map<std::int64_t, const ImageTensor*> train_index;
  for (const auto& shard : shards) {
    for (const auto& s : shard.samples) train_index[s.id] = &s.image;
  }
  std::unordered_map<std::int64_t, const ImageTensor*> test_index;
  for (const auto& s : test.samples) test_index[s.id] = &s.image;

  std::vector<EvalItem> items;
  items.reserve(eval.members.size() + eval.non_members.size());
  for (const auto& m : eval.members) {
    auto it = train_index.find(m.sample_id);
    if (it == train_index.end()) {
      throw DataError("member sample " + std::to_string(m.sample_id) +
                      " not found in any client shard");
    }
    items.push_back({m.sample_id, m.client_id, true, it->second});
  }
  for (std::int64_t id : eval.non_members) {
    auto it = test_index.find(id);
    if (it == test_index.end()) {
      throw DataError("non-member sample " + std::to_string(id) +
                      " not found in the test split");
    }
    items.push_back({id, kNonMemberClient, false, it->second});
  }
  return items;
}

std::vector<AttackRecord> EvaluateAttacks(BlackBox& model,
                                          std::span<const EvalItem> items,
                                          const AttackOptions& opts) {
  const bool any_member = std::any_of(items.begin(), items.end(),
                                      [](const EvalItem& e) { return e.is_member; });
  const bool any_non = std::any_of(items.begin(), items.end(),
                                   [](const EvalItem& e) { return !e.is_member; });
  if (!any_member || !any_non) {
    throw ConfigError("evaluation set needs both members and non-members");
  }
  if (opts.erosion.steps < 1) {
    throw ConfigError("erosion score needs at least one erosion step");
  }
  std::vector<AttackRecord> records(items.size());
  ParallelFor(items.size(), opts.workers, [&](std::size_t i) {
    const EvalItem& item = items[i];
    AttackRecord& rec = records[i];
    rec.sample_id = item.sample_id;
    rec.client_id = item.client_id;
    rec.is_member = item.is_member;

    ProbVector base;
    const ConfidenceTrace trace =
        ComputeConfidenceTrace(model, *item.image, opts.erosion, &base);
    rec.queries_issued = trace.queries;
    ProbVector loss_probe = base;
    ProbVector entropy_probe = base;
    if (!opts.share_base_query) {
      loss_probe = model.Query(*item.image);
      entropy_probe = model.Query(*item.image);
      rec.queries_issued += 2;
    }
    rec.scores[kResMia] = ResMiaScore(trace);
    rec.scores[kLossAttack] = MaxConfidence(loss_probe);
    rec.scores[kEntropyAttack] = NegativeEntropy(entropy_probe);
    rec.queries[kResMia] = trace.queries;
    rec.queries[kLossAttack] = 1;
    rec.queries[kEntropyAttack] = 1;
  });
  std::stable_sort(records.begin(), records.end(),
                   [](const AttackRecord& a, const AttackRecord& b) {
                     if (a.is_member != b.is_member) return a.is_member;
                     return a.sample_id < b.sample_id;
                   });
  return records;
}

void WriteScoresCsv(const std::filesystem::path& path,
                    const std::vector<AttackRecord>& records,
                    const std::string& header_comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "sample_id,client_id,is_member,score_resmia,score_loss,score_entropy,"
         "queries_resmia\n";
  for (const auto& r : records) {
    out << r.sample_id << ','
        << (r.is_member ? std::to_string(r.client_id) : "nonmember") << ','
        << (r.is_member ? 1 : 0) << ',' << FormatScore(r.scores.at(kResMia))
        << ',' << FormatScore(r.scores.at(kLossAttack)) << ','
        << FormatScore(r.scores.at(kEntropyAttack)) << ','
        << r.queries.at(kResMia) << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<AttackRecord> ReadScoresCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open scores file " + path.string());
  std::vector<AttackRecord> records;
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto f = SplitCsvLine(line);
    if (f.size() != 7) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected 7 fields, got " + std::to_string(f.size()));
    }
    try {
      AttackRecord r;
      r.sample_id = std::stoll(f[0]);
      r.is_member = f[2] == "1";
      r.client_id = r.is_member ? std::stoi(f[1]) : kNonMemberClient;
      r.scores[kResMia] = std::stod(f[3]);
      r.scores[kLossAttack] = std::stod(f[4]);
      r.scores[kEntropyAttack] = std::stod(f[5]);
      r.queries[kResMia] = std::stoi(f[6]);
      r.queries[kLossAttack] = 1;
      r.queries[kEntropyAttack] = 1;
      records.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed field");
    }
  }
  if (!header_seen) throw DataError(path.string() + ": missing header");
  return records;
}

OverheadTiming MeasureOverhead(BlackBox& model,
                               std::span<const ImageTensor* const> images,
                               const ErosionConfig& cfg, int samples,
                               int warmup) {
  if (images.empty()) throw ConfigError("timing needs at least one image");
  using Clock = std::chrono::steady_clock;
  auto ms = [](Clock::duration d) {
    return std::chrono::duration<double, std::milli>(d).count();
  };
  volatile double sink = 0.0;
  for (int i = 0; i < warmup; ++i) {
    const ImageTensor& img = *images[i % images.size()];
    sink = sink + model.Query(img).Max();
    sink = sink + ResMiaScore(ComputeConfidenceTrace(model, img, cfg));
  }
  std::vector<double> single;
  std::vector<double> probe;
  single.reserve(samples);
  probe.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const ImageTensor& img = *images[i % images.size()];
    auto t0 = Clock::now();
    sink = sink + model.Query(img).Max();
    auto t1 = Clock::now();
    sink = sink + ResMiaScore(ComputeConfidenceTrace(model, img, cfg));
    auto t2 = Clock::now();
    single.push_back(ms(t1 - t0));
    probe.push_back(ms(t2 - t1));
  }
  OverheadTiming t;
  t.single_forward_ms = Median(std::move(single));
  t.resmia_ms = Median(std::move(probe));
  t.samples = samples;
  t.warmup = warmup;
  return t;
}

}  // namespace resmia
