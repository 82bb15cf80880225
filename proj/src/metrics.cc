#include "resmia/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "resmia/errors.h"

namespace resmia {
namespace {

struct ClassCounts {
  std::size_t members = 0;
  std::size_t non_members = 0;
};

ClassCounts CountClasses(std::span<const ScoredSample> scores) {
  ClassCounts c;
  for (const auto& s : scores) (s.is_member ? c.members : c.non_members)++;
  return c;
}

ClassCounts RequireBothClasses(std::span<const ScoredSample> scores) {
  const ClassCounts c = CountClasses(scores);
  if (c.members == 0 || c.non_members == 0) {
    throw ConfigError("scores need at least one member and one non-member (got " +
                      std::to_string(c.members) + " and " +
                      std::to_string(c.non_members) + ")");
  }
  for (const auto& s : scores) {
    if (std::isnan(s.score)) throw ConfigError("score is NaN");
  }
  return c;
}

// Descending by score; order within a tie is irrelevant.
std::vector<ScoredSample> SortedDescending(std::span<const ScoredSample> scores) {
  std::vector<ScoredSample> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredSample& a, const ScoredSample& b) {
              return a.score > b.score;
            });
  return sorted;
}

}  // namespace

RocCurve ComputeRoc(std::span<const ScoredSample> scores) {
  const ClassCounts c = RequireBothClasses(scores);
  const std::vector<ScoredSample> sorted = SortedDescending(scores);
  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double t = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == t) {
      (sorted[i].is_member ? tp : fp)++;
      ++i;
    }
    curve.thresholds.push_back(t);
    curve.points.push_back({static_cast<double>(fp) / c.non_members,
                            static_cast<double>(tp) / c.members});
  }
  return curve;
}

double Auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const RocPoint& a = curve.points[i - 1];
    const RocPoint& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return area;
}

double FprAtTpr(const RocCurve& curve, double target_tpr) {
  if (!(target_tpr > 0.0 && target_tpr <= 1.0)) {
    throw ConfigError("target TPR must lie in (0, 1]");
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const RocPoint& b = curve.points[i];
    if (b.tpr < target_tpr) continue;
    const RocPoint& a = curve.points[i - 1];
    const double u = (target_tpr - a.tpr) / (b.tpr - a.tpr);
    return a.fpr + u * (b.fpr - a.fpr);
  }
  return 1.0;
}

ThresholdAccuracy AccuracyAtBestThreshold(std::span<const ScoredSample> scores) {
  const ClassCounts c = RequireBothClasses(scores);
  const std::vector<ScoredSample> sorted = SortedDescending(scores);
  const double total = static_cast<double>(sorted.size());

  // All-negative cut first, then every distinct score from high to low.
  std::size_t tp = 0;
  std::size_t fp = 0;
  ThresholdAccuracy best{
      static_cast<double>(c.non_members) / total,
      std::nextafter(sorted.front().score,
                     std::numeric_limits<double>::infinity())};
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double t = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == t) {
      (sorted[i].is_member ? tp : fp)++;
      ++i;
    }
    const double acc =
        static_cast<double>(tp + (c.non_members - fp)) / total;
    if (acc >= best.accuracy) best = {acc, t};
  }
  return best;
}

std::vector<ScoredSample> ScoresFor(std::span<const AttackRecord> records,
                                    const std::string& attack) {
  std::vector<ScoredSample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    auto it = r.scores.find(attack);
    if (it == r.scores.end()) {
      throw ConfigError("record " + std::to_string(r.sample_id) +
                        " has no score for attack '" + attack + "'");
    }
    out.push_back({it->second, r.is_member});
  }
  return out;
}

std::map<int, double> PerClientAuc(std::span<const AttackRecord> records,
                                   const std::string& attack,
                                   std::span<const int> expected_clients) {
  std::vector<ScoredSample> non_members;
  std::map<int, std::vector<ScoredSample>> by_client;
  for (int id : expected_clients) by_client[id];
  for (const auto& r : records) {
    auto it = r.scores.find(attack);
    if (it == r.scores.end()) {
      throw ConfigError("record " + std::to_string(r.sample_id) +
                        " has no score for attack '" + attack + "'");
    }
    if (r.is_member) {
      by_client[r.client_id].push_back({it->second, true});
    } else {
      non_members.push_back({it->second, false});
    }
  }
  if (non_members.empty()) throw ConfigError("per-client AUC needs non-members");
  std::map<int, double> out;
  for (auto& [client, members] : by_client) {
    if (members.empty()) {
      throw ConfigError("client " + std::to_string(client) +
                        " has no member records");
    }
    members.insert(members.end(), non_members.begin(), non_members.end());
    out[client] = Auc(ComputeRoc(members));
  }
  return out;
}

double PopulationStd(const std::map<int, double>& values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (const auto& [k, v] : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (const auto& [k, v] : values) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(values.size()));
}

MetricsReport BuildReport(std::span<const AttackRecord> records,
                          std::span<const int> expected_clients) {
  MetricsReport report;
  for (const char* name : {kResMia, kLossAttack, kEntropyAttack}) {
    const std::vector<ScoredSample> scores = ScoresFor(records, name);
    AttackSummary s;
    s.roc = ComputeRoc(scores);
    s.auc = Auc(s.roc);
    s.fpr_at_tpr80 = FprAtTpr(s.roc, kReportTargetTpr);
    const ThresholdAccuracy acc = AccuracyAtBestThreshold(scores);
    s.accuracy = acc.accuracy;
    s.threshold = acc.threshold;
    s.queries_per_sample = records.empty() ? 0 : records.front().queries.at(name);
    report.attacks[name] = std::move(s);
  }
  for (const auto& r : records) {
    (r.is_member ? report.members : report.non_members)++;
    report.queries_issued += r.queries_issued;
  }
  report.per_client_auc = PerClientAuc(records, kResMia, expected_clients);
  report.per_client_auc_std = PopulationStd(report.per_client_auc);
  if (!report.per_client_auc.empty()) {
    auto [lo, hi] = std::minmax_element(
        report.per_client_auc.begin(), report.per_client_auc.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    report.per_client_auc_range = hi->second - lo->second;
  }
  return report;
}

void WriteRocCsv(const std::filesystem::path& path, const MetricsReport& report,
                 const std::string& header_comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "attack,fpr,tpr\n";
  char buf[64];
  for (const auto& [name, s] : report.attacks) {
    for (const auto& p : s.roc.points) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g", p.fpr, p.tpr);
      out << name << ',' << buf << '\n';
    }
  }
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace resmia
