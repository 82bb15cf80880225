#ifndef RESMIA_METRICS_H_
#define RESMIA_METRICS_H_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "resmia/attack.h"

namespace resmia {

struct ScoredSample {
  double score;
  bool is_member;
};

struct RocPoint {
  double fpr;
  double tpr;

  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

// Points from (0, 0) to (1, 1) obtained by lowering the threshold through
// every distinct score. Samples with equal scores cross together, so each
// point after the origin corresponds to one distinct score.
struct RocCurve {
  std::vector<RocPoint> points;
  std::vector<double> thresholds;  // thresholds[i] yields points[i + 1]
};

// Throws ConfigError unless both classes are present.
RocCurve ComputeRoc(std::span<const ScoredSample> scores);

// Trapezoidal area under the curve.
double Auc(const RocCurve& curve);

// Smallest false-positive rate at which the curve reaches `target_tpr`,
// interpolated linearly on the crossing segment. Throws ConfigError unless
// 0 < target_tpr <= 1.
double FprAtTpr(const RocCurve& curve, double target_tpr);

struct ThresholdAccuracy {
  double accuracy;
  double threshold;  // member iff score >= threshold
};

// Best (TP + TN) / total over all distinct-score thresholds plus the
// all-negative cut. Ties in accuracy go to the lower threshold. Throws
// ConfigError unless both classes are present.
ThresholdAccuracy AccuracyAtBestThreshold(std::span<const ScoredSample> scores);

std::vector<ScoredSample> ScoresFor(std::span<const AttackRecord> records,
                                    const std::string& attack);

// AUC of each client's members against all non-members. Throws ConfigError
// if there are no non-members or if a client in `expected_clients` has no
// member record.
std::map<int, double> PerClientAuc(std::span<const AttackRecord> records,
                                   const std::string& attack,
                                   std::span<const int> expected_clients = {});

struct AttackSummary {
  double auc = 0;
  double accuracy = 0;
  double threshold = 0;
  double fpr_at_tpr80 = 0;
  int queries_per_sample = 0;
  RocCurve roc;
};

struct MetricsReport {
  std::map<std::string, AttackSummary> attacks;
  std::map<int, double> per_client_auc;  // for the erosion attack
  double per_client_auc_std = 0;         // population standard deviation
  double per_client_auc_range = 0;       // max - min
  int members = 0;
  int non_members = 0;
  std::uint64_t queries_issued = 0;
  OverheadTiming timing;
  bool has_timing = false;
};

inline constexpr int kReportSchemaVersion = 1;
inline constexpr double kReportTargetTpr = 0.8;

// Summaries for the three attacks plus the per-client breakdown.
MetricsReport BuildReport(std::span<const AttackRecord> records,
                          std::span<const int> expected_clients = {});

// Population standard deviation of the map values.
double PopulationStd(const std::map<int, double>& values);

// Columns: attack,fpr,tpr.
void WriteRocCsv(const std::filesystem::path& path, const MetricsReport& report,
                 const std::string& header_comment);

}  // namespace resmia

#endif  // RESMIA_METRICS_H_
