#ifndef RESMIA_ATTACK_H_
#define RESMIA_ATTACK_H_

// Membership scores computed purely through BlackBox::Query. Nothing here
// touches model parameters or gradients.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "resmia/black_box.h"
#include "resmia/dataset.h"
#include "resmia/image.h"

namespace resmia {

inline constexpr char kResMia[] = "resmia";
inline constexpr char kLossAttack[] = "loss";
inline constexpr char kEntropyAttack[] = "entropy";

// Model response along the erosion path x_0 .. x_K.
struct ConfidenceTrace {
  int predicted_class = 0;            // argmax on x_0, lowest index on ties
  std::vector<double> target_probs;   // f_{y*}(x_k)
  std::vector<double> max_probs;      // max_y f_y(x_k)
  int queries = 0;

  int steps() const { return static_cast<int>(target_probs.size()) - 1; }
};

// Issues exactly cfg.steps + 1 queries. When `base_output` is non-null it
// receives the response to the original image.
ConfidenceTrace ComputeConfidenceTrace(BlackBox& model, const ImageTensor& img,
                                       const ErosionConfig& cfg,
                                       ProbVector* base_output = nullptr);

// Mean per-step drop of the predicted-class probability,
// (1/K) sum_k (f(x_{k-1}) - f(x_k)). Negative when erosion raises the
// confidence. Throws ConfigError when the trace has no erosion step.
double ResMiaScore(const ConfidenceTrace& trace);
// Telescoped form (f(x_0) - f(x_K)) / K.
double ResMiaScoreClosedForm(const ConfidenceTrace& trace);

// Baseline statistics of a single response; higher means more member-like.
double MaxConfidence(const ProbVector& p);
double NegativeEntropy(const ProbVector& p);  // sum p ln p, with 0 ln 0 = 0

// One query each.
double LossAttackScore(BlackBox& model, const ImageTensor& img);
double EntropyAttackScore(BlackBox& model, const ImageTensor& img);

inline constexpr int kNonMemberClient = -1;

struct AttackRecord {
  std::int64_t sample_id = 0;
  int client_id = kNonMemberClient;
  bool is_member = false;
  std::map<std::string, double> scores;
  // Per-attack query cost as if each attack ran on its own.
  std::map<std::string, int> queries;
  // Queries actually issued for this sample.
  int queries_issued = 0;
};

struct EvalItem {
  std::int64_t sample_id;
  int client_id;
  bool is_member;
  const ImageTensor* image;
};

// Looks up the images behind an EvalSet. Throws DataError on unknown ids.
std::vector<EvalItem> ResolveEvalItems(const EvalSet& eval,
                                       const std::vector<ClientShard>& shards,
                                       const LabeledDataset& test);

struct AttackOptions {
  ErosionConfig erosion;
  // Reuse the x_0 response of the erosion probe for both baselines.
  bool share_base_query = true;
  int workers = 1;
};

// One record per item: members first, each group ordered by sample id
// (ids are unique only within a split). Throws ConfigError if the items do not
// contain both members and non-members.
std::vector<AttackRecord> EvaluateAttacks(BlackBox& model,
                                          std::span<const EvalItem> items,
                                          const AttackOptions& opts);

// Columns: sample_id,client_id,is_member,score_resmia,score_loss,
// score_entropy,queries_resmia. Non-member rows carry client_id "nonmember".
void WriteScoresCsv(const std::filesystem::path& path,
                    const std::vector<AttackRecord>& records,
                    const std::string& header_comment);
std::vector<AttackRecord> ReadScoresCsv(const std::filesystem::path& path);

struct OverheadTiming {
  double single_forward_ms = 0;  // median over samples
  double resmia_ms = 0;          // median, erosion + K+1 queries
  int samples = 0;
  int warmup = 0;
};

// Times single queries and full erosion probes on the calling thread. Cycles
// through `images` until `samples` measurements of each kind are taken.
OverheadTiming MeasureOverhead(BlackBox& model,
                               std::span<const ImageTensor* const> images,
                               const ErosionConfig& cfg, int samples = 100,
                               int warmup = 10);

}  // namespace resmia

#endif  // RESMIA_ATTACK_H_
