#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbattack/attack.hpp"
#include "sbattack/dataprep.hpp"
#include "sbattack/metrics.hpp"

namespace sbattack {

struct PredictionRecord {
  std::string probe_id;
  std::string predicted;
  std::string truth;
  double top1_score = 0.0;
  bool tie = false;
};

/// One attack run: a single strategy and cutoff against one target set.
struct AttackReport {
  std::string attacker_gallery;
  std::string target;
  Strategy strategy = Strategy::vote;
  std::size_t n = 1;
  double success_rate = 0.0;
  std::vector<PredictionRecord> predictions;

  std::vector<double> top1_scores() const;
};

AttackReport make_attack_report(std::string attacker_gallery, std::string target,
                                const AttackConfig& cfg, std::span<const LabeledTemplate> probes,
                                std::span<const AttackOutcome> outcomes);

nlohmann::json to_json(const AttackReport& r);
/// Throws ValidationError when required keys are missing or mistyped.
AttackReport attack_report_from_json(const nlohmann::json& j);

struct OperatingPointRow {
  double fmr_target = 0.0;
  double threshold = 0.0;
  double fnmr = 0.0;
};

struct FalseMatchRow {
  double fmr_target = 0.0;
  double threshold = 0.0;
  double fraction = 0.0;
};

struct MetricsReport {
  double eer = 0.0;
  double eer_threshold = 0.0;
  std::vector<OperatingPointRow> operating_points;
  std::vector<FalseMatchRow> attack_fm_fraction;
  AttributeSplit boxplots;
};

/// Default operating points: FMR of 0.1 %, 1 % and 10 %, as fractions.
inline const std::vector<double> kDefaultFmrTargets = {0.001, 0.01, 0.1};

/// EER, FNMR at each target FMR (threshold from the non-mated scores) and
/// same/different-attribute boxplots of the non-mated scores.
MetricsReport compute_metrics(const CollectedTrials& trials, std::span<const double> fmr_targets);

/// Fills attack_fm_fraction: the share of attacked probes whose best score
/// exceeds each operating point's threshold.
void join_false_matches(MetricsReport& metrics, std::span<const double> top1_scores);

nlohmann::json to_json(const DistributionSummary& s);
DistributionSummary distribution_summary_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MetricsReport& m);
MetricsReport metrics_report_from_json(const nlohmann::json& j);

/// Metrics with the attack false-match join plus a summary of the attack run.
nlohmann::json combined_report(const MetricsReport& joined, const AttackReport& attack);

/// Rows "strategy,<n1>,<n2>,..." of success rates.
std::string success_table_csv(std::span<const AttackConfig> configs,
                              std::span<const double> success_rates);
std::string boxplot_csv(const AttributeSplit& split);
std::string det_curve_csv(std::span<const OperatingPoint> curve);
std::string duplicate_flags_csv(std::span<const DuplicateFlag> flags);

}  // namespace sbattack
