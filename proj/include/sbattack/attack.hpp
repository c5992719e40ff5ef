#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sbattack/core.hpp"

namespace sbattack {

enum class Strategy { vote, average, linear_weighted, log_weighted };
enum class WeightKind { linear, log };

std::string_view to_string(Strategy s);
/// Accepts "vote", "average", "linear_weighted", "log_weighted".
Strategy parse_strategy(std::string_view name);
inline constexpr Strategy kAllStrategies[] = {Strategy::vote, Strategy::average,
                                              Strategy::linear_weighted, Strategy::log_weighted};

struct AttackConfig {
  Strategy strategy = Strategy::vote;
  std::size_t n = 1;
  /// When false, a list holding fewer than n candidates is an error rather
  /// than a flagged, shortened list.
  bool allow_truncation = true;
};

/// Throws ValidationError when n == 0.
void validate(const AttackConfig& cfg);
/// Non-fatal advisories, e.g. an even vote cutoff with two attributes.
std::vector<std::string> config_warnings(const AttackConfig& cfg, const AttributeSet& attrs);

/// Top-n candidates ordered by (score descending, candidate_id ascending).
struct RankedList {
  std::vector<ScoredCandidate> entries;
  bool truncated = false;
};

/// One RankedList per attribute, indexed in AttributeSet order.
using PerAttributeLists = std::vector<RankedList>;

/// Strength of evidence c(a), one value per attribute in AttributeSet order.
struct Evidence {
  Strategy strategy = Strategy::vote;
  std::vector<double> values;

  double at(const AttributeSet& attrs, std::string_view label) const;
};

struct Prediction {
  std::string attribute;
  Evidence evidence;
  bool tie = false;  // argmax was not unique
};

/// Strict weak order used for every ranking: higher score first, then id.
inline bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.candidate_id < b.candidate_id;
}

RankedList rank_single(std::span<const ScoredCandidate> scored, std::size_t n);
PerAttributeLists rank_per_attribute(std::span<const ScoredCandidate> scored, std::size_t n,
                                     const AttributeSet& attrs);

/// Position weights for i = 1..n: linear 1 - i/(n+1), log -ln(i/(n+1)).
/// Both are strictly positive and strictly decreasing in i.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights(Eigen::Index n, WeightKind kind) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w(n);
  const Scalar denom = static_cast<Scalar>(n + 1);
  for (Eigen::Index i = 1; i <= n; ++i) {
    const Scalar ratio = static_cast<Scalar>(i) / denom;
    w(i - 1) = kind == WeightKind::linear ? Scalar(1) - ratio : -std::log(ratio);
  }
  return w;
}

/// Counts of each attribute in the single top-n list.
Evidence evidence_vote(const RankedList& top, const AttributeSet& attrs);
/// Mean score of each per-attribute list.
Evidence evidence_average(const PerAttributeLists& per_attr);
/// Weighted mean sum(w_i s_i) / sum(w_i) of each per-attribute list, with
/// weights taken for that list's own length.
Evidence evidence_weighted(const PerAttributeLists& per_attr, WeightKind kind);

/// Argmax of the evidence; exact ties go to the earliest attribute in
/// canonical order and set the tie flag.
Prediction predict(const Evidence& ev, const AttributeSet& attrs);

/// Rank, gather evidence and predict from an already scored probe.
Prediction attack_scored(std::span<const ScoredCandidate> scored, const AttributeSet& attrs,
                         const AttackConfig& cfg);

Prediction run_attack(const LabeledTemplate& probe, const Gallery& gallery, const AttackConfig& cfg);

struct AttackOutcome {
  Prediction prediction;
  double top1_score = 0.0;
};

/// Attacks every probe; results are in input order whatever the worker
/// count. workers == 0 picks the hardware concurrency.
std::vector<AttackOutcome> batch_attack(std::span<const LabeledTemplate> probes,
                                        const Gallery& gallery, const AttackConfig& cfg,
                                        unsigned workers = 0);

/// Scores each probe once and evaluates every config on those scores.
/// Result[c][p] is config c applied to probe p.
std::vector<std::vector<AttackOutcome>> batch_attack_sweep(std::span<const LabeledTemplate> probes,
                                                           const Gallery& gallery,
                                                           std::span<const AttackConfig> configs,
                                                           unsigned workers = 0);

/// k-nearest-neighbour label vote over a labeled training set; the same
/// computation as run_attack with the vote strategy and n = k.
Prediction knn_baseline(const LabeledTemplate& probe, const Gallery& training, std::size_t k);

}  // namespace sbattack
