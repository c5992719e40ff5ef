#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sbattack/attack.hpp"
#include "sbattack/core.hpp"

namespace sbattack {

// Decision rule throughout: a comparison is a match iff score > t.
// Scores equal to the threshold count as non-matches.

struct VerificationTrialSet {
  std::vector<double> mated;
  std::vector<double> nonmated;
};

struct OperatingPoint {
  double threshold = 0.0;
  double fmr = 0.0;
  double fnmr = 0.0;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

struct DistributionSummary {
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double iqr = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::size_t outlier_count = 0;

  friend bool operator==(const DistributionSummary&, const DistributionSummary&) = default;
};

/// A non-mated comparison with the attributes of both sides.
struct NonmatedTrial {
  double score = 0.0;
  std::string attribute_a;
  std::string attribute_b;
};

struct AttributeSplit {
  DistributionSummary same;
  DistributionSummary different;
};

/// Fraction of non-mated scores strictly above t.
double fmr_at(std::span<const double> nonmated, double t);
/// Fraction of mated scores at or below t.
double fnmr_at(std::span<const double> mated, double t);

/// Equal error rate. Thresholds sweep every distinct observed score plus
/// -inf/+inf sentinels; where FMR - FNMR changes sign between adjacent
/// thresholds both rates are interpolated linearly and the crossing is
/// reported. A threshold is reported at a finite endpoint if the crossing
/// touches a sentinel.
EerResult eer(const VerificationTrialSet& trials);

/// Smallest threshold t with fmr_at(nonmated, t) <= target_fmr. Always an
/// observed score, except for target_fmr >= 1 where every threshold
/// qualifies and -infinity is returned.
double threshold_at_fmr(std::span<const double> nonmated, double target_fmr);

OperatingPoint operating_point_at_fmr(const VerificationTrialSet& trials, double target_fmr);

/// Empirical (threshold, FMR, FNMR) at every distinct pooled score, ascending.
std::vector<OperatingPoint> det_curve(const VerificationTrialSet& trials);

double attack_success_rate(std::span<const std::string> predicted, std::span<const std::string> truths);
double attack_success_rate(std::span<const Prediction> predictions, std::span<const std::string> truths);

/// Fraction of per-probe best scores strictly above t. Every probe's best
/// score comes from a gallery that excludes the probe's identity, so each
/// one above t is a false match.
double false_match_fraction(std::span<const double> top1_scores, double t);

/// Quantile with linear interpolation between closest ranks,
/// h = (n - 1) p, on an ascending-sorted range.
template <typename Scalar>
Scalar sorted_quantile(std::span<const Scalar> sorted, double p) {
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + static_cast<Scalar>(h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Boxplot statistics. Whiskers sit at the 1.5 IQR fences clamped to the
/// observed range; outliers lie strictly outside the fences.
DistributionSummary summarize(std::span<const double> values);

/// Splits non-mated trials by whether both sides share an attribute.
AttributeSplit nonmated_attribute_split(std::span<const NonmatedTrial> trials);

/// Every probe x gallery comparison: same identity -> mated, otherwise
/// non-mated (kept with both attributes for the attribute split).
struct CollectedTrials {
  VerificationTrialSet trials;
  std::vector<NonmatedTrial> nonmated_detail;
};
CollectedTrials collect_trials(std::span<const LabeledTemplate> probes, const Gallery& gallery);

/// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2|.
double ks_statistic(std::span<const double> a, std::span<const double> b);
/// Asymptotic critical value c(alpha) sqrt((n + m) / (n m)).
double ks_critical_value(std::size_t n, std::size_t m, double alpha);

}  // namespace sbattack
