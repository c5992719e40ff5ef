#include "sbattack/metrics.hpp"

#include <limits>

namespace sbattack {

namespace {

std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

double fraction(std::size_t count, std::size_t total) {
  return static_cast<double>(count) / static_cast<double>(total);
}

// Rates from pre-sorted lists.
double fmr_sorted(const std::vector<double>& nonmated, double t) {
  const auto above = nonmated.end() - std::upper_bound(nonmated.begin(), nonmated.end(), t);
  return fraction(static_cast<std::size_t>(above), nonmated.size());
}

double fnmr_sorted(const std::vector<double>& mated, double t) {
  const auto at_or_below = std::upper_bound(mated.begin(), mated.end(), t) - mated.begin();
  return fraction(static_cast<std::size_t>(at_or_below), mated.size());
}

void require_trials(const VerificationTrialSet& trials) {
  if (trials.mated.empty()) throw ValidationError("verification trials: no mated scores");
  if (trials.nonmated.empty()) throw ValidationError("verification trials: no non-mated scores");
}

std::vector<double> pooled_thresholds(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

double fmr_at(std::span<const double> nonmated, double t) {
  if (nonmated.empty()) throw ValidationError("fmr_at: no non-mated scores");
  const auto above = std::count_if(nonmated.begin(), nonmated.end(), [t](double s) { return s > t; });
  return fraction(static_cast<std::size_t>(above), nonmated.size());
}

double fnmr_at(std::span<const double> mated, double t) {
  if (mated.empty()) throw ValidationError("fnmr_at: no mated scores");
  const auto below = std::count_if(mated.begin(), mated.end(), [t](double s) { return s <= t; });
  return fraction(static_cast<std::size_t>(below), mated.size());
}

EerResult eer(const VerificationTrialSet& trials) {
  require_trials(trials);
  const auto mated = sorted_copy(trials.mated);
  const auto nonmated = sorted_copy(trials.nonmated);
  const auto thresholds = pooled_thresholds(mated, nonmated);

  // At -inf every comparison matches: FMR = 1, FNMR = 0.
  double prev_t = -std::numeric_limits<double>::infinity();
  double prev_fmr = 1.0;
  double prev_fnmr = 0.0;

  auto crossing = [&](double t, double fmr, double fnmr) -> EerResult {
    const double d_prev = prev_fmr - prev_fnmr;
    const double d_cur = fmr - fnmr;
    if (d_cur == 0.0) return {fmr, t};
    const double alpha = d_prev / (d_prev - d_cur);
    const double rate = prev_fmr + alpha * (fmr - prev_fmr);
    double threshold = t;
    if (std::isfinite(prev_t) && std::isfinite(t)) {
      threshold = prev_t + alpha * (t - prev_t);
    } else if (!std::isfinite(t)) {
      threshold = prev_t;
    }
    return {rate, threshold};
  };

  for (double t : thresholds) {
    const double fmr = fmr_sorted(nonmated, t);
    const double fnmr = fnmr_sorted(mated, t);
    if (fmr - fnmr <= 0.0) return crossing(t, fmr, fnmr);
    prev_t = t;
    prev_fmr = fmr;
    prev_fnmr = fnmr;
  }
  // The +inf sentinel has FMR = 0, FNMR = 1.
  return crossing(std::numeric_limits<double>::infinity(), 0.0, 1.0);
}

double threshold_at_fmr(std::span<const double> nonmated, double target_fmr) {
  if (nonmated.empty()) throw ValidationError("threshold_at_fmr: no non-mated scores");
  if (!(target_fmr > 0.0)) throw ValidationError("threshold_at_fmr: target FMR must be > 0");
  if (target_fmr >= 1.0) return -std::numeric_limits<double>::infinity();
  const auto sorted = sorted_copy(nonmated);
  // fmr is non-increasing in t and constant between observed scores, so the
  // first qualifying observed score is the smallest qualifying threshold.
  for (auto it = sorted.begin(); it != sorted.end(); it = std::upper_bound(it, sorted.end(), *it)) {
    if (fmr_sorted(sorted, *it) <= target_fmr) return *it;
  }
  return sorted.back();
}

OperatingPoint operating_point_at_fmr(const VerificationTrialSet& trials, double target_fmr) {
  require_trials(trials);
  const double t = threshold_at_fmr(trials.nonmated, target_fmr);
  return {t, fmr_at(trials.nonmated, t), fnmr_at(trials.mated, t)};
}

std::vector<OperatingPoint> det_curve(const VerificationTrialSet& trials) {
  require_trials(trials);
  const auto mated = sorted_copy(trials.mated);
  const auto nonmated = sorted_copy(trials.nonmated);
  std::vector<OperatingPoint> out;
  for (double t : pooled_thresholds(mated, nonmated)) {
    out.push_back({t, fmr_sorted(nonmated, t), fnmr_sorted(mated, t)});
  }
  return out;
}

double attack_success_rate(std::span<const std::string> predicted, std::span<const std::string> truths) {
  if (predicted.size() != truths.size()) {
    throw ValidationError("attack_success_rate: " + std::to_string(predicted.size()) +
                          " predictions vs " + std::to_string(truths.size()) + " truths");
  }
  if (predicted.empty()) throw ValidationError("attack_success_rate: no predictions");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == truths[i]) ++correct;
  }
  return fraction(correct, predicted.size());
}

double attack_success_rate(std::span<const Prediction> predictions, std::span<const std::string> truths) {
  std::vector<std::string> labels;
  labels.reserve(predictions.size());
  for (const auto& p : predictions) labels.push_back(p.attribute);
  return attack_success_rate(labels, truths);
}

double false_match_fraction(std::span<const double> top1_scores, double t) {
  if (top1_scores.empty()) throw ValidationError("false_match_fraction: no scores");
  return fmr_at(top1_scores, t);
}

DistributionSummary summarize(std::span<const double> values) {
  if (values.empty()) throw ValidationError("summarize: empty sample");
  const auto sorted = sorted_copy(values);
  const std::span<const double> view(sorted);
  DistributionSummary s;
  s.count = sorted.size();
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = sorted_quantile(view, 0.25);
  s.median = sorted_quantile(view, 0.5);
  s.q3 = sorted_quantile(view, 0.75);
  s.iqr = s.q3 - s.q1;
  const double fence_low = s.q1 - 1.5 * s.iqr;
  const double fence_high = s.q3 + 1.5 * s.iqr;
  s.whisker_low = std::max(s.min, fence_low);
  s.whisker_high = std::min(s.max, fence_high);
  s.outlier_count = static_cast<std::size_t>(std::count_if(
      sorted.begin(), sorted.end(), [&](double v) { return v < fence_low || v > fence_high; }));
  return s;
}

AttributeSplit nonmated_attribute_split(std::span<const NonmatedTrial> trials) {
  std::vector<double> same;
  std::vector<double> different;
  for (const auto& t : trials) {
    (t.attribute_a == t.attribute_b ? same : different).push_back(t.score);
  }
  if (same.empty()) throw ValidationError("attribute split: no same-attribute non-mated trials");
  if (different.empty()) {
    throw ValidationError("attribute split: no different-attribute non-mated trials");
  }
  return {summarize(same), summarize(different)};
}

CollectedTrials collect_trials(std::span<const LabeledTemplate> probes, const Gallery& gallery) {
  CollectedTrials out;
  for (const auto& probe : probes) {
    const Eigen::VectorXd scores = score_vector(probe.embedding, gallery);
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      const double s = scores(static_cast<Eigen::Index>(g));
      if (gallery[g].identity == probe.identity) {
        out.trials.mated.push_back(s);
      } else {
        out.trials.nonmated.push_back(s);
        out.nonmated_detail.push_back({s, probe.attribute, gallery[g].attribute});
      }
    }
  }
  return out;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("ks_statistic: empty sample");
  const auto x = sorted_copy(a);
  const auto y = sorted_copy(b);
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(fraction(i, x.size()) - fraction(j, y.size())));
  }
  return d;
}

double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const auto nd = static_cast<double>(n);
  const auto md = static_cast<double>(m);
  return c * std::sqrt((nd + md) / (nd * md));
}

}  // namespace sbattack
