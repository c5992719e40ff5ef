#include "sbattack/report.hpp"

#include <sstream>

#include "sbattack/errors.hpp"
#include "sbattack/io.hpp"

namespace sbattack {

namespace {

using nlohmann::json;

// Typed lookup that reports schema problems as ValidationError.
template <typename T>
T require(const json& j, const char* key, const char* context) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(std::string(context) + ": missing '" + key + "'");
  }
  const json& v = j.at(key);
  bool ok = true;
  if constexpr (std::is_same_v<T, bool>) {
    ok = v.is_boolean();
  } else if constexpr (std::is_integral_v<T>) {
    ok = v.is_number_unsigned();
  } else if constexpr (std::is_floating_point_v<T>) {
    ok = v.is_number();
  } else if constexpr (std::is_same_v<T, std::string>) {
    ok = v.is_string();
  }
  if (!ok) throw ValidationError(std::string(context) + ": '" + key + "' has the wrong type");
  return v.get<T>();
}

const json& require_array(const json& j, const char* key, const char* context) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_array()) {
    throw ValidationError(std::string(context) + ": '" + key + "' must be an array");
  }
  return j.at(key);
}

}  // namespace

std::vector<double> AttackReport::top1_scores() const {
  std::vector<double> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) out.push_back(p.top1_score);
  return out;
}

AttackReport make_attack_report(std::string attacker_gallery, std::string target,
                                const AttackConfig& cfg, std::span<const LabeledTemplate> probes,
                                std::span<const AttackOutcome> outcomes) {
  if (probes.size() != outcomes.size()) {
    throw ValidationError("attack report: probe and outcome counts differ");
  }
  AttackReport r;
  r.attacker_gallery = std::move(attacker_gallery);
  r.target = std::move(target);
  r.strategy = cfg.strategy;
  r.n = cfg.n;
  std::vector<std::string> predicted;
  std::vector<std::string> truths;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& o = outcomes[i];
    r.predictions.push_back(
        {probes[i].id, o.prediction.attribute, probes[i].attribute, o.top1_score, o.prediction.tie});
    predicted.push_back(o.prediction.attribute);
    truths.push_back(probes[i].attribute);
  }
  r.success_rate = probes.empty() ? 0.0 : attack_success_rate(predicted, truths);
  return r;
}

json to_json(const AttackReport& r) {
  json preds = json::array();
  for (const auto& p : r.predictions) {
    preds.push_back({{"probe_id", p.probe_id},
                     {"predicted", p.predicted},
                     {"true", p.truth},
                     {"top1_score", p.top1_score},
                     {"tie", p.tie}});
  }
  return {{"attacker_gallery", r.attacker_gallery},
          {"target", r.target},
          {"strategy", std::string(to_string(r.strategy))},
          {"n", r.n},
          {"success_rate", r.success_rate},
          {"predictions", preds}};
}

AttackReport attack_report_from_json(const json& j) {
  constexpr const char* ctx = "attack report";
  AttackReport r;
  r.attacker_gallery = require<std::string>(j, "attacker_gallery", ctx);
  r.target = require<std::string>(j, "target", ctx);
  r.strategy = parse_strategy(require<std::string>(j, "strategy", ctx));
  r.n = require<std::size_t>(j, "n", ctx);
  r.success_rate = require<double>(j, "success_rate", ctx);
  for (const auto& p : require_array(j, "predictions", ctx)) {
    constexpr const char* pctx = "attack report prediction";
    r.predictions.push_back({require<std::string>(p, "probe_id", pctx),
                             require<std::string>(p, "predicted", pctx),
                             require<std::string>(p, "true", pctx),
                             require<double>(p, "top1_score", pctx), require<bool>(p, "tie", pctx)});
  }
  return r;
}

MetricsReport compute_metrics(const CollectedTrials& trials, std::span<const double> fmr_targets) {
  MetricsReport m;
  const EerResult e = eer(trials.trials);
  m.eer = e.eer;
  m.eer_threshold = e.threshold;
  for (double target : fmr_targets) {
    if (!(target > 0.0 && target < 1.0)) {
      throw ValidationError("FMR target " + format_double(target) + " must lie in (0, 1)");
    }
    const OperatingPoint op = operating_point_at_fmr(trials.trials, target);
    m.operating_points.push_back({target, op.threshold, op.fnmr});
  }
  m.boxplots = nonmated_attribute_split(trials.nonmated_detail);
  return m;
}

void join_false_matches(MetricsReport& metrics, std::span<const double> top1_scores) {
  metrics.attack_fm_fraction.clear();
  for (const auto& op : metrics.operating_points) {
    metrics.attack_fm_fraction.push_back(
        {op.fmr_target, op.threshold, false_match_fraction(top1_scores, op.threshold)});
  }
}

json to_json(const DistributionSummary& s) {
  return {{"count", s.count},   {"min", s.min},
          {"q1", s.q1},         {"median", s.median},
          {"q3", s.q3},         {"max", s.max},
          {"iqr", s.iqr},       {"whisker_low", s.whisker_low},
          {"whisker_high", s.whisker_high}, {"outlier_count", s.outlier_count}};
}

DistributionSummary distribution_summary_from_json(const json& j) {
  constexpr const char* ctx = "boxplot summary";
  DistributionSummary s;
  s.count = require<std::size_t>(j, "count", ctx);
  s.min = require<double>(j, "min", ctx);
  s.q1 = require<double>(j, "q1", ctx);
  s.median = require<double>(j, "median", ctx);
  s.q3 = require<double>(j, "q3", ctx);
  s.max = require<double>(j, "max", ctx);
  s.iqr = require<double>(j, "iqr", ctx);
  s.whisker_low = require<double>(j, "whisker_low", ctx);
  s.whisker_high = require<double>(j, "whisker_high", ctx);
  s.outlier_count = require<std::size_t>(j, "outlier_count", ctx);
  return s;
}

json to_json(const MetricsReport& m) {
  json ops = json::array();
  for (const auto& op : m.operating_points) {
    ops.push_back({{"fmr_target", op.fmr_target}, {"threshold", op.threshold}, {"fnmr", op.fnmr}});
  }
  json fm = json::array();
  for (const auto& f : m.attack_fm_fraction) {
    fm.push_back({{"fmr_target", f.fmr_target}, {"threshold", f.threshold}, {"fraction", f.fraction}});
  }
  return {{"eer", m.eer},
          {"eer_threshold", m.eer_threshold},
          {"operating_points", ops},
          {"attack_fm_fraction", fm},
          {"boxplots", {{"same", to_json(m.boxplots.same)}, {"different", to_json(m.boxplots.different)}}}};
}

MetricsReport metrics_report_from_json(const json& j) {
  constexpr const char* ctx = "metrics report";
  MetricsReport m;
  m.eer = require<double>(j, "eer", ctx);
  m.eer_threshold = j.contains("eer_threshold") ? require<double>(j, "eer_threshold", ctx) : 0.0;
  for (const auto& op : require_array(j, "operating_points", ctx)) {
    constexpr const char* octx = "metrics operating point";
    m.operating_points.push_back({require<double>(op, "fmr_target", octx),
                                  require<double>(op, "threshold", octx),
                                  require<double>(op, "fnmr", octx)});
  }
  for (const auto& f : require_array(j, "attack_fm_fraction", ctx)) {
    constexpr const char* fctx = "metrics false-match row";
    m.attack_fm_fraction.push_back({require<double>(f, "fmr_target", fctx),
                                    require<double>(f, "threshold", fctx),
                                    require<double>(f, "fraction", fctx)});
  }
  if (!j.contains("boxplots") || !j.at("boxplots").is_object()) {
    throw ValidationError("metrics report: 'boxplots' must be an object");
  }
  const auto& box = j.at("boxplots");
  if (!box.contains("same") || !box.contains("different")) {
    throw ValidationError("metrics report: boxplots need 'same' and 'different'");
  }
  m.boxplots.same = distribution_summary_from_json(box.at("same"));
  m.boxplots.different = distribution_summary_from_json(box.at("different"));
  return m;
}

json combined_report(const MetricsReport& joined, const AttackReport& attack) {
  json out = to_json(joined);
  out["attack"] = {{"attacker_gallery", attack.attacker_gallery},
                   {"target", attack.target},
                   {"strategy", std::string(to_string(attack.strategy))},
                   {"n", attack.n},
                   {"success_rate", attack.success_rate},
                   {"probes", attack.predictions.size()}};
  return out;
}

std::string success_table_csv(std::span<const AttackConfig> configs, std::span<const double> success_rates) {
  if (configs.size() != success_rates.size()) {
    throw ValidationError("success table: config and rate counts differ");
  }
  std::vector<std::size_t> ns;
  std::vector<Strategy> strategies;
  for (const auto& c : configs) {
    if (std::find(ns.begin(), ns.end(), c.n) == ns.end()) ns.push_back(c.n);
    if (std::find(strategies.begin(), strategies.end(), c.strategy) == strategies.end()) {
      strategies.push_back(c.strategy);
    }
  }
  std::ostringstream out;
  out << "strategy";
  for (auto n : ns) out << ",n=" << n;
  out << '\n';
  for (auto s : strategies) {
    out << to_string(s);
    for (auto n : ns) {
      out << ',';
      for (std::size_t i = 0; i < configs.size(); ++i) {
        if (configs[i].strategy == s && configs[i].n == n) {
          out << format_double(success_rates[i]);
          break;
        }
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string boxplot_csv(const AttributeSplit& split) {
  std::ostringstream out;
  out << "group,count,min,q1,median,q3,max,iqr,whisker_low,whisker_high,outlier_count\n";
  auto row = [&](const char* name, const DistributionSummary& s) {
    out << name << ',' << s.count << ',' << format_double(s.min) << ',' << format_double(s.q1) << ','
        << format_double(s.median) << ',' << format_double(s.q3) << ',' << format_double(s.max) << ','
        << format_double(s.iqr) << ',' << format_double(s.whisker_low) << ','
        << format_double(s.whisker_high) << ',' << s.outlier_count << '\n';
  };
  row("same", split.same);
  row("different", split.different);
  return out.str();
}

std::string det_curve_csv(std::span<const OperatingPoint> curve) {
  std::ostringstream out;
  out << "threshold,fmr,fnmr\n";
  for (const auto& p : curve) {
    out << format_double(p.threshold) << ',' << format_double(p.fmr) << ',' << format_double(p.fnmr)
        << '\n';
  }
  return out.str();
}

std::string duplicate_flags_csv(std::span<const DuplicateFlag> flags) {
  std::ostringstream out;
  out << "id_a,id_b,score\n";
  for (const auto& f : flags) out << f.id_a << ',' << f.id_b << ',' << format_double(f.score) << '\n';
  return out.str();
}

}  // namespace sbattack
