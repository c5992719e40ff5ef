#include "sbattack/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sbattack/attack.hpp"
#include "sbattack/dataprep.hpp"
#include "sbattack/io.hpp"
#include "sbattack/metrics.hpp"
#include "sbattack/report.hpp"
#include "sbattack/synth.hpp"

namespace sbattack {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string format = "json";
};

struct SynthOptions {
  std::string config;
};

struct PrepareOptions {
  std::string input;
  std::vector<std::string> against;
  std::optional<double> flag_threshold;
  std::string name;
};

struct VerifyOptions {
  std::string gallery;
  std::string probes;
  std::vector<double> fmr_targets = kDefaultFmrTargets;
};

struct AttackOptions {
  std::string attacker;
  std::string target;
  std::string strategy = "vote";
  std::vector<std::size_t> n_sweep = {1, 5, 11, 51, 101, 201};
  std::optional<double> dup_threshold;
  bool no_truncation = false;
  unsigned workers = 0;
};

struct ReportOptions {
  std::string attack;
  std::string metrics;
};

fs::path out_dir(const CommonOptions& common) {
  fs::path dir(common.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

// Prints a small summary to stdout in the requested format.
void emit_summary(std::ostream& out, const CommonOptions& common, const json& summary) {
  if (common.format == "json") {
    out << summary.dump(2) << '\n';
    return;
  }
  out << "key,value\n";
  for (const auto& [key, value] : summary.items()) {
    out << key << ',' << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
  }
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

Gallery load_with_manifest(const std::string& csv) {
  const fs::path manifest = manifest_path_for(csv);
  if (fs::exists(manifest)) return load_gallery(csv, manifest);
  return load_gallery(csv);
}

GalleryManifest manifest_for(const std::string& name, std::span<const LabeledTemplate> templates,
                             const std::vector<std::string>& attributes, const std::string& source) {
  return {name, templates.front().embedding.size(), attributes, source};
}

int cmd_synth(const SynthOptions& opt, const CommonOptions& common, std::ostream& out) {
  const json config_json = read_json_file(opt.config);
  SynthConfig cfg = synth_config_from_json(config_json);
  if (common.seed) cfg.seed = *common.seed;
  validate(cfg);

  std::optional<EnhancerSpec> enhancer_spec;
  if (config_json.contains("enhancer")) enhancer_spec = enhancer_spec_from_json(config_json.at("enhancer"));

  SynthDataset data = generate(cfg);
  if (enhancer_spec) {
    const Enhancer enhancer(*enhancer_spec, cfg.dimension, data.attribute_basis);
    data.gallery_records = enhancer.apply(data.gallery_records);
    data.probes = enhancer.apply(data.probes);
    data.mated_probes = enhancer.apply(data.mated_probes);
  }

  const fs::path dir = out_dir(common);
  const std::string source = "synth:" + fs::path(opt.config).filename().string();
  json summary = {{"seed", cfg.seed}};
  auto emit = [&](const std::string& name, const std::vector<LabeledTemplate>& ts) {
    if (ts.empty()) return;
    const fs::path csv = dir / (name + ".csv");
    write_templates_csv(csv, ts);
    write_manifest(manifest_path_for(csv), manifest_for(name, ts, cfg.attributes, source));
    summary[name] = ts.size();
  };
  emit("gallery", data.gallery_records);
  emit("probes", data.probes);
  emit("mated", data.mated_probes);

  json sidecar = to_json(cfg);
  if (enhancer_spec) sidecar["enhancer"] = to_json(*enhancer_spec);
  write_json_file(dir / "synth_config.json", sidecar);
  emit_summary(out, common, summary);
  return kExitOk;
}

int cmd_prepare(const PrepareOptions& opt, const CommonOptions& common, std::ostream& out) {
  if (!common.seed) throw ValidationError("prepare: --seed is required (balancing is randomized)");
  if (!opt.flag_threshold) throw ValidationError("prepare: --flag-threshold is required");

  const auto records = read_templates_csv(fs::path(opt.input));
  if (records.empty()) throw ValidationError("prepare: '" + opt.input + "' contains no records");
  const auto selected = select_one_per_identity(records);

  std::vector<DuplicateFlag> flags;
  for (const auto& other_path : opt.against) {
    const auto other = select_one_per_identity(read_templates_csv(fs::path(other_path)));
    auto found = flag_cross_dataset_duplicates(selected, other, *opt.flag_threshold);
    flags.insert(flags.end(), found.begin(), found.end());
  }
  std::stable_sort(flags.begin(), flags.end(), [](const DuplicateFlag& a, const DuplicateFlag& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.id_a != b.id_a) return a.id_a < b.id_a;
    return a.id_b < b.id_b;
  });

  std::vector<std::string> labels;
  for (const auto& r : selected) labels.push_back(r.attribute);
  const AttributeSet attrs = AttributeSet::from_values(labels);
  const auto balanced = balance_by_attribute(selected, attrs, *common.seed);

  const fs::path dir = out_dir(common);
  const std::string name = opt.name.empty() ? stem_of(opt.input) + "_prepared" : opt.name;
  const fs::path csv = dir / (name + ".csv");
  write_templates_csv(csv, balanced);
  write_manifest(manifest_path_for(csv),
                 manifest_for(name, balanced, attrs.labels(), fs::path(opt.input).filename().string()));
  write_text_file(dir / (name + "_duplicates.csv"), duplicate_flags_csv(flags));

  emit_summary(out, common,
               {{"records", records.size()},
                {"identities", selected.size()},
                {"balanced", balanced.size()},
                {"duplicate_flags", flags.size()}});
  return kExitOk;
}

int cmd_verify(const VerifyOptions& opt, const CommonOptions& common, std::ostream& out) {
  const Gallery gallery = load_with_manifest(opt.gallery);
  const auto probes = read_templates_csv(fs::path(opt.probes));
  const CollectedTrials trials = collect_trials(probes, gallery);
  if (trials.trials.mated.empty() || trials.trials.nonmated.empty()) {
    throw ValidationError("verify: need both mated and non-mated comparisons (got " +
                          std::to_string(trials.trials.mated.size()) + " mated, " +
                          std::to_string(trials.trials.nonmated.size()) + " non-mated)");
  }
  const MetricsReport metrics = compute_metrics(trials, opt.fmr_targets);

  const fs::path dir = out_dir(common);
  write_json_file(dir / "metrics.json", to_json(metrics));
  write_text_file(dir / "det.csv", det_curve_csv(det_curve(trials.trials)));

  json summary = {{"eer", metrics.eer},
                  {"mated", trials.trials.mated.size()},
                  {"nonmated", trials.trials.nonmated.size()}};
  emit_summary(out, common, summary);
  return kExitOk;
}

int cmd_attack(const AttackOptions& opt, const CommonOptions& common, std::ostream& out,
               std::ostream& err) {
  const Gallery gallery = load_with_manifest(opt.attacker);
  const auto probes = read_templates_csv(fs::path(opt.target));
  if (probes.empty()) throw ValidationError("attack: target '" + opt.target + "' has no templates");
  for (const auto& p : probes) {
    if (p.embedding.size() != gallery.dimension()) {
      throw ValidationError("attack: target dimension " + std::to_string(p.embedding.size()) +
                            " differs from attacker dimension " + std::to_string(gallery.dimension()));
    }
  }
  if (opt.n_sweep.empty()) throw ValidationError("attack: --n-sweep must list at least one n");

  // Attacker and target identities should be disjoint.
  std::set<std::string> attacker_ids;
  for (const auto& t : gallery.templates()) attacker_ids.insert(t.identity);
  std::size_t shared = 0;
  for (const auto& p : probes) shared += attacker_ids.count(p.identity);
  if (shared > 0) {
    err << "warning: " << shared << " target templates share an identity label with the attacker gallery\n";
  }
  if (opt.dup_threshold) {
    const auto flags = flag_cross_dataset_duplicates(gallery.templates(), probes, *opt.dup_threshold);
    if (!flags.empty()) {
      err << "warning: " << flags.size() << " attacker/target pairs score above "
          << format_double(*opt.dup_threshold) << " (possible shared identities)\n";
    }
  }

  std::vector<Strategy> strategies;
  if (opt.strategy == "all") {
    strategies.assign(std::begin(kAllStrategies), std::end(kAllStrategies));
  } else {
    strategies.push_back(parse_strategy(opt.strategy));
  }
  std::vector<AttackConfig> configs;
  for (Strategy s : strategies) {
    for (std::size_t n : opt.n_sweep) {
      AttackConfig cfg{s, n, !opt.no_truncation};
      validate(cfg);
      for (const auto& w : config_warnings(cfg, gallery.attributes())) err << "warning: " << w << '\n';
      configs.push_back(cfg);
    }
  }

  const auto results = batch_attack_sweep(probes, gallery, configs, opt.workers);

  const fs::path dir = out_dir(common);
  const std::string attacker_name = stem_of(opt.attacker);
  const std::string target_name = stem_of(opt.target);
  std::vector<double> rates;
  json runs = json::array();
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const AttackReport report =
        make_attack_report(attacker_name, target_name, configs[c], probes, results[c]);
    const std::string file = "attack_" + std::string(to_string(configs[c].strategy)) + "_n" +
                             std::to_string(configs[c].n) + ".json";
    write_json_file(dir / file, to_json(report));
    rates.push_back(report.success_rate);
    runs.push_back({{"strategy", std::string(to_string(configs[c].strategy))},
                    {"n", configs[c].n},
                    {"success_rate", report.success_rate},
                    {"file", file}});
  }
  const std::string table = success_table_csv(configs, rates);
  write_text_file(dir / "success_rates.csv", table);

  if (common.format == "csv") {
    out << table;
  } else {
    out << json{{"runs", runs}}.dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_report(const ReportOptions& opt, const CommonOptions& common, std::ostream& out) {
  const AttackReport attack = attack_report_from_json(read_json_file(opt.attack));
  MetricsReport metrics = metrics_report_from_json(read_json_file(opt.metrics));
  if (attack.predictions.empty()) throw ValidationError("report: attack report has no predictions");
  if (metrics.operating_points.empty()) {
    throw ValidationError("report: metrics report has no operating points");
  }
  join_false_matches(metrics, attack.top1_scores());

  const fs::path dir = out_dir(common);
  const json combined = combined_report(metrics, attack);
  write_json_file(dir / "report.json", combined);
  write_text_file(dir / "boxplots.csv", boxplot_csv(metrics.boxplots));

  json rows = json::array();
  for (const auto& f : metrics.attack_fm_fraction) {
    rows.push_back({{"fmr_target", f.fmr_target}, {"threshold", f.threshold}, {"fraction", f.fraction}});
  }
  emit_summary(out, common, {{"success_rate", attack.success_rate}, {"attack_fm_fraction", rows}});
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Similarity-score attack on soft-biometric privacy enhancement", "sbattack"};
  app.require_subcommand(1);

  CommonOptions common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Seed for every randomized step");
    sub->add_option("--out", common.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--format", common.format, "Summary format on stdout")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
  };

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic gallery and probe sets");
  synth_cmd->add_option("config", synth.config, "Synth config JSON")->required();
  add_common(synth_cmd);

  PrepareOptions prepare;
  auto* prepare_cmd = app.add_subcommand("prepare", "Select, flag duplicates and balance a dataset");
  prepare_cmd->add_option("input", prepare.input, "Template CSV")->required();
  prepare_cmd->add_option("--against", prepare.against, "Other datasets to flag duplicates against");
  prepare_cmd->add_option("--flag-threshold", prepare.flag_threshold,
                          "Flag cross-dataset pairs scoring above this value");
  prepare_cmd->add_option("--name", prepare.name, "Output gallery name");
  add_common(prepare_cmd);

  VerifyOptions verify;
  auto* verify_cmd = app.add_subcommand("verify", "Verification metrics of probes against a gallery");
  verify_cmd->add_option("--gallery", verify.gallery, "Gallery template CSV")->required();
  verify_cmd->add_option("--probes", verify.probes, "Probe CSV (mated and non-mated)")->required();
  verify_cmd->add_option("--fmr-targets", verify.fmr_targets, "FMR targets as fractions")
      ->delimiter(',');
  add_common(verify_cmd);

  AttackOptions attack;
  auto* attack_cmd = app.add_subcommand("attack", "Attack target templates with an attacker gallery");
  attack_cmd->add_option("attacker", attack.attacker, "Attacker gallery CSV")->required();
  attack_cmd->add_option("target", attack.target, "Target template CSV")->required();
  attack_cmd->add_option("--strategy", attack.strategy,
                         "vote, average, linear_weighted, log_weighted or all")
      ->capture_default_str();
  attack_cmd->add_option("--n-sweep", attack.n_sweep, "Cutoffs n")->delimiter(',');
  attack_cmd->add_option("--dup-threshold", attack.dup_threshold,
                         "Warn about attacker/target pairs scoring above this value");
  attack_cmd->add_flag("--no-truncation", attack.no_truncation,
                       "Fail instead of shortening lists with fewer than n candidates");
  attack_cmd->add_option("--workers", attack.workers, "Worker threads (0 = all cores)");
  add_common(attack_cmd);

  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Join an attack report with verification metrics");
  report_cmd->add_option("--attack", report.attack, "Attack report JSON")->required();
  report_cmd->add_option("--metrics", report.metrics, "Metrics JSON")->required();
  add_common(report_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth, common, out);
    if (prepare_cmd->parsed()) return cmd_prepare(prepare, common, out);
    if (verify_cmd->parsed()) return cmd_verify(verify, common, out);
    if (attack_cmd->parsed()) return cmd_attack(attack, common, out, err);
    if (report_cmd->parsed()) return cmd_report(report, common, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace sbattack
