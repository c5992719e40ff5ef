// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sbattack/attack.hpp"
#include "sbattack/cli.hpp"
#include "sbattack/io.hpp"
#include "sbattack/metrics.hpp"
#include "sbattack/report.hpp"
#include "sbattack/synth.hpp"

using namespace sbattack;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

bool same_prediction(const Prediction& a, const Prediction& b) {
  return a.attribute == b.attribute && a.tie == b.tie && a.evidence.values == b.evidence.values;
}

std::vector<std::string> truths(const std::vector<LabeledTemplate>& ts) {
  std::vector<std::string> out;
  for (const auto& t : ts) out.push_back(t.attribute);
  return out;
}

// 1. Weight closed forms.
Outcome weights_exact() {
  const Eigen::VectorXd lin = weights<double>(5, WeightKind::linear);
  const Eigen::VectorXd log = weights<double>(3, WeightKind::log);
  const double expected_lin[] = {5.0 / 6, 4.0 / 6, 3.0 / 6, 2.0 / 6, 1.0 / 6};
  const double expected_log[] = {-std::log(0.25), -std::log(0.5), -std::log(0.75)};
  double err = 0.0;
  for (int i = 0; i < 5; ++i) err = std::max(err, std::abs(lin(i) - expected_lin[i]));
  for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(log(i) - expected_log[i]));
  return {lin.size() == 5 && log.size() == 3 && err <= 1e-12, fmt("max abs error %.3g", err)};
}

// Independent k-NN: full sort of (score desc, id asc), count labels, first
// attribute in canonical order wins ties.
std::string brute_knn(const LabeledTemplate& probe, const Gallery& g, std::size_t k) {
  std::vector<std::tuple<double, std::string, std::string>> rows;
  for (const auto& t : g.templates()) {
    rows.emplace_back(similarity_score(probe.embedding, t.embedding), t.id, t.attribute);
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    return std::get<1>(a) < std::get<1>(b);
  });
  std::map<std::string, int> votes;
  for (std::size_t i = 0; i < k && i < rows.size(); ++i) ++votes[std::get<2>(rows[i])];
  std::string best;
  int best_votes = -1;
  for (const auto& label : g.attributes().labels()) {
    if (votes[label] > best_votes) {
      best = label;
      best_votes = votes[label];
    }
  }
  return best;
}

// 2. Strategy degeneracy at n = 1 and k-NN equivalence.
Outcome strategy_degeneracy() {
  SynthConfig c;
  c.seed = 2;
  c.identities_per_attribute = 100;
  c.probe_identities_per_attribute = 250;
  c.mated_probes = false;
  const auto d = generate(c);
  const auto g = Gallery::from_templates(d.gallery_records);
  std::size_t strategy_mismatch = 0, knn_mismatch = 0, brute_mismatch = 0;
  for (const auto& p : d.probes) {
    const auto ref = run_attack(p, g, {Strategy::vote, 1, true});
    for (Strategy s : kAllStrategies) {
      if (run_attack(p, g, {s, 1, true}).attribute != ref.attribute) ++strategy_mismatch;
    }
    for (std::size_t k : {1, 3, 11}) {
      const auto knn = knn_baseline(p, g, k);
      if (!same_prediction(knn, run_attack(p, g, {Strategy::vote, k, true}))) ++knn_mismatch;
      if (knn.attribute != brute_knn(p, g, k)) ++brute_mismatch;
    }
  }
  return {strategy_mismatch == 0 && knn_mismatch == 0 && brute_mismatch == 0,
          fmt("%zu probes, strategy mismatches %zu, knn mismatches %zu, brute-force knn mismatches %zu",
              d.probes.size(), strategy_mismatch, knn_mismatch, brute_mismatch)};
}

// 3. Metrics against brute-force threshold sweeps.
Outcome oracle_equivalence() {
  std::mt19937_64 gen(31337);
  std::uniform_int_distribution<int> size(1, 100);
  std::uniform_int_distribution<int> grid(0, 25);
  std::uniform_real_distribution<double> u;
  std::normal_distribution<double> nd;
  double worst = 0.0;
  std::size_t bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const bool coarse = trial % 4 == 0;
    const double shift = 3.0 * u(gen);
    VerificationTrialSet t;
    for (int i = size(gen); i > 0; --i) t.mated.push_back(coarse ? grid(gen) / 25.0 : nd(gen) * 0.1 + 0.5 + 0.1 * shift);
    for (int i = size(gen); i > 0; --i) t.nonmated.push_back(coarse ? grid(gen) / 25.0 : nd(gen) * 0.1 + 0.5);

    auto track = [&](double a, double b) {
      const double diff = (std::isinf(a) && a == b) ? 0.0 : std::abs(a - b);
      worst = std::max(worst, diff);
      if (!(diff <= 1e-9)) ++bad;
    };
    track(eer(t).eer, oracle::eer(t.mated, t.nonmated));
    std::vector<double> probes_t = t.mated;
    probes_t.insert(probes_t.end(), t.nonmated.begin(), t.nonmated.end());
    probes_t.push_back(u(gen));
    for (double x : probes_t) {
      track(fmr_at(t.nonmated, x), oracle::fmr(t.nonmated, x));
      track(fnmr_at(t.mated, x), oracle::fnmr(t.mated, x));
    }
    for (double target : {0.001, 0.01, 0.1, 0.5, u(gen)}) {
      if (target <= 0.0) continue;
      track(threshold_at_fmr(t.nonmated, target), oracle::threshold_at_fmr(t.nonmated, target));
    }
  }
  return {bad == 0, fmt("1000 trial sets, worst deviation %.3g, %zu over 1e-9", worst, bad)};
}

// 4. Broad homogeneity: same-attribute non-mated pairs score higher.
struct PairScores {
  std::vector<double> same, different;
};

// Independent pairs: each template appears in exactly one pair.
PairScores independent_pairs(double beta, std::uint64_t seed, std::size_t pairs_per_group) {
  SynthConfig c;
  c.signal_strength = beta;
  c.seed = seed;
  c.dimension = 64;
  c.attribute_subspace_dim = 4;
  c.identities_per_attribute = pairs_per_group;
  c.probe_identities_per_attribute = pairs_per_group;
  c.mated_probes = false;
  const auto d = generate(c);
  const std::size_t n = pairs_per_group, half = n / 2;
  PairScores out;
  for (std::size_t i = 0; i < half; ++i) {
    // F block is [0, n), M block is [n, 2n) in both sets.
    out.same.push_back(similarity_score(d.gallery_records[i].embedding, d.probes[i].embedding));
    out.same.push_back(similarity_score(d.gallery_records[n + i].embedding, d.probes[n + i].embedding));
    out.different.push_back(similarity_score(d.gallery_records[half + i].embedding, d.probes[n + half + i].embedding));
    out.different.push_back(similarity_score(d.gallery_records[n + half + i].embedding, d.probes[half + i].embedding));
  }
  return out;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return sorted_quantile<double>(v, 0.5);
}

Outcome broad_homogeneity() {
  const auto on = independent_pairs(1.0, 4, 10000);
  const double med_same = median_of(on.same), med_diff = median_of(on.different);

  std::vector<std::pair<double, bool>> pooled;
  for (double s : on.same) pooled.emplace_back(s, true);
  for (double s : on.different) pooled.emplace_back(s, false);
  std::sort(pooled.begin(), pooled.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  const std::size_t top = pooled.size() / 100, bottom = pooled.size() / 2;
  double top_same = 0, bottom_same = 0;
  for (std::size_t i = 0; i < top; ++i) top_same += pooled[i].second;
  for (std::size_t i = pooled.size() - bottom; i < pooled.size(); ++i) bottom_same += pooled[i].second;
  top_same /= static_cast<double>(top);
  bottom_same /= static_cast<double>(bottom);

  const auto off = independent_pairs(0.0, 4, 10000);
  const double ks = ks_statistic(off.same, off.different);
  const double crit = ks_critical_value(off.same.size(), off.different.size(), 0.01);

  const bool pass = med_same > med_diff && top_same > bottom_same && ks < crit;
  return {pass, fmt("beta=1: %zu+%zu trials, median same %.4f vs diff %.4f, same fraction top 1%% %.3f vs bottom "
                    "50%% %.3f; beta=0: KS %.4f < critical %.4f",
                    on.same.size(), on.different.size(), med_same, med_diff, top_same, bottom_same, ks, crit)};
}

// 5. Attack succeeds where a classifier on the removed direction cannot.
Outcome attack_beats_classifier() {
  SynthConfig c;
  c.seed = 5;
  c.signal_strength = 1.0;
  c.identities_per_attribute = 500;
  c.probe_identities_per_attribute = 500;
  c.mated_probes = false;
  const auto d = generate(c);
  EnhancerSpec spec;
  spec.kind = EnhancerSpec::Kind::project_out;
  spec.remove = 1;
  const Enhancer enhancer(spec, c.dimension, d.attribute_basis);
  const auto gallery_records = enhancer.apply(d.gallery_records);
  const auto probes = enhancer.apply(d.probes);
  const auto g = Gallery::from_templates(gallery_records);

  const auto outcomes = batch_attack(probes, g, {Strategy::vote, 11, true});
  std::vector<Prediction> preds;
  for (const auto& o : outcomes) preds.push_back(o.prediction);
  const double rate = attack_success_rate(preds, truths(probes));
  const double m = static_cast<double>(probes.size());
  const double z = 1.959963984540054;
  // Wilson score interval.
  const double centre = (rate + z * z / (2 * m)) / (1 + z * z / m);
  const double half = z / (1 + z * z / m) * std::sqrt(rate * (1 - rate) / m + z * z / (4 * m * m));
  const double lo = centre - half, hi = centre + half;

  // Mean-difference classifier on the removed direction, trained on the
  // attacker gallery and evaluated on the probes.
  const Eigen::VectorXd dir = d.attribute_basis.col(0);
  double sum_f = 0, sum_m = 0;
  std::size_t n_f = 0, n_m = 0;
  for (const auto& t : gallery_records) {
    const double x = dir.dot(t.embedding);
    if (t.attribute == "F") {
      sum_f += x;
      ++n_f;
    } else {
      sum_m += x;
      ++n_m;
    }
  }
  const double mean_f = sum_f / static_cast<double>(n_f), mean_m = sum_m / static_cast<double>(n_m);
  const double mid = 0.5 * (mean_f + mean_m);
  std::size_t correct = 0;
  for (const auto& p : probes) {
    const double x = dir.dot(p.embedding);
    const std::string guess = (x - mid) * (mean_f - mean_m) > 0 ? "F" : "M";
    correct += guess == p.attribute;
  }
  const double clf = static_cast<double>(correct) / m;

  const bool pass = probes.size() >= 1000 && rate >= 0.55 && lo > 0.5 && std::abs(clf - 0.5) <= 0.04;
  return {pass, fmt("%zu probes, vote n=11 success %.4f (95%% CI [%.4f, %.4f]), removed-direction classifier %.4f",
                    probes.size(), rate, lo, hi, clf)};
}

// 6. Rotation keeps every score and prediction.
Outcome isometry_invariance() {
  SynthConfig c;
  c.seed = 6;
  c.identities_per_attribute = 100;
  c.probe_identities_per_attribute = 250;
  c.mated_probes = false;
  const auto d = generate(c);
  EnhancerSpec spec;
  spec.kind = EnhancerSpec::Kind::rotation;
  spec.rotation_seed = 17;
  const Enhancer rot(spec, c.dimension);
  const auto g = Gallery::from_templates(d.gallery_records);
  const auto gr = Gallery::from_templates(rot.apply(d.gallery_records));
  const auto probes_r = rot.apply(d.probes);

  double worst = 0.0;
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < d.probes.size(); ++i) {
    const Eigen::VectorXd a = score_vector(d.probes[i].embedding, g);
    const Eigen::VectorXd b = score_vector(probes_r[i].embedding, gr);
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  std::vector<AttackConfig> configs;
  for (Strategy s : kAllStrategies) {
    for (std::size_t n : {1, 5, 11, 51}) configs.push_back({s, n, true});
  }
  const auto plain = batch_attack_sweep(d.probes, g, configs);
  const auto rotated = batch_attack_sweep(probes_r, gr, configs);
  for (std::size_t cfg = 0; cfg < configs.size(); ++cfg) {
    for (std::size_t i = 0; i < d.probes.size(); ++i) {
      mismatches += plain[cfg][i].prediction.attribute != rotated[cfg][i].prediction.attribute;
    }
  }
  return {worst <= 1e-9 && mismatches == 0 && d.probes.size() == 500 && g.size() == 200,
          fmt("%zu probes x %zu gallery, max score deviation %.3g, prediction mismatches %zu over %zu configs",
              d.probes.size(), g.size(), worst, mismatches, configs.size())};
}

// 7. Invariance suite on randomized scored candidate lists.
std::vector<ScoredCandidate> random_scored(std::mt19937_64& gen, std::size_t per_attr, const AttributeSet& attrs) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::vector<ScoredCandidate> out;
  int id = 0;
  for (const auto& label : attrs.labels()) {
    for (std::size_t i = 0; i < per_attr; ++i) out.push_back({u(gen), "c" + std::to_string(id++), label});
  }
  std::shuffle(out.begin(), out.end(), gen);
  return out;
}

Outcome invariance_suite() {
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<std::size_t> pick_n(1, 25);
  std::uniform_real_distribution<double> u;
  const AttributeSet two({"F", "M"}), three({"A", "B", "C"});
  std::size_t monotone_bad = 0, affine_bad = 0, perm_bad = 0, cases = 0;
  double log_err = 0.0;

  for (int trial = 0; trial < 250; ++trial, ++cases) {
    const AttributeSet& attrs = trial % 2 ? two : three;
    const std::size_t n = pick_n(gen);
    const auto scored = random_scored(gen, 30, attrs);

    // Strictly increasing transforms keep the ranking, so vote is unchanged.
    const std::vector<std::function<double(double)>> monotone{
        [](double s) { return s * s * s; }, [](double s) { return std::exp(4 * s) - 1; },
        [](double s) { return std::atan(10 * (s - 0.5)); }};
    const AttackConfig vote{Strategy::vote, n, true};
    const auto base = attack_scored(scored, attrs, vote);
    for (const auto& f : monotone) {
      auto mapped = scored;
      for (auto& c : mapped) c.score = f(c.score);
      if (attack_scored(mapped, attrs, vote).attribute != base.attribute) ++monotone_bad;
    }

    // Positive affine maps keep the argmax of averages over equal-length lists.
    const AttackConfig avg{Strategy::average, n, true};
    const auto avg_base = attack_scored(scored, attrs, avg);
    const double a = 0.1 + 2.0 * u(gen), b = u(gen) - 0.5;
    auto affine = scored;
    for (auto& c : affine) c.score = a * c.score + b;
    if (attack_scored(affine, attrs, avg).attribute != avg_base.attribute) ++affine_bad;

    // Any logarithm base gives the same normalized weighted mean.
    const auto lists = rank_per_attribute(scored, n, attrs);
    const auto ev = evidence_weighted(lists, WeightKind::log);
    const double base_b = 1.5 + 20 * u(gen);
    for (std::size_t k = 0; k < lists.size(); ++k) {
      const auto& entries = lists[k].entries;
      const double len = static_cast<double>(entries.size());
      double num = 0, den = 0;
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const double w = -std::log(static_cast<double>(i + 1) / (len + 1)) / std::log(base_b);
        num += w * entries[i].score;
        den += w;
      }
      log_err = std::max(log_err, std::abs(num / den - ev.values[k]));
    }

    // Shuffling the gallery order changes nothing.
    SynthConfig sc;
    sc.dimension = 8;
    sc.attribute_subspace_dim = 2;
    sc.identities_per_attribute = 15;
    sc.probe_identities_per_attribute = 1;
    sc.mated_probes = false;
    sc.seed = static_cast<std::uint64_t>(trial);
    const auto d = generate(sc);
    auto shuffled = d.gallery_records;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    const auto g1 = Gallery::from_templates(d.gallery_records);
    const auto g2 = Gallery::from_templates(shuffled);
    for (Strategy s : kAllStrategies) {
      const AttackConfig cfg{s, static_cast<std::size_t>(1 + trial % 12), true};
      for (const auto& p : d.probes) {
        if (!same_prediction(run_attack(p, g1, cfg), run_attack(p, g2, cfg))) ++perm_bad;
      }
    }
  }
  const bool pass = monotone_bad == 0 && affine_bad == 0 && log_err <= 1e-12 && perm_bad == 0;
  return {pass, fmt("%zu cases each: monotone-vote failures %zu, affine-average failures %zu, log-base max error "
                    "%.3g, permutation failures %zu",
                    cases, monotone_bad, affine_bad, log_err, perm_bad)};
}

// 8. Attack top-1 scores clear verification thresholds far more often than the FMR.
Outcome false_match_tail() {
  SynthConfig c;
  c.seed = 8;
  c.signal_strength = 1.0;
  c.identities_per_attribute = 200;
  c.probe_identities_per_attribute = 250;
  const auto d = generate(c);
  const auto g = Gallery::from_templates(d.gallery_records);
  const auto trials = collect_trials(d.mated_probes, g);
  const auto outcomes = batch_attack(d.probes, g, {Strategy::vote, 11, true});
  std::vector<double> top1;
  for (const auto& o : outcomes) top1.push_back(o.top1_score);

  std::vector<double> fractions;
  std::string detail = fmt("%zu non-mated trials, %zu attacked probes;", trials.trials.nonmated.size(), top1.size());
  for (double target : kDefaultFmrTargets) {
    const double t = threshold_at_fmr(trials.trials.nonmated, target);
    fractions.push_back(false_match_fraction(top1, t));
    detail += fmt(" FMR %.3f -> fraction %.4f", target, fractions.back());
  }
  bool monotone = true;
  for (std::size_t i = 1; i < fractions.size(); ++i) monotone = monotone && fractions[i] >= fractions[i - 1];
  // "Substantially" is taken as at least ten times the nominal rate.
  return {fractions.front() >= 10 * kDefaultFmrTargets.front() && monotone, detail};
}

// 9. The CLI pipeline is byte-for-byte reproducible.
int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"sbattack"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "sbattack_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream(root / "config.json") << R"({"identities_per_attribute": 60, "samples_per_identity": 2,
                                              "probe_identities_per_attribute": 40})";
  }
  auto pipeline = [&](const fs::path& dir) {
    const std::string o = dir.string();
    const std::string c = (root / "config.json").string();
    int code = run({"synth", c, "--seed", "99", "--out", o});
    code |= run({"prepare", o + "/gallery.csv", "--seed", "99", "--flag-threshold", "0.95", "--against",
                 o + "/probes.csv", "--name", "attacker", "--out", o});
    code |= run({"verify", "--gallery", o + "/gallery.csv", "--probes", o + "/mated.csv", "--out", o});
    code |= run({"attack", o + "/attacker.csv", o + "/probes.csv", "--strategy", "all", "--n-sweep", "1,5,11,51",
                 "--out", o});
    code |= run({"report", "--attack", o + "/attack_vote_n11.json", "--metrics", o + "/metrics.json", "--out", o});
    return code;
  };
  const int a = pipeline(root / "a");
  const int b = pipeline(root / "b");
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    ++files;
    if (slurp(e.path()) != slurp(root / "b" / e.path().filename())) ++differ;
  }
  std::size_t files_b = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(root / "b")) ++files_b;
  fs::remove_all(root);
  return {a == 0 && b == 0 && files == files_b && files > 0 && differ == 0,
          fmt("exit codes %d/%d, %zu files compared, %zu differ", a, b, files, differ)};
}

}  // namespace

int main(int argc, char** argv) {
  // An optional argument runs a single criterion by number.
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {
      {1, "weight formulas", 1, weights_exact},
      {2, "strategy degeneracy", 10, strategy_degeneracy},
      {3, "oracle equivalence", 30, oracle_equivalence},
      {4, "broad homogeneity", 60, broad_homogeneity},
      {5, "attack beats removed-direction classifier", 60, attack_beats_classifier},
      {6, "isometry invariance", 10, isometry_invariance},
      {7, "invariance suite", 30, invariance_suite},
      {8, "false-match tail selection", 30, false_match_tail},
      {9, "pipeline determinism", 60, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = o.pass && secs < c.limit_s;
    failures += !pass;
    std::printf("criterion %d %s: %s (%.2fs, limit %.0fs) %s\n", c.id, c.name, pass ? "PASS" : "FAIL", secs,
                c.limit_s, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
