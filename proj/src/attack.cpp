#include "sbattack/attack.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace sbattack {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::vote:
      return "vote";
    case Strategy::average:
      return "average";
    case Strategy::linear_weighted:
      return "linear_weighted";
    case Strategy::log_weighted:
      return "log_weighted";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  throw ValidationError("unknown strategy '" + std::string(name) +
                        "' (expected vote, average, linear_weighted or log_weighted)");
}

void validate(const AttackConfig& cfg) {
  if (cfg.n == 0) throw ValidationError("attack cutoff n must be >= 1");
}

std::vector<std::string> config_warnings(const AttackConfig& cfg, const AttributeSet& attrs) {
  std::vector<std::string> out;
  if (cfg.strategy == Strategy::vote && attrs.size() == 2 && cfg.n % 2 == 0) {
    out.push_back("vote with even n=" + std::to_string(cfg.n) +
                  " and two attributes can tie; odd n is recommended");
  }
  return out;
}

double Evidence::at(const AttributeSet& attrs, std::string_view label) const {
  const auto idx = attrs.index_of(label);
  if (!idx || *idx >= values.size()) {
    throw ValidationError("evidence has no entry for attribute '" + std::string(label) + "'");
  }
  return values[*idx];
}

namespace {

RankedList top_n(std::vector<ScoredCandidate> pool, std::size_t n) {
  RankedList out;
  out.truncated = pool.size() < n;
  const std::size_t keep = std::min(n, pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(),
                    ranks_before);
  pool.resize(keep);
  out.entries = std::move(pool);
  return out;
}

void check_lists(const PerAttributeLists& per_attr) {
  if (per_attr.empty()) throw ValidationError("evidence needs at least one attribute list");
  for (const auto& list : per_attr) {
    if (list.entries.empty()) throw ValidationError("evidence: empty per-attribute list");
  }
}

}  // namespace

RankedList rank_single(std::span<const ScoredCandidate> scored, std::size_t n) {
  if (scored.empty()) throw ValidationError("rank_single: no scored candidates");
  if (n == 0) throw ValidationError("rank_single: n must be >= 1");
  return top_n(std::vector<ScoredCandidate>(scored.begin(), scored.end()), n);
}

PerAttributeLists rank_per_attribute(std::span<const ScoredCandidate> scored, std::size_t n,
                                     const AttributeSet& attrs) {
  if (scored.empty()) throw ValidationError("rank_per_attribute: no scored candidates");
  if (n == 0) throw ValidationError("rank_per_attribute: n must be >= 1");
  std::vector<std::vector<ScoredCandidate>> pools(attrs.size());
  for (const auto& c : scored) {
    const auto idx = attrs.index_of(c.attribute);
    if (!idx) {
      throw ValidationError("candidate '" + c.candidate_id + "' has unknown attribute '" +
                            c.attribute + "'");
    }
    pools[*idx].push_back(c);
  }
  PerAttributeLists out;
  out.reserve(attrs.size());
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    if (pools[a].empty()) {
      throw ValidationError("rank_per_attribute: attribute '" + attrs[a] + "' has no candidates");
    }
    out.push_back(top_n(std::move(pools[a]), n));
  }
  return out;
}

Evidence evidence_vote(const RankedList& top, const AttributeSet& attrs) {
  if (top.entries.empty()) throw ValidationError("evidence_vote: empty ranked list");
  Evidence ev{Strategy::vote, std::vector<double>(attrs.size(), 0.0)};
  for (const auto& c : top.entries) {
    const auto idx = attrs.index_of(c.attribute);
    if (!idx) {
      throw ValidationError("evidence_vote: unknown attribute '" + c.attribute + "'");
    }
    ev.values[*idx] += 1.0;
  }
  return ev;
}

Evidence evidence_average(const PerAttributeLists& per_attr) {
  check_lists(per_attr);
  Evidence ev{Strategy::average, {}};
  ev.values.reserve(per_attr.size());
  for (const auto& list : per_attr) {
    double sum = 0.0;
    for (const auto& c : list.entries) sum += c.score;
    ev.values.push_back(sum / static_cast<double>(list.entries.size()));
  }
  return ev;
}

Evidence evidence_weighted(const PerAttributeLists& per_attr, WeightKind kind) {
  check_lists(per_attr);
  Evidence ev{kind == WeightKind::linear ? Strategy::linear_weighted : Strategy::log_weighted, {}};
  ev.values.reserve(per_attr.size());
  for (const auto& list : per_attr) {
    const auto m = static_cast<Eigen::Index>(list.entries.size());
    const Eigen::VectorXd w = weights(m, kind);
    Eigen::VectorXd s(m);
    for (Eigen::Index i = 0; i < m; ++i) s(i) = list.entries[static_cast<std::size_t>(i)].score;
    ev.values.push_back(w.dot(s) / w.sum());
  }
  return ev;
}

Prediction predict(const Evidence& ev, const AttributeSet& attrs) {
  if (ev.values.size() != attrs.size() || ev.values.empty()) {
    throw ValidationError("predict: evidence does not cover the attribute set");
  }
  std::size_t best = 0;
  bool tie = false;
  for (std::size_t a = 1; a < ev.values.size(); ++a) {
    if (ev.values[a] > ev.values[best]) {
      best = a;
      tie = false;
    } else if (ev.values[a] == ev.values[best]) {
      tie = true;
    }
  }
  return {attrs[best], ev, tie};
}

Prediction attack_scored(std::span<const ScoredCandidate> scored, const AttributeSet& attrs,
                         const AttackConfig& cfg) {
  validate(cfg);
  auto check_truncation = [&](bool truncated) {
    if (truncated && !cfg.allow_truncation) {
      throw ValidationError("fewer than n=" + std::to_string(cfg.n) +
                            " candidates available and truncation is disabled");
    }
  };
  if (cfg.strategy == Strategy::vote) {
    const RankedList top = rank_single(scored, cfg.n);
    check_truncation(top.truncated);
    return predict(evidence_vote(top, attrs), attrs);
  }
  const PerAttributeLists lists = rank_per_attribute(scored, cfg.n, attrs);
  for (const auto& l : lists) check_truncation(l.truncated);
  switch (cfg.strategy) {
    case Strategy::average:
      return predict(evidence_average(lists), attrs);
    case Strategy::linear_weighted:
      return predict(evidence_weighted(lists, WeightKind::linear), attrs);
    case Strategy::log_weighted:
      return predict(evidence_weighted(lists, WeightKind::log), attrs);
    case Strategy::vote:
      break;
  }
  throw ValidationError("unhandled strategy");
}

Prediction run_attack(const LabeledTemplate& probe, const Gallery& gallery, const AttackConfig& cfg) {
  const auto scored = compare_all(probe, gallery);
  return attack_scored(scored, gallery.attributes(), cfg);
}

std::vector<std::vector<AttackOutcome>> batch_attack_sweep(std::span<const LabeledTemplate> probes,
                                                           const Gallery& gallery,
                                                           std::span<const AttackConfig> configs,
                                                           unsigned workers) {
  for (const auto& cfg : configs) validate(cfg);
  for (const auto& p : probes) {
    if (p.embedding.size() != gallery.dimension()) {
      throw ValidationError("probe '" + p.id + "' dimension " + std::to_string(p.embedding.size()) +
                            " differs from gallery dimension " +
                            std::to_string(gallery.dimension()));
    }
  }

  std::vector<std::vector<AttackOutcome>> out(configs.size(),
                                              std::vector<AttackOutcome>(probes.size()));
  if (probes.empty()) return out;

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, probes.size()));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  auto work = [&] {
    for (;;) {
      const std::size_t p = next.fetch_add(1);
      if (p >= probes.size() || failed.load()) return;
      try {
        const auto scored = compare_all(probes[p], gallery);
        double top1 = 0.0;
        for (const auto& c : scored) top1 = std::max(top1, c.score);
        for (std::size_t c = 0; c < configs.size(); ++c) {
          out[c][p] = {attack_scored(scored, gallery.attributes(), configs[c]), top1};
        }
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<AttackOutcome> batch_attack(std::span<const LabeledTemplate> probes,
                                        const Gallery& gallery, const AttackConfig& cfg,
                                        unsigned workers) {
  auto sweep = batch_attack_sweep(probes, gallery, std::span<const AttackConfig>(&cfg, 1), workers);
  return std::move(sweep.front());
}

Prediction knn_baseline(const LabeledTemplate& probe, const Gallery& training, std::size_t k) {
  return run_attack(probe, training, AttackConfig{Strategy::vote, k, true});
}

}  // namespace sbattack
