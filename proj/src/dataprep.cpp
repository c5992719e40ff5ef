#include "sbattack/dataprep.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "sbattack/rng.hpp"

namespace sbattack {

namespace {

double quality_rank(const SampleRecord& r) {
  return r.quality.value_or(-std::numeric_limits<double>::infinity());
}

Eigen::MatrixXd unit_matrix(std::span<const SampleRecord> records, Eigen::Index dim) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(records.size()), dim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    validate_template(records[i]);
    if (records[i].embedding.size() != dim) {
      throw ValidationError("record '" + records[i].id + "': dimension " +
                            std::to_string(records[i].embedding.size()) + ", expected " +
                            std::to_string(dim));
    }
    m.row(static_cast<Eigen::Index>(i)) = records[i].embedding.transpose() / records[i].embedding.norm();
  }
  return m;
}

}  // namespace

std::vector<SampleRecord> select_one_per_identity(std::span<const SampleRecord> records) {
  std::unordered_map<std::string, std::size_t> best;  // identity -> record index
  std::vector<std::string> order;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = best.try_emplace(records[i].identity, i);
    if (inserted) {
      order.push_back(records[i].identity);
    } else if (quality_rank(records[i]) > quality_rank(records[it->second])) {
      it->second = i;
    }
  }
  std::vector<SampleRecord> out;
  out.reserve(order.size());
  for (const auto& identity : order) out.push_back(records[best.at(identity)]);
  return out;
}

std::vector<SampleRecord> balance_by_attribute(std::span<const SampleRecord> records,
                                               const AttributeSet& attrs, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> classes(attrs.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto idx = attrs.index_of(records[i].attribute);
    if (!idx) {
      throw ValidationError("record '" + records[i].id + "': attribute '" + records[i].attribute +
                            "' not in attribute set");
    }
    classes[*idx].push_back(i);
  }
  std::size_t smallest = records.size();
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    if (classes[a].empty()) {
      throw ValidationError("balance: attribute class '" + attrs[a] + "' has no records");
    }
    smallest = std::min(smallest, classes[a].size());
  }

  RandomStream rng(seed, "balance");
  std::vector<bool> keep(records.size(), false);
  for (auto& members : classes) {
    // Partial Fisher-Yates: the first `smallest` slots become a uniform sample.
    for (std::size_t i = 0; i < smallest; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(members.size() - i));
      std::swap(members[i], members[j]);
      keep[members[i]] = true;
    }
  }
  std::vector<SampleRecord> out;
  out.reserve(smallest * attrs.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) out.push_back(records[i]);
  }
  return out;
}

std::vector<DuplicateFlag> flag_cross_dataset_duplicates(std::span<const SampleRecord> dataset_a,
                                                         std::span<const SampleRecord> dataset_b,
                                                         double flag_threshold) {
  if (dataset_a.empty() || dataset_b.empty()) return {};
  const Eigen::Index dim = dataset_a.front().embedding.size();
  const Eigen::MatrixXd a = unit_matrix(dataset_a, dim);
  const Eigen::MatrixXd b = unit_matrix(dataset_b, dim);

  std::vector<DuplicateFlag> flags;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const Eigen::VectorXd raw = b * a.row(i).transpose();
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      const double score = normalize_score(std::clamp(raw(j), -1.0, 1.0));
      if (score > flag_threshold) {
        flags.push_back({dataset_a[static_cast<std::size_t>(i)].id,
                         dataset_b[static_cast<std::size_t>(j)].id, score});
      }
    }
  }
  std::sort(flags.begin(), flags.end(), [](const DuplicateFlag& x, const DuplicateFlag& y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.id_a != y.id_a) return x.id_a < y.id_a;
    return x.id_b < y.id_b;
  });
  return flags;
}

}  // namespace sbattack
