#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sbattack/core.hpp"

namespace sbattack {

/// Records share the template layout.
using SampleRecord = LabeledTemplate;

/// A cross-dataset pair scoring above the review threshold. Flags are for
/// human review; nothing is removed automatically.
struct DuplicateFlag {
  std::string id_a;
  std::string id_b;
  double score = 0.0;

  friend bool operator==(const DuplicateFlag&, const DuplicateFlag&) = default;
};

/// Keeps the highest-quality record of each identity. Missing quality ranks
/// lowest; equal qualities keep the earliest record. Output follows the
/// order in which identities first appear.
std::vector<SampleRecord> select_one_per_identity(std::span<const SampleRecord> records);

/// Seeded uniform downsampling of every attribute class to the smallest
/// class size. Never oversamples. Output keeps input order.
std::vector<SampleRecord> balance_by_attribute(std::span<const SampleRecord> records,
                                               const AttributeSet& attrs, std::uint64_t seed);

/// All pairs (a, b) with normalized cosine score > flag_threshold, sorted
/// by score descending, then id_a, then id_b.
std::vector<DuplicateFlag> flag_cross_dataset_duplicates(std::span<const SampleRecord> dataset_a,
                                                         std::span<const SampleRecord> dataset_b,
                                                         double flag_threshold);

}  // namespace sbattack
