#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sbattack/errors.hpp"

namespace sbattack {

using Embedding = Eigen::VectorXd;

/// Raw cosine similarity dot(a,b) / (|a| |b|), in [-1, 1].
///
/// Works on any pair of Eigen vector expressions of the same scalar type.
/// Throws ValidationError on a length mismatch or a zero-norm argument.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) {
    throw ValidationError("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
  }
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (!(na > Scalar(0)) || !(nb > Scalar(0))) {
    throw ValidationError("cosine_similarity: zero-norm embedding");
  }
  if ((a.array() == b.array()).all()) return Scalar(1);
  const Scalar c = a.dot(b) / (na * nb);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

/// Affine map of a raw cosine in [-1, 1] onto the [0, 1] score range.
template <typename Scalar>
Scalar normalize_score(Scalar raw) {
  if (!(raw >= Scalar(-1) && raw <= Scalar(1))) {
    throw ValidationError("normalize_score: raw similarity outside [-1, 1]");
  }
  return (Scalar(1) + raw) / Scalar(2);
}

/// Normalized cosine score in [0, 1]; symmetric in its arguments.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar similarity_score(const Eigen::MatrixBase<DerivedA>& a,
                                           const Eigen::MatrixBase<DerivedB>& b) {
  return normalize_score(cosine_similarity(a, b));
}

/// Distinct attribute labels in canonical order. The order is what breaks
/// evidence ties, so it stays fixed for the lifetime of a run.
class AttributeSet {
 public:
  AttributeSet() = default;
  explicit AttributeSet(std::vector<std::string> labels);

  /// Sorted distinct labels of the given values.
  static AttributeSet from_values(const std::vector<std::string>& values);

  std::size_t size() const { return labels_.size(); }
  const std::string& operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<std::size_t> index_of(std::string_view label) const;
  bool contains(std::string_view label) const { return index_of(label).has_value(); }

  friend bool operator==(const AttributeSet&, const AttributeSet&) = default;

 private:
  std::vector<std::string> labels_;
};

struct LabeledTemplate {
  std::string id;
  std::string identity;
  std::string attribute;
  std::optional<double> quality;
  Embedding embedding;
};

/// Throws ValidationError unless the template has a non-empty attribute and
/// a finite, non-zero embedding of length >= 1.
void validate_template(const LabeledTemplate& t);

/// The attacker's labeled database. Immutable once built; caches unit-norm
/// rows so every probe is scored with one matrix-vector product.
class Gallery {
 public:
  /// Every template attribute must be in `attributes` and every attribute
  /// must have at least one template.
  Gallery(std::vector<LabeledTemplate> templates, AttributeSet attributes);

  /// Attribute set taken from the templates themselves (sorted labels).
  static Gallery from_templates(std::vector<LabeledTemplate> templates);

  std::size_t size() const { return templates_.size(); }
  Eigen::Index dimension() const { return unit_rows_.cols(); }
  const std::vector<LabeledTemplate>& templates() const { return templates_; }
  const LabeledTemplate& operator[](std::size_t i) const { return templates_[i]; }
  const AttributeSet& attributes() const { return attributes_; }
  /// Attribute index (into attributes()) of each template, in gallery order.
  const std::vector<std::size_t>& attribute_indices() const { return attribute_index_; }
  /// N x D matrix of embeddings scaled to unit norm.
  const Eigen::MatrixXd& unit_rows() const { return unit_rows_; }

 private:
  std::vector<LabeledTemplate> templates_;
  AttributeSet attributes_;
  std::vector<std::size_t> attribute_index_;
  Eigen::MatrixXd unit_rows_;
};

struct ScoredCandidate {
  double score = 0.0;
  std::string candidate_id;
  std::string attribute;

  friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

/// Normalized scores of `probe` against every gallery entry, in gallery order.
Eigen::VectorXd score_vector(const Embedding& probe, const Gallery& gallery);

/// One ScoredCandidate per gallery entry, in gallery order.
std::vector<ScoredCandidate> compare_all(const LabeledTemplate& probe, const Gallery& gallery);

}  // namespace sbattack
