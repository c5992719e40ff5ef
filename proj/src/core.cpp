#include "sbattack/core.hpp"

#include <set>
#include <unordered_set>

namespace sbattack {

AttributeSet::AttributeSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw ValidationError("attribute set needs at least 2 distinct labels, got " +
                          std::to_string(labels_.size()));
  }
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (l.empty()) throw ValidationError("attribute labels must be non-empty");
    if (!seen.insert(l).second) throw ValidationError("duplicate attribute label '" + l + "'");
  }
}

AttributeSet AttributeSet::from_values(const std::vector<std::string>& values) {
  std::set<std::string> sorted(values.begin(), values.end());
  return AttributeSet(std::vector<std::string>(sorted.begin(), sorted.end()));
}

std::optional<std::size_t> AttributeSet::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

void validate_template(const LabeledTemplate& t) {
  if (t.attribute.empty()) {
    throw ValidationError("template '" + t.id + "': empty attribute");
  }
  if (t.embedding.size() < 1) {
    throw ValidationError("template '" + t.id + "': empty embedding");
  }
  if (!t.embedding.allFinite()) {
    throw ValidationError("template '" + t.id + "': non-finite embedding value");
  }
  if (!(t.embedding.norm() > 0.0)) {
    throw ValidationError("template '" + t.id + "': zero-norm embedding");
  }
}

Gallery::Gallery(std::vector<LabeledTemplate> templates, AttributeSet attributes)
    : templates_(std::move(templates)), attributes_(std::move(attributes)) {
  if (templates_.empty()) throw ValidationError("gallery must contain at least one template");
  if (attributes_.size() < 2) throw ValidationError("gallery attribute set needs at least 2 labels");

  const Eigen::Index dim = templates_.front().embedding.size();
  unit_rows_.resize(static_cast<Eigen::Index>(templates_.size()), dim);
  attribute_index_.reserve(templates_.size());
  std::vector<std::size_t> per_attribute(attributes_.size(), 0);

  for (std::size_t i = 0; i < templates_.size(); ++i) {
    const auto& t = templates_[i];
    validate_template(t);
    if (t.embedding.size() != dim) {
      throw ValidationError("template '" + t.id + "': dimension " +
                            std::to_string(t.embedding.size()) + " differs from gallery dimension " +
                            std::to_string(dim));
    }
    const auto idx = attributes_.index_of(t.attribute);
    if (!idx) {
      throw ValidationError("template '" + t.id + "': attribute '" + t.attribute +
                            "' not in gallery attribute set");
    }
    attribute_index_.push_back(*idx);
    ++per_attribute[*idx];
    unit_rows_.row(static_cast<Eigen::Index>(i)) = t.embedding.transpose() / t.embedding.norm();
  }
  for (std::size_t a = 0; a < attributes_.size(); ++a) {
    if (per_attribute[a] == 0) {
      throw ValidationError("attribute '" + attributes_[a] + "' has no gallery template");
    }
  }
}

Gallery Gallery::from_templates(std::vector<LabeledTemplate> templates) {
  std::vector<std::string> values;
  values.reserve(templates.size());
  for (const auto& t : templates) values.push_back(t.attribute);
  auto attrs = AttributeSet::from_values(values);
  return Gallery(std::move(templates), std::move(attrs));
}

Eigen::VectorXd score_vector(const Embedding& probe, const Gallery& gallery) {
  if (probe.size() != gallery.dimension()) {
    throw ValidationError("probe dimension " + std::to_string(probe.size()) +
                          " differs from gallery dimension " + std::to_string(gallery.dimension()));
  }
  const double norm = probe.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw ValidationError("probe has zero-norm or non-finite embedding");
  }
  const Eigen::VectorXd unit = probe / norm;
  Eigen::VectorXd raw = gallery.unit_rows() * unit;
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    if (raw(i) > 1.0 - 1e-12 && gallery.unit_rows().row(i) == unit.transpose()) raw(i) = 1.0;
  }
  return (raw.array().max(-1.0).min(1.0) + 1.0) / 2.0;
}

std::vector<ScoredCandidate> compare_all(const LabeledTemplate& probe, const Gallery& gallery) {
  const Eigen::VectorXd scores = score_vector(probe.embedding, gallery);
  std::vector<ScoredCandidate> out;
  out.reserve(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    out.push_back({scores(static_cast<Eigen::Index>(i)), gallery[i].id, gallery[i].attribute});
  }
  return out;
}

}  // namespace sbattack
