#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sbattack/core.hpp"

namespace sbattack {

/// Generative model for embeddings with attribute-driven homogeneity.
///
/// Each attribute a gets an anchor mu_a of norm `signal_strength` inside a
/// fixed `attribute_subspace_dim`-dimensional subspace. An identity
/// centroid is mu_a plus isotropic noise of scale `between_identity_spread`;
/// a sample is its centroid plus isotropic noise of scale
/// `within_identity_noise`. With signal_strength = 0 the attribute carries
/// no information about the embedding.
struct SynthConfig {
  Eigen::Index dimension = 64;
  std::size_t identities_per_attribute = 50;
  std::size_t samples_per_identity = 1;
  Eigen::Index attribute_subspace_dim = 4;
  double signal_strength = 1.0;
  double within_identity_noise = 0.3;
  double between_identity_spread = 0.3;
  std::uint64_t seed = 0;
  std::vector<std::string> attributes = {"F", "M"};
  /// Fresh identities per attribute for the non-mated probe set.
  std::size_t probe_identities_per_attribute = 50;
  /// Also emit one extra sample of every gallery identity (mated probes).
  bool mated_probes = true;
};

/// Throws ValidationError naming the first violated invariant.
void validate(const SynthConfig& cfg);

struct SynthDataset {
  /// Every generated gallery sample, identities in attribute order.
  std::vector<LabeledTemplate> gallery_records;
  /// Non-mated probes: identities disjoint from the gallery.
  std::vector<LabeledTemplate> probes;
  /// One fresh sample per gallery identity; empty unless requested.
  std::vector<LabeledTemplate> mated_probes;
  /// D x d_a matrix whose columns are distinct signed coordinate axes.
  Eigen::MatrixXd attribute_basis;
  /// D x k matrix, column a is the anchor of attribute a.
  Eigen::MatrixXd anchors;
};

/// Deterministic in cfg. Each part draws from its own seeded stream
/// ("basis", "anchors", "gallery", "mated", "probes") in a fixed order:
/// attributes in listed order, identities in index order, a centroid's
/// D normals before its samples' D normals, and one uniform quality per
/// gallery sample after its noise.
SynthDataset generate(const SynthConfig& cfg);

/// Stand-in for a black-box privacy enhancement applied to templates.
struct EnhancerSpec {
  enum class Kind { passthrough, rotation, project_out };
  Kind kind = Kind::passthrough;
  std::uint64_t rotation_seed = 0;
  /// project_out: number of leading attribute directions removed.
  Eigen::Index remove = 0;
};

std::string_view to_string(EnhancerSpec::Kind kind);
EnhancerSpec::Kind parse_enhancer_kind(std::string_view name);

class Enhancer {
 public:
  /// `attribute_basis` is only consulted by project_out, which removes its
  /// first `remove` columns. Throws ValidationError if remove exceeds the
  /// basis width.
  Enhancer(const EnhancerSpec& spec, Eigen::Index dimension,
           const Eigen::MatrixXd& attribute_basis = Eigen::MatrixXd());

  Embedding apply(const Embedding& x) const;
  LabeledTemplate apply(const LabeledTemplate& t) const;
  std::vector<LabeledTemplate> apply(const std::vector<LabeledTemplate>& ts) const;

  const EnhancerSpec& spec() const { return spec_; }
  /// The orthogonal map of the rotation enhancer (empty otherwise).
  const Eigen::MatrixXd& rotation() const { return rotation_; }

 private:
  EnhancerSpec spec_;
  Eigen::Index dimension_;
  Eigen::MatrixXd rotation_;
  Eigen::MatrixXd removed_;
};

/// Haar-distributed n x n orthogonal matrix drawn from the given stream seed.
Eigen::MatrixXd random_orthogonal(Eigen::Index n, std::uint64_t seed);

}  // namespace sbattack
