#include "sbattack/synth.hpp"

#include <cstdio>
#include <numeric>

#include "sbattack/errors.hpp"
#include "sbattack/rng.hpp"

namespace sbattack {

namespace {

// Q of a QR factorization with the signs fixed so that diag(R) > 0, which
// makes the result unique (and Haar-distributed for a Gaussian input).
Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& gaussian) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(gaussian.rows(), gaussian.cols());
  const Eigen::MatrixXd r = qr.matrixQR().topRows(gaussian.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < gaussian.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

Eigen::MatrixXd gaussian_matrix(RandomStream& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

// d_a distinct coordinate axes with random signs. Noise is isotropic, so the
// subspace orientation does not change any score distribution, and an
// axis-aligned span lets project_out zero the removed coordinates exactly.
Eigen::MatrixXd signed_axes(RandomStream& rng, Eigen::Index rows, Eigen::Index cols) {
  std::vector<Eigen::Index> axes(static_cast<std::size_t>(rows));
  std::iota(axes.begin(), axes.end(), Eigen::Index{0});
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const auto pick = j + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(rows - j)));
    std::swap(axes[static_cast<std::size_t>(j)], axes[static_cast<std::size_t>(pick)]);
    m(axes[static_cast<std::size_t>(j)], j) = rng.uniform() < 0.5 ? -1.0 : 1.0;
  }
  return m;
}

std::string numbered(std::string_view prefix, std::string_view attribute, std::size_t index) {
  char digits[32];
  std::snprintf(digits, sizeof(digits), "%05zu", index);
  return std::string(prefix) + "-" + std::string(attribute) + "-" + digits;
}

}  // namespace

void validate(const SynthConfig& cfg) {
  auto fail = [](const std::string& what) { throw ValidationError("synth config: " + what); };
  if (cfg.attribute_subspace_dim < 1) fail("attribute_subspace_dim must be >= 1");
  if (cfg.dimension <= cfg.attribute_subspace_dim) {
    fail("dimension must exceed attribute_subspace_dim (D > d_a)");
  }
  if (!(cfg.signal_strength >= 0.0) || !std::isfinite(cfg.signal_strength)) {
    fail("signal_strength must be finite and >= 0");
  }
  if (!(cfg.within_identity_noise > 0.0) || !std::isfinite(cfg.within_identity_noise)) {
    fail("within_identity_noise must be finite and > 0");
  }
  if (!(cfg.between_identity_spread > 0.0) || !std::isfinite(cfg.between_identity_spread)) {
    fail("between_identity_spread must be finite and > 0");
  }
  if (cfg.identities_per_attribute < 1) fail("identities_per_attribute must be >= 1");
  if (cfg.samples_per_identity < 1) fail("samples_per_identity must be >= 1");
  try {
    AttributeSet attrs(cfg.attributes);
  } catch (const ValidationError& e) {
    fail(e.what());
  }
  for (const auto& a : cfg.attributes) {
    if (a.find_first_of(",\n\r\"") != std::string::npos) {
      fail("attribute label '" + a + "' contains a CSV delimiter");
    }
  }
}

SynthDataset generate(const SynthConfig& cfg) {
  validate(cfg);
  const Eigen::Index dim = cfg.dimension;
  const Eigen::Index sub = cfg.attribute_subspace_dim;
  const auto k = static_cast<Eigen::Index>(cfg.attributes.size());

  SynthDataset out;
  {
    RandomStream rng(cfg.seed, "basis");
    out.attribute_basis = signed_axes(rng, dim, sub);
  }
  {
    RandomStream rng(cfg.seed, "anchors");
    Eigen::MatrixXd coeff = gaussian_matrix(rng, sub, k);
    // Centering keeps the anchors spread around the origin (antipodal for
    // two attributes) so no draw leaves two attributes nearly coincident.
    coeff.colwise() -= coeff.rowwise().mean();
    for (Eigen::Index a = 0; a < k; ++a) {
      const double norm = coeff.col(a).norm();
      coeff.col(a) = norm > 0.0 ? Eigen::VectorXd(coeff.col(a) * (cfg.signal_strength / norm))
                                : Eigen::VectorXd::Zero(sub);
    }
    out.anchors = out.attribute_basis * coeff;
  }

  std::vector<Eigen::VectorXd> centroids;
  {
    RandomStream rng(cfg.seed, "gallery");
    for (Eigen::Index a = 0; a < k; ++a) {
      const auto& label = cfg.attributes[static_cast<std::size_t>(a)];
      for (std::size_t j = 0; j < cfg.identities_per_attribute; ++j) {
        const std::string identity = numbered("gal", label, j);
        Eigen::VectorXd centroid = out.anchors.col(a) + cfg.between_identity_spread * rng.normal_vector(dim);
        for (std::size_t s = 0; s < cfg.samples_per_identity; ++s) {
          LabeledTemplate t;
          t.embedding = centroid + cfg.within_identity_noise * rng.normal_vector(dim);
          t.quality = rng.uniform();
          t.identity = identity;
          t.id = identity + "-s" + std::to_string(s);
          t.attribute = label;
          out.gallery_records.push_back(std::move(t));
        }
        centroids.push_back(std::move(centroid));
      }
    }
  }
  if (cfg.mated_probes) {
    RandomStream rng(cfg.seed, "mated");
    std::size_t c = 0;
    for (Eigen::Index a = 0; a < k; ++a) {
      const auto& label = cfg.attributes[static_cast<std::size_t>(a)];
      for (std::size_t j = 0; j < cfg.identities_per_attribute; ++j, ++c) {
        LabeledTemplate t;
        t.identity = numbered("gal", label, j);
        t.id = t.identity + "-m";
        t.attribute = label;
        t.embedding = centroids[c] + cfg.within_identity_noise * rng.normal_vector(dim);
        out.mated_probes.push_back(std::move(t));
      }
    }
  }
  {
    RandomStream rng(cfg.seed, "probes");
    for (Eigen::Index a = 0; a < k; ++a) {
      const auto& label = cfg.attributes[static_cast<std::size_t>(a)];
      for (std::size_t j = 0; j < cfg.probe_identities_per_attribute; ++j) {
        const Eigen::VectorXd centroid =
            out.anchors.col(a) + cfg.between_identity_spread * rng.normal_vector(dim);
        LabeledTemplate t;
        t.identity = numbered("prb", label, j);
        t.id = t.identity + "-s0";
        t.attribute = label;
        t.embedding = centroid + cfg.within_identity_noise * rng.normal_vector(dim);
        out.probes.push_back(std::move(t));
      }
    }
  }
  return out;
}

std::string_view to_string(EnhancerSpec::Kind kind) {
  switch (kind) {
    case EnhancerSpec::Kind::passthrough:
      return "passthrough";
    case EnhancerSpec::Kind::rotation:
      return "rotation";
    case EnhancerSpec::Kind::project_out:
      return "project_out";
  }
  return "unknown";
}

EnhancerSpec::Kind parse_enhancer_kind(std::string_view name) {
  for (auto k : {EnhancerSpec::Kind::passthrough, EnhancerSpec::Kind::rotation,
                 EnhancerSpec::Kind::project_out}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown enhancer kind '" + std::string(name) +
                        "' (expected passthrough, rotation or project_out)");
}

Eigen::MatrixXd random_orthogonal(Eigen::Index n, std::uint64_t seed) {
  RandomStream rng(seed, "rotation");
  return orthonormal_columns(gaussian_matrix(rng, n, n));
}

Enhancer::Enhancer(const EnhancerSpec& spec, Eigen::Index dimension,
                   const Eigen::MatrixXd& attribute_basis)
    : spec_(spec), dimension_(dimension) {
  if (dimension < 1) throw ValidationError("enhancer: dimension must be >= 1");
  switch (spec.kind) {
    case EnhancerSpec::Kind::passthrough:
      break;
    case EnhancerSpec::Kind::rotation:
      rotation_ = random_orthogonal(dimension, spec.rotation_seed);
      break;
    case EnhancerSpec::Kind::project_out:
      if (spec.remove < 0) throw ValidationError("enhancer: remove must be >= 0");
      if (spec.remove > attribute_basis.cols()) {
        throw ValidationError("enhancer: cannot remove " + std::to_string(spec.remove) +
                              " directions from a " + std::to_string(attribute_basis.cols()) +
                              "-dimensional attribute subspace (r > d_a)");
      }
      if (spec.remove > 0 && attribute_basis.rows() != dimension) {
        throw ValidationError("enhancer: attribute basis dimension mismatch");
      }
      removed_ = attribute_basis.leftCols(spec.remove);
      break;
  }
}

Embedding Enhancer::apply(const Embedding& x) const {
  if (x.size() != dimension_) {
    throw ValidationError("enhancer: embedding dimension " + std::to_string(x.size()) +
                          " differs from " + std::to_string(dimension_));
  }
  switch (spec_.kind) {
    case EnhancerSpec::Kind::passthrough:
      return x;
    case EnhancerSpec::Kind::rotation:
      return rotation_ * x;
    case EnhancerSpec::Kind::project_out: {
      if (removed_.cols() == 0) return x;
      Embedding y = x - removed_ * (removed_.transpose() * x);
      // Second pass clears the rounding residue left in the removed span.
      y -= removed_ * (removed_.transpose() * y);
      return y;
    }
  }
  return x;
}

LabeledTemplate Enhancer::apply(const LabeledTemplate& t) const {
  LabeledTemplate out = t;
  out.embedding = apply(t.embedding);
  return out;
}

std::vector<LabeledTemplate> Enhancer::apply(const std::vector<LabeledTemplate>& ts) const {
  std::vector<LabeledTemplate> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(apply(t));
  return out;
}

}  // namespace sbattack
