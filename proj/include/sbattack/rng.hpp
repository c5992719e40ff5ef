#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string_view>

namespace sbattack {

/// Counter-based splitting of one run seed into independent per-stage
/// streams. The stream for (seed, stage) never depends on how many draws
/// other stages made.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t stream_seed(std::uint64_t seed, std::string_view stage);

/// Seeded random stream with a fixed draw order:
///   uniform()  one engine output, top 53 bits -> [0, 1)
///   normal()   two uniform() draws, Box-Muller cosine branch (no caching)
///   below(n)   rejection sampling on raw engine outputs
/// These are spelled out rather than taken from <random> distributions,
/// whose output sequences differ between standard library implementations.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view stage) : engine_(stream_seed(seed, stage)) {}

  double uniform();
  double normal();
  std::uint64_t below(std::uint64_t n);
  /// D-vector of independent standard normals, drawn in index order.
  Eigen::VectorXd normal_vector(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace sbattack
