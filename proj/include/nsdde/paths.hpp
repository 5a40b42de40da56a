#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace nsdde {

// Standard normal stream that is bit-reproducible across platforms: the
// mt19937_64 engine is fully specified by the standard, and the Gaussian
// transform (Box-Muller on 53-bit uniforms) is ours rather than the
// implementation-defined std::normal_distribution.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream);

  double next();

  // Uniform on (0, 1].
  double next_unit();

 private:
  std::mt19937_64 engine_;
  double cached_{0.0};
  bool has_cached_{false};
};

// Mixes (seed, stream) into one engine seed; distinct streams decorrelate
// regardless of how path indices are scheduled across workers.
std::uint64_t mix_stream_key(std::uint64_t seed, std::uint64_t stream);

// Seeded d-dimensional Brownian increments on a uniform step grid.
// increments(k, j) ~ N(0, step), filled step-major so regeneration with the
// same (seed, path_index, step, n_steps) is bit-identical.
struct BrownianGrid {
  int noise_dim{1};
  double step{0.0};
  Eigen::Index n_steps{0};
  Eigen::MatrixXd increments;  // n_steps x noise_dim
  std::uint64_t seed{0};
  std::int64_t path_index{0};
};

BrownianGrid generate(std::uint64_t seed, std::int64_t path_index, int noise_dim, double delta,
                      Eigen::Index n_steps);

// Coarse increment j is the pairwise-tree sum of fine increments
// [j*factor, (j+1)*factor). For dyadic factors the tree composes, so
// coarsen(coarsen(g, 2), 2) equals coarsen(g, 4) to the last bit.
BrownianGrid coarsen(const BrownianGrid& fine, Eigen::Index factor);

}  // namespace nsdde
