#include "nsdde/paths.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "nsdde/errors.hpp"
#include "nsdde/reduction.hpp"

namespace nsdde {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t mix_stream_key(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed;
  const std::uint64_t a = splitmix64(state);
  state = a ^ stream;
  const std::uint64_t b = splitmix64(state);
  state = b + 0x9E3779B97F4A7C15ULL * stream;
  return splitmix64(state);
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream)
    : engine_(mix_stream_key(seed, stream)) {}

double NormalStream::next_unit() {
  // ((x >> 11) + 1) * 2^-53 lies in (0, 1], so log() below is always finite.
  return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

double NormalStream::next() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = next_unit();
  const double u2 = next_unit();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

BrownianGrid generate(std::uint64_t seed, std::int64_t path_index, int noise_dim, double delta,
                      Eigen::Index n_steps) {
  if (n_steps < 1) throw GridMismatchError("BrownianGrid needs at least one step");
  if (!(delta > 0.0)) throw GridMismatchError("BrownianGrid step must be positive");
  if (noise_dim < 1) throw GridMismatchError("BrownianGrid noise dimension must be positive");

  BrownianGrid grid;
  grid.noise_dim = noise_dim;
  grid.step = delta;
  grid.n_steps = n_steps;
  grid.seed = seed;
  grid.path_index = path_index;
  grid.increments.resize(n_steps, noise_dim);

  NormalStream stream(seed, static_cast<std::uint64_t>(path_index));
  const double scale = std::sqrt(delta);
  for (Eigen::Index k = 0; k < n_steps; ++k) {
    for (int j = 0; j < noise_dim; ++j) {
      grid.increments(k, j) = scale * stream.next();
    }
  }
  return grid;
}

BrownianGrid coarsen(const BrownianGrid& fine, Eigen::Index factor) {
  if (factor < 2) {
    throw GridMismatchError("coarsen factor must be at least 2, got " + std::to_string(factor));
  }
  if (fine.n_steps % factor != 0) {
    throw GridMismatchError("coarsen factor " + std::to_string(factor) +
                            " does not divide n_steps " + std::to_string(fine.n_steps));
  }

  BrownianGrid coarse;
  coarse.noise_dim = fine.noise_dim;
  coarse.step = fine.step * static_cast<double>(factor);
  coarse.n_steps = fine.n_steps / factor;
  coarse.seed = fine.seed;
  coarse.path_index = fine.path_index;
  coarse.increments.resize(coarse.n_steps, coarse.noise_dim);

  std::vector<double> block(static_cast<std::size_t>(factor));
  for (Eigen::Index j = 0; j < coarse.n_steps; ++j) {
    for (int c = 0; c < coarse.noise_dim; ++c) {
      for (Eigen::Index i = 0; i < factor; ++i) {
        block[static_cast<std::size_t>(i)] = fine.increments(j * factor + i, c);
      }
      coarse.increments(j, c) = pairwise_sum(block);
    }
  }
  return coarse;
}

}  // namespace nsdde
