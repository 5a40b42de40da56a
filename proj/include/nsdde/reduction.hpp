#pragma once

#include <cstddef>
#include <span>

namespace nsdde {

// Pairwise (binary tree) summation with a fixed split. The tree over a block
// of 2^a * 2^b entries is the composition of the trees over its 2^b-blocks,
// which is what makes dyadic coarsening and worker-count-independent Monte
// Carlo aggregation bit-exact rather than tolerance-based.
inline double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n == 1) return values[0];
  if (n == 2) return values[0] + values[1];
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

inline double pairwise_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return pairwise_sum(values) / static_cast<double>(values.size());
}

}  // namespace nsdde
