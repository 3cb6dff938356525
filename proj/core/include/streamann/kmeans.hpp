#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "streamann/dataset.hpp"

namespace streamann {

struct KMeansModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<float> centroids;          // k x dim, row-major
  std::vector<std::uint32_t> assignment;  // per dataset row
  std::size_t iterations = 0;

  std::span<const float> centroid(std::size_t c) const noexcept {
    return {centroids.data() + c * dim, dim};
  }
};

/// Lloyd's algorithm under squared Euclidean distance, seeded with k-means++.
/// A cluster that goes empty takes the point farthest from its centroid in
/// the currently largest cluster. Deterministic in `seed`. Throws
/// Error(kInvalidParameter) unless 1 <= k <= dataset.count().
KMeansModel kmeans(const Dataset& dataset, std::size_t k, std::size_t max_iters,
                   std::uint64_t seed);

}  // namespace streamann
