#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "streamann/distance.hpp"
#include "streamann/types.hpp"

namespace streamann {

/// Row-major matrix of float vectors plus the metric used to compare them.
/// Immutable once built; concurrent reads need no synchronization.
class Dataset {
 public:
  Dataset() = default;
  /// Zero-filled dataset. Throws Error(kInvalidInput) if dim == 0.
  Dataset(std::size_t count, std::size_t dim, Metric metric = Metric::kSquaredEuclidean);
  /// Takes ownership of `values`, which must hold exactly count*dim floats.
  Dataset(std::size_t count, std::size_t dim, std::vector<float> values,
          Metric metric = Metric::kSquaredEuclidean);

  std::size_t count() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }
  Metric metric() const noexcept { return metric_; }
  bool empty() const noexcept { return count_ == 0; }

  std::span<const float> row(VectorId id) const noexcept {
    return {values_.data() + static_cast<std::size_t>(id) * dim_, dim_};
  }
  std::span<float> mutable_row(VectorId id) noexcept {
    return {values_.data() + static_cast<std::size_t>(id) * dim_, dim_};
  }
  std::span<const float> values() const noexcept { return values_; }

  void set_metric(Metric metric) noexcept { metric_ = metric; }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t count_ = 0;
  std::size_t dim_ = 1;
  Metric metric_ = Metric::kSquaredEuclidean;
  std::vector<float> values_;
};

// Binary layout shared by vector and id files (little-endian):
//   u32 count, u32 dim, then count*dim 4-byte payload values, row-major.
Dataset load_vectors(const std::filesystem::path& path,
                     Metric metric = Metric::kSquaredEuclidean);
void save_vectors(const Dataset& dataset, const std::filesystem::path& path);

/// Unsigned id matrix in the same header convention as vector files.
struct IdMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint32_t> values;

  friend bool operator==(const IdMatrix&, const IdMatrix&) = default;
};

IdMatrix load_ids(const std::filesystem::path& path);
void save_ids(const IdMatrix& ids, const std::filesystem::path& path);

/// Isotropic Gaussian mixture with centers drawn uniformly in the unit
/// hypercube. Each component has equal weight.
struct GaussianMixture {
  std::size_t dim = 0;
  float stddev = 0.1f;
  std::vector<std::vector<float>> centers;

  static GaussianMixture make(std::size_t dim, std::size_t clusters, std::uint64_t seed,
                              float stddev = 0.1f);

  /// Draws n points; component membership is uniform. Deterministic in seed.
  Dataset sample(std::size_t n, std::uint64_t seed,
                 Metric metric = Metric::kSquaredEuclidean) const;
};

/// Desk-scale synthetic dataset: `GaussianMixture::make(dim, clusters, seed)`
/// sampled with the same seed. n == 0 yields an empty dataset.
Dataset generate_synthetic(std::size_t n, std::size_t dim, std::size_t clusters,
                           std::uint64_t seed, Metric metric = Metric::kSquaredEuclidean);

}  // namespace streamann
