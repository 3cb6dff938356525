#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "streamann/dataset.hpp"
#include "streamann/types.hpp"

namespace streamann {

/// Exact k nearest active points for each query, ascending by (distance, id).
struct GroundTruth {
  std::size_t k = 0;
  std::vector<std::vector<Neighbor>> rows;
};

/// Exhaustive scan. Each row holds min(k, |active|) entries. Throws
/// Error(kInvalidInput) if `active` is empty or dimensions disagree.
GroundTruth brute_force_knn(const Dataset& dataset, std::span<const VectorId> active,
                            const Dataset& queries, std::size_t k, std::size_t threads = 1);

/// |G ∩ A| / |G| with G capped at k entries. An answer also counts as a hit
/// when its distance is within a 1e-6 relative window of the k-th truth
/// distance, so equidistant points are interchangeable. Each answer counts
/// once and hits are capped at |G|.
double recall_at_k(std::span<const Neighbor> answers, std::span<const Neighbor> truth,
                   std::size_t k);

/// Header (u32 queries, u32 k), then queries*k u32 ids, then queries*k f32
/// distances. Short rows are padded with id 0xFFFFFFFF and +inf.
void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

}  // namespace streamann
