#include "streamann/distance.hpp"

#include <string>

#include "streamann/error.hpp"

namespace streamann {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid input";
    case ErrorCode::kInvalidParameter: return "invalid parameter";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kEmptyIndex: return "empty index";
    case ErrorCode::kDuplicateId: return "duplicate id";
    case ErrorCode::kNotFound: return "not found";
    case ErrorCode::kAlignment: return "alignment error";
    case ErrorCode::kValidation: return "validation error";
  }
  return "unknown error";
}

std::string_view to_string(Metric metric) noexcept {
  return metric == Metric::kSquaredEuclidean ? "l2" : "ip";
}

Metric parse_metric(std::string_view name) {
  if (name == "l2" || name == "euclidean" || name == "squared_euclidean") {
    return Metric::kSquaredEuclidean;
  }
  if (name == "ip" || name == "inner_product" || name == "mips") {
    return Metric::kNegativeInnerProduct;
  }
  throw Error(ErrorCode::kInvalidParameter, "unknown metric '" + std::string(name) + "'");
}

// Eight independent accumulators, reduced pairwise. The fixed order keeps
// results identical across calls while leaving the loop vectorizable.
float squared_l2(const float* a, const float* b, std::size_t dim) noexcept {
  float acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= dim; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) {
      const float d = a[i + j] - b[i + j];
      acc[j] += d * d;
    }
  }
  for (std::size_t j = 0; i < dim; ++i, ++j) {
    const float d = a[i] - b[i];
    acc[j] += d * d;
  }
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
}

float inner_product(const float* a, const float* b, std::size_t dim) noexcept {
  float acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= dim; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
  }
  for (std::size_t j = 0; i < dim; ++i, ++j) acc[j] += a[i] * b[i];
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
}

float distance(std::span<const float> a, std::span<const float> b, Metric metric,
               DistanceCounter& counter) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidInput, "distance: dimension mismatch (" +
                                              std::to_string(a.size()) + " vs " +
                                              std::to_string(b.size()) + ")");
  }
  counter.add(1);
  return raw_distance(metric, a.data(), b.data(), a.size());
}

}  // namespace streamann
