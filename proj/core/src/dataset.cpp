#include "streamann/dataset.hpp"

#include <limits>
#include <random>
#include <string>

#include "binary_io.hpp"
#include "streamann/error.hpp"

namespace streamann {

Dataset::Dataset(std::size_t count, std::size_t dim, Metric metric)
    : Dataset(count, dim, std::vector<float>(count * dim, 0.0f), metric) {}

Dataset::Dataset(std::size_t count, std::size_t dim, std::vector<float> values, Metric metric)
    : count_(count), dim_(dim), metric_(metric), values_(std::move(values)) {
  if (dim == 0) throw Error(ErrorCode::kInvalidInput, "dataset dimension must be >= 1");
  if (values_.size() != count * dim) {
    throw Error(ErrorCode::kInvalidInput,
                "dataset payload has " + std::to_string(values_.size()) +
                    " floats, expected " + std::to_string(count * dim));
  }
}

namespace {

struct Header {
  std::uint32_t count;
  std::uint32_t dim;
};

Header read_header(detail::Reader& in) {
  Header h{};
  h.count = in.get<std::uint32_t>();
  h.dim = in.get<std::uint32_t>();
  const std::size_t payload = static_cast<std::size_t>(h.count) * h.dim * 4;
  if (in.remaining() != payload) {
    in.fail("header declares " + std::to_string(h.count) + "x" + std::to_string(h.dim) +
            " (" + std::to_string(payload) + " payload bytes) but file has " +
            std::to_string(in.remaining()));
  }
  return h;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidInput, std::string(what) + " does not fit in 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

Dataset load_vectors(const std::filesystem::path& path, Metric metric) {
  const auto bytes = detail::read_file(path);
  detail::Reader in(bytes, path.string());
  const Header h = read_header(in);
  if (h.dim == 0) {
    // The offset points at the dim field.
    throw Error(ErrorCode::kFormat, path.string() + ": zero dimension at byte offset 4");
  }
  std::vector<float> values(static_cast<std::size_t>(h.count) * h.dim);
  in.get_array(values.data(), values.size());
  return Dataset(h.count, h.dim, std::move(values), metric);
}

void save_vectors(const Dataset& dataset, const std::filesystem::path& path) {
  detail::Writer out;
  out.put(checked_u32(dataset.count(), "count"));
  out.put(checked_u32(dataset.dim(), "dim"));
  out.put_array(dataset.values().data(), dataset.values().size());
  detail::write_file(path, out.bytes());
}

IdMatrix load_ids(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  detail::Reader in(bytes, path.string());
  const Header h = read_header(in);
  IdMatrix ids{h.count, h.dim, std::vector<std::uint32_t>(static_cast<std::size_t>(h.count) * h.dim)};
  in.get_array(ids.values.data(), ids.values.size());
  return ids;
}

void save_ids(const IdMatrix& ids, const std::filesystem::path& path) {
  if (ids.values.size() != ids.rows * ids.cols) {
    throw Error(ErrorCode::kInvalidInput, "id matrix payload does not match rows*cols");
  }
  detail::Writer out;
  out.put(checked_u32(ids.rows, "rows"));
  out.put(checked_u32(ids.cols, "cols"));
  out.put_array(ids.values.data(), ids.values.size());
  detail::write_file(path, out.bytes());
}

GaussianMixture GaussianMixture::make(std::size_t dim, std::size_t clusters,
                                      std::uint64_t seed, float stddev) {
  if (dim == 0) throw Error(ErrorCode::kInvalidParameter, "mixture dimension must be >= 1");
  if (clusters == 0) throw Error(ErrorCode::kInvalidParameter, "mixture needs >= 1 cluster");
  GaussianMixture model;
  model.dim = dim;
  model.stddev = stddev;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  model.centers.resize(clusters);
  for (auto& c : model.centers) {
    c.resize(dim);
    for (auto& x : c) x = unit(rng);
  }
  return model;
}

Dataset GaussianMixture::sample(std::size_t n, std::uint64_t seed, Metric metric) const {
  Dataset out(n, dim, metric);
  // Offset the stream so sampling with the mixture's own seed does not replay
  // the draws that placed the centers.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> pick(0, centers.size() - 1);
  std::normal_distribution<float> noise(0.0f, stddev);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = centers[pick(rng)];
    auto row = out.mutable_row(static_cast<VectorId>(i));
    for (std::size_t d = 0; d < dim; ++d) row[d] = c[d] + noise(rng);
  }
  return out;
}

Dataset generate_synthetic(std::size_t n, std::size_t dim, std::size_t clusters,
                           std::uint64_t seed, Metric metric) {
  if (n == 0) return Dataset(0, dim == 0 ? 1 : dim, metric);
  if (clusters == 0 || clusters > n) {
    throw Error(ErrorCode::kInvalidParameter, "generate_synthetic requires n >= clusters >= 1");
  }
  return GaussianMixture::make(dim, clusters, seed).sample(n, seed, metric);
}

}  // namespace streamann
