#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "reference.hpp"
#include "streamann/dataset.hpp"
#include "streamann/error.hpp"
#include "streamann/kmeans.hpp"

namespace streamann {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("streamann_ds_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path path(const char* name) const { return dir_ / name; }

  fs::path dir_;
};

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> header(std::uint32_t count, std::uint32_t dim) {
  std::vector<std::uint8_t> b;
  for (std::uint32_t v : {count, dim}) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  return b;
}

using DatasetIo = TempDir;

TEST_F(DatasetIo, LoadsTwoByTwo) {
  auto bytes = header(2, 2);
  const float vals[4] = {1.0f, -2.0f, 3.5f, 0.25f};
  const auto* raw = reinterpret_cast<const std::uint8_t*>(vals);
  bytes.insert(bytes.end(), raw, raw + sizeof(vals));
  write_bytes(path("a.fbin"), bytes);
  const Dataset d = load_vectors(path("a.fbin"));
  ASSERT_EQ(d.count(), 2u);
  ASSERT_EQ(d.dim(), 2u);
  EXPECT_EQ(d.row(1)[0], 3.5f);
  EXPECT_EQ(d.row(0)[1], -2.0f);
}

TEST_F(DatasetIo, EmptyFile) {
  write_bytes(path("e.fbin"), header(0, 8));
  const Dataset d = load_vectors(path("e.fbin"));
  EXPECT_EQ(d.count(), 0u);
  EXPECT_EQ(d.dim(), 8u);
}

TEST_F(DatasetIo, SaveSizes) {
  save_vectors(Dataset(0, 4), path("empty.fbin"));
  EXPECT_EQ(fs::file_size(path("empty.fbin")), 8u);
  save_vectors(Dataset(1, 1, std::vector<float>{1.5f}), path("one.fbin"));
  EXPECT_EQ(fs::file_size(path("one.fbin")), 12u);
  EXPECT_EQ(load_vectors(path("one.fbin")).row(0)[0], 1.5f);
}

TEST_F(DatasetIo, RoundTripIsIdentity) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> size(1, 120);
  std::normal_distribution<float> n(0.0f, 10.0f);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t count = trial == 0 ? 100 : size(rng);
    const std::size_t dim = trial == 0 ? 16 : size(rng);
    std::vector<float> v(count * dim);
    for (auto& x : v) x = n(rng);
    const Dataset d(count, dim, v);
    save_vectors(d, path("rt.fbin"));
    EXPECT_EQ(load_vectors(path("rt.fbin")), d);
  }
}

TEST_F(DatasetIo, TruncatedPayloadNamesOffset) {
  auto bytes = header(2, 2);
  bytes.resize(bytes.size() + 12, 0);
  write_bytes(path("t.fbin"), bytes);
  try {
    load_vectors(path("t.fbin"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
  }
}

TEST_F(DatasetIo, TruncatedHeaderAndTrailingBytes) {
  write_bytes(path("h.fbin"), {1, 0, 0});
  EXPECT_THROW(load_vectors(path("h.fbin")), Error);
  auto bytes = header(1, 1);
  bytes.resize(bytes.size() + 8, 0);
  write_bytes(path("x.fbin"), bytes);
  try {
    load_vectors(path("x.fbin"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
}

TEST_F(DatasetIo, MissingFile) {
  try {
    load_vectors(path("nope.fbin"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
    EXPECT_NE(std::string(e.what()).find("nope.fbin"), std::string::npos);
  }
}

TEST_F(DatasetIo, IdFileRoundTrip) {
  IdMatrix ids{3, 2, {0, 1, 2, 3, 4, 0xFFFFFFFFu}};
  save_ids(ids, path("ids.ibin"));
  EXPECT_EQ(fs::file_size(path("ids.ibin")), 8u + 24u);
  EXPECT_EQ(load_ids(path("ids.ibin")), ids);
}

TEST(Synthetic, Deterministic) {
  const Dataset a = generate_synthetic(10, 4, 1, 7);
  const Dataset b = generate_synthetic(10, 4, 1, 7);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, generate_synthetic(10, 4, 1, 8));
  EXPECT_EQ(generate_synthetic(0, 4, 1, 7).count(), 0u);
}

TEST(Synthetic, ClusterStructureIsRecoverable) {
  const Dataset d = generate_synthetic(1000, 16, 8, 1);
  const KMeansModel m = kmeans(d, 8, 50, 1);
  std::vector<double> mean(d.dim(), 0.0);
  for (VectorId i = 0; i < d.count(); ++i) {
    for (std::size_t j = 0; j < d.dim(); ++j) mean[j] += d.row(i)[j];
  }
  for (auto& x : mean) x /= static_cast<double>(d.count());
  double total = 0, within = 0;
  for (VectorId i = 0; i < d.count(); ++i) {
    for (std::size_t j = 0; j < d.dim(); ++j) {
      const double t = d.row(i)[j] - mean[j];
      const double w = d.row(i)[j] - m.centroid(m.assignment[i])[j];
      total += t * t;
      within += w * w;
    }
  }
  EXPECT_LT(within / total, 0.5);
}

}  // namespace
}  // namespace streamann
