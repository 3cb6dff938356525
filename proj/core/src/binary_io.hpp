#pragma once

// Little-endian helpers shared by the binary file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "streamann/error.hpp"

namespace streamann::detail {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  const std::streamsize size = in.tellg();
  std::vector<char> bytes(static_cast<std::size_t>(size));
  in.seekg(0);
  if (size > 0 && !in.read(bytes.data(), size)) {
    throw Error(ErrorCode::kIo, "read failed for '" + path.string() + "'");
  }
  return bytes;
}

inline void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

/// Bounds-checked cursor over a file image; failures name the byte offset.
class Reader {
 public:
  Reader(const std::vector<char>& bytes, std::string origin)
      : bytes_(bytes), origin_(std::move(origin)) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  template <typename T>
  T get() {
    T value;
    copy_out(&value, sizeof(T));
    return value;
  }

  template <typename T>
  void get_array(T* dst, std::size_t n) {
    copy_out(dst, n * sizeof(T));
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kFormat,
                origin_ + ": " + what + " at byte offset " + std::to_string(pos_));
  }

 private:
  void copy_out(void* dst, std::size_t n) {
    if (n > remaining()) {
      fail("truncated file: need " + std::to_string(n) + " bytes, have " +
           std::to_string(remaining()));
    }
    if (n > 0) std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  const std::vector<char>& bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

class Writer {
 public:
  template <typename T>
  void put(T value) {
    put_array(&value, 1);
  }

  template <typename T>
  void put_array(const T* src, std::size_t n) {
    const auto* p = reinterpret_cast<const char*>(src);
    bytes_.insert(bytes_.end(), p, p + n * sizeof(T));
  }

  const std::vector<char>& bytes() const noexcept { return bytes_; }

 private:
  std::vector<char> bytes_;
};

}  // namespace streamann::detail
