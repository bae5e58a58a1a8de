#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpodem/error.hpp"

namespace cpodem::io {

/// Little-endian binary writer over an ofstream. All multi-byte values are
/// encoded explicitly so files are portable across hosts.
class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw Error(ErrorKind::Io, "cannot create " + path.string());
  }

  void magic(std::string_view tag) { out_.write(tag.data(), static_cast<std::streamsize>(tag.size())); }

  void u32(std::uint32_t v) {
    std::array<unsigned char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b.data()), 4);
  }

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    std::array<unsigned char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b.data()), 8);
  }

  void f64s(std::span<const double> values) {
    if constexpr (std::endian::native == std::endian::little) {
      out_.write(reinterpret_cast<const char*>(values.data()),
                 static_cast<std::streamsize>(values.size() * sizeof(double)));
    } else {
      for (double v : values) f64(v);
    }
  }

  void close() {
    out_.close();
    if (!out_) throw Error(ErrorKind::Io, "write failed for " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw Error(ErrorKind::Io, "cannot open " + path.string());
  }

  void expect_magic(std::string_view tag) {
    std::string got(tag.size(), '\0');
    read_raw(got.data(), got.size());
    if (got != tag) {
      throw Error(ErrorKind::Io, path_.string() + ": bad magic, expected " + std::string(tag));
    }
  }

  std::uint32_t u32() {
    std::array<unsigned char, 4> b{};
    read_raw(b.data(), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }

  std::uint8_t u8() {
    unsigned char b = 0;
    read_raw(&b, 1);
    return b;
  }

  double f64() {
    std::array<unsigned char, 8> b{};
    read_raw(b.data(), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
  }

  void f64s(std::span<double> out) {
    if constexpr (std::endian::native == std::endian::little) {
      read_raw(out.data(), out.size() * sizeof(double));
    } else {
      for (double& v : out) v = f64();
    }
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  void read_raw(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw Error(ErrorKind::Io, path_.string() + ": truncated file");
    }
  }

  std::ifstream in_;
  std::filesystem::path path_;
};

}  // namespace cpodem::io
