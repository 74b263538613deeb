#pragma once

// Little-endian binary helpers for the embedding and model bundles.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "threadminer/error.hpp"

namespace threadminer::detail {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void raw(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void str(std::string_view s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void f64s(std::span<const double> v) {
    u64(v.size());
    raw(v.data(), v.size() * sizeof(double));
  }
  void check() {
    if (!out_) throw Error(ErrorKind::kIo, "write failed");
  }

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  BinaryReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw Error(ErrorKind::kParse, what_ + ": truncated file");
    }
  }
  std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
  double f64() { double v; raw(&v, 8); return v; }
  std::size_t length(std::uint64_t limit = 1ULL << 34) {
    const std::uint64_t n = u64();
    if (n > limit) throw Error(ErrorKind::kParse, what_ + ": implausible length");
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    std::string s(length(1ULL << 30), '\0');
    raw(s.data(), s.size());
    return s;
  }
  std::vector<double> f64s() {
    std::vector<double> v(length());
    raw(v.data(), v.size() * sizeof(double));
    return v;
  }
  void magic(std::string_view expected) {
    std::string got(expected.size(), '\0');
    raw(got.data(), got.size());
    if (got != expected) throw Error(ErrorKind::kParse, what_ + ": bad magic");
  }

 private:
  std::istream& in_;
  std::string what_;
};

}  // namespace threadminer::detail
