#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "fusegraph/error.hpp"

namespace fusegraph {

/// Little-endian, fixed-width encoding so that equal state always yields
/// equal bytes.
class BinaryWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s.data(), s.size());
  }

  void raw(std::string_view s) { buf_.append(s.data(), s.size()); }

  void f64s(std::span<const double> v) {
    u64(v.size());
    for (double x : v) f64(x);
  }

  const std::string& bytes() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string_view data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint32_t u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    auto s = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }

  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    const auto n = length(1);
    return std::string(take(n));
  }

  std::string_view raw(std::size_t n) { return take(n); }

  std::vector<double> f64s() {
    const auto n = length(8);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }

  /// Reads a count and checks it against the bytes left.
  std::size_t length(std::size_t element_size) {
    const auto n = u64();
    if (element_size != 0 && n > remaining() / element_size)
      throw Error(ErrorCode::SnapshotCorrupt, "length field exceeds remaining bytes");
    return static_cast<std::size_t>(n);
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view take(std::size_t n) {
    if (n > remaining()) throw Error(ErrorCode::SnapshotCorrupt, "unexpected end of snapshot");
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace fusegraph
