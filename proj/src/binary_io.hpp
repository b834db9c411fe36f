#pragma once

// Little-endian byte cursor helpers shared by the binary formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "clickbait/errors.hpp"

namespace clickbait::detail {

class ByteWriter {
 public:
  void raw(std::string_view bytes) { buf_.append(bytes); }

  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }

  const std::string& bytes() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }

  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  // `entry` is reported in TruncatedError; -1 means the header.
  std::uint32_t u32(long long entry) { return get<std::uint32_t>(entry); }
  std::uint64_t u64(long long entry) { return get<std::uint64_t>(entry); }
  float f32(long long entry) { return std::bit_cast<float>(get<std::uint32_t>(entry)); }
  double f64(long long entry) { return std::bit_cast<double>(get<std::uint64_t>(entry)); }

  std::string_view raw(std::size_t n, long long entry) {
    need(n, entry);
    std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  void skip(std::size_t n) { raw(n, -1); }
  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n, long long entry) {
    if (bytes_.size() - pos_ < n) {
      std::string where = entry < 0 ? "header" : "entry " + std::to_string(entry);
      throw TruncatedError("file truncated in " + where + " (needed " + std::to_string(n) + " bytes, " +
                               std::to_string(bytes_.size() - pos_) + " left)",
                           entry);
    }
  }

  template <typename U>
  U get(long long entry) {
    need(sizeof(U), entry);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace clickbait::detail
