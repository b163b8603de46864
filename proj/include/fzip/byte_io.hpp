#pragma once

// Little-endian fixed-width integers and LEB128 varints over byte buffers.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fzip/error.hpp"

namespace fzip {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) noexcept {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(Bytes& out) : out_(&out) {}

  void u8(std::uint8_t v) { buf().push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }

  void varint(std::uint64_t v) {
    while (v >= 0x80) {
      buf().push_back(static_cast<std::uint8_t>(v | 0x80));
      v >>= 7;
    }
    buf().push_back(static_cast<std::uint8_t>(v));
  }

  void raw(ByteView data) { buf().insert(buf().end(), data.begin(), data.end()); }

  // u16 length prefix + UTF-8 bytes.
  void str16(std::string_view s) {
    if (s.size() > 0xFFFF) fail(ErrorKind::Config, "string longer than 65535 bytes");
    u16(static_cast<std::uint16_t>(s.size()));
    raw(as_bytes(s));
  }

  Bytes& buf() { return out_ ? *out_ : own_; }
  Bytes take() { return std::move(buf()); }
  std::size_t size() const { return out_ ? out_->size() : own_.size(); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf().push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  Bytes own_;
  Bytes* out_ = nullptr;
};

// Bounds-checked reader. Running off the end raises `on_short`, which lets the
// archive reader and the stream decoders report their own error category.
class ByteReader {
 public:
  explicit ByteReader(ByteView data, ErrorKind on_short = ErrorKind::CorruptStream)
      : data_(data), on_short_(on_short) {}

  std::uint8_t u8() { need(1); return data_[pos_++]; }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }

  std::uint64_t varint() {
    std::uint64_t v = 0;
    for (int shift = 0;; shift += 7) {
      if (shift > 63) fail(on_short_, "varint longer than 64 bits");
      std::uint8_t b = u8();
      if (shift == 63 && (b & 0x7E)) fail(on_short_, "varint overflows 64 bits");
      v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
      if (!(b & 0x80)) return v;
    }
  }

  ByteView raw(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::string str16() {
    auto n = u16();
    auto b = raw(n);
    return {reinterpret_cast<const char*>(b.data()), b.size()};
  }

  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  bool done() const noexcept { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (n > remaining()) fail(on_short_, "unexpected end of data");
  }

  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  ByteView data_;
  std::size_t pos_ = 0;
  ErrorKind on_short_;
};

}  // namespace fzip
