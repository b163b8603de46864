#pragma once

// Byte-oriented range coder: 32-bit range, 64-bit low with carry, one byte
// emitted per renormalization below 2^24, five-byte flush.

#include <cstdint>
#include <vector>

#include "fzip/byte_io.hpp"

namespace fzip {

class RangeEncoder {
 public:
  explicit RangeEncoder(Bytes& out) : out_(out) {}

  // Encode the interval [cum_low, cum_low + freq) out of `total` (<= 2^16).
  void encode(std::uint32_t cum_low, std::uint32_t freq, std::uint32_t total);
  void flush();

 private:
  void shift_low();

  Bytes& out_;
  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t pending_ = 1;
};

class RangeDecoder {
 public:
  // Reads the five priming bytes. Throws CorruptStream on short input.
  explicit RangeDecoder(ByteView in);

  // Returns the target frequency in [0, total); the caller locates the symbol
  // and then calls consume() with its interval.
  std::uint32_t target(std::uint32_t total);
  void consume(std::uint32_t cum_low, std::uint32_t freq);

  // True when every input byte has been read.
  bool exhausted() const noexcept { return pos_ == in_.size(); }

 private:
  std::uint8_t next();

  ByteView in_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
};

// Order-0 adaptive frequencies: counts start at 32 and grow by 32 (a Laplace
// prior), and are halved once the total reaches 2^16.
class AdaptiveFrequencies {
 public:
  explicit AdaptiveFrequencies(std::uint32_t alphabet);

  void encode(RangeEncoder& enc, std::uint32_t symbol);
  std::uint32_t decode(RangeDecoder& dec);

 private:
  void update(std::uint32_t symbol);

  std::vector<std::uint32_t> freq_;
  std::uint32_t total_;
};

}  // namespace fzip
