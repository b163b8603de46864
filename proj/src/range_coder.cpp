#include "fzip/range_coder.hpp"

namespace fzip {

namespace {
constexpr std::uint32_t kTop = 1u << 24;
constexpr std::uint32_t kIncrement = 32;
constexpr std::uint32_t kRescaleAt = 1u << 16;
}  // namespace

void RangeEncoder::encode(std::uint32_t cum_low, std::uint32_t freq, std::uint32_t total) {
  range_ /= total;
  low_ += static_cast<std::uint64_t>(cum_low) * range_;
  range_ *= freq;
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::flush() {
  for (int i = 0; i < 5; ++i) shift_low();
}

// Bytes are held back while they could still be bumped by a carry: `cache_`
// plus `pending_ - 1` trailing 0xFF bytes.
void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t byte = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(byte + carry));
      byte = 0xFF;
    } while (--pending_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++pending_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

RangeDecoder::RangeDecoder(ByteView in) : in_(in) {
  if (next() != 0) fail(ErrorKind::CorruptStream, "range coder segment must start with 0x00");
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next();
}

std::uint8_t RangeDecoder::next() {
  if (pos_ >= in_.size()) fail(ErrorKind::CorruptStream, "range coder ran past end of segment");
  return in_[pos_++];
}

std::uint32_t RangeDecoder::target(std::uint32_t total) {
  range_ /= total;
  const std::uint32_t value = code_ / range_;
  if (value >= total) fail(ErrorKind::CorruptStream, "code point outside every symbol interval");
  return value;
}

void RangeDecoder::consume(std::uint32_t cum_low, std::uint32_t freq) {
  code_ -= cum_low * range_;
  range_ *= freq;
  while (range_ < kTop) {
    code_ = (code_ << 8) | next();
    range_ <<= 8;
  }
}

AdaptiveFrequencies::AdaptiveFrequencies(std::uint32_t alphabet)
    : freq_(alphabet, kIncrement), total_(alphabet * kIncrement) {}

void AdaptiveFrequencies::update(std::uint32_t symbol) {
  freq_[symbol] += kIncrement;
  total_ += kIncrement;
  if (total_ >= kRescaleAt) {
    total_ = 0;
    for (auto& f : freq_) {
      f = (f + 1) / 2;
      total_ += f;
    }
  }
}

void AdaptiveFrequencies::encode(RangeEncoder& enc, std::uint32_t symbol) {
  std::uint32_t cum = 0;
  for (std::uint32_t s = 0; s < symbol; ++s) cum += freq_[s];
  enc.encode(cum, freq_[symbol], total_);
  update(symbol);
}

std::uint32_t AdaptiveFrequencies::decode(RangeDecoder& dec) {
  const std::uint32_t value = dec.target(total_);
  std::uint32_t cum = 0;
  std::uint32_t symbol = 0;
  while (cum + freq_[symbol] <= value) cum += freq_[symbol++];
  dec.consume(cum, freq_[symbol]);
  update(symbol);
  return symbol;
}

}  // namespace fzip
