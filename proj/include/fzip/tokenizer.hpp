#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fzip/byte_io.hpp"

namespace fzip {

using Token = std::uint32_t;

inline constexpr std::string_view kByteTokenizer = "byte";

struct TokenSequence {
  std::vector<Token> tokens;
  std::uint32_t vocab_size = 256;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// Tokenizers map bytes to ids in [0, vocab_size) and back. The built-in "byte"
// tokenizer is the identity on values; external ones live behind a predictor
// session (see protocol.hpp).
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::string id() const = 0;
  virtual std::uint32_t vocab_size() const = 0;
  virtual TokenSequence encode(ByteView input) = 0;
  virtual Bytes decode(const TokenSequence& tokens) = 0;
};

class ByteTokenizer final : public Tokenizer {
 public:
  std::string id() const override { return std::string(kByteTokenizer); }
  std::uint32_t vocab_size() const override { return 256; }
  TokenSequence encode(ByteView input) override;
  Bytes decode(const TokenSequence& tokens) override;
};

// Resolve a tokenizer by id without a predictor session. Only "byte" is local;
// anything else raises a configuration error.
TokenSequence encode(ByteView input, std::string_view tokenizer_id);
Bytes decode(const TokenSequence& tokens, std::string_view tokenizer_id);

}  // namespace fzip
