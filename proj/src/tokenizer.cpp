#include "fzip/tokenizer.hpp"

namespace fzip {

TokenSequence ByteTokenizer::encode(ByteView input) {
  TokenSequence seq;
  seq.vocab_size = 256;
  seq.tokens.assign(input.begin(), input.end());
  return seq;
}

Bytes ByteTokenizer::decode(const TokenSequence& seq) {
  Bytes out;
  out.reserve(seq.size());
  for (Token t : seq.tokens) {
    if (t >= 256) fail(ErrorKind::CorruptStream, "byte token " + std::to_string(t) + " >= 256");
    out.push_back(static_cast<std::uint8_t>(t));
  }
  return out;
}

namespace {

ByteTokenizer& local_tokenizer(std::string_view id) {
  static ByteTokenizer byte_tokenizer;
  if (id != kByteTokenizer)
    fail(ErrorKind::Config, "unknown tokenizer '" + std::string(id) +
                                "' (external tokenizers need an ext: predictor)");
  return byte_tokenizer;
}

}  // namespace

TokenSequence encode(ByteView input, std::string_view tokenizer_id) {
  return local_tokenizer(tokenizer_id).encode(input);
}

Bytes decode(const TokenSequence& tokens, std::string_view tokenizer_id) {
  return local_tokenizer(tokenizer_id).decode(tokens);
}

}  // namespace fzip
