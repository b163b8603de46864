#pragma once

// Arithmetic-coding mode: every token is range coded under the predictor's
// quantized distribution for its context.
//
// Payload layout: varint segment count, then per segment a varint byte length
// and the coder bytes. Dynamic mode has one independently flushed segment per
// chunk; sliding mode has a single segment (none for empty input).

#include <cstdint>

#include "fzip/rank_codec.hpp"

namespace fzip {

struct CodedBitstream {
  Bytes bytes;
  std::size_t n_symbols = 0;
};

CodedBitstream ac_encode(const TokenSequence& tokens, const PredictorFactory& predictors,
                         const ContextPolicy& policy, unsigned workers = 1);
TokenSequence ac_decode(ByteView stream, const PredictorFactory& predictors,
                        std::uint32_t vocab_size, const ContextPolicy& policy,
                        std::size_t n_tokens, unsigned workers = 1);

CodedBitstream ac_encode(const TokenSequence& tokens, const ModelState& state,
                         const ContextPolicy& policy, unsigned workers = 1);
TokenSequence ac_decode(ByteView stream, const ModelState& state, const ContextPolicy& policy,
                        std::size_t n_tokens, unsigned workers = 1);

// Sum over tokens of -log2(q/T), in bits.
double ideal_code_length(const TokenSequence& tokens, const ModelState& state,
                         const ContextPolicy& policy);

}  // namespace fzip
