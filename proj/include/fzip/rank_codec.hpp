#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fzip/predictor.hpp"

namespace fzip {

enum class ContextMode : std::uint8_t { Dynamic = 0, Sliding = 1 };

inline constexpr std::uint32_t kDefaultWindow = 512;

// Dynamic: token j sees its chunk prefix [floor(j/W)*W, j); chunks are
// independent. Sliding: token j sees the min(j, W) tokens before it.
struct ContextPolicy {
  ContextMode mode = ContextMode::Dynamic;
  std::uint32_t window = kDefaultWindow;

  std::size_t context_begin(std::size_t j) const noexcept {
    if (mode == ContextMode::Dynamic) return j - j % window;
    return j > window ? j - window : 0;
  }
  std::size_t chunk_count(std::size_t n) const noexcept { return (n + window - 1) / window; }
};

void validate(const ContextPolicy& policy);

struct RankStream {
  std::vector<std::uint32_t> ranks;
  friend bool operator==(const RankStream&, const RankStream&) = default;
};

// `workers` only changes scheduling; output is identical for every value.
RankStream encode_ranks(const TokenSequence& tokens, const PredictorFactory& predictors,
                        const ContextPolicy& policy, unsigned workers = 1);
TokenSequence decode_ranks(const RankStream& ranks, const PredictorFactory& predictors,
                           std::uint32_t vocab_size, const ContextPolicy& policy,
                           std::size_t n_tokens, unsigned workers = 1);

RankStream encode_ranks(const TokenSequence& tokens, const ModelState& state,
                        const ContextPolicy& policy, unsigned workers = 1);
TokenSequence decode_ranks(const RankStream& ranks, const ModelState& state,
                           const ContextPolicy& policy, std::size_t n_tokens,
                           unsigned workers = 1);

namespace detail {

// Runs body(predictor, first_chunk, last_chunk) for contiguous chunk ranges,
// one range and one predictor per worker thread. Exceptions from any worker
// are rethrown after all threads join.
void for_chunk_ranges(std::size_t n_chunks, unsigned workers, const PredictorFactory& predictors,
                      const std::function<void(Predictor&, std::size_t, std::size_t)>& body);

}  // namespace detail

}  // namespace fzip
