#include "fzip/rank_codec.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>

namespace fzip {

namespace {

constexpr std::size_t kBatch = 4096;

void check_tokens(const TokenSequence& tokens, std::uint32_t vocab) {
  if (tokens.vocab_size != vocab)
    fail(ErrorKind::ModelMismatch, "token vocabulary does not match the predictor");
  for (Token t : tokens.tokens)
    if (t >= vocab) fail(ErrorKind::Config, "token out of range for vocabulary");
}

// Queries for positions [first, last) of `tokens`, flushed every kBatch items.
template <typename Flush>
void batched_positions(std::span<const Token> all, std::size_t first, std::size_t last,
                       const ContextPolicy& policy, std::vector<Query>& items, Flush flush) {
  for (std::size_t j = first; j < last; ++j) {
    const auto begin = policy.context_begin(j);
    items.push_back({all.subspan(begin, j - begin), all[j]});
    if (items.size() == kBatch) {
      flush(j + 1 - items.size());
      items.clear();
    }
  }
  if (!items.empty()) {
    flush(last - items.size());
    items.clear();
  }
}

}  // namespace

void validate(const ContextPolicy& policy) {
  if (policy.window < 1) fail(ErrorKind::Config, "context window must be >= 1");
  if (policy.mode != ContextMode::Dynamic && policy.mode != ContextMode::Sliding)
    fail(ErrorKind::Config, "unknown context mode");
}

namespace detail {

void for_chunk_ranges(std::size_t n_chunks, unsigned workers, const PredictorFactory& predictors,
                      const std::function<void(Predictor&, std::size_t, std::size_t)>& body) {
  if (n_chunks == 0) return;
  const std::size_t n_workers = std::clamp<std::size_t>(workers, 1, n_chunks);
  if (n_workers == 1) {
    auto predictor = predictors();
    body(*predictor, 0, n_chunks);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> threads;
    threads.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
      const std::size_t lo = n_chunks * w / n_workers;
      const std::size_t hi = n_chunks * (w + 1) / n_workers;
      threads.emplace_back([&, lo, hi] {
        try {
          auto predictor = predictors();
          body(*predictor, lo, hi);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

RankStream encode_ranks(const TokenSequence& tokens, const PredictorFactory& predictors,
                        const ContextPolicy& policy, unsigned workers) {
  validate(policy);
  RankStream out;
  out.ranks.resize(tokens.size());
  const std::span<const Token> all(tokens.tokens);

  auto encode_range = [&](Predictor& p, std::size_t first, std::size_t last) {
    check_tokens(tokens, p.vocab_size());
    std::vector<Query> items;
    items.reserve(std::min(kBatch, last - first));
    batched_positions(all, first, last, policy, items, [&](std::size_t at) {
      p.ranks(items, std::span(out.ranks).subspan(at, items.size()));
    });
  };

  if (policy.mode == ContextMode::Sliding) {
    if (!tokens.empty()) {
      auto p = predictors();
      encode_range(*p, 0, tokens.size());
    }
    return out;
  }
  const std::size_t n = tokens.size();
  detail::for_chunk_ranges(policy.chunk_count(n), workers, predictors,
                           [&](Predictor& p, std::size_t lo, std::size_t hi) {
                             encode_range(p, lo * policy.window,
                                          std::min(n, hi * policy.window));
                           });
  return out;
}

TokenSequence decode_ranks(const RankStream& ranks, const PredictorFactory& predictors,
                           std::uint32_t vocab_size, const ContextPolicy& policy,
                           std::size_t n_tokens, unsigned workers) {
  validate(policy);
  if (ranks.ranks.size() != n_tokens)
    fail(ErrorKind::CorruptStream, "rank stream length does not match token count");
  for (auto r : ranks.ranks)
    if (r >= vocab_size) fail(ErrorKind::CorruptStream, "rank >= vocabulary size");

  TokenSequence out;
  out.vocab_size = vocab_size;
  out.tokens.resize(n_tokens);
  const std::span<const Token> decoded(out.tokens);

  if (policy.mode == ContextMode::Sliding) {
    if (n_tokens == 0) return out;
    auto p = predictors();
    for (std::size_t j = 0; j < n_tokens; ++j) {
      const auto begin = policy.context_begin(j);
      const Query q{decoded.subspan(begin, j - begin), ranks.ranks[j]};
      p->tokens_at(std::span(&q, 1), std::span(&out.tokens[j], 1));
    }
    return out;
  }

  // Step-synchronous over the worker's chunks: position i of every chunk goes
  // out in one batch, since each position only depends on its own chunk.
  const std::size_t W = policy.window;
  detail::for_chunk_ranges(
      policy.chunk_count(n_tokens), workers, predictors,
      [&](Predictor& p, std::size_t lo, std::size_t hi) {
        std::vector<Query> items;
        std::vector<std::size_t> where;
        std::vector<Token> got;
        for (std::size_t i = 0; i < W; ++i) {
          items.clear();
          where.clear();
          for (std::size_t c = lo; c < hi; ++c) {
            const std::size_t j = c * W + i;
            if (j >= n_tokens) break;
            items.push_back({decoded.subspan(c * W, i), ranks.ranks[j]});
            where.push_back(j);
          }
          if (items.empty()) break;
          got.resize(items.size());
          for (std::size_t at = 0; at < items.size(); at += kBatch) {
            const auto len = std::min(kBatch, items.size() - at);
            p.tokens_at(std::span(items).subspan(at, len), std::span(got).subspan(at, len));
          }
          for (std::size_t k = 0; k < got.size(); ++k) {
            if (got[k] >= vocab_size) fail(ErrorKind::RemotePredictor, "predictor returned token >= V");
            out.tokens[where[k]] = got[k];
          }
        }
      });
  return out;
}

RankStream encode_ranks(const TokenSequence& tokens, const ModelState& state,
                        const ContextPolicy& policy, unsigned workers) {
  return encode_ranks(tokens, builtin_factory(state), policy, workers);
}

TokenSequence decode_ranks(const RankStream& ranks, const ModelState& state,
                           const ContextPolicy& policy, std::size_t n_tokens, unsigned workers) {
  return decode_ranks(ranks, builtin_factory(state), state.vocab_size(), policy, n_tokens,
                      workers);
}

}  // namespace fzip
