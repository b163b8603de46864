#include "fzip/entropy_coder.hpp"

#include <algorithm>
#include <cmath>

#include "fzip/range_coder.hpp"

namespace fzip {

namespace {

constexpr std::size_t kBatch = 1024;

struct Segment {
  std::size_t first;
  std::size_t last;
};

std::vector<Segment> segments_for(const ContextPolicy& policy, std::size_t n) {
  std::vector<Segment> segs;
  if (n == 0) return segs;
  if (policy.mode == ContextMode::Sliding) {
    segs.push_back({0, n});
    return segs;
  }
  for (std::size_t c = 0; c < policy.chunk_count(n); ++c)
    segs.push_back({c * policy.window, std::min(n, (c + 1) * policy.window)});
  return segs;
}

void encode_segment(Predictor& p, std::span<const Token> all, Segment seg,
                    const ContextPolicy& policy, Bytes& out) {
  RangeEncoder enc(out);
  std::vector<std::span<const Token>> contexts;
  std::vector<Distribution> dists;
  for (std::size_t at = seg.first; at < seg.last; at += kBatch) {
    const auto end = std::min(seg.last, at + kBatch);
    contexts.clear();
    for (std::size_t j = at; j < end; ++j) {
      const auto begin = policy.context_begin(j);
      contexts.push_back(all.subspan(begin, j - begin));
    }
    dists.resize(contexts.size());
    p.distributions(contexts, dists);
    for (std::size_t j = at; j < end; ++j) {
      const auto& d = dists[j - at];
      const Token t = all[j];
      enc.encode(d.cum_low(t), d.freq[t], kQuantTotal);
    }
  }
  enc.flush();
}

Token decode_symbol(RangeDecoder& dec, const Distribution& d) {
  validate(d);
  const std::uint32_t value = dec.target(kQuantTotal);
  std::uint32_t cum = 0;
  Token t = 0;
  while (cum + d.freq[t] <= value) cum += d.freq[t++];
  dec.consume(cum, d.freq[t]);
  return t;
}

}  // namespace

CodedBitstream ac_encode(const TokenSequence& tokens, const PredictorFactory& predictors,
                         const ContextPolicy& policy, unsigned workers) {
  validate(policy);
  const auto segs = segments_for(policy, tokens.size());
  std::vector<Bytes> coded(segs.size());
  const std::span<const Token> all(tokens.tokens);

  auto run = [&](Predictor& p, std::size_t lo, std::size_t hi) {
    if (tokens.vocab_size != p.vocab_size())
      fail(ErrorKind::ModelMismatch, "token vocabulary does not match the predictor");
    for (Token t : all.subspan(segs[lo].first, segs[hi - 1].last - segs[lo].first))
      if (t >= p.vocab_size()) fail(ErrorKind::Config, "token out of range for vocabulary");
    for (std::size_t s = lo; s < hi; ++s) encode_segment(p, all, segs[s], policy, coded[s]);
  };
  if (policy.mode == ContextMode::Sliding) {
    if (!segs.empty()) {
      auto p = predictors();
      run(*p, 0, 1);
    }
  } else {
    detail::for_chunk_ranges(segs.size(), workers, predictors, run);
  }

  CodedBitstream out;
  out.n_symbols = tokens.size();
  ByteWriter w(out.bytes);
  w.varint(segs.size());
  for (const auto& seg : coded) {
    w.varint(seg.size());
    w.raw(seg);
  }
  return out;
}

TokenSequence ac_decode(ByteView stream, const PredictorFactory& predictors,
                        std::uint32_t vocab_size, const ContextPolicy& policy,
                        std::size_t n_tokens, unsigned workers) {
  validate(policy);
  const auto segs = segments_for(policy, n_tokens);
  ByteReader r(stream);
  if (r.varint() != segs.size()) fail(ErrorKind::CorruptStream, "AC segment count mismatch");
  std::vector<ByteView> bodies;
  bodies.reserve(segs.size());
  for (std::size_t s = 0; s < segs.size(); ++s) bodies.push_back(r.raw(r.varint()));
  if (!r.done()) fail(ErrorKind::CorruptStream, "trailing bytes after AC payload");

  TokenSequence out;
  out.vocab_size = vocab_size;
  out.tokens.resize(n_tokens);
  const std::span<const Token> decoded(out.tokens);

  auto check_vocab = [&](const Distribution& d) {
    if (d.vocab_size() != vocab_size) fail(ErrorKind::ModelMismatch, "distribution size != V");
  };

  if (policy.mode == ContextMode::Sliding) {
    if (segs.empty()) return out;
    auto p = predictors();
    RangeDecoder dec(bodies[0]);
    Distribution d;
    for (std::size_t j = 0; j < n_tokens; ++j) {
      const auto begin = policy.context_begin(j);
      const auto ctx = decoded.subspan(begin, j - begin);
      p->distributions(std::span(&ctx, 1), std::span(&d, 1));
      check_vocab(d);
      out.tokens[j] = decode_symbol(dec, d);
    }
    if (!dec.exhausted()) fail(ErrorKind::CorruptStream, "unread bytes in AC segment");
    return out;
  }

  const std::size_t W = policy.window;
  detail::for_chunk_ranges(
      segs.size(), workers, predictors, [&](Predictor& p, std::size_t lo, std::size_t hi) {
        std::vector<RangeDecoder> decoders;
        decoders.reserve(hi - lo);
        for (std::size_t s = lo; s < hi; ++s) decoders.emplace_back(bodies[s]);
        std::vector<std::span<const Token>> contexts;
        std::vector<std::size_t> where;
        std::vector<Distribution> dists;
        for (std::size_t i = 0; i < W; ++i) {
          contexts.clear();
          where.clear();
          for (std::size_t s = lo; s < hi; ++s) {
            const std::size_t j = segs[s].first + i;
            if (j >= segs[s].last) break;
            contexts.push_back(decoded.subspan(segs[s].first, i));
            where.push_back(s);
          }
          if (contexts.empty()) break;
          dists.resize(contexts.size());
          for (std::size_t at = 0; at < contexts.size(); at += kBatch) {
            const auto len = std::min(kBatch, contexts.size() - at);
            p.distributions(std::span(contexts).subspan(at, len),
                            std::span(dists).subspan(at, len));
          }
          for (std::size_t k = 0; k < where.size(); ++k) {
            check_vocab(dists[k]);
            const auto s = where[k];
            out.tokens[segs[s].first + i] = decode_symbol(decoders[s - lo], dists[k]);
          }
        }
        for (const auto& dec : decoders)
          if (!dec.exhausted()) fail(ErrorKind::CorruptStream, "unread bytes in AC segment");
      });
  return out;
}

CodedBitstream ac_encode(const TokenSequence& tokens, const ModelState& state,
                         const ContextPolicy& policy, unsigned workers) {
  return ac_encode(tokens, builtin_factory(state), policy, workers);
}

TokenSequence ac_decode(ByteView stream, const ModelState& state, const ContextPolicy& policy,
                        std::size_t n_tokens, unsigned workers) {
  return ac_decode(stream, builtin_factory(state), state.vocab_size(), policy, n_tokens, workers);
}

double ideal_code_length(const TokenSequence& tokens, const ModelState& state,
                         const ContextPolicy& policy) {
  double bits = 0;
  const std::span<const Token> all(tokens.tokens);
  for (std::size_t j = 0; j < all.size(); ++j) {
    const auto begin = policy.context_begin(j);
    const auto d = distribution(state, all.subspan(begin, j - begin));
    bits -= std::log2(static_cast<double>(d.freq[all[j]]) / kQuantTotal);
  }
  return bits;
}

}  // namespace fzip
