#include "fzip/model.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <numeric>

namespace fzip {

namespace {

using u128 = unsigned __int128;

// Common denominators stay below this so the long-division fallback in
// quantize() cannot overflow.
constexpr u128 kDenominatorLimit = u128(1) << 126;

struct Scratch {
  std::vector<u128> num;
  std::vector<std::uint64_t> floor;
  std::vector<u128> rem;
  std::vector<Token> order;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

// floor(num * m / den) and the remainder, exactly. num <= den < 2^126, m < 2^17.
std::pair<std::uint64_t, u128> mul_div(u128 num, std::uint32_t m, u128 den, bool fast) {
  if (fast) {
    u128 x = num * m;
    u128 q = x / den;
    return {static_cast<std::uint64_t>(q), x - q * den};
  }
  u128 r = 0;
  std::uint64_t q = 0;
  for (int bit = 16; bit >= 0; --bit) {
    r <<= 1;
    q <<= 1;
    if ((m >> bit) & 1u) r += num;
    while (r >= den) {
      r -= den;
      ++q;
    }
  }
  return {q, r};
}

// Largest-remainder quantization of num[t]/den to kQuantTotal with a floor of
// one per symbol. Extra units go to the largest remainders, ties by lower id.
void quantize(std::span<const u128> num, u128 den, std::vector<std::uint32_t>& out) {
  const auto vocab = static_cast<std::uint32_t>(num.size());
  const std::uint32_t spread = kQuantTotal - vocab;
  out.assign(vocab, 1);
  if (spread == 0) return;

  auto& s = scratch();
  s.floor.resize(vocab);
  s.rem.resize(vocab);
  const bool fast = den <= (~u128(0)) / spread;
  const auto unit = mul_div(1, spread, den, fast);

  std::uint64_t assigned = 0;
  for (std::uint32_t t = 0; t < vocab; ++t) {
    auto [q, r] = num[t] == 1 ? unit : mul_div(num[t], spread, den, fast);
    s.floor[t] = q;
    s.rem[t] = r;
    assigned += q;
  }
  const std::uint64_t leftover = spread - assigned;
  if (leftover > 0) {
    s.order.resize(vocab);
    std::iota(s.order.begin(), s.order.end(), Token{0});
    auto by_remainder = [&](Token a, Token b) {
      return s.rem[a] != s.rem[b] ? s.rem[a] > s.rem[b] : a < b;
    };
    auto cut = s.order.begin() + static_cast<std::ptrdiff_t>(leftover);
    std::nth_element(s.order.begin(), cut - 1, s.order.end(), by_remainder);
    std::for_each(s.order.begin(), cut, [&](Token t) { ++s.floor[t]; });
  }
  for (std::uint32_t t = 0; t < vocab; ++t) out[t] += static_cast<std::uint32_t>(s.floor[t]);
}

void quantized_freq(const ModelState& state, std::span<const Token> context,
                    std::vector<std::uint32_t>& out) {
  const std::uint32_t vocab = state.vocab_size();
  auto& num = scratch().num;
  num.assign(vocab, 1);
  u128 den = vocab;

  const auto usable = std::min<std::size_t>(context.size(), state.order());
  for (std::uint32_t o = 0; o <= usable; ++o) {
    const auto* entry = state.find(o, context);
    if (!entry) continue;
    for (auto [tok, count] : entry->counts) num[tok] += den * count;
    den *= entry->total + 1;
  }
  quantize(num, den, out);
}

void check_context(const ModelState& state, std::span<const Token> context) {
  const auto usable = std::min<std::size_t>(context.size(), state.order());
  for (auto t : context.last(usable))
    if (t >= state.vocab_size()) fail(ErrorKind::Config, "context token out of range");
}

struct PairKey {
  std::uint64_t ctx;
  Token tok;
  bool operator==(const PairKey&) const = default;
};

struct PairKeyHash {
  std::size_t operator()(const PairKey& k) const noexcept {
    std::uint64_t h = k.ctx * 0x9E3779B97F4A7C15ull ^ (k.tok + 0x632BE59BD9B4E019ull);
    h ^= h >> 29;
    h *= 0xBF58476D1CE4E5B9ull;
    return static_cast<std::size_t>(h ^ (h >> 32));
  }
};

}  // namespace

std::uint32_t Distribution::cum_low(Token t) const noexcept {
  std::uint32_t acc = 0;
  for (Token u = 0; u < t; ++u) acc += freq[u];
  return acc;
}

std::uint32_t rank_in(const Distribution& dist, Token t) {
  if (t >= dist.vocab_size()) fail(ErrorKind::Config, "token out of range");
  const auto f = dist.freq[t];
  std::uint32_t rank = 0;
  for (Token u = 0; u < dist.vocab_size(); ++u) {
    const auto g = dist.freq[u];
    rank += (g > f) || (g == f && u < t);
  }
  return rank;
}

Token token_at_rank(const Distribution& dist, std::uint32_t rank) {
  const auto vocab = dist.vocab_size();
  if (rank >= vocab) fail(ErrorKind::CorruptStream, "rank " + std::to_string(rank) + " >= vocab");
  auto& order = scratch().order;
  order.resize(vocab);
  std::iota(order.begin(), order.end(), Token{0});
  std::nth_element(order.begin(), order.begin() + rank, order.end(), [&](Token a, Token b) {
    return dist.freq[a] != dist.freq[b] ? dist.freq[a] > dist.freq[b] : a < b;
  });
  return order[rank];
}

std::vector<Token> ranking(const Distribution& dist) {
  std::vector<Token> order(dist.vocab_size());
  std::iota(order.begin(), order.end(), Token{0});
  std::sort(order.begin(), order.end(), [&](Token a, Token b) {
    return dist.freq[a] != dist.freq[b] ? dist.freq[a] > dist.freq[b] : a < b;
  });
  return order;
}

void validate(const Distribution& dist) {
  if (dist.freq.size() < 2) fail(ErrorKind::CorruptStream, "distribution over fewer than 2 tokens");
  std::uint64_t sum = 0;
  for (auto f : dist.freq) {
    if (f == 0) fail(ErrorKind::CorruptStream, "zero-probability token in distribution");
    sum += f;
  }
  if (sum != kQuantTotal) fail(ErrorKind::CorruptStream, "distribution does not sum to 65536");
}

ModelState::ModelState(std::uint32_t order, std::uint32_t vocab_size)
    : order_(order), vocab_size_(vocab_size), bits_(std::max(1u, static_cast<unsigned>(std::bit_width(vocab_size - 1)))) {
  if (vocab_size < 2 || vocab_size > kQuantTotal)
    fail(ErrorKind::Config, "vocab size must be in [2, 65536]");
  if (static_cast<std::uint64_t>(order) * bits_ > 64)
    fail(ErrorKind::Config, "context order too large for this vocabulary");
  tables_.resize(order + 1);
  tables_[0].emplace(0, Entry{});
}

std::uint64_t ModelState::pack(std::span<const Token> ctx) const noexcept {
  std::uint64_t key = 0;
  for (Token t : ctx) key = (key << bits_) | t;
  return key;
}

const ModelState::Entry* ModelState::find(std::uint32_t o, std::span<const Token> context) const {
  const auto& table = tables_[o];
  auto it = table.find(pack(context.last(o)));
  return it == table.end() ? nullptr : &it->second;
}

std::vector<std::pair<std::vector<Token>, const ModelState::Entry*>> ModelState::sorted_entries(
    std::uint32_t o) const {
  std::vector<std::pair<std::uint64_t, const Entry*>> keyed;
  keyed.reserve(tables_.at(o).size());
  for (const auto& [key, entry] : tables_[o]) keyed.emplace_back(key, &entry);
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<std::pair<std::vector<Token>, const Entry*>> out;
  out.reserve(keyed.size());
  const std::uint64_t mask = bits_ >= 64 ? ~0ull : (1ull << bits_) - 1;
  for (auto [key, entry] : keyed) {
    std::vector<Token> ctx(o);
    for (std::uint32_t i = o; i-- > 0;) {
      ctx[i] = static_cast<Token>(key & mask);
      key = bits_ >= 64 ? 0 : key >> bits_;
    }
    out.emplace_back(std::move(ctx), entry);
  }
  return out;
}

void ModelState::finish(std::uint32_t epochs) {
  epochs_ = epochs;
  fitted_ = tables_[0].at(0).total > 0;

  u128 bound = vocab_size_;
  for (const auto& table : tables_) {
    std::uint64_t largest = 0;
    for (const auto& [key, entry] : table) largest = std::max(largest, entry.total);
    const u128 factor = u128(largest) + 1;
    if (factor > kDenominatorLimit / bound)
      fail(ErrorKind::Config, "corpus too large for exact interpolation at this order");
    bound *= factor;
  }
}

ModelState fit(const TokenSequence& corpus, std::uint32_t epochs, std::uint32_t order) {
  if (epochs < 1) fail(ErrorKind::Config, "epochs must be >= 1");
  ModelState state(order, corpus.vocab_size);
  if (corpus.empty()) {
    state.warning_ = "empty corpus: model left unfitted (uniform)";
    state.finish(epochs);
    return state;
  }
  const auto& toks = corpus.tokens;
  for (Token t : toks)
    if (t >= corpus.vocab_size) fail(ErrorKind::Config, "corpus token out of range");

  for (std::uint32_t o = 0; o <= order && o < toks.size(); ++o) {
    std::unordered_map<PairKey, std::uint64_t, PairKeyHash> acc;
    acc.reserve(std::min<std::size_t>(toks.size(), 1u << 20));
    std::span<const Token> all(toks);
    for (std::size_t j = o; j < toks.size(); ++j)
      ++acc[PairKey{state.pack(all.subspan(j - o, o)), toks[j]}];

    auto& table = state.tables_[o];
    for (const auto& [key, count] : acc) {
      auto& entry = table[key.ctx];
      entry.counts.emplace_back(key.tok, count);
      entry.total += count;
    }
    for (auto& [key, entry] : table) std::sort(entry.counts.begin(), entry.counts.end());
  }
  state.finish(epochs);
  return state;
}

Distribution distribution(const ModelState& state, std::span<const Token> context) {
  check_context(state, context);
  Distribution dist;
  quantized_freq(state, context, dist.freq);
  return dist;
}

std::vector<Token> ranking(const ModelState& state, std::span<const Token> context) {
  return ranking(distribution(state, context));
}

std::uint32_t rank_of(const ModelState& state, std::span<const Token> context, Token token) {
  if (token >= state.vocab_size()) fail(ErrorKind::Config, "token out of range");
  thread_local Distribution dist;
  check_context(state, context);
  quantized_freq(state, context, dist.freq);
  return rank_in(dist, token);
}

Token token_at(const ModelState& state, std::span<const Token> context, std::uint32_t rank) {
  if (rank >= state.vocab_size())
    fail(ErrorKind::CorruptStream, "rank " + std::to_string(rank) + " >= vocab");
  thread_local Distribution dist;
  check_context(state, context);
  quantized_freq(state, context, dist.freq);
  return token_at_rank(dist, rank);
}

Bytes serialize(const ModelState& state) {
  ByteWriter w;
  w.u8(1);
  w.varint(state.order());
  w.varint(state.vocab_size());
  for (std::uint32_t o = 0; o <= state.order(); ++o) {
    auto entries = state.sorted_entries(o);
    w.varint(entries.size());
    for (const auto& [ctx, entry] : entries) {
      for (Token t : ctx) w.varint(t);
      w.varint(entry->counts.size());
      for (auto [tok, count] : entry->counts) {
        w.varint(tok);
        w.varint(count);
      }
    }
  }
  return w.take();
}

ModelState deserialize_model(ByteView blob) {
  ByteReader r(blob);
  if (r.u8() != 1) fail(ErrorKind::CorruptStream, "unknown model blob version");
  const auto order = r.varint();
  const auto vocab = r.varint();
  if (order > 64 || vocab < 2 || vocab > kQuantTotal)
    fail(ErrorKind::CorruptStream, "model blob has invalid order or vocab size");

  std::optional<ModelState> built;
  try {
    built.emplace(static_cast<std::uint32_t>(order), static_cast<std::uint32_t>(vocab));
  } catch (const Error& e) {
    fail(ErrorKind::CorruptStream, std::string("model blob: ") + e.what());
  }
  ModelState& state = *built;
  state.tables_[0].clear();

  for (std::uint32_t o = 0; o <= order; ++o) {
    const auto n_entries = r.varint();
    // Each entry takes at least one byte per context token plus the pair count.
    if (n_entries > r.remaining()) fail(ErrorKind::CorruptStream, "model blob entry count too large");
    if (o == 0 && n_entries != 1) fail(ErrorKind::CorruptStream, "model blob needs one order-0 entry");
    auto& table = state.tables_[o];
    table.reserve(n_entries);
    std::vector<Token> ctx(o);
    std::optional<std::uint64_t> prev_key;
    for (std::uint64_t e = 0; e < n_entries; ++e) {
      for (auto& t : ctx) {
        const auto v = r.varint();
        if (v >= vocab) fail(ErrorKind::CorruptStream, "model blob context token out of range");
        t = static_cast<Token>(v);
      }
      const auto key = state.pack(ctx);
      if (prev_key && key <= *prev_key) fail(ErrorKind::CorruptStream, "model blob contexts not sorted");
      prev_key = key;

      const auto n_pairs = r.varint();
      if (n_pairs > vocab) fail(ErrorKind::CorruptStream, "model blob pair count too large");
      ModelState::Entry entry;
      entry.counts.reserve(n_pairs);
      for (std::uint64_t p = 0; p < n_pairs; ++p) {
        const auto tok = r.varint();
        const auto count = r.varint();
        if (tok >= vocab || count == 0 || (!entry.counts.empty() && tok <= entry.counts.back().first))
          fail(ErrorKind::CorruptStream, "model blob has an invalid count pair");
        if (count > (1ull << 62) - entry.total) fail(ErrorKind::CorruptStream, "model blob count overflow");
        entry.counts.emplace_back(static_cast<Token>(tok), count);
        entry.total += count;
      }
      table.emplace(key, std::move(entry));
    }
  }
  if (!r.done()) fail(ErrorKind::CorruptStream, "trailing bytes after model blob");
  try {
    state.finish(0);
  } catch (const Error& e) {
    fail(ErrorKind::CorruptStream, std::string("model blob: ") + e.what());
  }
  return std::move(*built);
}

Fingerprint fingerprint_of(ByteView data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::Config, "SHA-256 unavailable");
  Fingerprint fp{};
  std::copy_n(md.begin(), fp.size(), fp.begin());
  return fp;
}

Fingerprint fingerprint(const ModelState& state) { return fingerprint_of(serialize(state)); }

}  // namespace fzip
