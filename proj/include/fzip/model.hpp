#pragma once

// Built-in order-k interpolated context model.
//
// A ModelState holds, for every order o in [0, k], the count of each
// (context of length o, next token) pair seen by fit(). Predictions blend the
// orders recursively,
//
//   P_o(t) = (c_o(t) + P_{o-1}(t)) / (n_o + 1),   P_{-1}(t) = 1 / V,
//
// where c_o(t) is the count of t under the length-o suffix of the context and
// n_o the total count under that suffix. The blend is evaluated as exact
// rationals over a common denominator and quantized once, so every platform
// produces the same integers.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fzip/byte_io.hpp"
#include "fzip/tokenizer.hpp"

namespace fzip {

inline constexpr std::uint32_t kQuantTotal = 65536;
inline constexpr std::uint32_t kDefaultOrder = 3;

// Quantized next-token distribution: freq[t] >= 1 and the sum is exactly
// kQuantTotal.
struct Distribution {
  std::vector<std::uint32_t> freq;

  std::uint32_t vocab_size() const noexcept { return static_cast<std::uint32_t>(freq.size()); }
  std::uint32_t cum_low(Token t) const noexcept;
  friend bool operator==(const Distribution&, const Distribution&) = default;
};

// Position of `t` when tokens are sorted by frequency descending, ties by
// ascending id.
std::uint32_t rank_in(const Distribution& dist, Token t);
Token token_at_rank(const Distribution& dist, std::uint32_t rank);
std::vector<Token> ranking(const Distribution& dist);

// Checks the quantized-distribution invariants; throws CorruptStream otherwise.
void validate(const Distribution& dist);

class ModelState {
 public:
  struct Entry {
    std::uint64_t total = 0;
    std::vector<std::pair<Token, std::uint64_t>> counts;  // ascending token
  };

  explicit ModelState(std::uint32_t order = kDefaultOrder, std::uint32_t vocab_size = 256);

  std::uint32_t order() const noexcept { return order_; }
  std::uint32_t vocab_size() const noexcept { return vocab_size_; }
  bool fitted() const noexcept { return fitted_; }
  std::uint32_t epochs_requested() const noexcept { return epochs_; }
  const std::optional<std::string>& warning() const noexcept { return warning_; }

  // Entry for the `o` most recent tokens of `context`; null when unseen.
  // Requires context.size() >= o.
  const Entry* find(std::uint32_t o, std::span<const Token> context) const;

  std::size_t entry_count(std::uint32_t o) const { return tables_.at(o).size(); }

  // Entries of order `o` sorted by context (oldest token first).
  std::vector<std::pair<std::vector<Token>, const Entry*>> sorted_entries(std::uint32_t o) const;

 private:
  friend ModelState fit(const TokenSequence&, std::uint32_t, std::uint32_t);
  friend ModelState deserialize_model(ByteView);

  std::uint64_t pack(std::span<const Token> ctx) const noexcept;
  void finish(std::uint32_t epochs);

  std::uint32_t order_;
  std::uint32_t vocab_size_;
  unsigned bits_;
  bool fitted_ = false;
  std::uint32_t epochs_ = 0;
  std::optional<std::string> warning_;
  std::vector<std::unordered_map<std::uint64_t, Entry>> tables_;
};

// Memorization pass. Counts are normalized away by distribution(), so epochs is
// recorded but never changes a prediction. An empty corpus yields the unfitted
// (uniform) state with warning() set.
ModelState fit(const TokenSequence& corpus, std::uint32_t epochs,
               std::uint32_t order = kDefaultOrder);

Distribution distribution(const ModelState& state, std::span<const Token> context);
std::vector<Token> ranking(const ModelState& state, std::span<const Token> context);
std::uint32_t rank_of(const ModelState& state, std::span<const Token> context, Token token);
Token token_at(const ModelState& state, std::span<const Token> context, std::uint32_t rank);

// Adapter blob layout (before secondary compression): u8 version, varint k,
// varint V, then for each order o = 0..k: varint entry count followed by
// entries (o varint context tokens, varint pair count, pairs of varint token
// and varint count). Entries are sorted by context, pairs by token.
Bytes serialize(const ModelState& state);
ModelState deserialize_model(ByteView blob);

using Fingerprint = std::array<std::uint8_t, 8>;

// First 8 bytes of SHA-256 over the serialized state.
Fingerprint fingerprint(const ModelState& state);
Fingerprint fingerprint_of(ByteView data);

}  // namespace fzip
