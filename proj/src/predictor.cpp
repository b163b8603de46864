#include "fzip/predictor.hpp"

#include <charconv>

namespace fzip {

void BuiltinPredictor::ranks(std::span<const Query> items, std::span<std::uint32_t> out) {
  for (std::size_t i = 0; i < items.size(); ++i)
    out[i] = rank_of(state_, items[i].context, items[i].value);
}

void BuiltinPredictor::tokens_at(std::span<const Query> items, std::span<Token> out) {
  for (std::size_t i = 0; i < items.size(); ++i)
    out[i] = token_at(state_, items[i].context, items[i].value);
}

void BuiltinPredictor::distributions(std::span<const std::span<const Token>> contexts,
                                     std::span<Distribution> out) {
  for (std::size_t i = 0; i < contexts.size(); ++i) out[i] = distribution(state_, contexts[i]);
}

PredictorFactory builtin_factory(const ModelState& state) {
  return [&state] { return std::make_unique<BuiltinPredictor>(state); };
}

std::optional<std::uint32_t> builtin_order(std::string_view id) {
  constexpr std::string_view prefix = "builtin-ctx";
  if (!id.starts_with(prefix)) return std::nullopt;
  id.remove_prefix(prefix.size());
  std::uint32_t k = 0;
  auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), k);
  if (ec != std::errc{} || ptr != id.data() + id.size() || id.empty() || k > 8) return std::nullopt;
  return k;
}

}  // namespace fzip
