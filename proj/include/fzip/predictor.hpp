#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>

#include "fzip/model.hpp"

namespace fzip {

// One batched query: a context plus either the target token (rank direction)
// or a rank (token direction).
struct Query {
  std::span<const Token> context;
  std::uint32_t value = 0;
};

// Batched next-token predictor. Results are positionally aligned with the
// request. Implementations need not be thread-safe; each worker owns one.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual std::uint32_t vocab_size() const = 0;
  virtual void ranks(std::span<const Query> items, std::span<std::uint32_t> out) = 0;
  virtual void tokens_at(std::span<const Query> items, std::span<Token> out) = 0;
  virtual void distributions(std::span<const std::span<const Token>> contexts,
                             std::span<Distribution> out) = 0;
};

// Opens one predictor per worker.
using PredictorFactory = std::function<std::unique_ptr<Predictor>()>;

class BuiltinPredictor final : public Predictor {
 public:
  explicit BuiltinPredictor(const ModelState& state) : state_(state) {}

  std::uint32_t vocab_size() const override { return state_.vocab_size(); }
  void ranks(std::span<const Query> items, std::span<std::uint32_t> out) override;
  void tokens_at(std::span<const Query> items, std::span<Token> out) override;
  void distributions(std::span<const std::span<const Token>> contexts,
                     std::span<Distribution> out) override;

 private:
  const ModelState& state_;
};

// The state must outlive every predictor the factory hands out.
PredictorFactory builtin_factory(const ModelState& state);

// "builtin-ctx<k>" -> k; nullopt for other ids.
std::optional<std::uint32_t> builtin_order(std::string_view predictor_id);

}  // namespace fzip
