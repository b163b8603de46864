#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fzip/byte_io.hpp"
#include "fzip/tokenizer.hpp"

namespace fzip::test {

inline std::string golden_path(const std::string& name) { return std::string(FZIP_GOLDEN_DIR) + "/" + name; }

// Non-comment lines of a golden file, split on '|'.
inline std::vector<std::vector<std::string>> golden_rows(const std::string& name) {
  std::ifstream in(golden_path(name));
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, '|')) fields.push_back(field);
    if (line.back() == '|') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

inline Bytes from_hex(const std::string& hex) {
  Bytes out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
    out.push_back(static_cast<std::uint8_t>(std::stoul(hex.substr(i, 2), nullptr, 16)));
  return out;
}

inline std::vector<std::uint32_t> split_u32(const std::string& s, char sep = ',') {
  std::vector<std::uint32_t> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(static_cast<std::uint32_t>(std::stoul(item)));
  return out;
}

inline TokenSequence tokens_of(std::vector<Token> t, std::uint32_t vocab = 256) {
  TokenSequence s;
  s.tokens = std::move(t);
  s.vocab_size = vocab;
  return s;
}

inline TokenSequence text_tokens(const std::string& text) { return encode(as_bytes(text), "byte"); }

// Corpus generators with varied byte entropy.
inline Bytes random_bytes(std::mt19937_64& rng, std::size_t n, unsigned alphabet = 256) {
  Bytes out(n);
  std::uniform_int_distribution<unsigned> d(0, alphabet - 1);
  for (auto& b : out) b = static_cast<std::uint8_t>(d(rng));
  return out;
}

inline Bytes skewed_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes out(n);
  std::geometric_distribution<unsigned> d(0.3);
  for (auto& b : out) b = static_cast<std::uint8_t>('a' + std::min(d(rng), 25u));
  return out;
}

// Order-2 Markov "text" over a small word list.
inline Bytes texty_bytes(std::mt19937_64& rng, std::size_t n) {
  static const char* words[] = {"the ", "of ", "and ", "compression ", "model ", "rank ", "token ",
                                "context ", "window ", "a ", "is ", "in ", "to ", "text\n", "data. "};
  std::uniform_int_distribution<std::size_t> pick(0, std::size(words) - 1);
  std::string s;
  while (s.size() < n) s += words[pick(rng)];
  s.resize(n);
  return Bytes(s.begin(), s.end());
}

inline Bytes repetitive_bytes(std::mt19937_64& rng, std::size_t n) {
  const auto unit = random_bytes(rng, 1 + rng() % 40, 256);
  Bytes out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = unit[i % unit.size()];
  return out;
}

// Mixed generator: size in [0, max_size], entropy chosen by `kind`.
inline Bytes corpus(std::mt19937_64& rng, std::size_t size, unsigned kind) {
  switch (kind % 5) {
    case 0: return random_bytes(rng, size);
    case 1: return random_bytes(rng, size, 2 + rng() % 15);
    case 2: return skewed_bytes(rng, size);
    case 3: return texty_bytes(rng, size);
    default: return repetitive_bytes(rng, size);
  }
}

}  // namespace fzip::test
