#pragma once

// End-to-end compression: optional memorization, tokenization, rank or
// arithmetic coding (chunk-parallel in dynamic mode), secondary compression,
// and the archive container. decompress() is the exact inverse.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "fzip/archive.hpp"
#include "fzip/secondary_codec.hpp"

namespace fzip {

struct CompressConfig {
  CodingMode mode = CodingMode::Rank;
  ContextPolicy policy{};
  std::string predictor_id = "builtin-ctx3";
  std::string tokenizer_id = "byte";
  std::string secondary_id = "builtin-mrl";
  bool memorize = false;
  std::uint32_t epochs = 1;
  unsigned workers = 1;
  std::chrono::milliseconds timeout = std::chrono::minutes(10);
};

void validate(const CompressConfig& config);

struct StageTimes {
  double memorize_ms = 0;
  double tokenize_ms = 0;
  double code_ms = 0;       // rank/AC encode or decode
  double secondary_ms = 0;
  double total_ms = 0;      // everything except memorization
};

struct CompressResult {
  Bytes archive;
  std::size_t header_len = 0;
  std::size_t model_blob_len = 0;
  std::size_t payload_len = 0;
  std::size_t stage1_len = 0;     // serialized ranks or AC bitstream, before secondary
  std::size_t n_tokens = 0;
  std::size_t rank0_count = 0;    // rank mode only
  StageTimes times;
  std::optional<std::string> warning;
};

CompressResult compress(ByteView input, const CompressConfig& config);

struct DecompressResult {
  Bytes data;
  ArchiveHeader header;
  StageTimes times;
};

// `workers` overrides the archive-independent parallelism; output never
// depends on it.
DecompressResult decompress(ByteView archive, unsigned workers = 1,
                            std::chrono::milliseconds timeout = std::chrono::minutes(10));

// archive_len / original_len. UndefinedRatio when original_len is 0.
double ratio(std::uint64_t original_len, std::uint64_t archive_len);

Bytes read_file(const std::filesystem::path& path);
// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, ByteView data);

}  // namespace fzip
