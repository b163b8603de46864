#pragma once

// .fz container. All integers little-endian; strings are u16 length + UTF-8.
//
//   "FZIP" | u8 version=1 | u8 mode | u8 context_mode | u32 window
//   | str tokenizer_id | str predictor_id | 8-byte predictor fingerprint
//   | u64 n_tokens | u64 original_len | str secondary_id
//   | u32 model_blob_len | u64 payload_len
//   | model blob | payload | u32 CRC-32 of every preceding byte

#include <cstdint>
#include <string>

#include "fzip/model.hpp"
#include "fzip/rank_codec.hpp"

namespace fzip {

enum class CodingMode : std::uint8_t { Rank = 0, Arithmetic = 1 };

inline constexpr std::uint8_t kArchiveVersion = 1;

struct ArchiveHeader {
  CodingMode mode = CodingMode::Rank;
  ContextMode context_mode = ContextMode::Dynamic;
  std::uint32_t window = kDefaultWindow;
  std::string tokenizer_id = "byte";
  std::string predictor_id = "builtin-ctx3";
  Fingerprint predictor_fingerprint{};
  std::uint64_t n_tokens = 0;
  std::uint64_t original_len = 0;
  std::string secondary_id = "builtin-mrl";
  std::uint32_t model_blob_len = 0;
  std::uint64_t payload_len = 0;

  friend bool operator==(const ArchiveHeader&, const ArchiveHeader&) = default;
};

struct Archive {
  ArchiveHeader header;
  Bytes model_blob;
  Bytes payload;
};

// Standard reflected CRC-32 (poly 0xEDB88320, init and final xor 0xFFFFFFFF).
std::uint32_t crc32(ByteView data);

// Fills in the two length fields from the blobs.
Bytes write_archive(ArchiveHeader header, ByteView model_blob, ByteView payload);

// Validates magic, version, lengths and CRC. Errors: NotAnArchive,
// UnsupportedVersion, CorruptArchive.
Archive read_archive(ByteView data);

std::size_t header_size(const ArchiveHeader& header);

}  // namespace fzip
