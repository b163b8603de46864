#pragma once

// Second-stage byte codecs applied to serialized rank streams.
//
//   "none"                             identity
//   "builtin-mrl"                      move-to-front, zero-run coding, adaptive order-0 range coding
//   "extcmd:<compress>|<decompress>"   external filters (stdin -> stdout, exit 0)

#include <chrono>
#include <string>
#include <string_view>

#include "fzip/rank_codec.hpp"

namespace fzip {

// Ranks as concatenated unsigned LEB128 varints.
Bytes serialize_ranks(const RankStream& ranks);
RankStream deserialize_ranks(ByteView data, std::size_t n_tokens);

// Layout: varint input length, varint coded-symbol count, range coder bytes
// (absent when there are no symbols).
Bytes compress_builtin(ByteView data);
Bytes decompress_builtin(ByteView data);
Bytes decompress_builtin(ByteView data, std::size_t out_len);

Bytes compress_external(std::string_view command, ByteView data,
                        std::chrono::milliseconds timeout = std::chrono::minutes(10));

class SecondaryCodec {
 public:
  enum class Kind { None, Builtin, External };

  static SecondaryCodec resolve(std::string_view id);

  Kind kind() const noexcept { return kind_; }
  const std::string& id() const noexcept { return id_; }
  Bytes compress(ByteView data) const;
  Bytes decompress(ByteView data) const;

  std::chrono::milliseconds timeout = std::chrono::minutes(10);

 private:
  Kind kind_ = Kind::None;
  std::string id_;
  std::string compress_cmd_;
  std::string decompress_cmd_;
};

}  // namespace fzip
