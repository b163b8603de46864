#include "fzip/archive.hpp"

#include <zlib.h>

#include <algorithm>

namespace fzip {

namespace {
constexpr std::uint8_t kMagic[4] = {'F', 'Z', 'I', 'P'};
}

std::uint32_t crc32(ByteView data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  constexpr std::size_t kStep = 1u << 30;
  for (std::size_t at = 0; at < data.size(); at += kStep) {
    const auto n = std::min(kStep, data.size() - at);
    crc = ::crc32(crc, data.data() + at, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

std::size_t header_size(const ArchiveHeader& h) {
  return 4 + 1 + 1 + 1 + 4 + (2 + h.tokenizer_id.size()) + (2 + h.predictor_id.size()) + 8 + 8 +
         8 + (2 + h.secondary_id.size()) + 4 + 8;
}

Bytes write_archive(ArchiveHeader h, ByteView model_blob, ByteView payload) {
  if (model_blob.size() > 0xFFFFFFFFu) fail(ErrorKind::Config, "model blob larger than 4 GiB");
  h.model_blob_len = static_cast<std::uint32_t>(model_blob.size());
  h.payload_len = payload.size();

  Bytes out;
  out.reserve(header_size(h) + model_blob.size() + payload.size() + 4);
  ByteWriter w(out);
  w.raw(kMagic);
  w.u8(kArchiveVersion);
  w.u8(static_cast<std::uint8_t>(h.mode));
  w.u8(static_cast<std::uint8_t>(h.context_mode));
  w.u32(h.window);
  w.str16(h.tokenizer_id);
  w.str16(h.predictor_id);
  w.raw(h.predictor_fingerprint);
  w.u64(h.n_tokens);
  w.u64(h.original_len);
  w.str16(h.secondary_id);
  w.u32(h.model_blob_len);
  w.u64(h.payload_len);
  w.raw(model_blob);
  w.raw(payload);
  w.u32(crc32(out));
  return out;
}

Archive read_archive(ByteView data) {
  if (data.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), data.begin()))
    fail(ErrorKind::NotAnArchive, "missing FZIP magic");
  if (data.size() < 5) fail(ErrorKind::CorruptArchive, "archive truncated");
  if (data[4] != kArchiveVersion)
    fail(ErrorKind::UnsupportedVersion, "archive version " + std::to_string(data[4]));
  if (data.size() < 4 + 1 + 4) fail(ErrorKind::CorruptArchive, "archive truncated");

  const auto body = data.first(data.size() - 4);
  ByteReader tail(data.last(4), ErrorKind::CorruptArchive);
  if (tail.u32() != crc32(body)) fail(ErrorKind::CorruptArchive, "CRC mismatch");

  Archive a;
  auto& h = a.header;
  ByteReader r(body, ErrorKind::CorruptArchive);
  r.raw(5);
  const auto mode = r.u8();
  const auto ctx = r.u8();
  if (mode > 1 || ctx > 1) fail(ErrorKind::CorruptArchive, "unknown coding or context mode");
  h.mode = static_cast<CodingMode>(mode);
  h.context_mode = static_cast<ContextMode>(ctx);
  h.window = r.u32();
  if (h.window == 0) fail(ErrorKind::CorruptArchive, "zero context window");
  h.tokenizer_id = r.str16();
  h.predictor_id = r.str16();
  const auto fp = r.raw(8);
  std::copy(fp.begin(), fp.end(), h.predictor_fingerprint.begin());
  h.n_tokens = r.u64();
  h.original_len = r.u64();
  h.secondary_id = r.str16();
  h.model_blob_len = r.u32();
  h.payload_len = r.u64();
  if (h.model_blob_len > r.remaining() || h.payload_len != r.remaining() - h.model_blob_len)
    fail(ErrorKind::CorruptArchive, "section lengths do not match archive size");
  auto blob = r.raw(h.model_blob_len);
  auto payload = r.raw(static_cast<std::size_t>(h.payload_len));
  a.model_blob.assign(blob.begin(), blob.end());
  a.payload.assign(payload.begin(), payload.end());
  return a;
}

}  // namespace fzip
