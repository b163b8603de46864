#include "fzip/secondary_codec.hpp"

#include <array>
#include <numeric>

#include "fzip/range_coder.hpp"
#include "fzip/subprocess.hpp"

namespace fzip {

namespace {

constexpr std::uint32_t kRunA = 0;
constexpr std::uint32_t kRunB = 1;
constexpr std::uint32_t kAlphabet = 257;  // RUNA, RUNB, MTF values 1..255

class MoveToFront {
 public:
  MoveToFront() { std::iota(table_.begin(), table_.end(), 0); }

  std::uint8_t encode(std::uint8_t byte) {
    std::uint8_t pos = 0;
    while (table_[pos] != byte) ++pos;
    promote(pos);
    return pos;
  }

  std::uint8_t decode(std::uint8_t pos) {
    const auto byte = table_[pos];
    promote(pos);
    return byte;
  }

 private:
  void promote(std::uint8_t pos) {
    const auto byte = table_[pos];
    for (; pos > 0; --pos) table_[pos] = table_[pos - 1];
    table_[0] = byte;
  }

  std::array<std::uint8_t, 256> table_{};
};

// Bijective base-2 digits of the run length, least significant first.
void emit_run(std::uint64_t run, std::vector<std::uint32_t>& out) {
  while (run > 0) {
    if (run & 1) {
      out.push_back(kRunA);
      run = (run - 1) / 2;
    } else {
      out.push_back(kRunB);
      run = (run - 2) / 2;
    }
  }
}

}  // namespace

Bytes serialize_ranks(const RankStream& ranks) {
  ByteWriter w;
  for (auto r : ranks.ranks) w.varint(r);
  return w.take();
}

RankStream deserialize_ranks(ByteView data, std::size_t n_tokens) {
  if (n_tokens > data.size()) fail(ErrorKind::CorruptStream, "rank stream shorter than token count");
  ByteReader r(data);
  RankStream out;
  out.ranks.reserve(n_tokens);
  for (std::size_t i = 0; i < n_tokens; ++i) {
    const auto v = r.varint();
    if (v > 0xFFFFFFFFu) fail(ErrorKind::CorruptStream, "rank exceeds 32 bits");
    out.ranks.push_back(static_cast<std::uint32_t>(v));
  }
  if (!r.done()) fail(ErrorKind::CorruptStream, "trailing bytes after rank stream");
  return out;
}

Bytes compress_builtin(ByteView data) {
  std::vector<std::uint32_t> symbols;
  symbols.reserve(data.size());
  MoveToFront mtf;
  std::uint64_t run = 0;
  for (auto byte : data) {
    const auto pos = mtf.encode(byte);
    if (pos == 0) {
      ++run;
      continue;
    }
    emit_run(run, symbols);
    run = 0;
    symbols.push_back(pos + 1u);
  }
  emit_run(run, symbols);

  ByteWriter w;
  w.varint(data.size());
  w.varint(symbols.size());
  if (!symbols.empty()) {
    RangeEncoder enc(w.buf());
    AdaptiveFrequencies model(kAlphabet);
    for (auto s : symbols) model.encode(enc, s);
    enc.flush();
  }
  return w.take();
}

Bytes decompress_builtin(ByteView data) {
  ByteReader r(data);
  const auto out_len = r.varint();
  const auto n_symbols = r.varint();
  // Every symbol yields at least one output byte.
  if (n_symbols > out_len) fail(ErrorKind::CorruptStream, "builtin-mrl symbol count exceeds length");
  if (out_len > (std::uint64_t(1) << 40)) fail(ErrorKind::CorruptStream, "builtin-mrl length implausible");

  Bytes out;
  out.reserve(static_cast<std::size_t>(out_len));
  if (n_symbols == 0) {
    if (out_len != 0 || !r.done()) fail(ErrorKind::CorruptStream, "builtin-mrl header mismatch");
    return out;
  }
  RangeDecoder dec(data.subspan(r.pos()));
  AdaptiveFrequencies model(kAlphabet);
  MoveToFront mtf;
  std::uint64_t run = 0;
  std::uint64_t weight = 1;
  auto flush_run = [&] {
    if (run > out_len - out.size()) fail(ErrorKind::CorruptStream, "builtin-mrl run overflows output");
    const auto zero = mtf.decode(0);
    out.insert(out.end(), static_cast<std::size_t>(run), zero);
    run = 0;
    weight = 1;
  };
  for (std::uint64_t i = 0; i < n_symbols; ++i) {
    const auto s = model.decode(dec);
    if (s == kRunA || s == kRunB) {
      if (weight > out_len) fail(ErrorKind::CorruptStream, "builtin-mrl run too long");
      run += (s == kRunA ? 1 : 2) * weight;
      weight <<= 1;
      continue;
    }
    if (run) flush_run();
    if (out.size() >= out_len) fail(ErrorKind::CorruptStream, "builtin-mrl output overflow");
    out.push_back(mtf.decode(static_cast<std::uint8_t>(s - 1)));
  }
  if (run) flush_run();
  if (out.size() != out_len) fail(ErrorKind::CorruptStream, "builtin-mrl length mismatch");
  if (!dec.exhausted()) fail(ErrorKind::CorruptStream, "unread bytes in builtin-mrl stream");
  return out;
}

Bytes decompress_builtin(ByteView data, std::size_t out_len) {
  auto out = decompress_builtin(data);
  if (out.size() != out_len) fail(ErrorKind::CorruptStream, "builtin-mrl length mismatch");
  return out;
}

Bytes compress_external(std::string_view command, ByteView data, std::chrono::milliseconds timeout) {
  const auto argv = split_command(command);
  if (argv.empty()) fail(ErrorKind::Config, "empty external command");
  auto result = run_process(argv, data, timeout);
  if (result.exit_code != 0) {
    auto diag = result.err.substr(0, 500);
    while (!diag.empty() && (diag.back() == '\n' || diag.back() == '\r')) diag.pop_back();
    fail(ErrorKind::ExternalTool, "'" + std::string(command) + "' exited with " +
                                      std::to_string(result.exit_code) +
                                      (diag.empty() ? "" : ": " + diag));
  }
  return std::move(result.out);
}

SecondaryCodec SecondaryCodec::resolve(std::string_view id) {
  SecondaryCodec codec;
  codec.id_ = std::string(id);
  if (id == "none") {
    codec.kind_ = Kind::None;
  } else if (id == "builtin-mrl") {
    codec.kind_ = Kind::Builtin;
  } else if (id.starts_with("extcmd:")) {
    auto body = id.substr(7);
    const auto bar = body.find('|');
    if (bar == std::string_view::npos)
      fail(ErrorKind::Config, "extcmd codec needs '<compress>|<decompress>'");
    codec.kind_ = Kind::External;
    codec.compress_cmd_ = std::string(body.substr(0, bar));
    codec.decompress_cmd_ = std::string(body.substr(bar + 1));
    if (split_command(codec.compress_cmd_).empty() || split_command(codec.decompress_cmd_).empty())
      fail(ErrorKind::Config, "extcmd codec has an empty command");
  } else {
    fail(ErrorKind::Config, "unknown secondary codec '" + std::string(id) + "'");
  }
  return codec;
}

Bytes SecondaryCodec::compress(ByteView data) const {
  switch (kind_) {
    case Kind::None: return {data.begin(), data.end()};
    case Kind::Builtin: return compress_builtin(data);
    case Kind::External: return compress_external(compress_cmd_, data, timeout);
  }
  return {};
}

Bytes SecondaryCodec::decompress(ByteView data) const {
  switch (kind_) {
    case Kind::None: return {data.begin(), data.end()};
    case Kind::Builtin: return decompress_builtin(data);
    case Kind::External: return compress_external(decompress_cmd_, data, timeout);
  }
  return {};
}

}  // namespace fzip
