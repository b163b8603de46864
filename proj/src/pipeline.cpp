#include "fzip/pipeline.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "fzip/entropy_coder.hpp"
#include "fzip/protocol.hpp"

namespace fzip {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

constexpr std::string_view kExternalPrefix = "ext:";

bool is_external(std::string_view predictor_id) { return predictor_id.starts_with(kExternalPrefix); }

Fingerprint version_fingerprint(const std::string& version) { return fingerprint_of(as_bytes(version)); }

// Adapter blob for external predictors: str16 adapter id, then the raw blob.
Bytes pack_adapter(const protocol::Adapter& a) {
  ByteWriter w;
  w.str16(a.id);
  w.raw(a.blob);
  return w.take();
}

protocol::Adapter unpack_adapter(ByteView data) {
  ByteReader r(data);
  protocol::Adapter a;
  a.id = r.str16();
  auto rest = r.raw(r.remaining());
  a.blob.assign(rest.begin(), rest.end());
  return a;
}

// Everything the coding stage needs, resolved from an id and optional blob.
struct ResolvedPredictor {
  std::optional<ModelState> state;            // built-in
  std::optional<protocol::Adapter> adapter;   // external, memorized
  std::unique_ptr<protocol::Session> control;  // external: tokenizer + memorize session
  std::string address;
  PredictorFactory factory;
  std::uint32_t vocab_size = 0;
  Fingerprint fp{};
};

void finish_external(ResolvedPredictor& rp, std::chrono::milliseconds timeout) {
  rp.factory = protocol::remote_factory(rp.address, rp.adapter, timeout);
  rp.vocab_size = rp.control->hello().vocab_size;
  rp.fp = version_fingerprint(rp.control->hello().version);
}

std::size_t count_zero(const RankStream& ranks) {
  return static_cast<std::size_t>(std::count(ranks.ranks.begin(), ranks.ranks.end(), 0u));
}

}  // namespace

void validate(const CompressConfig& c) {
  validate(c.policy);
  if (c.mode != CodingMode::Rank && c.mode != CodingMode::Arithmetic)
    fail(ErrorKind::Config, "unknown coding mode");
  if (c.workers < 1) fail(ErrorKind::Config, "workers must be >= 1");
  if (c.memorize && c.epochs < 1) fail(ErrorKind::Config, "epochs must be >= 1");
  SecondaryCodec::resolve(c.secondary_id);
  if (is_external(c.predictor_id)) {
    if (c.predictor_id.size() == kExternalPrefix.size())
      fail(ErrorKind::Config, "ext: predictor needs an address");
  } else {
    if (!builtin_order(c.predictor_id))
      fail(ErrorKind::Config, "unknown predictor '" + c.predictor_id + "'");
    if (c.tokenizer_id != kByteTokenizer)
      fail(ErrorKind::Config, "built-in predictors use the 'byte' tokenizer");
  }
}

double ratio(std::uint64_t original_len, std::uint64_t archive_len) {
  if (original_len == 0) fail(ErrorKind::UndefinedRatio, "ratio undefined for empty input");
  return static_cast<double>(archive_len) / static_cast<double>(original_len);
}

CompressResult compress(ByteView input, const CompressConfig& config) {
  validate(config);
  CompressResult res;
  ArchiveHeader h;
  h.mode = config.mode;
  h.context_mode = config.policy.mode;
  h.window = config.policy.window;
  h.tokenizer_id = config.tokenizer_id;
  h.predictor_id = config.predictor_id;
  h.secondary_id = config.secondary_id;
  h.original_len = input.size();

  ResolvedPredictor rp;
  Bytes model_blob;
  TokenSequence tokens;
  const auto start = Clock::now();

  if (is_external(config.predictor_id)) {
    rp.address = config.predictor_id.substr(kExternalPrefix.size());
    rp.control = protocol::Session::connect(rp.address, config.timeout);
    if (config.tokenizer_id != rp.control->hello().tokenizer_id)
      fail(ErrorKind::Config, "tokenizer '" + config.tokenizer_id + "' does not match predictor tokenizer '" +
                                  rp.control->hello().tokenizer_id + "'");
    auto t0 = Clock::now();
    tokens = rp.control->tokenize(input);
    res.times.tokenize_ms = ms_since(t0);
    if (config.memorize) {
      t0 = Clock::now();
      rp.adapter = rp.control->memorize_remote(input, config.epochs);
      res.times.memorize_ms = ms_since(t0);
      model_blob = pack_adapter(*rp.adapter);
    }
    finish_external(rp, config.timeout);
  } else {
    const auto order = *builtin_order(config.predictor_id);
    auto t0 = Clock::now();
    tokens = encode(input, config.tokenizer_id);
    res.times.tokenize_ms = ms_since(t0);
    if (config.memorize) {
      t0 = Clock::now();
      rp.state = fit(tokens, config.epochs, order);
      res.warning = rp.state->warning();
      model_blob = compress_builtin(serialize(*rp.state));
      res.times.memorize_ms = ms_since(t0);
    } else {
      rp.state.emplace(order, tokens.vocab_size);
    }
    rp.factory = builtin_factory(*rp.state);
    rp.vocab_size = rp.state->vocab_size();
    rp.fp = fingerprint(*rp.state);
  }
  h.predictor_fingerprint = rp.fp;
  h.n_tokens = tokens.size();

  auto t0 = Clock::now();
  Bytes stage1;
  if (config.mode == CodingMode::Rank) {
    const auto ranks = encode_ranks(tokens, rp.factory, config.policy, config.workers);
    res.rank0_count = count_zero(ranks);
    stage1 = serialize_ranks(ranks);
  } else {
    stage1 = ac_encode(tokens, rp.factory, config.policy, config.workers).bytes;
  }
  res.times.code_ms = ms_since(t0);

  t0 = Clock::now();
  auto codec = SecondaryCodec::resolve(config.secondary_id);
  codec.timeout = config.timeout;
  const Bytes payload = codec.compress(stage1);
  res.times.secondary_ms = ms_since(t0);

  res.archive = write_archive(h, model_blob, payload);
  res.header_len = header_size(h);
  res.model_blob_len = model_blob.size();
  res.payload_len = payload.size();
  res.stage1_len = stage1.size();
  res.n_tokens = tokens.size();
  res.times.total_ms = ms_since(start) - res.times.memorize_ms;
  return res;
}

DecompressResult decompress(ByteView data, unsigned workers, std::chrono::milliseconds timeout) {
  if (workers < 1) fail(ErrorKind::Config, "workers must be >= 1");
  const auto start = Clock::now();
  auto archive = read_archive(data);
  const auto& h = archive.header;
  DecompressResult res;
  res.header = h;

  auto codec = SecondaryCodec::resolve(h.secondary_id);
  codec.timeout = timeout;
  const ContextPolicy policy{h.context_mode, h.window};

  ResolvedPredictor rp;
  if (is_external(h.predictor_id)) {
    rp.address = h.predictor_id.substr(kExternalPrefix.size());
    rp.control = protocol::Session::connect(rp.address, timeout);
    if (!archive.model_blob.empty()) rp.adapter = unpack_adapter(archive.model_blob);
    finish_external(rp, timeout);
    if (rp.control->hello().tokenizer_id != h.tokenizer_id)
      fail(ErrorKind::ModelMismatch, "predictor tokenizer differs from the archive's");
  } else {
    const auto order = builtin_order(h.predictor_id);
    if (!order) fail(ErrorKind::ModelMismatch, "unknown predictor '" + h.predictor_id + "'");
    if (h.tokenizer_id != kByteTokenizer)
      fail(ErrorKind::ModelMismatch, "built-in predictor with tokenizer '" + h.tokenizer_id + "'");
    if (archive.model_blob.empty()) {
      rp.state.emplace(*order, 256);
    } else {
      rp.state = deserialize_model(decompress_builtin(archive.model_blob));
      if (rp.state->order() != *order || rp.state->vocab_size() != 256)
        fail(ErrorKind::ModelMismatch, "model blob does not match predictor id");
    }
    rp.factory = builtin_factory(*rp.state);
    rp.vocab_size = rp.state->vocab_size();
    rp.fp = fingerprint(*rp.state);
  }
  if (rp.fp != h.predictor_fingerprint)
    fail(ErrorKind::ModelMismatch, "predictor fingerprint does not match the archive");

  auto t0 = Clock::now();
  const Bytes stage1 = codec.decompress(archive.payload);
  res.times.secondary_ms = ms_since(t0);

  t0 = Clock::now();
  const auto n = static_cast<std::size_t>(h.n_tokens);
  TokenSequence tokens;
  if (h.mode == CodingMode::Rank) {
    tokens = decode_ranks(deserialize_ranks(stage1, n), rp.factory, rp.vocab_size, policy, n, workers);
  } else {
    tokens = ac_decode(stage1, rp.factory, rp.vocab_size, policy, n, workers);
  }
  res.times.code_ms = ms_since(t0);

  t0 = Clock::now();
  res.data = rp.control ? rp.control->detokenize(tokens) : decode(tokens, h.tokenizer_id);
  res.times.tokenize_ms = ms_since(t0);
  if (res.data.size() != h.original_len)
    fail(ErrorKind::CorruptStream, "decoded length differs from the archive header");
  res.times.total_ms = ms_since(start);
  return res;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorKind::Io, "cannot read " + path.string());
  return data;
}

void write_file_atomic(const std::filesystem::path& path, ByteView data) {
  std::random_device rd;
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid()) + "-" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot create " + tmp.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      fail(ErrorKind::Io, "cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::Io, "cannot rename into " + path.string());
  }
}

}  // namespace fzip
