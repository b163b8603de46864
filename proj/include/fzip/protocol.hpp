#pragma once

// Batched external-predictor wire protocol.
//
// Frame: u32 length (LE, counts opcode + body) | u8 opcode | body.
// Integers are little-endian; strings are u16 length + UTF-8; "varint" is
// unsigned LEB128.
//
//   HELLO        req: u8 protocol version (1)
//                rsp: u32 V | str tokenizer_id | str version | u32 max_batch
//   TOKENIZE     req: raw bytes                  rsp: varint n | n x u32 token
//   DETOKENIZE   req: varint n | n x u32 token   rsp: raw bytes
//   RANKS        req: varint n | n x (varint ctx_len | ctx_len x u32 | u32 target)
//                rsp: n x u32 rank
//   TOKENS_AT    req: as RANKS with a rank in place of the target
//                rsp: n x u32 token
//   DISTS        req: varint n | n x (varint ctx_len | ctx_len x u32)
//                rsp: n x V x u16 count, each row summing to 65536
//   MEMORIZE     req: u64 corpus_len | corpus bytes | u32 epochs
//                rsp: str adapter_id | u32 blob_len | blob
//   LOAD_ADAPTER req: str adapter_id | u32 blob_len | blob      rsp: empty
//   ERROR        rsp: str message
//
// One request is in flight per session; responses carry the request opcode.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fzip/predictor.hpp"
#include "fzip/subprocess.hpp"

namespace fzip::protocol {

enum class Opcode : std::uint8_t {
  Hello = 0,
  Tokenize = 1,
  Detokenize = 2,
  Ranks = 3,
  TokensAt = 4,
  Dists = 5,
  Memorize = 6,
  LoadAdapter = 7,
  Error = 255,
};

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::uint32_t kMaxFrame = 1u << 30;

struct Frame {
  Opcode opcode{};
  Bytes body;
  friend bool operator==(const Frame&, const Frame&) = default;
};

struct HelloInfo {
  std::uint32_t vocab_size = 0;
  std::string tokenizer_id;
  std::string version;
  std::uint32_t max_batch = 0;
  friend bool operator==(const HelloInfo&, const HelloInfo&) = default;
};

struct Adapter {
  std::string id;
  Bytes blob;
  friend bool operator==(const Adapter&, const Adapter&) = default;
};

// Owned copy of a query, for the decoding side.
struct OwnedQuery {
  std::vector<Token> context;
  std::uint32_t value = 0;
};

Bytes encode_frame(const Frame& frame);
// Parses exactly one frame; throws Transport on malformed input.
Frame decode_frame(ByteView bytes);

Bytes encode_hello(const HelloInfo& info);
HelloInfo decode_hello(ByteView body);
Bytes encode_queries(std::span<const Query> items);
std::vector<OwnedQuery> decode_queries(ByteView body);
Bytes encode_contexts(std::span<const std::span<const Token>> contexts);
std::vector<std::vector<Token>> decode_contexts(ByteView body);
Bytes encode_u32s(std::span<const std::uint32_t> values);
std::vector<std::uint32_t> decode_u32s(ByteView body);
Bytes encode_token_list(std::span<const Token> tokens);
std::vector<Token> decode_token_list(ByteView body);
Bytes encode_dists(std::span<const Distribution> dists);
std::vector<Distribution> decode_dists(ByteView body, std::uint32_t vocab_size, std::size_t n);
Bytes encode_memorize(ByteView corpus, std::uint32_t epochs);
std::pair<Bytes, std::uint32_t> decode_memorize(ByteView body);
Bytes encode_adapter(const Adapter& adapter);
Adapter decode_adapter(ByteView body);
Bytes encode_error(std::string_view message);
std::string decode_error(ByteView body);

// Bidirectional byte stream with a per-operation timeout.
class Transport {
 public:
  Transport(int read_fd, int write_fd, std::chrono::milliseconds timeout);
  virtual ~Transport();
  Transport(const Transport&) = delete;
  Transport& operator=(const Transport&) = delete;

  void send(const Frame& frame);
  Frame receive();
  // Receive that reports a clean end of stream as nullopt (server side).
  std::optional<Frame> receive_or_eof();

 protected:
  void adopt_fds() { owns_fds_ = true; }

 private:
  bool read_exact(std::uint8_t* dst, std::size_t n, bool eof_ok);
  void write_all(ByteView data);

  int read_fd_;
  int write_fd_;
  std::chrono::milliseconds timeout_;
  bool owns_fds_ = false;
};

// Client session. Oversize batches are split at the server's max_batch.
class Session {
 public:
  // Address forms: "unix:<path>", "tcp:<host>:<port>", "exec:<command line>".
  static std::unique_ptr<Session> connect(std::string_view address,
                                          std::chrono::milliseconds timeout = std::chrono::minutes(5));

  Session(std::unique_ptr<Transport> transport, std::unique_ptr<ChildProcess> child = nullptr);
  ~Session();

  const HelloInfo& hello() const noexcept { return hello_; }
  std::size_t frames_sent() const noexcept { return frames_sent_; }

  TokenSequence tokenize(ByteView text);
  Bytes detokenize(const TokenSequence& tokens);
  std::vector<std::uint32_t> batched_ranks(std::span<const Query> items);
  std::vector<Token> batched_tokens_at(std::span<const Query> items);
  std::vector<Distribution> batched_dists(std::span<const std::span<const Token>> contexts);
  Adapter memorize_remote(ByteView corpus, std::uint32_t epochs);
  void load_adapter(const Adapter& adapter);

 private:
  Bytes call(Opcode op, ByteView body);

  std::unique_ptr<ChildProcess> child_;
  std::unique_ptr<Transport> transport_;
  HelloInfo hello_;
  std::size_t frames_sent_ = 0;
};

// Predictor backed by a session; one per worker.
class RemotePredictor final : public Predictor {
 public:
  explicit RemotePredictor(std::unique_ptr<Session> session) : session_(std::move(session)) {}

  std::uint32_t vocab_size() const override { return session_->hello().vocab_size; }
  void ranks(std::span<const Query> items, std::span<std::uint32_t> out) override;
  void tokens_at(std::span<const Query> items, std::span<Token> out) override;
  void distributions(std::span<const std::span<const Token>> contexts,
                     std::span<Distribution> out) override;

  Session& session() noexcept { return *session_; }

 private:
  std::unique_ptr<Session> session_;
};

// Each predictor opens its own session and, when given, loads the adapter.
PredictorFactory remote_factory(std::string address, std::optional<Adapter> adapter,
                                std::chrono::milliseconds timeout = std::chrono::minutes(5));

// Server side: what a predictor process implements.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual HelloInfo hello() = 0;
  virtual TokenSequence tokenize(ByteView text) = 0;
  virtual Bytes detokenize(const TokenSequence& tokens) = 0;
  virtual std::uint32_t rank(std::span<const Token> context, Token target) = 0;
  virtual Token token_at(std::span<const Token> context, std::uint32_t rank) = 0;
  virtual Distribution distribution(std::span<const Token> context) = 0;
  virtual Adapter memorize(ByteView corpus, std::uint32_t epochs) = 0;
  virtual void load_adapter(const Adapter& adapter) = 0;
};

// Answers one request frame. Backend exceptions become ERROR frames.
Frame handle(Backend& backend, const Frame& request);

// Request/response loop until the client closes the stream.
void serve(Backend& backend, int read_fd, int write_fd);

// Test double: byte tokenizer, rank == target token, uniform distributions.
class EchoBackend final : public Backend {
 public:
  explicit EchoBackend(std::uint32_t max_batch = 64) : max_batch_(max_batch) {}
  HelloInfo hello() override;
  TokenSequence tokenize(ByteView text) override;
  Bytes detokenize(const TokenSequence& tokens) override;
  std::uint32_t rank(std::span<const Token>, Token target) override;
  Token token_at(std::span<const Token>, std::uint32_t rank) override;
  Distribution distribution(std::span<const Token>) override;
  Adapter memorize(ByteView corpus, std::uint32_t epochs) override;
  void load_adapter(const Adapter& adapter) override;

 private:
  std::uint32_t max_batch_;
};

// The built-in context model served over the protocol. MEMORIZE fits the
// model and returns its serialized state as the adapter blob.
class BuiltinBackend final : public Backend {
 public:
  explicit BuiltinBackend(std::uint32_t order = kDefaultOrder, std::uint32_t max_batch = 256);
  HelloInfo hello() override;
  TokenSequence tokenize(ByteView text) override;
  Bytes detokenize(const TokenSequence& tokens) override;
  std::uint32_t rank(std::span<const Token> context, Token target) override;
  Token token_at(std::span<const Token> context, std::uint32_t rank) override;
  Distribution distribution(std::span<const Token> context) override;
  Adapter memorize(ByteView corpus, std::uint32_t epochs) override;
  void load_adapter(const Adapter& adapter) override;

 private:
  std::uint32_t max_batch_;
  ModelState state_;
};

}  // namespace fzip::protocol
