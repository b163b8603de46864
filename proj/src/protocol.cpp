#include "fzip/protocol.hpp"

#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace fzip::protocol {

namespace {

std::string opcode_name(Opcode op) {
  switch (op) {
    case Opcode::Hello: return "HELLO";
    case Opcode::Tokenize: return "TOKENIZE";
    case Opcode::Detokenize: return "DETOKENIZE";
    case Opcode::Ranks: return "RANKS";
    case Opcode::TokensAt: return "TOKENS_AT";
    case Opcode::Dists: return "DISTS";
    case Opcode::Memorize: return "MEMORIZE";
    case Opcode::LoadAdapter: return "LOAD_ADAPTER";
    case Opcode::Error: return "ERROR";
  }
  return "opcode " + std::to_string(static_cast<int>(op));
}

bool known_opcode(std::uint8_t op) { return op <= 7 || op == 255; }

ByteReader reader(ByteView body) { return ByteReader(body, ErrorKind::Transport); }

void expect_done(const ByteReader& r, const char* what) {
  if (!r.done()) fail(ErrorKind::Transport, std::string("trailing bytes in ") + what);
}

std::vector<Token> read_tokens(ByteReader& r, std::uint64_t n) {
  if (n > r.remaining() / 4) fail(ErrorKind::Transport, "token count exceeds frame");
  std::vector<Token> out(static_cast<std::size_t>(n));
  for (auto& t : out) t = r.u32();
  return out;
}

int connect_unix(const std::string& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() >= sizeof(addr.sun_path)) fail(ErrorKind::Config, "unix socket path too long");
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) fail(ErrorKind::Transport, std::string("socket: ") + std::strerror(errno));
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const int e = errno;
    ::close(fd);
    fail(ErrorKind::Transport, "cannot connect to " + path + ": " + std::strerror(e));
  }
  return fd;
}

int connect_tcp(const std::string& host_port) {
  const auto colon = host_port.rfind(':');
  if (colon == std::string::npos) fail(ErrorKind::Config, "tcp address needs host:port");
  const auto host = host_port.substr(0, colon);
  const auto port = host_port.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &found); rc != 0)
    fail(ErrorKind::Transport, "cannot resolve " + host_port + ": " + ::gai_strerror(rc));
  int fd = -1;
  for (auto* ai = found; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) fail(ErrorKind::Transport, "cannot connect to " + host_port);
  return fd;
}

class SocketTransport final : public Transport {
 public:
  SocketTransport(int fd, std::chrono::milliseconds timeout) : Transport(fd, fd, timeout) {
    adopt_fds();
  }
};

}  // namespace

// ---- frame codecs -----------------------------------------------------------

Bytes encode_frame(const Frame& frame) {
  if (frame.body.size() + 1 > kMaxFrame) fail(ErrorKind::Transport, "frame too large");
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(frame.body.size() + 1));
  w.u8(static_cast<std::uint8_t>(frame.opcode));
  w.raw(frame.body);
  return w.take();
}

Frame decode_frame(ByteView bytes) {
  auto r = reader(bytes);
  const auto len = r.u32();
  if (len < 1 || len > kMaxFrame || len != r.remaining())
    fail(ErrorKind::Transport, "bad frame length");
  const auto op = r.u8();
  if (!known_opcode(op)) fail(ErrorKind::Transport, "unknown opcode " + std::to_string(op));
  auto body = r.raw(len - 1);
  return {static_cast<Opcode>(op), Bytes(body.begin(), body.end())};
}

Bytes encode_hello(const HelloInfo& info) {
  ByteWriter w;
  w.u32(info.vocab_size);
  w.str16(info.tokenizer_id);
  w.str16(info.version);
  w.u32(info.max_batch);
  return w.take();
}

HelloInfo decode_hello(ByteView body) {
  auto r = reader(body);
  HelloInfo info;
  info.vocab_size = r.u32();
  info.tokenizer_id = r.str16();
  info.version = r.str16();
  info.max_batch = r.u32();
  expect_done(r, "HELLO");
  if (info.vocab_size < 2 || info.max_batch < 1)
    fail(ErrorKind::RemotePredictor, "HELLO with invalid vocab size or max batch");
  return info;
}

Bytes encode_queries(std::span<const Query> items) {
  ByteWriter w;
  w.varint(items.size());
  for (const auto& q : items) {
    w.varint(q.context.size());
    for (Token t : q.context) w.u32(t);
    w.u32(q.value);
  }
  return w.take();
}

std::vector<OwnedQuery> decode_queries(ByteView body) {
  auto r = reader(body);
  const auto n = r.varint();
  if (n > r.remaining() / 5) fail(ErrorKind::Transport, "query count exceeds frame");
  std::vector<OwnedQuery> out(static_cast<std::size_t>(n));
  for (auto& q : out) {
    q.context = read_tokens(r, r.varint());
    q.value = r.u32();
  }
  expect_done(r, "query batch");
  return out;
}

Bytes encode_contexts(std::span<const std::span<const Token>> contexts) {
  ByteWriter w;
  w.varint(contexts.size());
  for (const auto& ctx : contexts) {
    w.varint(ctx.size());
    for (Token t : ctx) w.u32(t);
  }
  return w.take();
}

std::vector<std::vector<Token>> decode_contexts(ByteView body) {
  auto r = reader(body);
  const auto n = r.varint();
  if (n > r.remaining()) fail(ErrorKind::Transport, "context count exceeds frame");
  std::vector<std::vector<Token>> out(static_cast<std::size_t>(n));
  for (auto& ctx : out) ctx = read_tokens(r, r.varint());
  expect_done(r, "context batch");
  return out;
}

Bytes encode_u32s(std::span<const std::uint32_t> values) {
  ByteWriter w;
  for (auto v : values) w.u32(v);
  return w.take();
}

std::vector<std::uint32_t> decode_u32s(ByteView body) {
  if (body.size() % 4) fail(ErrorKind::Transport, "u32 array has a ragged length");
  auto r = reader(body);
  std::vector<std::uint32_t> out(body.size() / 4);
  for (auto& v : out) v = r.u32();
  return out;
}

Bytes encode_token_list(std::span<const Token> tokens) {
  ByteWriter w;
  w.varint(tokens.size());
  for (Token t : tokens) w.u32(t);
  return w.take();
}

std::vector<Token> decode_token_list(ByteView body) {
  auto r = reader(body);
  auto out = read_tokens(r, r.varint());
  expect_done(r, "token list");
  return out;
}

Bytes encode_dists(std::span<const Distribution> dists) {
  ByteWriter w;
  for (const auto& d : dists)
    for (auto f : d.freq) {
      if (f > 0xFFFF) fail(ErrorKind::RemotePredictor, "distribution count exceeds u16");
      w.u16(static_cast<std::uint16_t>(f));
    }
  return w.take();
}

std::vector<Distribution> decode_dists(ByteView body, std::uint32_t vocab_size, std::size_t n) {
  if (body.size() != std::uint64_t(n) * vocab_size * 2)
    fail(ErrorKind::RemotePredictor, "DISTS response has the wrong size");
  auto r = reader(body);
  std::vector<Distribution> out(n);
  for (auto& d : out) {
    d.freq.resize(vocab_size);
    for (auto& f : d.freq) f = r.u16();
    try {
      validate(d);
    } catch (const Error& e) {
      fail(ErrorKind::RemotePredictor, e.what());
    }
  }
  return out;
}

Bytes encode_memorize(ByteView corpus, std::uint32_t epochs) {
  ByteWriter w;
  w.u64(corpus.size());
  w.raw(corpus);
  w.u32(epochs);
  return w.take();
}

std::pair<Bytes, std::uint32_t> decode_memorize(ByteView body) {
  auto r = reader(body);
  const auto len = r.u64();
  if (len > r.remaining()) fail(ErrorKind::Transport, "MEMORIZE corpus exceeds frame");
  auto corpus = r.raw(static_cast<std::size_t>(len));
  const auto epochs = r.u32();
  expect_done(r, "MEMORIZE");
  return {Bytes(corpus.begin(), corpus.end()), epochs};
}

Bytes encode_adapter(const Adapter& adapter) {
  ByteWriter w;
  w.str16(adapter.id);
  w.u32(static_cast<std::uint32_t>(adapter.blob.size()));
  w.raw(adapter.blob);
  return w.take();
}

Adapter decode_adapter(ByteView body) {
  auto r = reader(body);
  Adapter a;
  a.id = r.str16();
  auto blob = r.raw(r.u32());
  a.blob.assign(blob.begin(), blob.end());
  expect_done(r, "adapter");
  return a;
}

Bytes encode_error(std::string_view message) {
  ByteWriter w;
  w.str16(message.substr(0, 0xFFFF));
  return w.take();
}

std::string decode_error(ByteView body) {
  auto r = reader(body);
  return r.str16();
}

// ---- transport --------------------------------------------------------------

Transport::Transport(int read_fd, int write_fd, std::chrono::milliseconds timeout)
    : read_fd_(read_fd), write_fd_(write_fd), timeout_(timeout) {}

Transport::~Transport() {
  if (!owns_fds_) return;
  ::close(read_fd_);
  if (write_fd_ != read_fd_) ::close(write_fd_);
}

bool Transport::read_exact(std::uint8_t* dst, std::size_t n, bool eof_ok) {
  std::size_t got = 0;
  while (got < n) {
    pollfd p{read_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(timeout_.count()));
    if (rc == 0) fail(ErrorKind::Transport, "predictor timed out");
    if (rc < 0) {
      if (errno == EINTR) continue;
      fail(ErrorKind::Transport, std::string("poll: ") + std::strerror(errno));
    }
    const ssize_t k = ::read(read_fd_, dst + got, n - got);
    if (k == 0) {
      if (eof_ok && got == 0) return false;
      fail(ErrorKind::Transport, "predictor closed the connection");
    }
    if (k < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(ErrorKind::Transport, std::string("read: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(k);
  }
  return true;
}

void Transport::write_all(ByteView data) {
  std::size_t put = 0;
  while (put < data.size()) {
    pollfd p{write_fd_, POLLOUT, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(timeout_.count()));
    if (rc == 0) fail(ErrorKind::Transport, "predictor timed out");
    if (rc < 0) {
      if (errno == EINTR) continue;
      fail(ErrorKind::Transport, std::string("poll: ") + std::strerror(errno));
    }
    const ssize_t k = ::write(write_fd_, data.data() + put, data.size() - put);
    if (k < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(ErrorKind::Transport, std::string("write: ") + std::strerror(errno));
    }
    put += static_cast<std::size_t>(k);
  }
}

void Transport::send(const Frame& frame) { write_all(encode_frame(frame)); }

std::optional<Frame> Transport::receive_or_eof() {
  std::uint8_t head[5];
  if (!read_exact(head, 4, true)) return std::nullopt;
  const std::uint32_t len = head[0] | head[1] << 8 | head[2] << 16 | std::uint32_t(head[3]) << 24;
  if (len < 1 || len > kMaxFrame) fail(ErrorKind::Transport, "bad frame length");
  read_exact(head + 4, 1, false);
  if (!known_opcode(head[4])) fail(ErrorKind::Transport, "unknown opcode " + std::to_string(head[4]));
  Frame f{static_cast<Opcode>(head[4]), Bytes(len - 1)};
  read_exact(f.body.data(), f.body.size(), false);
  return f;
}

Frame Transport::receive() {
  auto f = receive_or_eof();
  if (!f) fail(ErrorKind::Transport, "predictor closed the connection");
  return std::move(*f);
}

// ---- client -----------------------------------------------------------------

std::unique_ptr<Session> Session::connect(std::string_view address,
                                          std::chrono::milliseconds timeout) {
  if (address.starts_with("unix:"))
    return std::make_unique<Session>(
        std::make_unique<SocketTransport>(connect_unix(std::string(address.substr(5))), timeout));
  if (address.starts_with("tcp:"))
    return std::make_unique<Session>(
        std::make_unique<SocketTransport>(connect_tcp(std::string(address.substr(4))), timeout));
  if (address.starts_with("exec:")) {
    const auto argv = split_command(address.substr(5));
    if (argv.empty()) fail(ErrorKind::Config, "exec: address needs a command");
    std::unique_ptr<ChildProcess> child;
    try {
      child = std::make_unique<ChildProcess>(argv);
    } catch (const Error& e) {
      fail(ErrorKind::Transport, e.what());
    }
    auto transport = std::make_unique<Transport>(child->read_fd(), child->write_fd(), timeout);
    return std::make_unique<Session>(std::move(transport), std::move(child));
  }
  fail(ErrorKind::Config, "unknown predictor address '" + std::string(address) + "'");
}

Session::Session(std::unique_ptr<Transport> transport, std::unique_ptr<ChildProcess> child)
    : child_(std::move(child)), transport_(std::move(transport)) {
  const std::uint8_t version[] = {kProtocolVersion};
  hello_ = decode_hello(call(Opcode::Hello, version));
}

// The transport must go before the child so the child sees EOF on stdin.
Session::~Session() { transport_.reset(); }

Bytes Session::call(Opcode op, ByteView body) {
  transport_->send({op, Bytes(body.begin(), body.end())});
  ++frames_sent_;
  auto reply = transport_->receive();
  if (reply.opcode == Opcode::Error)
    fail(ErrorKind::RemotePredictor, decode_error(reply.body));
  if (reply.opcode != op)
    fail(ErrorKind::Transport, "expected " + opcode_name(op) + " reply, got " + opcode_name(reply.opcode));
  return std::move(reply.body);
}

TokenSequence Session::tokenize(ByteView text) {
  TokenSequence seq;
  seq.vocab_size = hello_.vocab_size;
  seq.tokens = decode_token_list(call(Opcode::Tokenize, text));
  for (Token t : seq.tokens)
    if (t >= seq.vocab_size) fail(ErrorKind::RemotePredictor, "TOKENIZE returned id >= V");
  return seq;
}

Bytes Session::detokenize(const TokenSequence& tokens) {
  for (Token t : tokens.tokens)
    if (t >= hello_.vocab_size) fail(ErrorKind::CorruptStream, "token id >= V");
  return call(Opcode::Detokenize, encode_token_list(tokens.tokens));
}

std::vector<std::uint32_t> Session::batched_ranks(std::span<const Query> items) {
  std::vector<std::uint32_t> out;
  out.reserve(items.size());
  for (std::size_t at = 0; at < items.size(); at += hello_.max_batch) {
    const auto part = items.subspan(at, std::min<std::size_t>(hello_.max_batch, items.size() - at));
    const auto got = decode_u32s(call(Opcode::Ranks, encode_queries(part)));
    if (got.size() != part.size()) fail(ErrorKind::RemotePredictor, "RANKS reply misaligned");
    for (auto r : got)
      if (r >= hello_.vocab_size) fail(ErrorKind::RemotePredictor, "RANKS returned rank >= V");
    out.insert(out.end(), got.begin(), got.end());
  }
  return out;
}

std::vector<Token> Session::batched_tokens_at(std::span<const Query> items) {
  std::vector<Token> out;
  out.reserve(items.size());
  for (std::size_t at = 0; at < items.size(); at += hello_.max_batch) {
    const auto part = items.subspan(at, std::min<std::size_t>(hello_.max_batch, items.size() - at));
    const auto got = decode_u32s(call(Opcode::TokensAt, encode_queries(part)));
    if (got.size() != part.size()) fail(ErrorKind::RemotePredictor, "TOKENS_AT reply misaligned");
    for (auto t : got)
      if (t >= hello_.vocab_size) fail(ErrorKind::RemotePredictor, "TOKENS_AT returned id >= V");
    out.insert(out.end(), got.begin(), got.end());
  }
  return out;
}

std::vector<Distribution> Session::batched_dists(std::span<const std::span<const Token>> contexts) {
  std::vector<Distribution> out;
  out.reserve(contexts.size());
  for (std::size_t at = 0; at < contexts.size(); at += hello_.max_batch) {
    const auto part =
        contexts.subspan(at, std::min<std::size_t>(hello_.max_batch, contexts.size() - at));
    auto got = decode_dists(call(Opcode::Dists, encode_contexts(part)), hello_.vocab_size, part.size());
    for (auto& d : got) out.push_back(std::move(d));
  }
  return out;
}

Adapter Session::memorize_remote(ByteView corpus, std::uint32_t epochs) {
  return decode_adapter(call(Opcode::Memorize, encode_memorize(corpus, epochs)));
}

void Session::load_adapter(const Adapter& adapter) {
  const auto reply = call(Opcode::LoadAdapter, encode_adapter(adapter));
  if (!reply.empty()) fail(ErrorKind::Transport, "LOAD_ADAPTER reply must be empty");
}

void RemotePredictor::ranks(std::span<const Query> items, std::span<std::uint32_t> out) {
  const auto got = session_->batched_ranks(items);
  std::copy(got.begin(), got.end(), out.begin());
}

void RemotePredictor::tokens_at(std::span<const Query> items, std::span<Token> out) {
  const auto got = session_->batched_tokens_at(items);
  std::copy(got.begin(), got.end(), out.begin());
}

void RemotePredictor::distributions(std::span<const std::span<const Token>> contexts,
                                    std::span<Distribution> out) {
  auto got = session_->batched_dists(contexts);
  std::move(got.begin(), got.end(), out.begin());
}

PredictorFactory remote_factory(std::string address, std::optional<Adapter> adapter,
                                std::chrono::milliseconds timeout) {
  return [address = std::move(address), adapter = std::move(adapter), timeout] {
    auto session = Session::connect(address, timeout);
    if (adapter) session->load_adapter(*adapter);
    return std::make_unique<RemotePredictor>(std::move(session));
  };
}

// ---- server -----------------------------------------------------------------

Frame handle(Backend& backend, const Frame& req) {
  try {
    const auto info = backend.hello();
    auto check_batch = [&](std::size_t n) {
      if (n > info.max_batch)
        fail(ErrorKind::RemotePredictor, "batch of " + std::to_string(n) + " exceeds max_batch");
    };
    auto check_context = [&](std::span<const Token> ctx) {
      for (Token t : ctx)
        if (t >= info.vocab_size) fail(ErrorKind::RemotePredictor, "context token >= V");
    };
    switch (req.opcode) {
      case Opcode::Hello: {
        auto r = reader(req.body);
        if (r.u8() != kProtocolVersion) fail(ErrorKind::RemotePredictor, "unsupported protocol version");
        return {Opcode::Hello, encode_hello(info)};
      }
      case Opcode::Tokenize:
        return {Opcode::Tokenize, encode_token_list(backend.tokenize(req.body).tokens)};
      case Opcode::Detokenize: {
        TokenSequence seq{decode_token_list(req.body), info.vocab_size};
        return {Opcode::Detokenize, backend.detokenize(seq)};
      }
      case Opcode::Ranks:
      case Opcode::TokensAt: {
        const auto items = decode_queries(req.body);
        check_batch(items.size());
        std::vector<std::uint32_t> out;
        out.reserve(items.size());
        for (const auto& q : items) {
          check_context(q.context);
          if (q.value >= info.vocab_size) fail(ErrorKind::RemotePredictor, "query value >= V");
          out.push_back(req.opcode == Opcode::Ranks ? backend.rank(q.context, q.value)
                                                    : backend.token_at(q.context, q.value));
        }
        return {req.opcode, encode_u32s(out)};
      }
      case Opcode::Dists: {
        const auto contexts = decode_contexts(req.body);
        check_batch(contexts.size());
        std::vector<Distribution> out;
        out.reserve(contexts.size());
        for (const auto& ctx : contexts) {
          check_context(ctx);
          out.push_back(backend.distribution(ctx));
        }
        return {Opcode::Dists, encode_dists(out)};
      }
      case Opcode::Memorize: {
        auto [corpus, epochs] = decode_memorize(req.body);
        return {Opcode::Memorize, encode_adapter(backend.memorize(corpus, epochs))};
      }
      case Opcode::LoadAdapter:
        backend.load_adapter(decode_adapter(req.body));
        return {Opcode::LoadAdapter, {}};
      case Opcode::Error:
        break;
    }
    fail(ErrorKind::RemotePredictor, "unexpected " + opcode_name(req.opcode) + " request");
  } catch (const std::exception& e) {
    return {Opcode::Error, encode_error(e.what())};
  }
}

void serve(Backend& backend, int read_fd, int write_fd) {
  Transport transport(read_fd, write_fd, std::chrono::hours(24));
  while (auto req = transport.receive_or_eof()) transport.send(handle(backend, *req));
}

// ---- backends ---------------------------------------------------------------

HelloInfo EchoBackend::hello() { return {256, "echo-bytes", "echo-1", max_batch_}; }

TokenSequence EchoBackend::tokenize(ByteView text) { return ByteTokenizer{}.encode(text); }

Bytes EchoBackend::detokenize(const TokenSequence& tokens) { return ByteTokenizer{}.decode(tokens); }

std::uint32_t EchoBackend::rank(std::span<const Token>, Token target) { return target; }

Token EchoBackend::token_at(std::span<const Token>, std::uint32_t rank) { return rank; }

Distribution EchoBackend::distribution(std::span<const Token>) {
  return {std::vector<std::uint32_t>(256, kQuantTotal / 256)};
}

Adapter EchoBackend::memorize(ByteView, std::uint32_t epochs) {
  return {"echo-identity", Bytes{static_cast<std::uint8_t>(epochs & 0xFF)}};
}

void EchoBackend::load_adapter(const Adapter&) {}

BuiltinBackend::BuiltinBackend(std::uint32_t order, std::uint32_t max_batch)
    : max_batch_(max_batch), state_(order, 256) {}

HelloInfo BuiltinBackend::hello() {
  return {256, "byte", "builtin-ctx" + std::to_string(state_.order()) + "/1", max_batch_};
}

TokenSequence BuiltinBackend::tokenize(ByteView text) { return ByteTokenizer{}.encode(text); }

Bytes BuiltinBackend::detokenize(const TokenSequence& tokens) { return ByteTokenizer{}.decode(tokens); }

std::uint32_t BuiltinBackend::rank(std::span<const Token> context, Token target) {
  return rank_of(state_, context, target);
}

Token BuiltinBackend::token_at(std::span<const Token> context, std::uint32_t rank) {
  return fzip::token_at(state_, context, rank);
}

Distribution BuiltinBackend::distribution(std::span<const Token> context) {
  return fzip::distribution(state_, context);
}

Adapter BuiltinBackend::memorize(ByteView corpus, std::uint32_t epochs) {
  // Zero epochs leaves the base model untouched.
  state_ = epochs == 0 ? ModelState(state_.order(), 256)
                       : fit(ByteTokenizer{}.encode(corpus), epochs, state_.order());
  Adapter a;
  a.blob = serialize(state_);
  const auto fp = fingerprint(state_);
  static constexpr char kHex[] = "0123456789abcdef";
  a.id = "ctx-";
  for (auto b : fp) {
    a.id += kHex[b >> 4];
    a.id += kHex[b & 15];
  }
  return a;
}

void BuiltinBackend::load_adapter(const Adapter& adapter) {
  auto state = deserialize_model(adapter.blob);
  if (state.order() != state_.order() || state.vocab_size() != 256)
    fail(ErrorKind::ModelMismatch, "adapter does not match this model");
  state_ = std::move(state);
}

}  // namespace fzip::protocol
