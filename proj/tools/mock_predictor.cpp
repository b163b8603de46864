// Predictor service speaking the fzip wire protocol, for tests and for
// trying the ext: predictor path without a neural model.
//
//   fzip-mock-predictor [--backend echo|builtin] [--order K] [--max-batch N]
//                       [--listen unix:<path>]
//
// Without --listen it serves one session on stdin/stdout.

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <csignal>
#include <cstring>
#include <iostream>
#include <memory>
#include <thread>

#include "CLI11.hpp"
#include "fzip/protocol.hpp"

namespace {

std::unique_ptr<fzip::protocol::Backend> make_backend(const std::string& kind, std::uint32_t order,
                                                       std::uint32_t max_batch) {
  if (kind == "echo") return std::make_unique<fzip::protocol::EchoBackend>(max_batch);
  return std::make_unique<fzip::protocol::BuiltinBackend>(order, max_batch);
}

int listen_unix(const std::string& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() >= sizeof(addr.sun_path)) throw std::runtime_error("socket path too long");
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  ::unlink(path.c_str());
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd, 64) != 0)
    throw std::runtime_error(std::string("bind/listen: ") + std::strerror(errno));
  return fd;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fzip mock predictor service"};
  std::string backend = "builtin";
  std::uint32_t order = fzip::kDefaultOrder;
  std::uint32_t max_batch = 0;
  std::string listen;
  app.add_option("--backend", backend)->check(CLI::IsMember({"echo", "builtin"}));
  app.add_option("--order", order)->check(CLI::Range(0, 8));
  app.add_option("--max-batch", max_batch, "0 picks the backend default");
  app.add_option("--listen", listen, "unix:<path>");
  CLI11_PARSE(app, argc, argv);
  if (max_batch == 0) max_batch = backend == "echo" ? 64 : 256;
  std::signal(SIGPIPE, SIG_IGN);

  try {
    if (listen.empty()) {
      auto b = make_backend(backend, order, max_batch);
      fzip::protocol::serve(*b, STDIN_FILENO, STDOUT_FILENO);
      return 0;
    }
    if (!listen.starts_with("unix:")) {
      std::cerr << "error: only unix:<path> can be listened on\n";
      return 2;
    }
    const int lfd = listen_unix(listen.substr(5));
    while (true) {
      const int cfd = ::accept4(lfd, nullptr, nullptr, SOCK_CLOEXEC);
      if (cfd < 0) {
        if (errno == EINTR) continue;
        throw std::runtime_error(std::string("accept: ") + std::strerror(errno));
      }
      // One backend per connection: each session may load its own adapter.
      std::thread([=] {
        try {
          auto b = make_backend(backend, order, max_batch);
          fzip::protocol::serve(*b, cfd, cfd);
        } catch (const std::exception& e) {
          std::cerr << "session: " << e.what() << '\n';
        }
        ::close(cfd);
      }).detach();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
