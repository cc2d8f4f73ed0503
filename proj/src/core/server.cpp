#include "server.hpp"

#include "error.hpp"
#include "log.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>
#include <variant>

namespace mstudio {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::size_t kMaxFrame = 16u << 20;

}  // namespace

class Session;

struct Server::Impl {
  Impl(Dispatcher d, ServerOptions o) : dispatcher(std::move(d)), options(std::move(o)) {}

  struct Open {
    std::shared_ptr<Session> session;
  };
  struct Closed {
    std::uint64_t id;
  };
  struct Frame {
    std::uint64_t id;
    std::string text;
  };
  using Command = std::variant<Open, Closed, Frame>;

  void post(Command c) {
    {
      std::lock_guard lk(mu);
      commands.push_back(std::move(c));
    }
    cv.notify_one();
  }

  tcp::acceptor listen(int port);
  void accept_ws();
  void accept_tcp();
  void sim_loop();
  void process(Command& c);
  void route(std::vector<Outgoing> out);

  Dispatcher dispatcher;
  ServerOptions options;

  asio::io_context ioc{1};
  std::optional<tcp::acceptor> ws_acceptor;
  std::optional<tcp::acceptor> tcp_acceptor;
  std::uint16_t ws_port = 0;
  std::uint16_t tcp_port = 0;
  std::atomic<std::uint64_t> next_session{1};

  std::mutex mu;
  std::condition_variable cv;
  std::condition_variable stopped_cv;
  std::deque<Command> commands;
  bool stopping = false;
  bool stopped = false;
  bool started = false;

  // Touched only by the simulation thread.
  std::map<std::uint64_t, std::shared_ptr<Session>> sessions;

  std::thread io_thread;
  std::thread sim_thread;
};

// Per-connection outgoing queue. Replies are delivered in order; snapshots
// keep only the newest pending one so a slow reader never stalls the sim.
class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(std::uint64_t id, Server::Impl& server) : id_(id), server_(server) {}
  virtual ~Session() = default;

  std::uint64_t id() const { return id_; }
  virtual void start() = 0;

  // Thread-safe.
  void deliver(protocol::Envelope env, bool snapshot) {
    asio::post(server_.ioc, [self = shared_from_this(), env = std::move(env), snapshot]() mutable {
      self->enqueue(std::move(env), snapshot);
    });
  }

 protected:
  virtual void write_frame(const std::string& text) = 0;

  void opened() { server_.post(Server::Impl::Open{shared_from_this()}); }

  void received(std::string text) { server_.post(Server::Impl::Frame{id_, std::move(text)}); }

  void written(beast::error_code ec) {
    if (ec) {
      closed();
      return;
    }
    writing_ = false;
    write_next();
  }

  void closed() {
    if (closed_) return;
    closed_ = true;
    server_.post(Server::Impl::Closed{id_});
  }

  bool is_closed() const { return closed_; }

 private:
  void enqueue(protocol::Envelope env, bool snapshot) {
    if (closed_) return;
    if (snapshot) {
      pending_snapshot_ = std::move(env);
    } else {
      queue_.push_back(std::move(env));
    }
    write_next();
  }

  void write_next() {
    if (writing_ || closed_) return;
    protocol::Envelope env;
    if (!queue_.empty()) {
      env = std::move(queue_.front());
      queue_.pop_front();
    } else if (pending_snapshot_) {
      env = std::move(*pending_snapshot_);
      pending_snapshot_.reset();
    } else {
      return;
    }
    env.seq = next_seq_++;
    writing_ = true;
    write_frame(protocol::encode(env));
  }

  std::uint64_t id_;
  Server::Impl& server_;
  std::deque<protocol::Envelope> queue_;
  std::optional<protocol::Envelope> pending_snapshot_;
  std::uint64_t next_seq_ = 1;
  bool writing_ = false;
  bool closed_ = false;
};

namespace {

class WsSession : public Session {
 public:
  WsSession(std::uint64_t id, Server::Impl& server, tcp::socket socket)
      : Session(id, server), ws_(std::move(socket)) {}

  void start() override {
    http::async_read(ws_.next_layer(), buffer_, request_,
                     [self = shared(), this](beast::error_code ec, std::size_t) { on_request(ec); });
  }

 protected:
  void write_frame(const std::string& text) override {
    out_ = text;
    ws_.text(true);
    ws_.async_write(asio::buffer(out_),
                    [self = shared(), this](beast::error_code ec, std::size_t) { written(ec); });
  }

 private:
  std::shared_ptr<WsSession> shared() { return std::static_pointer_cast<WsSession>(shared_from_this()); }

  void on_request(beast::error_code ec) {
    if (ec) return;
    if (!websocket::is_upgrade(request_) || request_.target() != "/ws") {
      auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found,
                                                                     request_.version());
      res->set(http::field::content_type, "text/plain");
      res->body() = "websocket endpoint is /ws\n";
      res->prepare_payload();
      res->keep_alive(false);
      http::async_write(ws_.next_layer(), *res, [self = shared(), res, this](beast::error_code, std::size_t) {
        beast::error_code ignored;
        ws_.next_layer().shutdown(tcp::socket::shutdown_both, ignored);
      });
      return;
    }
    ws_.read_message_max(kMaxFrame);
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request_, [self = shared(), this](beast::error_code ec) {
      if (ec) return;
      buffer_.clear();
      opened();
      read();
    });
  }

  void read() {
    ws_.async_read(buffer_, [self = shared(), this](beast::error_code ec, std::size_t) {
      if (ec) {
        closed();
        return;
      }
      received(beast::buffers_to_string(buffer_.data()));
      buffer_.consume(buffer_.size());
      read();
    });
  }

  websocket::stream<tcp::socket> ws_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::string out_;
};

class TcpSession : public Session {
 public:
  TcpSession(std::uint64_t id, Server::Impl& server, tcp::socket socket)
      : Session(id, server), socket_(std::move(socket)) {}

  void start() override {
    opened();
    read_header();
  }

 protected:
  void write_frame(const std::string& text) override {
    const auto n = static_cast<std::uint32_t>(text.size());
    out_.clear();
    out_.push_back(static_cast<char>((n >> 24) & 0xff));
    out_.push_back(static_cast<char>((n >> 16) & 0xff));
    out_.push_back(static_cast<char>((n >> 8) & 0xff));
    out_.push_back(static_cast<char>(n & 0xff));
    out_ += text;
    asio::async_write(socket_, asio::buffer(out_),
                      [self = shared(), this](beast::error_code ec, std::size_t) { written(ec); });
  }

 private:
  std::shared_ptr<TcpSession> shared() { return std::static_pointer_cast<TcpSession>(shared_from_this()); }

  void read_header() {
    asio::async_read(socket_, asio::buffer(header_), [self = shared(), this](beast::error_code ec, std::size_t) {
      if (ec) {
        closed();
        return;
      }
      const std::size_t n = (std::size_t{header_[0]} << 24) | (std::size_t{header_[1]} << 16) |
                            (std::size_t{header_[2]} << 8) | std::size_t{header_[3]};
      if (n > kMaxFrame) {
        log::warn("tcp session " + std::to_string(id()) + ": frame of " + std::to_string(n) +
                  " bytes exceeds limit; closing");
        beast::error_code ignored;
        socket_.close(ignored);
        closed();
        return;
      }
      body_.assign(n, '\0');
      read_body();
    });
  }

  void read_body() {
    asio::async_read(socket_, asio::buffer(body_), [self = shared(), this](beast::error_code ec, std::size_t) {
      if (ec) {
        closed();
        return;
      }
      received(std::move(body_));
      body_.clear();
      read_header();
    });
  }

  tcp::socket socket_;
  std::array<unsigned char, 4> header_{};
  std::string body_;
  std::string out_;
};

}  // namespace

tcp::acceptor Server::Impl::listen(int port) {
  if (port < 0 || port > 65535) throw Error(ErrorCode::InvalidArgument, "port out of range");
  beast::error_code ec;
  const auto address = asio::ip::make_address(options.address, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, "bad listen address '" + options.address + "'");
  const tcp::endpoint endpoint(address, static_cast<std::uint16_t>(port));
  tcp::acceptor acceptor(ioc);
  acceptor.open(endpoint.protocol(), ec);
  if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) acceptor.bind(endpoint, ec);
  if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw Error(ErrorCode::PortBusy,
                "cannot listen on " + options.address + ":" + std::to_string(port) + ": " + ec.message());
  }
  return acceptor;
}

void Server::Impl::accept_ws() {
  ws_acceptor->async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec == asio::error::operation_aborted) return;
    if (!ec) {
      socket.set_option(tcp::no_delay(true), ec);
      std::make_shared<WsSession>(next_session++, *this, std::move(socket))->start();
    }
    accept_ws();
  });
}

void Server::Impl::accept_tcp() {
  tcp_acceptor->async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec == asio::error::operation_aborted) return;
    if (!ec) {
      socket.set_option(tcp::no_delay(true), ec);
      std::make_shared<TcpSession>(next_session++, *this, std::move(socket))->start();
    }
    accept_tcp();
  });
}

void Server::Impl::route(std::vector<Outgoing> out) {
  for (auto& o : out) {
    const bool snapshot = std::holds_alternative<protocol::Snapshot>(o.message);
    protocol::Envelope env = protocol::to_envelope(o.message, 0, o.reply_to);
    if (o.session == kBroadcast) {
      for (auto& [id, s] : sessions) s->deliver(env, snapshot);
    } else if (auto it = sessions.find(o.session); it != sessions.end()) {
      it->second->deliver(std::move(env), snapshot);
    }
  }
}

void Server::Impl::process(Command& c) {
  if (auto* open = std::get_if<Open>(&c)) {
    sessions.emplace(open->session->id(), open->session);
    route(dispatcher.connect(open->session->id()));
  } else if (auto* closed = std::get_if<Closed>(&c)) {
    sessions.erase(closed->id);
    route(dispatcher.disconnect(closed->id));
  } else if (auto* frame = std::get_if<Frame>(&c)) {
    if (sessions.count(frame->id)) route(dispatcher.handle_frame(frame->id, frame->text));
  }
}

void Server::Impl::sim_loop() {
  const double dt = dispatcher.simulation().config().dt;
  const long per_snapshot = std::max(1L, std::lround(1.0 / (dispatcher.welcome(0).snapshot_rate * dt)));
  const auto step = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(dt));
  // Falling further behind than this (a fast-mode playback, a stall) resets
  // the pacing origin instead of bursting through the backlog.
  const auto max_lag = std::chrono::milliseconds(100);

  Clock::time_point origin = Clock::now();
  std::uint64_t k = 0;
  std::deque<Command> batch;
  while (true) {
    {
      std::unique_lock lk(mu);
      cv.wait_until(lk, origin + step * static_cast<long>(k + 1), [&] { return stopping || !commands.empty(); });
      if (stopping) break;
      batch.swap(commands);
    }
    for (auto& c : batch) process(c);
    batch.clear();

    const auto now = Clock::now();
    if (now - (origin + step * static_cast<long>(k)) > max_lag) origin = now - step * static_cast<long>(k);
    const auto due = static_cast<std::uint64_t>((now - origin) / step);
    while (k < due) {
      route(dispatcher.tick());
      ++k;
      if (k % static_cast<std::uint64_t>(per_snapshot) == 0 && !sessions.empty()) {
        route({{kBroadcast, dispatcher.snapshot(), std::nullopt}});
      }
    }
  }
  sessions.clear();
}

Server::Server(Dispatcher dispatcher, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(dispatcher), std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
  {
    std::lock_guard lk(impl_->mu);
    if (impl_->started) throw Error(ErrorCode::InvalidArgument, "server already started");
  }
  impl_->ws_acceptor.emplace(impl_->listen(impl_->options.ws_port));
  impl_->ws_port = impl_->ws_acceptor->local_endpoint().port();
  if (impl_->options.tcp_port >= 0) {
    impl_->tcp_acceptor.emplace(impl_->listen(impl_->options.tcp_port));
    impl_->tcp_port = impl_->tcp_acceptor->local_endpoint().port();
  }
  impl_->accept_ws();
  if (impl_->tcp_acceptor) impl_->accept_tcp();
  {
    std::lock_guard lk(impl_->mu);
    impl_->started = true;
  }
  impl_->sim_thread = std::thread([this] { impl_->sim_loop(); });
  impl_->io_thread = std::thread([this] {
    auto guard = asio::make_work_guard(impl_->ioc);
    impl_->ioc.run();
  });
  log::info("listening on ws://" + impl_->options.address + ":" + std::to_string(impl_->ws_port) + "/ws");
}

void Server::stop() {
  {
    std::lock_guard lk(impl_->mu);
    if (impl_->stopped) return;
    impl_->stopping = true;
    impl_->stopped = true;
  }
  impl_->cv.notify_all();
  impl_->stopped_cv.notify_all();
  if (impl_->sim_thread.joinable()) impl_->sim_thread.join();
  impl_->ioc.stop();
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
}

void Server::wait() {
  std::unique_lock lk(impl_->mu);
  impl_->stopped_cv.wait(lk, [&] { return impl_->stopped; });
}

std::uint16_t Server::ws_port() const { return impl_->ws_port; }
std::uint16_t Server::tcp_port() const { return impl_->tcp_port; }

}  // namespace mstudio
