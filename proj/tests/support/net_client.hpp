#pragma once

// Minimal protocol clients for tests. Each owns an io thread; received
// envelopes queue up for recv(), which waits with a timeout.

#include "protocol.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <array>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace testnet {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using namespace std::chrono_literals;

class Client {
 public:
  virtual ~Client() = default;

  std::uint64_t send(const mstudio::protocol::ClientMessage& m) {
    const std::uint64_t seq = next_seq_++;
    send_raw(mstudio::protocol::encode(mstudio::protocol::to_envelope(m, seq)));
    return seq;
  }

  void send_raw(std::string text) {
    asio::post(ioc_, [this, text = std::move(text)]() mutable {
      outbox_.push_back(std::move(text));
      if (outbox_.size() == 1) write_next();
    });
  }

  // Next received frame, decoded; nullopt on timeout or closed connection.
  std::optional<mstudio::protocol::Envelope> recv(std::chrono::milliseconds timeout = 2000ms) {
    std::unique_lock lk(mu_);
    if (!cv_.wait_for(lk, timeout, [&] { return !inbox_.empty() || closed_; })) return std::nullopt;
    if (inbox_.empty()) return std::nullopt;
    std::string text = std::move(inbox_.front());
    inbox_.pop_front();
    lk.unlock();
    return mstudio::protocol::decode(text);
  }

  // Skips frames until one of `type` arrives.
  std::optional<mstudio::protocol::Envelope> recv_type(const std::string& type,
                                                       std::chrono::milliseconds timeout = 5000ms) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left <= 0ms) return std::nullopt;
      auto env = recv(left);
      if (!env) return std::nullopt;
      if (env->type == type) return env;
    }
  }

  // Skips snapshots; returns the first reply to `seq`.
  std::optional<mstudio::protocol::Envelope> reply_to(std::uint64_t seq, std::chrono::milliseconds timeout = 5000ms) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left <= 0ms) return std::nullopt;
      auto env = recv(left);
      if (!env) return std::nullopt;
      if (env->reply_to == seq) return env;
    }
  }

  bool closed() {
    std::lock_guard lk(mu_);
    return closed_;
  }

 protected:
  void start_io() {
    read_next();
    thread_ = std::thread([this] { ioc_.run(); });
  }

  void stop_io() {
    asio::post(ioc_, [this] { shutdown(); });
    if (thread_.joinable()) thread_.join();
  }

  void deliver(std::string text) {
    {
      std::lock_guard lk(mu_);
      inbox_.push_back(std::move(text));
    }
    cv_.notify_all();
  }

  void mark_closed() {
    {
      std::lock_guard lk(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  void wrote(beast::error_code ec) {
    if (ec) return;
    outbox_.pop_front();
    if (!outbox_.empty()) write_next();
  }

  virtual void read_next() = 0;
  virtual void write_next() = 0;
  virtual void shutdown() = 0;

  asio::io_context ioc_;
  std::deque<std::string> outbox_;

 private:
  std::thread thread_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> inbox_;
  bool closed_ = false;
  std::uint64_t next_seq_ = 1;
};

class WsClient : public Client {
 public:
  explicit WsClient(std::uint16_t port, const std::string& target = "/ws") : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    beast::get_lowest_layer(ws_).connect(resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1:" + std::to_string(port), target);
    start_io();
  }
  ~WsClient() override { stop_io(); }

 protected:
  void read_next() override {
    ws_.async_read(buffer_, [this](beast::error_code ec, std::size_t) {
      if (ec) {
        mark_closed();
        return;
      }
      deliver(beast::buffers_to_string(buffer_.data()));
      buffer_.consume(buffer_.size());
      read_next();
    });
  }
  void write_next() override {
    ws_.text(true);
    ws_.async_write(asio::buffer(outbox_.front()), [this](beast::error_code ec, std::size_t) { wrote(ec); });
  }
  void shutdown() override {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
};

class TcpClient : public Client {
 public:
  explicit TcpClient(std::uint16_t port) : socket_(ioc_) {
    tcp::resolver resolver(ioc_);
    asio::connect(socket_, resolver.resolve("127.0.0.1", std::to_string(port)));
    start_io();
  }
  ~TcpClient() override { stop_io(); }

  // Frame with an explicit (possibly wrong) length header.
  static std::string frame(const std::string& body) {
    std::string out(4, '\0');
    const auto n = static_cast<std::uint32_t>(body.size());
    out[0] = static_cast<char>(n >> 24);
    out[1] = static_cast<char>(n >> 16);
    out[2] = static_cast<char>(n >> 8);
    out[3] = static_cast<char>(n);
    return out + body;
  }

 protected:
  void read_next() override {
    asio::async_read(socket_, asio::buffer(header_), [this](beast::error_code ec, std::size_t) {
      if (ec) {
        mark_closed();
        return;
      }
      const std::size_t n = (std::size_t(header_[0]) << 24) | (std::size_t(header_[1]) << 16) |
                            (std::size_t(header_[2]) << 8) | std::size_t(header_[3]);
      body_.assign(n, '\0');
      asio::async_read(socket_, asio::buffer(body_), [this](beast::error_code ec2, std::size_t) {
        if (ec2) {
          mark_closed();
          return;
        }
        deliver(std::move(body_));
        read_next();
      });
    });
  }
  void write_next() override {
    framed_ = frame(outbox_.front());
    asio::async_write(socket_, asio::buffer(framed_), [this](beast::error_code ec, std::size_t) { wrote(ec); });
  }
  void shutdown() override {
    beast::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
    socket_.close(ec);
  }

 private:
  tcp::socket socket_;
  std::array<unsigned char, 4> header_{};
  std::string body_;
  std::string framed_;
};

}  // namespace testnet
