#include "neurotouch/demo_server.hpp"

#include <atomic>
#include <csignal>
#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <chrono>
#include <deque>
#include <optional>
#include <thread>
#include <vector>

namespace neurotouch::demo {

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

constexpr int kMaxCatchUpBatches = 10;
constexpr std::size_t kDecimateAbove = 2;  // queued messages before snapshots are dropped

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket&& socket, const DemoConfig& config)
      : stream_(std::move(socket)), timer_(stream_.get_executor()), config_(config) {}

  void start() {
    net::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->read_request(); });
  }

 private:
  void read_request() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
  }

  void on_request(beast::error_code ec) {
    if (ec) return;
    if (websocket::is_upgrade(request_)) {
      stream_.expires_never();
      ws_.emplace(std::move(stream_));
      ws_->set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
      ws_->async_accept(request_, [self = shared_from_this()](beast::error_code e) {
        if (e) return;
        self->ws_->text(true);
        self->read();
      });
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>(http::status::ok, request_.version());
    res->set(http::field::content_type, "text/plain");
    res->body() = "neurotouch demo server, WebSocket protocol version " + std::to_string(kProtocolVersion) + "\n";
    res->keep_alive(false);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  void read() {
    ws_->async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t n) { self->on_read(ec, n); });
  }

  void on_read(beast::error_code ec, std::size_t n) {
    if (ec) {
      closing_ = true;
      timer_.cancel();
      return;
    }
    const std::string payload = beast::buffers_to_string(buffer_.data());
    buffer_.consume(n);
    if (closing_) return;
    try {
      const ClientMessage msg = decode_client_message(payload);
      if (!session_) {
        const auto* hello = std::get_if<Hello>(&msg);
        if (!hello) throw ProtocolError(ErrorCode::HandshakeRequired, "first message must be hello");
        if (hello->version != kProtocolVersion) {
          throw ProtocolError(ErrorCode::VersionMismatch,
                              "server speaks version " + std::to_string(kProtocolVersion));
        }
        session_.emplace(config_);
        send(encode_server_hello(session_->hello()));
        window_ = std::chrono::microseconds(config_.pipeline.batch_window_us);
        next_tick_ = Clock::now() + window_;
        schedule();
      } else if (const auto* f = std::get_if<FingerInput>(&msg)) {
        session_->submit(*f, session_->now_us());
      } else if (std::holds_alternative<Bye>(msg)) {
        close(websocket::close_code::normal, "bye");
        return;
      } else {
        throw ProtocolError(ErrorCode::BadMessage, "duplicate hello");
      }
    } catch (const ProtocolError& e) {
      fail(e.code(), e.what());
      return;
    }
    read();
  }

  void schedule() {
    timer_.expires_at(next_tick_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->on_tick();
    });
  }

  void on_tick() {
    if (closing_) return;
    int n = 0;
    while (Clock::now() >= next_tick_ && n < kMaxCatchUpBatches) {
      session_->set_marker_stride(queue_.size() > kDecimateAbove ? 0 : config_.marker_stride);
      send(encode_push(session_->advance()));
      next_tick_ += window_;
      ++n;
    }
    if (Clock::now() >= next_tick_) next_tick_ = Clock::now() + window_;  // fell behind: session time slips
    if (queue_.size() > config_.max_backlog) {
      fail(ErrorCode::ClientTooSlow, "detection backlog exceeded");
      return;
    }
    schedule();
  }

  void send(std::string msg) {
    queue_.push_back(std::move(msg));
    if (queue_.size() == 1) write_next();
  }

  void write_next() {
    ws_->async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closing_ = true;
        self->timer_.cancel();
        return;
      }
      self->queue_.pop_front();
      if (!self->queue_.empty()) {
        self->write_next();
      } else if (self->close_reason_) {
        self->ws_->async_close(*self->close_reason_, [self](beast::error_code) {});
      }
    });
  }

  void close(websocket::close_code code, const std::string& why) {
    closing_ = true;
    timer_.cancel();
    close_reason_ = websocket::close_reason(code, why);
    if (queue_.empty()) ws_->async_close(*close_reason_, [self = shared_from_this()](beast::error_code) {});
  }

  void fail(ErrorCode code, const std::string& why) {
    closing_ = true;
    timer_.cancel();
    close_reason_ = websocket::close_reason(static_cast<websocket::close_code>(code), why.substr(0, 120));
    send(encode_error(code, why));
  }

  beast::tcp_stream stream_;
  std::optional<websocket::stream<beast::tcp_stream>> ws_;
  net::steady_timer timer_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  const DemoConfig& config_;
  std::optional<DemoSession> session_;
  std::deque<std::string> queue_;
  std::optional<websocket::close_reason> close_reason_;
  bool closing_ = false;
  Clock::duration window_{};
  Clock::time_point next_tick_{};
};

}  // namespace

struct DemoServer::Impl {
  ServerOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::atomic<std::size_t> started{0};

  explicit Impl(ServerOptions o)
      : options(std::move(o)), ioc(std::max(1, options.threads)), acceptor(net::make_strand(ioc)) {
    options.demo.validate();
    const tcp::endpoint ep(net::ip::make_address(options.bind_address), options.port);
    acceptor.open(ep.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen(net::socket_base::max_listen_connections);
  }

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == net::error::operation_aborted) return;
      } else {
        ++started;
        std::make_shared<Connection>(std::move(socket), options.demo)->start();
      }
      accept();
    });
  }
};

DemoServer::DemoServer(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

DemoServer::~DemoServer() { stop(); }

std::uint16_t DemoServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void DemoServer::run() {
  impl_->accept();
  std::optional<net::signal_set> signals;
  if (impl_->options.handle_signals) {
    signals.emplace(impl_->ioc, SIGINT, SIGTERM);
    signals->async_wait([this](beast::error_code, int) { impl_->ioc.stop(); });
  }
  std::vector<std::thread> extra;
  for (int i = 1; i < impl_->options.threads; ++i) extra.emplace_back([this] { impl_->ioc.run(); });
  impl_->ioc.run();
  for (auto& t : extra) t.join();
}

void DemoServer::stop() { impl_->ioc.stop(); }

std::size_t DemoServer::sessions_started() const { return impl_->started.load(); }

}  // namespace neurotouch::demo
