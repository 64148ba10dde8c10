#include "rcm/host.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <thread>
#include <variant>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "rcm/modbus.hpp"

namespace rcm {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

using Reply = std::function<void(const std::string&)>;
using Message = std::shared_ptr<const std::string>;

constexpr std::size_t kMaxLine = 64 * 1024;
constexpr std::size_t kCommandQueueLimit = 4096;  // outbound acks per command connection

struct RegisterWrite {
    std::uint16_t addr = 0;
    std::vector<std::uint16_t> values;
};

struct Inbound {
    std::variant<CommandMessage, json, RegisterWrite> item;
    Reply reply;
};

json decode_reject(const DecodeError& e) {
    json j = {{"seq", nullptr}, {"status", "rejected"}, {"reason", reason_name(RejectReason::BadArgument)}};
    if (e.seq()) j["seq"] = *e.seq();
    j["detail"] = e.what();
    return j;
}

// Serialized outbound writer shared by line and WebSocket sessions. Runs on the session strand.
class Outbox {
public:
    explicit Outbox(std::size_t limit) : limit_(limit) {}
    // False when the queue is full and the peer should be dropped.
    bool push(Message m) {
        if (queue_.size() >= limit_) return false;
        queue_.push_back(std::move(m));
        return true;
    }
    bool idle() const { return !writing_; }
    Message front() const { return queue_.front(); }
    bool empty() const { return queue_.empty(); }
    void begin() { writing_ = true; }
    void done() {
        queue_.pop_front();
        writing_ = false;
    }

private:
    std::size_t limit_;
    std::deque<Message> queue_;
    bool writing_ = false;
};

}  // namespace

struct ServiceHost::Impl {
    explicit Impl(AppConfig cfg, std::optional<std::string> record)
        : config(std::move(cfg)),
          service(config.service),
          record_path(std::move(record)),
          command_acceptor(io),
          http_acceptor(io),
          modbus_acceptor(io) {
        publish(service.latest());
    }

    AppConfig config;
    ControlService service;  // touched only by the loop thread once started
    std::optional<std::string> record_path;
    std::ofstream record;

    asio::io_context io;
    std::optional<asio::executor_work_guard<asio::io_context::executor_type>> work;
    tcp::acceptor command_acceptor;
    tcp::acceptor http_acceptor;
    tcp::acceptor modbus_acceptor;
    std::vector<std::thread> io_threads;
    std::thread loop_thread;
    std::atomic<bool> running{false};

    std::mutex queue_mutex;
    std::deque<Inbound> queue;

    mutable std::mutex publish_mutex;
    std::shared_ptr<const Published> latest;

    class WsSession;
    std::mutex subscriber_mutex;
    std::vector<std::weak_ptr<WsSession>> subscribers;

    void publish(const TelemetryFrame& frame) {
        auto p = std::make_shared<Published>();
        p->registers = service.registers();
        p->frame = frame;
        p->frame_json = encode_frame(frame).dump();
        std::lock_guard lock(publish_mutex);
        latest = std::move(p);
    }

    std::shared_ptr<const Published> snapshot() const {
        std::lock_guard lock(publish_mutex);
        return latest;
    }

    void enqueue(Inbound in) {
        std::lock_guard lock(queue_mutex);
        queue.push_back(std::move(in));
    }

    void ingest(const std::string& text, Reply reply) {
        Inbound in;
        in.reply = std::move(reply);
        try {
            in.item = decode_command(text);
        } catch (const DecodeError& e) {
            in.item = decode_reject(e);
        }
        enqueue(std::move(in));
    }

    void log_entry(const LogEntry& e) {
        if (!record.is_open()) return;
        record << encode_log_entry(e).dump() << '\n';
        record.flush();
    }

    void apply(Inbound& in) {
        const std::uint64_t tick = service.latest().tick;
        if (auto* m = std::get_if<CommandMessage>(&in.item)) {
            log_entry({tick, *m, 0, {}});
            const Ack ack = service.handle_command(*m);
            json out = encode_ack(ack);
            if (ack.accepted && std::holds_alternative<cmd::Query>(m->command)) {
                out["frame"] = encode_frame(service.latest());
            }
            if (in.reply) in.reply(out.dump());
        } else if (auto* j = std::get_if<json>(&in.item)) {
            if (in.reply) in.reply(j->dump());
        } else {
            auto& w = std::get<RegisterWrite>(in.item);
            log_entry({tick, std::nullopt, w.addr, w.values});
            (void)service.write_registers(w.addr, w.values);
        }
    }

    void broadcast(const Message& m);

    void loop() {
        using clock = std::chrono::steady_clock;
        const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(config.service.plant.dt));
        auto next = clock::now();
        while (running.load()) {
            std::deque<Inbound> batch;
            {
                std::lock_guard lock(queue_mutex);
                batch.swap(queue);
            }
            for (auto& in : batch) apply(in);
            const TelemetryFrame& frame = service.step();
            publish(frame);
            if (frame.tick % config.host.telemetry_decimation == 0) broadcast(std::make_shared<const std::string>(snapshot()->frame_json));
            if (config.host.realtime) {
                next += period;
                const auto now = clock::now();
                if (next < now - std::chrono::seconds(1)) next = now;  // fell far behind; do not burst
                std::this_thread::sleep_until(next);
            }
        }
    }

    // Line-delimited JSON command connection.
    class LineSession : public std::enable_shared_from_this<LineSession> {
    public:
        LineSession(Impl& host, tcp::socket socket) : host_(host), socket_(std::move(socket)), in_(kMaxLine), out_(kCommandQueueLimit) {}

        void start() { read(); }

        void send(std::string line) {
            line.push_back('\n');
            auto msg = std::make_shared<const std::string>(std::move(line));
            asio::post(socket_.get_executor(), [self = shared_from_this(), msg] {
                if (!self->out_.push(msg)) {
                    self->close();
                    return;
                }
                self->flush();
            });
        }

    private:
        void read() {
            asio::async_read_until(socket_, in_, '\n', [self = shared_from_this()](beast::error_code ec, std::size_t n) {
                if (ec) {
                    self->close();
                    return;
                }
                std::string line(asio::buffers_begin(self->in_.data()), asio::buffers_begin(self->in_.data()) + n - 1);
                self->in_.consume(n);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.find_first_not_of(" \t") != std::string::npos) {
                    std::weak_ptr<LineSession> weak = self;
                    self->host_.ingest(line, [weak](const std::string& ack) {
                        if (auto s = weak.lock()) s->send(ack);
                    });
                }
                self->read();
            });
        }

        void flush() {
            if (!out_.idle() || out_.empty()) return;
            out_.begin();
            Message m = out_.front();
            asio::async_write(socket_, asio::buffer(*m), [self = shared_from_this(), m](beast::error_code ec, std::size_t) {
                self->out_.done();
                if (ec) {
                    self->close();
                    return;
                }
                self->flush();
            });
        }

        void close() {
            beast::error_code ignored;
            socket_.shutdown(tcp::socket::shutdown_both, ignored);
            socket_.close(ignored);
        }

        Impl& host_;
        tcp::socket socket_;
        asio::streambuf in_;
        Outbox out_;
    };

    // WebSocket: /telemetry streams frames, /command carries the same JSON as the TCP channel.
    class WsSession : public std::enable_shared_from_this<WsSession> {
    public:
        WsSession(Impl& host, beast::tcp_stream stream, bool commands, std::size_t limit)
            : host_(host), ws_(std::move(stream)), commands_(commands), out_(limit) {}

        void start(http::request<http::string_body> req) {
            beast::get_lowest_layer(ws_).expires_never();
            ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
            ws_.text(true);
            ws_.read_message_max(kMaxLine);
            ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
                if (ec) return;
                self->open_ = true;
                if (!self->commands_) {
                    std::lock_guard lock(self->host_.subscriber_mutex);
                    self->host_.subscribers.push_back(self);
                }
                self->read();
            });
        }

        void push(Message m) {
            asio::post(ws_.get_executor(), [self = shared_from_this(), m] {
                if (!self->open_) return;
                if (!self->out_.push(m)) {
                    // Slow consumer: drop the connection rather than skip or reorder frames.
                    self->drop();
                    return;
                }
                self->flush();
            });
        }

    private:
        void read() {
            ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
                if (ec) {
                    self->open_ = false;
                    return;
                }
                if (self->commands_) {
                    const std::string text = beast::buffers_to_string(self->buffer_.data());
                    std::weak_ptr<WsSession> weak = self;
                    self->host_.ingest(text, [weak](const std::string& ack) {
                        if (auto s = weak.lock()) s->push(std::make_shared<const std::string>(ack));
                    });
                }
                self->buffer_.consume(self->buffer_.size());
                self->read();
            });
        }

        void flush() {
            if (!out_.idle() || out_.empty() || !open_) return;
            out_.begin();
            Message m = out_.front();
            ws_.async_write(asio::buffer(*m), [self = shared_from_this(), m](beast::error_code ec, std::size_t) {
                self->out_.done();
                if (ec) {
                    self->open_ = false;
                    return;
                }
                self->flush();
            });
        }

        void drop() {
            open_ = false;
            beast::get_lowest_layer(ws_).close();
        }

        Impl& host_;
        websocket::stream<beast::tcp_stream> ws_;
        bool commands_;
        bool open_ = false;
        beast::flat_buffer buffer_;
        Outbox out_;
    };

    class HttpSession : public std::enable_shared_from_this<HttpSession> {
    public:
        HttpSession(Impl& host, tcp::socket socket) : host_(host), stream_(std::move(socket)) {}

        void start() { read(); }

    private:
        void read() {
            req_ = {};
            stream_.expires_after(std::chrono::seconds(30));
            http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
                if (ec) {
                    beast::error_code ignored;
                    self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                    return;
                }
                self->dispatch();
            });
        }

        void dispatch() {
            const std::string target(req_.target());
            if (websocket::is_upgrade(req_)) {
                if (target == "/telemetry" || target == "/command") {
                    const bool commands = target == "/command";
                    const std::size_t limit = commands ? kCommandQueueLimit : host_.config.host.subscriber_queue;
                    std::make_shared<WsSession>(host_, std::move(stream_), commands, limit)->start(std::move(req_));
                    return;
                }
                respond(http::status::not_found, R"({"error":"unknown endpoint"})");
                return;
            }
            if (req_.method() != http::verb::get) {
                respond(http::status::method_not_allowed, R"({"error":"only GET is supported"})");
            } else if (target == "/state") {
                respond(http::status::ok, host_.snapshot()->frame_json);
            } else if (target == "/config") {
                respond(http::status::ok, encode_geometry(host_.config.service.plant.geometry).dump());
            } else {
                respond(http::status::not_found, R"({"error":"unknown endpoint"})");
            }
        }

        void respond(http::status status, std::string body) {
            auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
            res->set(http::field::content_type, "application/json");
            res->keep_alive(req_.keep_alive());
            res->body() = std::move(body);
            res->prepare_payload();
            http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                if (ec) return;
                if (!res->keep_alive()) {
                    beast::error_code ignored;
                    self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                    return;
                }
                self->read();
            });
        }

        Impl& host_;
        beast::tcp_stream stream_;
        beast::flat_buffer buffer_;
        http::request<http::string_body> req_;
    };

    class ModbusSession : public std::enable_shared_from_this<ModbusSession> {
    public:
        ModbusSession(Impl& host, tcp::socket socket) : host_(host), socket_(std::move(socket)) {}

        void start() { read_header(); }

    private:
        void read_header() {
            asio::async_read(socket_, asio::buffer(frame_.data(), modbus::kHeaderSize),
                             [self = shared_from_this()](beast::error_code ec, std::size_t) {
                                 if (ec) return;
                                 const auto h = modbus::parse_header(std::span(self->frame_.data(), modbus::kHeaderSize));
                                 if (!h) {
                                     beast::error_code ignored;
                                     self->socket_.close(ignored);
                                     return;
                                 }
                                 self->read_body(h->length - 1u);
                             });
        }

        void read_body(std::size_t n) {
            asio::async_read(socket_, asio::buffer(frame_.data() + modbus::kHeaderSize, n),
                             [self = shared_from_this(), n](beast::error_code ec, std::size_t) {
                                 if (ec) return;
                                 self->serve(modbus::kHeaderSize + n);
                             });
        }

        void serve(std::size_t size) {
            // Every read is served from one published snapshot, so 32-bit pairs never tear.
            modbus::Backend backend{
                [this](std::uint16_t a, std::uint16_t n, std::vector<std::uint16_t>& out) {
                    return host_.snapshot()->registers.read(a, n, out);
                },
                [this](std::uint16_t a, std::span<const std::uint16_t> v) -> std::optional<RegisterException> {
                    if (auto err = RegisterMap{}.check_write(a, v)) return err;
                    host_.enqueue({RegisterWrite{a, {v.begin(), v.end()}}, {}});
                    return std::nullopt;
                }};
            response_ = modbus::handle_adu(std::span(frame_.data(), size), backend);
            asio::async_write(socket_, asio::buffer(response_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
                if (ec) return;
                self->read_header();
            });
        }

        Impl& host_;
        tcp::socket socket_;
        std::array<std::uint8_t, 7 + 254> frame_{};
        std::vector<std::uint8_t> response_;
    };

    template <typename Session>
    void accept(tcp::acceptor& acceptor) {
        acceptor.async_accept(asio::make_strand(io), [this, &acceptor](beast::error_code ec, tcp::socket socket) {
            if (ec) return;  // acceptor closed
            socket.set_option(tcp::no_delay(true));
            std::make_shared<Session>(*this, std::move(socket))->start();
            accept<Session>(acceptor);
        });
    }

    void listen(tcp::acceptor& acceptor, std::uint16_t port) {
        const tcp::endpoint ep(asio::ip::make_address(config.host.bind), port);
        acceptor.open(ep.protocol());
        acceptor.set_option(asio::socket_base::reuse_address(true));
        acceptor.bind(ep);
        acceptor.listen(asio::socket_base::max_listen_connections);
    }
};

void ServiceHost::Impl::broadcast(const Message& m) {
    std::lock_guard lock(subscriber_mutex);
    std::erase_if(subscribers, [&](const std::weak_ptr<WsSession>& w) {
        auto s = w.lock();
        if (!s) return true;
        s->push(m);
        return false;
    });
}

ServiceHost::ServiceHost(AppConfig config, std::optional<std::string> record_path)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(record_path))) {}

ServiceHost::~ServiceHost() { stop(); }

void ServiceHost::start() {
    Impl& h = *impl_;
    if (h.running.exchange(true)) return;
    if (h.record_path) {
        h.record.open(*h.record_path, std::ios::out | std::ios::trunc);
        if (!h.record) {
            h.running = false;
            throw std::runtime_error("cannot open command log '" + *h.record_path + "'");
        }
    }
    try {
        h.listen(h.command_acceptor, h.config.host.command_port);
        h.listen(h.http_acceptor, h.config.host.http_port);
        h.listen(h.modbus_acceptor, h.config.host.modbus_port);
    } catch (const boost::system::system_error& e) {
        h.running = false;
        throw std::runtime_error(std::string("cannot listen: ") + e.what());
    }
    h.accept<Impl::LineSession>(h.command_acceptor);
    h.accept<Impl::HttpSession>(h.http_acceptor);
    h.accept<Impl::ModbusSession>(h.modbus_acceptor);
    h.work.emplace(h.io.get_executor());
    for (int i = 0; i < 2; ++i) h.io_threads.emplace_back([&h] { h.io.run(); });
    h.loop_thread = std::thread([&h] { h.loop(); });
}

void ServiceHost::stop() {
    Impl& h = *impl_;
    if (!h.running.exchange(false)) return;
    if (h.loop_thread.joinable()) h.loop_thread.join();
    asio::post(h.io, [&h] {
        beast::error_code ignored;
        h.command_acceptor.close(ignored);
        h.http_acceptor.close(ignored);
        h.modbus_acceptor.close(ignored);
    });
    h.work.reset();
    h.io.stop();
    for (auto& t : h.io_threads) t.join();
    h.io_threads.clear();
    if (h.record.is_open()) h.record.close();
}

std::uint16_t ServiceHost::command_port() const { return impl_->command_acceptor.local_endpoint().port(); }
std::uint16_t ServiceHost::http_port() const { return impl_->http_acceptor.local_endpoint().port(); }
std::uint16_t ServiceHost::modbus_port() const { return impl_->modbus_acceptor.local_endpoint().port(); }

std::future<std::string> ServiceHost::submit(const std::string& command_json) {
    auto promise = std::make_shared<std::promise<std::string>>();
    auto future = promise->get_future();
    impl_->ingest(command_json, [promise](const std::string& ack) { promise->set_value(ack); });
    return future;
}

std::shared_ptr<const Published> ServiceHost::published() const { return impl_->snapshot(); }

}  // namespace rcm
