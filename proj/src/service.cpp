#include "hri/service.hpp"

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/version.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <deque>
#include <fstream>
#include <thread>

namespace hri {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

std::string mime_type(const std::string& path)
{
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".html" || ext == ".htm")
        return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs")
        return "text/javascript";
    if (ext == ".css")
        return "text/css";
    if (ext == ".json" || ext == ".map")
        return "application/json";
    if (ext == ".svg")
        return "image/svg+xml";
    if (ext == ".png")
        return "image/png";
    if (ext == ".ico")
        return "image/x-icon";
    if (ext == ".woff2")
        return "font/woff2";
    return "application/octet-stream";
}

/// Maps a request target onto the static root; none for anything escaping it.
std::optional<std::filesystem::path> resolve_static(const std::filesystem::path& root, std::string target)
{
    if (root.empty())
        return std::nullopt;
    if (auto q = target.find_first_of("?#"); q != std::string::npos)
        target.resize(q);
    if (target.empty() || target.front() != '/' || target.find("..") != std::string::npos ||
        target.find('\\') != std::string::npos)
        return std::nullopt;
    if (target.back() == '/')
        target += "index.html";
    return root / target.substr(1);
}

struct Shared {
    ServiceConfig config;
    std::atomic<std::uint64_t> next_id{0};
};

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket&& socket, std::shared_ptr<Shared> shared)
        : ws_(std::move(socket)), timer_(ws_.get_executor()), shared_(std::move(shared)),
          endpoint_(shared_->config, "svc-" + std::to_string(++shared_->next_id),
                    [this](const Json& ev) { enqueue(ev.dump()); })
    {
    }

    void run(http::request<http::string_body> req)
    {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
    }

private:
    Millis elapsed() const
    {
        return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - opened_)
            .count();
    }

    void on_accept(beast::error_code ec)
    {
        if (ec)
            return;
        opened_ = std::chrono::steady_clock::now();
        if (!shared_->config.virtual_time)
            arm_timer();
        do_read();
    }

    void arm_timer()
    {
        timer_.expires_after(std::chrono::milliseconds(shared_->config.tick_ms));
        timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
            if (ec || self->closing_)
                return;
            self->endpoint_.tick(self->elapsed());
            self->arm_timer();
        });
    }

    void do_read()
    {
        ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t)
    {
        if (ec) {
            closing_ = true;
            timer_.cancel();
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        endpoint_.handle(text, elapsed());
        do_read();
    }

    void enqueue(std::string text)
    {
        outbox_.push_back(std::move(text));
        if (outbox_.size() == 1)
            do_write();
    }

    void do_write()
    {
        ws_.text(true);
        ws_.async_write(net::buffer(outbox_.front()),
                        beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t)
    {
        if (ec) {
            closing_ = true;
            timer_.cancel();
            outbox_.clear();
            return;
        }
        outbox_.pop_front();
        if (!outbox_.empty())
            do_write();
    }

    websocket::stream<beast::tcp_stream> ws_;
    net::steady_timer timer_;
    beast::flat_buffer buffer_;
    std::shared_ptr<Shared> shared_;
    SessionEndpoint endpoint_;
    std::deque<std::string> outbox_;
    std::chrono::steady_clock::time_point opened_;
    bool closing_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, std::shared_ptr<Shared> shared)
        : stream_(std::move(socket)), shared_(std::move(shared))
    {
    }

    void run()
    {
        net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
    }

private:
    void do_read()
    {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t)
    {
        if (ec)
            return;
        if (websocket::is_upgrade(req_)) {
            if (std::string(req_.target()) == "/session") {
                stream_.expires_never();
                std::make_shared<WsSession>(stream_.release_socket(), shared_)->run(std::move(req_));
                return;
            }
            return send(simple(http::status::not_found, "no websocket endpoint here\n"));
        }
        send(handle_static());
    }

    http::response<http::string_body> simple(http::status status, const std::string& text)
    {
        http::response<http::string_body> res{status, req_.version()};
        res.set(http::field::server, "hri-sim");
        res.set(http::field::content_type, "text/plain");
        res.keep_alive(req_.keep_alive());
        res.body() = text;
        res.prepare_payload();
        return res;
    }

    http::response<http::string_body> handle_static()
    {
        if (req_.method() != http::verb::get && req_.method() != http::verb::head)
            return simple(http::status::method_not_allowed, "method not allowed\n");
        const auto path = resolve_static(shared_->config.static_dir, std::string(req_.target()));
        if (!path)
            return simple(http::status::not_found, "not found\n");
        std::ifstream f(*path, std::ios::binary);
        if (!f || std::filesystem::is_directory(*path))
            return simple(http::status::not_found, "not found\n");
        std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        http::response<http::string_body> res{http::status::ok, req_.version()};
        res.set(http::field::server, "hri-sim");
        res.set(http::field::content_type, mime_type(path->string()));
        res.keep_alive(req_.keep_alive());
        if (req_.method() == http::verb::get)
            res.body() = std::move(content);
        else
            res.content_length(content.size());
        if (req_.method() == http::verb::get)
            res.prepare_payload();
        return res;
    }

    void send(http::response<http::string_body> res)
    {
        auto sp = std::make_shared<http::response<http::string_body>>(std::move(res));
        http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
            if (ec)
                return;
            if (sp->need_eof()) {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                return;
            }
            self->do_read();
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    std::shared_ptr<Shared> shared_;
};

} // namespace

struct Service::Impl {
    std::shared_ptr<Shared> shared = std::make_shared<Shared>();
    net::io_context ioc;
    tcp::acceptor acceptor{ioc};
    std::vector<std::thread> threads;

    void do_accept()
    {
        acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec == net::error::operation_aborted)
                return;
            if (!ec)
                std::make_shared<HttpSession>(std::move(socket), shared)->run();
            do_accept();
        });
    }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>())
{
    impl_->shared->config = std::move(config);
}

Service::~Service()
{
    stop();
}

unsigned short Service::listen(const std::string& address, unsigned short port)
{
    beast::error_code ec;
    const auto addr = net::ip::make_address(address, ec);
    if (ec)
        throw Error("invalid bind address '" + address + "'");
    const tcp::endpoint ep{addr, port};
    auto& a = impl_->acceptor;
    a.open(ep.protocol(), ec);
    if (!ec)
        a.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec)
        a.bind(ep, ec);
    if (!ec)
        a.listen(net::socket_base::max_listen_connections, ec);
    if (ec)
        throw Error("cannot bind " + address + ":" + std::to_string(port) + ": " + ec.message());
    impl_->do_accept();
    return a.local_endpoint().port();
}

void Service::run()
{
    const unsigned n = std::max(1u, impl_->shared->config.threads);
    for (unsigned i = 1; i < n; ++i)
        impl_->threads.emplace_back([this] { impl_->ioc.run(); });
    impl_->ioc.run();
}

void Service::start_background()
{
    const unsigned n = std::max(1u, impl_->shared->config.threads);
    for (unsigned i = 0; i < n; ++i)
        impl_->threads.emplace_back([this] { impl_->ioc.run(); });
}

void Service::stop()
{
    if (!impl_)
        return;
    impl_->ioc.stop();
    for (auto& t : impl_->threads)
        if (t.joinable() && t.get_id() != std::this_thread::get_id())
            t.join();
    impl_->threads.clear();
}

} // namespace hri
