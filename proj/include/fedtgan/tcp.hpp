#pragma once

// Length-prefixed frames over plain TCP. The federator listens; each client
// connects, announces itself with an Ack carrying its id, then answers
// requests until it receives Shutdown.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <thread>

#include "fedtgan/transport.hpp"

namespace fedtgan {

namespace detail {

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Socket& operator=(Socket&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    ~Socket() { reset(); }

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

inline std::string errno_text() { return std::strerror(errno); }

inline void send_all(int fd, const std::uint8_t* p, std::size_t n) {
    while (n > 0) {
        const auto k = ::send(fd, p, n, MSG_NOSIGNAL);
        if (k < 0 && errno == EINTR) continue;
        require(k > 0, ErrorKind::Io, "send failed: " + errno_text());
        p += k;
        n -= static_cast<std::size_t>(k);
    }
}

inline void recv_all(int fd, std::uint8_t* p, std::size_t n) {
    while (n > 0) {
        const auto k = ::recv(fd, p, n, 0);
        if (k < 0 && errno == EINTR) continue;
        require(k != 0, ErrorKind::Io, "connection closed by peer");
        require(k > 0, ErrorKind::Io, "recv failed: " + errno_text());
        p += k;
        n -= static_cast<std::size_t>(k);
    }
}

inline wire::Bytes read_frame(int fd) {
    wire::Bytes frame(wire::kLengthPrefix);
    recv_all(fd, frame.data(), wire::kLengthPrefix);
    std::uint32_t len;
    std::memcpy(&len, frame.data(), 4);
    require(len >= wire::kFrameHeader - wire::kLengthPrefix && len <= wire::kMaxFrame, ErrorKind::Protocol,
            "implausible frame length " + std::to_string(len));
    frame.resize(wire::kLengthPrefix + len);
    recv_all(fd, frame.data() + wire::kLengthPrefix, len);
    return frame;
}

inline void write_frame(int fd, const wire::Bytes& frame) { send_all(fd, frame.data(), frame.size()); }

inline void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

inline std::pair<std::string, std::uint16_t> split_address(const std::string& addr) {
    const auto colon = addr.rfind(':');
    require(colon != std::string::npos, ErrorKind::Config, "address '" + addr + "' is not host:port");
    const auto port = std::stoul(addr.substr(colon + 1));
    require(port <= 65535, ErrorKind::Config, "port out of range in '" + addr + "'");
    return {addr.substr(0, colon), static_cast<std::uint16_t>(port)};
}

}  // namespace detail

/// Listening socket bound to host:port (port 0 picks a free one).
class TcpListener {
public:
    explicit TcpListener(const std::string& address) {
        auto [host, port] = detail::split_address(address);
        sock_ = detail::Socket(::socket(AF_INET, SOCK_STREAM, 0));
        require(sock_.valid(), ErrorKind::Io, "socket: " + detail::errno_text());
        int one = 1;
        ::setsockopt(sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in sa{};
        sa.sin_family = AF_INET;
        sa.sin_port = htons(port);
        require(::inet_pton(AF_INET, host == "localhost" ? "127.0.0.1" : host.c_str(), &sa.sin_addr) == 1,
                ErrorKind::Config, "cannot parse IPv4 address '" + host + "'");
        require(::bind(sock_.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) == 0, ErrorKind::Io,
                "bind " + address + ": " + detail::errno_text());
        require(::listen(sock_.fd(), 64) == 0, ErrorKind::Io, "listen: " + detail::errno_text());
        socklen_t len = sizeof sa;
        ::getsockname(sock_.fd(), reinterpret_cast<sockaddr*>(&sa), &len);
        port_ = ntohs(sa.sin_port);
    }

    std::uint16_t port() const { return port_; }

    detail::Socket accept(std::chrono::milliseconds timeout) {
        pollfd p{sock_.fd(), POLLIN, 0};
        const int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
        require(r > 0, ErrorKind::Timeout, "no client connected within " + std::to_string(timeout.count()) + " ms");
        detail::Socket s(::accept(sock_.fd(), nullptr, nullptr));
        require(s.valid(), ErrorKind::Io, "accept: " + detail::errno_text());
        detail::set_nodelay(s.fd());
        return s;
    }

private:
    detail::Socket sock_;
    std::uint16_t port_ = 0;
};

/// Federator side of the TCP transport.
class TcpTransport : public Transport {
public:
    /// Accepts `clients` connections; each must open with Ack{client_id}.
    TcpTransport(TcpListener& listener, std::size_t clients, std::chrono::milliseconds timeout)
        : conns_(clients) {
        for (std::size_t k = 0; k < clients; ++k) {
            auto s = listener.accept(timeout);
            const auto hello = wire::decode(detail::read_frame(s.fd()));
            const auto& ack = wire::expect<wire::Ack>(hello, "connection handshake");
            require(ack.client_id < clients, ErrorKind::Protocol,
                    "client id " + std::to_string(ack.client_id) + " out of range");
            auto& slot = conns_[ack.client_id];
            require(!slot, ErrorKind::Protocol, "client id " + std::to_string(ack.client_id) + " connected twice");
            slot = std::make_unique<Connection>();
            slot->sock = std::move(s);
        }
    }

    std::size_t clients() const override { return conns_.size(); }

    std::future<wire::Bytes> call(std::size_t client, wire::Bytes request) override {
        require(client < conns_.size(), ErrorKind::InvalidArgument, "no client " + std::to_string(client));
        auto* c = conns_[client].get();
        return std::async(std::launch::async, [c, req = std::move(request)] {
            std::lock_guard lock(c->mu);
            detail::write_frame(c->sock.fd(), req);
            return detail::read_frame(c->sock.fd());
        });
    }

private:
    struct Connection {
        detail::Socket sock;
        std::mutex mu;
    };
    std::vector<std::unique_ptr<Connection>> conns_;
};

/// Client side: connect, announce, and serve requests until Shutdown.
inline void serve_client(const std::string& address, std::uint32_t client_id, Endpoint& endpoint,
                         std::chrono::milliseconds connect_timeout = std::chrono::seconds(30)) {
    auto [host, port] = detail::split_address(address);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    require(::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) == 0 && res, ErrorKind::Io,
            "cannot resolve '" + host + "'");
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, ::freeaddrinfo);

    detail::Socket s;
    const auto deadline = std::chrono::steady_clock::now() + connect_timeout;
    for (;;) {
        s = detail::Socket(::socket(AF_INET, SOCK_STREAM, 0));
        if (::connect(s.fd(), res->ai_addr, res->ai_addrlen) == 0) break;
        require(std::chrono::steady_clock::now() < deadline, ErrorKind::Timeout,
                "could not connect to " + address + ": " + detail::errno_text());
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    detail::set_nodelay(s.fd());
    detail::write_frame(s.fd(), wire::encode({0, wire::Ack{client_id}}));
    for (;;) {
        const auto request = detail::read_frame(s.fd());
        detail::write_frame(s.fd(), endpoint.handle(request));
        if (wire::frame_tag(request) == wire::Tag::Shutdown) return;
    }
}

}  // namespace fedtgan
