// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/proto/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

namespace rds::proto {

namespace {

struct LoopbackState {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::vector<std::uint8_t>> queue[2];
    bool closed[2] = {false, false};
};

class LoopbackEndpoint final : public Endpoint {
public:
    LoopbackEndpoint(std::shared_ptr<LoopbackState> s, int side, std::size_t max_frame)
        : state_(std::move(s)), side_(side), max_frame_(max_frame) {}
    ~LoopbackEndpoint() override { close(); }

    void send(std::vector<std::uint8_t> frame) override {
        if (frame.size() > max_frame_) throw TransportError("frame of " + std::to_string(frame.size()) + " bytes exceeds limit");
        {
            std::lock_guard lock(state_->mu);
            if (state_->closed[side_]) throw TransportError("send on closed endpoint");
            if (state_->closed[1 - side_]) throw TransportError("peer closed the connection");
            state_->queue[1 - side_].push_back(std::move(frame));
        }
        state_->cv.notify_all();
    }

    std::optional<std::vector<std::uint8_t>> receive() override {
        std::unique_lock lock(state_->mu);
        auto& q = state_->queue[side_];
        state_->cv.wait(lock, [&] { return !q.empty() || state_->closed[1 - side_] || state_->closed[side_]; });
        if (q.empty()) return std::nullopt;
        auto frame = std::move(q.front());
        q.pop_front();
        return frame;
    }

    void close() override {
        {
            std::lock_guard lock(state_->mu);
            state_->closed[side_] = true;
        }
        state_->cv.notify_all();
    }

private:
    std::shared_ptr<LoopbackState> state_;
    int side_;
    std::size_t max_frame_;
};

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

std::pair<std::string, std::string> split_address(const std::string& address) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos || colon + 1 == address.size()) {
        throw TransportError("address '" + address + "' is not host:port");
    }
    std::string host = address.substr(0, colon);
    if (host.empty()) host = "0.0.0.0";
    return {host, address.substr(colon + 1)};
}

addrinfo* resolve(const std::string& address, bool passive) {
    const auto [host, port] = split_address(address);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
        throw TransportError("cannot resolve '" + address + "': " + ::gai_strerror(rc));
    }
    return res;
}

void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

class StreamEndpoint final : public Endpoint {
public:
    StreamEndpoint(int fd, std::size_t max_frame) : fd_(fd), max_frame_(max_frame) { set_nodelay(fd_); }
    ~StreamEndpoint() override { close(); }

    void send(std::vector<std::uint8_t> frame) override {
        if (fd_ < 0) throw TransportError("send on closed endpoint");
        if (frame.size() > max_frame_) throw TransportError("frame of " + std::to_string(frame.size()) + " bytes exceeds limit");
        const auto n = static_cast<std::uint32_t>(frame.size());
        std::vector<std::uint8_t> buf(4 + frame.size());
        for (int i = 0; i < 4; ++i) buf[i] = static_cast<std::uint8_t>(n >> (8 * i));
        std::memcpy(buf.data() + 4, frame.data(), frame.size());
        std::size_t off = 0;
        while (off < buf.size()) {
            const ssize_t w = ::send(fd_, buf.data() + off, buf.size() - off, MSG_NOSIGNAL);
            if (w < 0) {
                if (errno == EINTR) continue;
                throw TransportError(errno_text("send"));
            }
            off += static_cast<std::size_t>(w);
        }
    }

    std::optional<std::vector<std::uint8_t>> receive() override {
        if (fd_ < 0) return std::nullopt;
        std::uint8_t len[4];
        const std::size_t got = read_fully(len, 4);
        if (got == 0) return std::nullopt;
        if (got < 4) throw TransportError("connection closed inside a length prefix");
        const std::size_t n = static_cast<std::size_t>(len[0]) | (static_cast<std::size_t>(len[1]) << 8) |
                              (static_cast<std::size_t>(len[2]) << 16) | (static_cast<std::size_t>(len[3]) << 24);
        if (n > max_frame_) throw TransportError("incoming frame of " + std::to_string(n) + " bytes exceeds limit");
        std::vector<std::uint8_t> frame(n);
        if (read_fully(frame.data(), n) != n) throw TransportError("connection closed inside a frame");
        return frame;
    }

    void close() override {
        if (fd_ >= 0) {
            ::shutdown(fd_, SHUT_RDWR);
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    std::size_t read_fully(std::uint8_t* dst, std::size_t n) {
        std::size_t off = 0;
        while (off < n) {
            const ssize_t r = ::recv(fd_, dst + off, n - off, 0);
            if (r == 0) break;
            if (r < 0) {
                if (errno == EINTR) continue;
                if (errno == ECONNRESET) break;
                throw TransportError(errno_text("recv"));
            }
            off += static_cast<std::size_t>(r);
        }
        return off;
    }

    int fd_;
    std::size_t max_frame_;
};

}  // namespace

std::pair<std::unique_ptr<Endpoint>, std::unique_ptr<Endpoint>> loopback_pair(std::size_t max_frame) {
    auto state = std::make_shared<LoopbackState>();
    return {std::make_unique<LoopbackEndpoint>(state, 0, max_frame),
            std::make_unique<LoopbackEndpoint>(state, 1, max_frame)};
}

StreamListener::StreamListener(const std::string& address, std::size_t max_frame) : max_frame_(max_frame) {
    host_ = split_address(address).first;
    addrinfo* res = resolve(address, true);
    fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd_ < 0) {
        ::freeaddrinfo(res);
        throw TransportError(errno_text("socket"));
    }
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd_, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd_, 64) != 0) {
        const std::string msg = errno_text(("bind " + address).c_str());
        ::freeaddrinfo(res);
        close();
        throw TransportError(msg);
    }
    ::freeaddrinfo(res);
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
}

StreamListener::~StreamListener() { close(); }

std::string StreamListener::address() const {
    return (host_ == "0.0.0.0" ? std::string("127.0.0.1") : host_) + ":" + std::to_string(port_);
}

std::unique_ptr<Endpoint> StreamListener::accept() {
    for (;;) {
        const int fd = ::accept(fd_, nullptr, nullptr);
        if (fd >= 0) return stream_endpoint(fd, max_frame_);
        if (errno != EINTR) throw TransportError(errno_text("accept"));
    }
}

void StreamListener::close() {
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
        ::close(fd_);
        fd_ = -1;
    }
}

std::unique_ptr<Endpoint> stream_connect(const std::string& address, std::size_t max_frame) {
    addrinfo* res = resolve(address, false);
    const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) {
        ::freeaddrinfo(res);
        throw TransportError(errno_text("socket"));
    }
    if (::connect(fd, res->ai_addr, res->ai_addrlen) != 0) {
        const std::string msg = errno_text(("connect " + address).c_str());
        ::freeaddrinfo(res);
        ::close(fd);
        throw TransportError(msg);
    }
    ::freeaddrinfo(res);
    return stream_endpoint(fd, max_frame);
}

std::unique_ptr<Endpoint> stream_endpoint(int fd, std::size_t max_frame) {
    return std::make_unique<StreamEndpoint>(fd, max_frame);
}

}  // namespace rds::proto
