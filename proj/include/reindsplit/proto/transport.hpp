// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "reindsplit/proto/codec.hpp"

namespace rds::proto {

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultMaxFrame = kHeaderSize + kDefaultMaxPayload;

/// One side of an ordered, reliable frame channel.
class Endpoint {
public:
    virtual ~Endpoint() = default;
    /// Throws TransportError if the peer has gone away.
    virtual void send(std::vector<std::uint8_t> frame) = 0;
    /// Blocks for the next frame; nullopt once the peer closed cleanly.
    virtual std::optional<std::vector<std::uint8_t>> receive() = 0;
    virtual void close() = 0;
};

/// In-process pair; frames move between two queues without copying.
std::pair<std::unique_ptr<Endpoint>, std::unique_ptr<Endpoint>> loopback_pair(std::size_t max_frame = kDefaultMaxFrame);

/// TCP listener. `address` is "host:port"; port 0 picks an ephemeral port.
class StreamListener {
public:
    explicit StreamListener(const std::string& address, std::size_t max_frame = kDefaultMaxFrame);
    ~StreamListener();
    StreamListener(const StreamListener&) = delete;
    StreamListener& operator=(const StreamListener&) = delete;

    std::uint16_t port() const noexcept { return port_; }
    std::string address() const;
    std::unique_ptr<Endpoint> accept();
    void close();

private:
    int fd_ = -1;
    std::string host_;
    std::uint16_t port_ = 0;
    std::size_t max_frame_;
};

/// Frames travel as a 4-byte little-endian length followed by the frame.
std::unique_ptr<Endpoint> stream_connect(const std::string& address, std::size_t max_frame = kDefaultMaxFrame);

/// Wraps an already-connected socket descriptor; takes ownership.
std::unique_ptr<Endpoint> stream_endpoint(int fd, std::size_t max_frame = kDefaultMaxFrame);

}  // namespace rds::proto
