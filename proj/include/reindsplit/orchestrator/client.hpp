// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>

#include "reindsplit/proto/transport.hpp"
#include "reindsplit/splitnet/adamw.hpp"
#include "reindsplit/splitnet/split.hpp"

namespace rds::orch {

class RemoteError : public std::runtime_error {
public:
    RemoteError(std::uint16_t device, const std::string& what)
        : std::runtime_error("device " + std::to_string(device) + ": " + what), device_(device), detail_(what) {}
    std::uint16_t device() const noexcept { return device_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::uint16_t device_;
    std::string detail_;
};

/// The device side of one split-learning connection.
class DeviceClient {
public:
    DeviceClient(std::uint16_t device, const net::NetworkSpec& spec, std::unique_ptr<proto::Endpoint> ep,
                 const net::AdamWConfig& opt);
    ~DeviceClient();

    struct StepResult {
        double loss = 0.0;
        double batch_accuracy = 0.0;
        double client_grad_norm = 0.0;
    };

    /// Pull layers [0, cut), run the split step, update locally, push back.
    StepResult train_step(std::uint32_t round, std::size_t cut, const Matrix& x, std::span<const int> labels);

    /// Full model as currently served.
    net::ParamStore pull_model(std::uint32_t round);

    std::uint16_t device() const noexcept { return device_; }
    void close();

private:
    proto::Message exchange(const proto::Message& request, proto::MsgType expect);

    std::uint16_t device_;
    net::ParamStore local_;
    std::unique_ptr<proto::Endpoint> ep_;
    net::AdamWConfig opt_;
    net::ForwardCache cache_;
};

}  // namespace rds::orch
