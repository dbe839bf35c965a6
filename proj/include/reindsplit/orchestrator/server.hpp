// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>

#include "reindsplit/core/config.hpp"
#include "reindsplit/orchestrator/merge.hpp"
#include "reindsplit/proto/transport.hpp"
#include "reindsplit/splitnet/adamw.hpp"
#include "reindsplit/splitnet/network.hpp"

namespace rds::orch {

/// Owns the canonical parameter store. Every request gets exactly one reply:
/// pull request -> segment, smashed -> grad_at_cut, push -> push ack.
///
/// In averaged mode the server serves and trains against the store as it was
/// at the start of the round; updates are merged when the first message of a
/// later round arrives.
class SplitServer {
public:
    SplitServer(net::ParamStore initial, MergeMode mode, const net::AdamWConfig& opt);

    proto::Message handle(const proto::Message& request);

    net::ParamStore snapshot() const;
    std::size_t server_steps() const;

private:
    void advance_round(std::uint32_t round);
    const net::ParamStore& serving_store() const;
    void check_finite(const proto::Message& request) const;

    mutable std::mutex mu_;
    net::ParamStore canonical_;
    net::ParamStore round_start_;
    MergeMode mode_;
    net::AdamWConfig opt_;
    SegmentMerger merger_;
    std::optional<std::uint32_t> current_round_;
    std::size_t server_steps_ = 0;
};

/// Answers requests on `ep` until the peer closes. Malformed frames and
/// training errors propagate after the endpoint is closed.
void serve_connection(proto::Endpoint& ep, SplitServer& server);

}  // namespace rds::orch
