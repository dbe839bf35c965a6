// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/orchestrator/server.hpp"

#include <string>

#include "reindsplit/orchestrator/wire.hpp"
#include "reindsplit/splitnet/split.hpp"

namespace rds::orch {

SplitServer::SplitServer(net::ParamStore initial, MergeMode mode, const net::AdamWConfig& opt)
    : canonical_(std::move(initial)), round_start_(canonical_), mode_(mode), opt_(opt), merger_(mode) {}

net::ParamStore SplitServer::snapshot() const {
    std::lock_guard lock(mu_);
    return canonical_;
}

std::size_t SplitServer::server_steps() const {
    std::lock_guard lock(mu_);
    return server_steps_;
}

void SplitServer::advance_round(std::uint32_t round) {
    if (mode_ != MergeMode::averaged) return;
    if (current_round_ && round > *current_round_) {
        merger_.flush(canonical_);
        round_start_ = canonical_;
    }
    if (!current_round_ || round > *current_round_) current_round_ = round;
}

const net::ParamStore& SplitServer::serving_store() const {
    return mode_ == MergeMode::averaged ? round_start_ : canonical_;
}

void SplitServer::check_finite(const proto::Message& request) const {
    if (!canonical_.all_finite()) {
        throw net::NonFiniteError("non-finite parameters after " + std::string(proto::to_string(request.type)) +
                                  " from device " + std::to_string(request.device) + " in round " +
                                  std::to_string(request.round));
    }
}

proto::Message SplitServer::handle(const proto::Message& request) {
    std::lock_guard lock(mu_);
    advance_round(request.round);
    switch (request.type) {
        case proto::MsgType::param_pull_request:
            return segment_message(serving_store(), request.round, request.device, request.cut);
        case proto::MsgType::smashed: {
            const net::SmashedBatch batch = smashed_from(request);
            net::GradAtCut grad;
            if (mode_ == MergeMode::sequential) {
                grad = net::forward_server_and_loss(canonical_, batch, opt_);
            } else {
                net::ParamStore scratch = round_start_;
                grad = net::forward_server_and_loss(scratch, batch, opt_);
                const std::size_t l = scratch.n_layers();
                merger_.submit(canonical_, diff_segment(round_start_, scratch, batch.cut, l - batch.cut, batch.device));
            }
            ++server_steps_;
            check_finite(request);
            return to_message(grad);
        }
        case proto::MsgType::param_push: {
            merger_.submit(canonical_, update_from(request, canonical_.spec));
            check_finite(request);
            return push_ack(request.round, request.device, request.cut);
        }
        default:
            throw net::ProtocolOrderError(std::string("server does not accept ") + proto::to_string(request.type) +
                                          " from device " + std::to_string(request.device));
    }
}

void serve_connection(proto::Endpoint& ep, SplitServer& server) {
    try {
        while (auto frame = ep.receive()) {
            const proto::Message reply = server.handle(proto::decode(*frame));
            ep.send(proto::encode(reply));
        }
    } catch (...) {
        ep.close();
        throw;
    }
    ep.close();
}

}  // namespace rds::orch
