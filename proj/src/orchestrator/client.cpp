// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/orchestrator/client.hpp"

#include <string>

#include "reindsplit/orchestrator/wire.hpp"

namespace rds::orch {

DeviceClient::DeviceClient(std::uint16_t device, const net::NetworkSpec& spec, std::unique_ptr<proto::Endpoint> ep,
                           const net::AdamWConfig& opt)
    : device_(device), local_(net::build_network(spec, 0)), ep_(std::move(ep)), opt_(opt) {}

DeviceClient::~DeviceClient() { close(); }

void DeviceClient::close() {
    if (ep_) ep_->close();
}

proto::Message DeviceClient::exchange(const proto::Message& request, proto::MsgType expect) {
    std::optional<std::vector<std::uint8_t>> frame;
    try {
        ep_->send(proto::encode(request));
        frame = ep_->receive();
    } catch (const proto::TransportError& e) {
        throw RemoteError(device_, std::string("connection lost: ") + e.what());
    }
    if (!frame) throw RemoteError(device_, "server closed the connection");
    proto::Message reply = proto::decode(*frame);
    if (reply.type != expect || reply.round != request.round || reply.device != request.device) {
        throw net::ProtocolOrderError("device " + std::to_string(device_) + " expected " + proto::to_string(expect) +
                                      " for round " + std::to_string(request.round) + ", got " +
                                      proto::to_string(reply.type) + " for round " + std::to_string(reply.round));
    }
    return reply;
}

DeviceClient::StepResult DeviceClient::train_step(std::uint32_t round, std::size_t cut, const Matrix& x,
                                                  std::span<const int> labels) {
    load_segment(local_, exchange(pull_request(round, device_, cut), proto::MsgType::param_segment));
    const net::ParamStore before = local_;

    const net::SmashedBatch smashed = net::forward_client(local_, cache_, round, device_, cut, x, labels);
    const net::GradAtCut grad = grad_from(exchange(to_message(smashed), proto::MsgType::grad_at_cut));
    if (grad.cut != cut) {
        throw net::ProtocolOrderError("device " + std::to_string(device_) + " sent cut " + std::to_string(cut) +
                                      ", gradient came back for cut " + std::to_string(grad.cut));
    }
    const net::SegmentGrads grads = net::backward_client(local_, cache_, grad);
    net::adamw_step(local_, grads, opt_);

    exchange(push_message(diff_segment(before, local_, 0, cut, device_), round, local_.spec),
             proto::MsgType::param_push);
    return {grad.loss, grad.accuracy, grads.l2_norm()};
}

net::ParamStore DeviceClient::pull_model(std::uint32_t round) {
    net::ParamStore model = local_;
    load_segment(model,
                 exchange(pull_request(round, device_, model.n_layers()), proto::MsgType::param_segment));
    return model;
}

}  // namespace rds::orch
