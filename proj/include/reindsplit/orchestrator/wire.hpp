// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

#include "reindsplit/orchestrator/merge.hpp"
#include "reindsplit/proto/codec.hpp"
#include "reindsplit/splitnet/split.hpp"

namespace rds::orch {

// Conversions between training objects and protocol messages. Values cross
// the wire as float32.

proto::Message to_message(const net::SmashedBatch& batch);
net::SmashedBatch smashed_from(const proto::Message& msg);

proto::Message to_message(const net::GradAtCut& grad);
net::GradAtCut grad_from(const proto::Message& msg);

proto::Message pull_request(std::uint32_t round, std::uint16_t device, std::size_t cut);

/// Layers [0, cut) flattened as W, b, mW, vW, mb, vb, step per layer.
proto::Message segment_message(const net::ParamStore& store, std::uint32_t round, std::uint16_t device,
                               std::size_t cut);
/// Overwrites layers [0, msg.cut) of `store`, whose spec fixes the shapes.
void load_segment(net::ParamStore& store, const proto::Message& msg);

proto::Message push_message(const SegmentUpdate& update, std::uint32_t round, const net::NetworkSpec& spec);
SegmentUpdate update_from(const proto::Message& msg, const net::NetworkSpec& spec);

proto::Message push_ack(std::uint32_t round, std::uint16_t device, std::size_t cut);

}  // namespace rds::orch
