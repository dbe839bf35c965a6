// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "reindsplit/core/config.hpp"
#include "reindsplit/splitnet/network.hpp"

namespace rds::orch {

struct LayerUpdate {
    Matrix d_weight;
    std::vector<double> d_bias;
    Matrix m_weight, v_weight;
    std::vector<double> m_bias, v_bias;
    std::uint64_t step = 0;
};

/// What a device sends back after a local step: parameter deltas plus the
/// optimizer state it ended with, for layers [first_layer, first_layer + n).
struct SegmentUpdate {
    std::uint16_t device = 0;
    std::size_t first_layer = 0;
    std::vector<LayerUpdate> layers;
};

SegmentUpdate diff_segment(const net::ParamStore& before, const net::ParamStore& after, std::size_t first,
                           std::size_t count, std::uint16_t device);

/// Adds the deltas and adopts the moments and step counters.
void apply_segment_update(net::ParamStore& store, const SegmentUpdate& update);

/// Sequential mode applies each update as it arrives. Averaged mode holds
/// updates until flush(), then applies the per-layer mean delta, the mean
/// moments and the largest step counter; contributors are ordered by device
/// id so the result does not depend on arrival order.
class SegmentMerger {
public:
    explicit SegmentMerger(MergeMode mode) : mode_(mode) {}

    void submit(net::ParamStore& store, SegmentUpdate update);
    void flush(net::ParamStore& store);
    std::size_t pending() const noexcept { return pending_.size(); }
    MergeMode mode() const noexcept { return mode_; }

private:
    MergeMode mode_;
    std::vector<SegmentUpdate> pending_;
};

}  // namespace rds::orch
