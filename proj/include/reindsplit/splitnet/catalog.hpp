// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "reindsplit/core/config.hpp"
#include "reindsplit/splitnet/network.hpp"

namespace rds::net {

struct SplitEntry {
    std::size_t cut_layer = 0;  // number of client-side layers
    double r_req = 0.0;
    double t_req = 0.0;
    double load_fraction = 0.0;  // client multiply-accumulates / total
};

class SplitCatalog {
public:
    SplitCatalog() = default;
    explicit SplitCatalog(std::vector<SplitEntry> entries) : entries_(std::move(entries)) {}

    std::size_t size() const noexcept { return entries_.size(); }
    /// 1-based split index; throws std::out_of_range outside [1, K].
    const SplitEntry& at(std::size_t k) const;
    const std::vector<SplitEntry>& entries() const noexcept { return entries_; }

private:
    std::vector<SplitEntry> entries_;
};

std::size_t layer_macs(const LayerSpec& layer);

/// Split k keeps ceil(k*L/(K+1)) layers on the client. Requirements follow
/// the linear map low + (high - low) * load_fraction unless `costs` overrides
/// them entry by entry.
SplitCatalog catalog_cuts(const NetworkSpec& spec, std::size_t K, CapacityRange range,
                          const std::optional<std::vector<SplitCost>>& costs = std::nullopt);

}  // namespace rds::net
