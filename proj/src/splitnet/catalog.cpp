// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/splitnet/catalog.hpp"

#include <stdexcept>
#include <string>

namespace rds::net {

const SplitEntry& SplitCatalog::at(std::size_t k) const {
    if (k < 1 || k > entries_.size()) {
        throw std::out_of_range("split index " + std::to_string(k) + " outside [1, " + std::to_string(entries_.size()) + "]");
    }
    return entries_[k - 1];
}

std::size_t layer_macs(const LayerSpec& layer) { return layer.in * layer.out; }

SplitCatalog catalog_cuts(const NetworkSpec& spec, std::size_t K, CapacityRange range,
                          const std::optional<std::vector<SplitCost>>& costs) {
    spec.validate();
    const std::size_t L = spec.n_layers();
    if (K < 1) throw std::invalid_argument("catalog_cuts: K must be at least 1");
    if (K + 1 > L) {
        throw std::invalid_argument("catalog_cuts: K=" + std::to_string(K) + " needs at least " + std::to_string(K + 1) +
                                    " layers, network has " + std::to_string(L));
    }
    if (costs && costs->size() != K) throw std::invalid_argument("catalog_cuts: cost table size differs from K");

    std::size_t total = 0;
    for (const auto& l : spec.layers) total += layer_macs(l);

    std::vector<SplitEntry> entries;
    for (std::size_t k = 1; k <= K; ++k) {
        SplitEntry e;
        e.cut_layer = (k * L + K) / (K + 1);  // ceil(k*L/(K+1))
        std::size_t client = 0;
        for (std::size_t l = 0; l < e.cut_layer; ++l) client += layer_macs(spec.layers[l]);
        e.load_fraction = static_cast<double>(client) / static_cast<double>(total);
        if (costs) {
            e.r_req = (*costs)[k - 1].r_req;
            e.t_req = (*costs)[k - 1].t_req;
        } else {
            e.r_req = range.low + (range.high - range.low) * e.load_fraction;
            e.t_req = e.r_req;
        }
        entries.push_back(e);
    }
    return SplitCatalog(std::move(entries));
}

}  // namespace rds::net
