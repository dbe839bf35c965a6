// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/env/device.hpp"

#include <algorithm>
#include <string>

namespace rds::env {

DeviceState init_device(std::uint16_t id, CapacityRange range, Rng& rng) {
    std::uniform_real_distribution<double> draw(range.low, range.high);
    DeviceState s;
    s.device_id = id;
    s.resources = draw(rng);
    s.time_window = draw(rng);
    s.available = true;
    return s;
}

std::vector<DeviceState> init_devices(std::size_t n, CapacityRange range, Rng& rng) {
    std::vector<DeviceState> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(init_device(static_cast<std::uint16_t>(i), range, rng));
    return out;
}

DeviceState step_device_state(const DeviceState& state, const DeviceDynamics& dyn, Rng& rng) {
    DeviceState next = state;
    if (dyn.drift_sigma > 0.0) {
        std::normal_distribution<double> drift(0.0, dyn.drift_sigma);
        next.resources = std::clamp(state.resources + drift(rng), dyn.range.low, dyn.range.high);
        next.time_window = std::clamp(state.time_window + drift(rng), dyn.range.low, dyn.range.high);
    }
    next.available = !(uniform01(rng) < dyn.unavailability_prob);
    return next;
}

const SplitCheck& FeasibilityReport::at(std::size_t k) const {
    if (k < 1 || k > splits.size()) throw std::out_of_range("split index " + std::to_string(k) + " out of range");
    return splits[k - 1];
}

std::vector<std::size_t> FeasibilityReport::feasible_set() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 1; k <= splits.size(); ++k) {
        if (splits[k - 1].feasible) out.push_back(k);
    }
    return out;
}

FeasibilityReport feasibility(const DeviceState& state, const net::SplitCatalog& catalog) {
    if (!state.available) {
        throw UnavailableDeviceError("device " + std::to_string(state.device_id) + " is unavailable this round");
    }
    FeasibilityReport r;
    r.splits.reserve(catalog.size());
    for (const auto& e : catalog.entries()) {
        SplitCheck c;
        c.delta_r = state.resources - e.r_req;
        c.delta_t = state.time_window - e.t_req;
        c.feasible = c.delta_r >= 0.0 && c.delta_t >= 0.0;
        r.splits.push_back(c);
    }
    return r;
}

double client_load(const net::SplitCatalog& catalog, std::size_t k) { return catalog.at(k).load_fraction; }

}  // namespace rds::env
