// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "reindsplit/core/config.hpp"
#include "reindsplit/core/rng.hpp"
#include "reindsplit/splitnet/catalog.hpp"

namespace rds::env {

struct DeviceState {
    std::uint16_t device_id = 0;
    double resources = 0.0;    // R_t
    double time_window = 0.0;  // T_t
    bool available = true;
};

/// Parameters of the per-round stochastic device process.
struct DeviceDynamics {
    CapacityRange range;
    double drift_sigma = 0.25;
    double unavailability_prob = 0.10;
};

/// R and T drawn independently from Uniform[low, high]; available.
DeviceState init_device(std::uint16_t id, CapacityRange range, Rng& rng);
std::vector<DeviceState> init_devices(std::size_t n, CapacityRange range, Rng& rng);

/// Adds N(0, sigma^2) drift to R and T (clamped to the range) and redraws
/// availability with the configured probability of dropping out.
DeviceState step_device_state(const DeviceState& state, const DeviceDynamics& dyn, Rng& rng);

struct SplitCheck {
    double delta_r = 0.0;  // R_t - R_req(k)
    double delta_t = 0.0;  // T_t - T_req(k)
    bool feasible = false;
};

struct FeasibilityReport {
    std::vector<SplitCheck> splits;  // index k-1

    const SplitCheck& at(std::size_t k) const;
    bool feasible(std::size_t k) const { return at(k).feasible; }
    /// 1-based indices of feasible splits, ascending.
    std::vector<std::size_t> feasible_set() const;
};

class UnavailableDeviceError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

FeasibilityReport feasibility(const DeviceState& state, const net::SplitCatalog& catalog);

double client_load(const net::SplitCatalog& catalog, std::size_t k);

}  // namespace rds::env
