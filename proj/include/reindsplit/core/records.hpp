// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

namespace rds {

/// One device in one round. Unavailable devices still produce a row so
/// selection denominators can be reconstructed.
struct RoundRecord {
    std::size_t episode = 0;
    std::size_t step = 0;
    std::uint16_t device_id = 0;
    bool available = false;
    double resources = 0.0;   // R_t
    double time_window = 0.0; // T_t
    std::size_t action = 0;   // 1-based split index, 0 when unavailable
    bool feasible = false;
    double reward = 0.0;
    double acc = 0.0;
    double client_load = 0.0;
    bool straggler = false;
    double epsilon = 0.0;
    std::optional<double> q_loss;
};

}  // namespace rds
