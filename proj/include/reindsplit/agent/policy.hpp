// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "reindsplit/core/rng.hpp"

namespace rds::agent {

/// 1-based argmax; the lowest index wins ties.
std::size_t greedy_action(std::span<const double> q_values);

/// With probability epsilon a uniform draw from [1, K], otherwise the greedy
/// action. Always consumes exactly one uniform draw plus one index draw when
/// exploring.
std::size_t select_action(std::span<const double> q_values, double epsilon, Rng& rng);

/// Per-episode exponential decay from `start` to `end` over `episodes`
/// episodes (linear when `end` is 0).
struct EpsilonSchedule {
    double start = 1.0;
    double end = 0.05;
    std::size_t episodes = 50;

    double at(std::size_t episode) const;
};

}  // namespace rds::agent
