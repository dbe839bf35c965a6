// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/env/reward.hpp"

#include <algorithm>

namespace rds::env {

double resource_deficit(const FeasibilityReport& report, std::size_t k) {
    const auto& c = report.at(k);
    return std::max(0.0, -c.delta_r) + std::max(0.0, -c.delta_t);
}

double compute_reward(double acc, const FeasibilityReport& report, std::size_t k, const RewardWeights& w) {
    const bool ok = report.feasible(k);
    if (w.mode == RewardMode::strict && !ok) return -w.gamma_pen * w.penalty_magnitude;
    return w.alpha * acc - w.beta * resource_deficit(report, k);
}

}  // namespace rds::env
