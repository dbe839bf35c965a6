// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "reindsplit/core/config.hpp"
#include "reindsplit/env/device.hpp"

namespace rds::env {

struct RewardWeights {
    double alpha = 1.0;
    double beta = 0.5;
    double gamma_pen = 1.0;
    double penalty_magnitude = 1.0;
    RewardMode mode = RewardMode::strict;

    static RewardWeights from(const RewardConfig& cfg) {
        return {cfg.alpha, cfg.beta, cfg.gamma_pen, cfg.penalty, cfg.mode};
    }
};

/// Deficit term max(0, -dR) + max(0, -dT) for split k.
double resource_deficit(const FeasibilityReport& report, std::size_t k);

/// Strict: alpha*acc - beta*deficit when k is feasible (the deficit is then
/// zero), else -gamma_pen*penalty. Soft: alpha*acc - beta*deficit always.
double compute_reward(double acc, const FeasibilityReport& report, std::size_t k, const RewardWeights& w);

}  // namespace rds::env
