// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "reindsplit/splitnet/network.hpp"

namespace rds::net {

struct AdamWConfig {
    double lr = 1e-3;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Decoupled-weight-decay Adam on the layers covered by `grads`.
///
/// Each touched layer first decays (p -= lr * wd * p), then takes the
/// bias-corrected Adam step using its own step counter. Throws
/// NonFiniteError before touching the store if any gradient is non-finite.
void adamw_step(ParamStore& store, const SegmentGrads& grads, const AdamWConfig& cfg);

}  // namespace rds::net
