// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "reindsplit/splitnet/network.hpp"

namespace rds::net {

/// |a - n| / max(|a|, |n|, floor). The floor keeps near-zero gradients from
/// turning round-off into huge ratios.
double relative_error(double analytic, double numeric, double floor = 1e-3);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst;  // which entry produced the maximum
    std::size_t checked = 0;
};

/// Compares the split-path analytic gradients (every parameter, plus the
/// activation gradient at `cut`) against central differences of the
/// monolithic loss.
GradCheckReport finite_diff_check(const ParamStore& store, const Matrix& batch, std::span<const int> labels,
                                  std::size_t cut, double step = 1e-5);

using LossFn = std::function<double(const ParamStore&)>;

/// Central differences of `loss` against every parameter covered by `analytic`.
GradCheckReport compare_param_gradients(const ParamStore& store, const SegmentGrads& analytic, const LossFn& loss,
                                        double step = 1e-5);

/// Smallest |pre-activation| over the ReLU layers for input `x`.
double kink_margin(const ParamStore& store, const Matrix& x);

/// Standard-normal inputs redrawn until every ReLU pre-activation is at
/// least `margin` away from zero, so finite differences never straddle a kink.
Matrix jittered_inputs(const ParamStore& store, std::size_t rows, std::uint64_t seed, double margin = 1e-3);

}  // namespace rds::net
