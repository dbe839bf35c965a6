// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "reindsplit/splitnet/network.hpp"

namespace rds::agent {

inline constexpr std::size_t kQHiddenWidth = 128;

/// affine(state_dim -> 128) + ReLU + affine(128 -> K).
struct QNetwork {
    net::ParamStore params;

    std::size_t state_dim() const { return params.spec.input_dim(); }
    std::size_t n_actions() const { return params.spec.output_dim(); }
};

/// state_dim must be 2 (R, T) or 3 (R, T, last accuracy).
QNetwork make_qnetwork(std::size_t state_dim, std::size_t n_actions, std::uint64_t seed);

std::vector<double> q_forward(const QNetwork& q, std::span<const double> state);

/// One row of q-values per state row.
Matrix q_forward_batch(const QNetwork& q, const Matrix& states);

}  // namespace rds::agent
