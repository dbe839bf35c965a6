// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "reindsplit/agent/qnetwork.hpp"
#include "reindsplit/agent/replay.hpp"
#include "reindsplit/splitnet/adamw.hpp"

namespace rds::agent {

/// y = r + discount * max_a' Q_target(s', a'), or y = r for terminal transitions.
struct RegressionPass {
    double loss = 0.0;  // mean squared error on the taken actions
    net::SegmentGrads grads;
};

/// Gradient of mean((Q(s_i, a_i) - y_i)^2) over all Q-network parameters.
/// Actions are 1-based.
RegressionPass q_regression_gradients(const QNetwork& q, const Matrix& states, std::span<const std::size_t> actions,
                                      std::span<const double> targets);

std::vector<double> bellman_targets(std::span<const Transition* const> batch, const QNetwork& target, double discount);

/// One AdamW step on the mean squared Bellman error over a uniform sample.
/// Returns the loss measured before the step, or nullopt when the buffer
/// holds fewer than `batch_size` transitions (nothing is touched then).
std::optional<double> dqn_train_step(QNetwork& online, const QNetwork& target, ReplayBuffer& buffer,
                                     const net::AdamWConfig& opt, double discount, std::size_t batch_size);

/// Copies online parameters into the target network.
void sync_target(const QNetwork& online, QNetwork& target);

struct DqnSettings {
    double discount = 0.95;
    std::size_t batch_size = 32;
    std::size_t target_sync_every = 500;
    std::size_t replay_capacity = 10000;
    net::AdamWConfig opt;
};

/// Online + target network, replay buffer, and the sync cadence counted in
/// observed environment steps.
class DqnAgent {
public:
    DqnAgent(std::size_t state_dim, std::size_t n_actions, const DqnSettings& settings, std::uint64_t init_seed,
             std::uint64_t replay_seed);

    const QNetwork& online() const noexcept { return online_; }
    QNetwork& online() noexcept { return online_; }
    const QNetwork& target() const noexcept { return target_; }
    const ReplayBuffer& buffer() const noexcept { return buffer_; }

    /// Stores a transition; syncs the target every `target_sync_every` calls.
    void observe(Transition t);
    std::optional<double> train_step();

    std::size_t env_steps() const noexcept { return env_steps_; }
    std::size_t syncs() const noexcept { return syncs_; }

private:
    DqnSettings settings_;
    QNetwork online_;
    QNetwork target_;
    ReplayBuffer buffer_;
    std::size_t env_steps_ = 0;
    std::size_t syncs_ = 0;
};

}  // namespace rds::agent
