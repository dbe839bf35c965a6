// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/agent/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rds::agent {

RegressionPass q_regression_gradients(const QNetwork& q, const Matrix& states, std::span<const std::size_t> actions,
                                      std::span<const double> targets) {
    if (states.rows == 0 || actions.size() != states.rows || targets.size() != states.rows) {
        throw net::ShapeError("q_regression_gradients: batch sizes disagree");
    }
    std::vector<net::LayerCache> cache;
    const auto& params = q.params;
    const Matrix out = net::forward_segment(params, 0, params.n_layers(), states, &cache);

    const auto n = static_cast<double>(states.rows);
    Matrix grad(out.rows, out.cols);
    RegressionPass pass;
    for (std::size_t i = 0; i < states.rows; ++i) {
        const std::size_t a = actions[i];
        if (a < 1 || a > out.cols) throw std::out_of_range("transition action outside [1, K]");
        const double diff = out(i, a - 1) - targets[i];
        pass.loss += diff * diff;
        grad(i, a - 1) = 2.0 * diff / n;
    }
    pass.loss /= n;
    net::backward_segment(params, 0, params.n_layers(), cache, grad, pass.grads);
    return pass;
}

std::vector<double> bellman_targets(std::span<const Transition* const> batch, const QNetwork& target, double discount) {
    if (batch.empty()) throw std::invalid_argument("bellman_targets: empty batch");
    Matrix next(batch.size(), target.state_dim());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!std::isfinite(batch[i]->reward)) throw std::invalid_argument("bellman_targets: non-finite reward");
        if (batch[i]->next_state.size() != target.state_dim()) throw net::ShapeError("next_state width mismatch");
        std::copy(batch[i]->next_state.begin(), batch[i]->next_state.end(), next.row(i).begin());
    }
    const Matrix q_next = q_forward_batch(target, next);
    std::vector<double> y(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i]->terminal) {
            y[i] = batch[i]->reward;
            continue;
        }
        const auto row = q_next.row(i);
        y[i] = batch[i]->reward + discount * *std::max_element(row.begin(), row.end());
    }
    return y;
}

std::optional<double> dqn_train_step(QNetwork& online, const QNetwork& target, ReplayBuffer& buffer,
                                     const net::AdamWConfig& opt, double discount, std::size_t batch_size) {
    if (batch_size == 0) throw std::invalid_argument("dqn_train_step: batch_size must be positive");
    if (buffer.size() < batch_size) return std::nullopt;

    const auto idx = buffer.sample_indices(batch_size);
    std::vector<const Transition*> batch;
    batch.reserve(idx.size());
    for (const auto i : idx) batch.push_back(&buffer.at(i));

    const std::vector<double> y = bellman_targets(batch, target, discount);

    Matrix states(batch.size(), online.state_dim());
    std::vector<std::size_t> actions(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i]->state.size() != online.state_dim()) throw net::ShapeError("state width mismatch");
        std::copy(batch[i]->state.begin(), batch[i]->state.end(), states.row(i).begin());
        actions[i] = batch[i]->action;
    }
    const RegressionPass pass = q_regression_gradients(online, states, actions, y);
    net::adamw_step(online.params, pass.grads, opt);
    return pass.loss;
}

void sync_target(const QNetwork& online, QNetwork& target) { target.params = online.params; }

DqnAgent::DqnAgent(std::size_t state_dim, std::size_t n_actions, const DqnSettings& settings,
                   std::uint64_t init_seed, std::uint64_t replay_seed)
    : settings_(settings),
      online_(make_qnetwork(state_dim, n_actions, init_seed)),
      target_(online_),
      buffer_(settings.replay_capacity, replay_seed) {
    if (settings.target_sync_every == 0) throw std::invalid_argument("target_sync_every must be positive");
}

void DqnAgent::observe(Transition t) {
    buffer_.push(std::move(t));
    ++env_steps_;
    if (env_steps_ % settings_.target_sync_every == 0) {
        sync_target(online_, target_);
        ++syncs_;
    }
}

std::optional<double> DqnAgent::train_step() {
    return dqn_train_step(online_, target_, buffer_, settings_.opt, settings_.discount, settings_.batch_size);
}

}  // namespace rds::agent
