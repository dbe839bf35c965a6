// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rds::agent {

/// Finite MDP with rewards R(s, a) and transition table P(s' | s, a).
struct TabularMDP {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<double> transition;  // [s][a][s']
    std::vector<double> reward;      // [s][a]
    double discount = 0.9;

    TabularMDP() = default;
    TabularMDP(std::size_t states, std::size_t actions, double discount);

    double& p(std::size_t s, std::size_t a, std::size_t next) { return transition[(s * n_actions + a) * n_states + next]; }
    double p(std::size_t s, std::size_t a, std::size_t next) const { return transition[(s * n_actions + a) * n_states + next]; }
    double& r(std::size_t s, std::size_t a) { return reward[s * n_actions + a]; }
    double r(std::size_t s, std::size_t a) const { return reward[s * n_actions + a]; }

    /// Each P(. | s, a) must sum to 1 within 1e-12.
    void validate() const;
};

struct ValueIterationResult {
    std::vector<double> value;        // V*
    std::vector<double> q;            // Q*[s][a]
    std::vector<std::size_t> policy;  // 0-based greedy action, lowest index on ties
    std::size_t iterations = 0;
};

/// Iterates the Bellman optimality operator until the sup-norm change drops
/// below `tol`. Rejects discount >= 1.
ValueIterationResult value_iteration(const TabularMDP& mdp, double tol = 1e-10);

struct TabularQConfig {
    std::size_t steps = 50000;
    std::size_t episode_length = 50;
    double lr_exponent = 0.6;  // alpha = 1 / visits(s, a)^lr_exponent
    double eps_start = 1.0;
    double eps_end = 0.1;      // linear decay over `steps`
    double initial_q = 0.0;
    std::uint64_t seed = 0;
};

struct QTable {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<double> q;
    std::vector<std::size_t> visits;

    double at(std::size_t s, std::size_t a) const { return q[s * n_actions + a]; }
    std::size_t greedy(std::size_t s) const;
    std::vector<std::size_t> greedy_policy() const;
};

/// Epsilon-greedy Q-learning with restarts from a uniform state every
/// `episode_length` steps.
QTable tabular_q_learning(const TabularMDP& mdp, const TabularQConfig& cfg);

}  // namespace rds::agent
