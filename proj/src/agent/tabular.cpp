// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/agent/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "reindsplit/core/rng.hpp"

namespace rds::agent {

TabularMDP::TabularMDP(std::size_t states, std::size_t actions, double discount_)
    : n_states(states),
      n_actions(actions),
      transition(states * actions * states, 0.0),
      reward(states * actions, 0.0),
      discount(discount_) {}

void TabularMDP::validate() const {
    if (n_states == 0 || n_actions == 0) throw std::invalid_argument("MDP needs states and actions");
    if (transition.size() != n_states * n_actions * n_states || reward.size() != n_states * n_actions) {
        throw std::invalid_argument("MDP table sizes do not match dimensions");
    }
    for (std::size_t s = 0; s < n_states; ++s) {
        for (std::size_t a = 0; a < n_actions; ++a) {
            double sum = 0.0;
            for (std::size_t n = 0; n < n_states; ++n) {
                if (p(s, a, n) < 0.0) throw std::invalid_argument("negative transition probability");
                sum += p(s, a, n);
            }
            if (std::abs(sum - 1.0) > 1e-12) {
                throw std::invalid_argument("P(.|" + std::to_string(s) + "," + std::to_string(a) + ") sums to " +
                                            std::to_string(sum));
            }
        }
    }
    if (!(discount >= 0.0 && discount <= 1.0)) throw std::invalid_argument("discount outside [0, 1]");
}

namespace {

std::size_t argmax_lowest(const double* v, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

}  // namespace

ValueIterationResult value_iteration(const TabularMDP& mdp, double tol) {
    mdp.validate();
    if (mdp.discount >= 1.0) throw std::invalid_argument("value_iteration requires discount < 1");

    ValueIterationResult out;
    out.value.assign(mdp.n_states, 0.0);
    out.q.assign(mdp.n_states * mdp.n_actions, 0.0);

    auto backup = [&](const std::vector<double>& v) {
        for (std::size_t s = 0; s < mdp.n_states; ++s) {
            for (std::size_t a = 0; a < mdp.n_actions; ++a) {
                double expect = 0.0;
                for (std::size_t n = 0; n < mdp.n_states; ++n) expect += mdp.p(s, a, n) * v[n];
                out.q[s * mdp.n_actions + a] = mdp.r(s, a) + mdp.discount * expect;
            }
        }
    };

    for (;;) {
        backup(out.value);
        double change = 0.0;
        for (std::size_t s = 0; s < mdp.n_states; ++s) {
            const double* row = out.q.data() + s * mdp.n_actions;
            const double best = *std::max_element(row, row + mdp.n_actions);
            change = std::max(change, std::abs(best - out.value[s]));
            out.value[s] = best;
        }
        ++out.iterations;
        if (change < tol) break;
        if (out.iterations > 10'000'000) throw std::runtime_error("value_iteration did not converge");
    }
    backup(out.value);
    out.policy.resize(mdp.n_states);
    for (std::size_t s = 0; s < mdp.n_states; ++s) out.policy[s] = argmax_lowest(out.q.data() + s * mdp.n_actions, mdp.n_actions);
    return out;
}

std::size_t QTable::greedy(std::size_t s) const { return argmax_lowest(q.data() + s * n_actions, n_actions); }

std::vector<std::size_t> QTable::greedy_policy() const {
    std::vector<std::size_t> pol(n_states);
    for (std::size_t s = 0; s < n_states; ++s) pol[s] = greedy(s);
    return pol;
}

QTable tabular_q_learning(const TabularMDP& mdp, const TabularQConfig& cfg) {
    mdp.validate();
    QTable t;
    t.n_states = mdp.n_states;
    t.n_actions = mdp.n_actions;
    t.q.assign(mdp.n_states * mdp.n_actions, cfg.initial_q);
    t.visits.assign(mdp.n_states * mdp.n_actions, 0);

    Rng rng = make_rng(cfg.seed, StreamTag::tabular);
    std::uniform_int_distribution<std::size_t> any_state(0, mdp.n_states - 1);
    std::uniform_int_distribution<std::size_t> any_action(0, mdp.n_actions - 1);
    const std::size_t episode_length = std::max<std::size_t>(1, cfg.episode_length);

    std::size_t s = any_state(rng);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        if (step % episode_length == 0) s = any_state(rng);
        const double frac = cfg.steps > 1 ? static_cast<double>(step) / static_cast<double>(cfg.steps - 1) : 1.0;
        const double eps = cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
        const std::size_t a = uniform01(rng) < eps ? any_action(rng) : t.greedy(s);

        // sample s' ~ P(.|s,a)
        double u = uniform01(rng);
        std::size_t next = mdp.n_states - 1;
        for (std::size_t n = 0; n < mdp.n_states; ++n) {
            const double pr = mdp.p(s, a, n);
            if (u < pr) {
                next = n;
                break;
            }
            u -= pr;
        }

        const std::size_t idx = s * mdp.n_actions + a;
        ++t.visits[idx];
        const double alpha = 1.0 / std::pow(static_cast<double>(t.visits[idx]), cfg.lr_exponent);
        const double* next_row = t.q.data() + next * mdp.n_actions;
        const double target = mdp.r(s, a) + mdp.discount * *std::max_element(next_row, next_row + mdp.n_actions);
        t.q[idx] += alpha * (target - t.q[idx]);
        s = next;
    }
    return t;
}

}  // namespace rds::agent
