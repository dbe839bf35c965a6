// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/cli/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "reindsplit/agent/dqn.hpp"
#include "reindsplit/agent/qnetwork.hpp"
#include "reindsplit/core/rng.hpp"
#include "reindsplit/env/reward.hpp"
#include "reindsplit/splitnet/gradcheck.hpp"
#include "reindsplit/splitnet/split.hpp"

namespace rds::cli {

namespace {

constexpr double kGradTolerance = 1e-6;
constexpr double kSplitTolerance = 1e-12;
constexpr double kQTolerance = 1e-2;

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

net::NetworkSpec default_spec() { return net::make_network_spec(8, 5, 32, 6); }

double rel_diff(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return INFINITY;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, rel_diff(a[i], b[i]));
    return m;
}

double max_rel_diff(const net::LayerGrad& a, const net::LayerGrad& b) {
    return std::max(max_rel_diff(a.weight.data, b.weight.data), max_rel_diff(a.bias, b.bias));
}

std::vector<int> cycling_labels(std::size_t n, std::size_t classes) {
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % classes);
    return y;
}

}  // namespace

agent::TabularMDP chain_mdp() {
    agent::TabularMDP mdp(3, 2, 0.9);
    // action 0 stays (or falls back to 0), action 1 advances (2 wraps to 0)
    mdp.p(0, 0, 0) = 1.0;
    mdp.p(0, 1, 1) = 1.0;
    mdp.p(1, 0, 0) = 1.0;
    mdp.p(1, 1, 2) = 1.0;
    mdp.p(2, 0, 2) = 1.0;
    mdp.p(2, 1, 0) = 1.0;
    mdp.r(2, 0) = 1.0;
    return mdp;
}

std::vector<OracleCheck> check_tabular_q() {
    const auto mdp = chain_mdp();
    const auto vi = agent::value_iteration(mdp);
    agent::TabularQConfig cfg;
    cfg.seed = 2026;
    const auto table = agent::tabular_q_learning(mdp, cfg);

    double err = 0.0;
    for (std::size_t i = 0; i < vi.q.size(); ++i) err = std::max(err, std::abs(table.q[i] - vi.q[i]));
    const bool same_policy = table.greedy_policy() == vi.policy;
    return {{"tabular_q.policy_matches_value_iteration", same_policy,
             same_policy ? "all 3 states" : "greedy policy differs from value iteration"},
            {"tabular_q.values_within_1e-2", err < kQTolerance, "max |Q - Q*| = " + sci(err)}};
}

std::vector<OracleCheck> check_gradients() {
    std::vector<OracleCheck> out;
    const net::ParamStore store = net::build_network(default_spec(), 11);
    const Matrix x = net::jittered_inputs(store, 4, 13);
    const auto y = cycling_labels(x.rows, 5);
    for (std::size_t k = 1; k < store.n_layers(); ++k) {
        const auto r = net::finite_diff_check(store, x, y, k);
        out.push_back({"gradcheck.splitnet_cut_" + std::to_string(k), r.max_rel_error < kGradTolerance,
                       "max rel error " + sci(r.max_rel_error) + " at " + r.worst});
    }

    const agent::QNetwork q = agent::make_qnetwork(3, 5, 17);
    const Matrix states = net::jittered_inputs(q.params, 8, 19);
    std::vector<std::size_t> actions(states.rows);
    std::vector<double> targets(states.rows);
    Rng rng = make_rng(23, StreamTag::probe);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < states.rows; ++i) {
        actions[i] = 1 + i % 5;
        targets[i] = normal(rng);
    }
    const auto pass = agent::q_regression_gradients(q, states, actions, targets);
    const auto r = net::compare_param_gradients(q.params, pass.grads, [&](const net::ParamStore& p) {
        return agent::q_regression_gradients(agent::QNetwork{p}, states, actions, targets).loss;
    });
    out.push_back({"gradcheck.qnetwork", r.max_rel_error < kGradTolerance,
                   "max rel error " + sci(r.max_rel_error) + " at " + r.worst});
    return out;
}

std::vector<OracleCheck> check_split_equivalence() {
    std::vector<OracleCheck> out;
    const net::ParamStore store = net::build_network(default_spec(), 29);
    const Matrix x = net::jittered_inputs(store, 16, 31, 0.0);
    const auto y = cycling_labels(x.rows, 5);
    const Matrix logits = net::forward_full(store, x);
    const auto full = net::full_gradients(store, x, y);
    for (std::size_t k = 1; k < store.n_layers(); ++k) {
        net::ForwardCache cache;
        const auto smashed = net::forward_client(store, cache, 0, 0, k, x, y);
        const Matrix split_logits = net::forward_segment(store, k, store.n_layers(), smashed.activations, nullptr);
        const auto server = net::server_backward(store, smashed);
        const auto client = net::backward_client(store, cache, server.at_cut);

        double worst = max_rel_diff(split_logits.data, logits.data);
        for (std::size_t l = 0; l < k; ++l) worst = std::max(worst, max_rel_diff(client.layers[l], full.grads.layers[l]));
        for (std::size_t l = k; l < store.n_layers(); ++l) {
            worst = std::max(worst, max_rel_diff(server.grads.layers[l - k], full.grads.layers[l]));
        }
        out.push_back({"split_equivalence.cut_" + std::to_string(k), worst <= kSplitTolerance,
                       "max rel diff " + sci(worst)});
    }
    return out;
}

std::vector<OracleCheck> check_reward_values() {
    std::vector<OracleCheck> out;
    env::FeasibilityReport report;
    report.splits = {{1.25, 0.5, true}, {-0.4, -0.6, false}};

    env::RewardWeights soft{1.0, 0.5, 1.0, 1.0, RewardMode::soft};
    const double r_soft = env::compute_reward(0.8, report, 2, soft);
    out.push_back({"reward.soft_hand_value", std::abs(r_soft - 0.30) <= 1e-12, "got " + fmt(r_soft)});

    env::RewardWeights strict{1.7, 0.5, 2.0, 0.5, RewardMode::strict};
    const double r_ok = env::compute_reward(0.73, report, 1, strict);
    out.push_back({"reward.strict_feasible_is_alpha_acc", r_ok == 1.7 * 0.73, "got " + fmt(r_ok)});
    const double r_bad = env::compute_reward(0.73, report, 2, strict);
    out.push_back({"reward.strict_infeasible_is_penalty", r_bad == -1.0, "got " + fmt(r_bad)});
    return out;
}

std::vector<OracleCheck> run_oracle_suite() {
    std::vector<OracleCheck> all;
    for (auto part : {check_tabular_q, check_gradients, check_split_equivalence, check_reward_values}) {
        auto rows = part();
        all.insert(all.end(), rows.begin(), rows.end());
    }
    return all;
}

}  // namespace rds::cli
