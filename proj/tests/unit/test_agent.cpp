// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "reindsplit/agent/dqn.hpp"
#include "reindsplit/agent/policy.hpp"
#include "reindsplit/agent/qnetwork.hpp"
#include "reindsplit/agent/replay.hpp"
#include "reindsplit/agent/tabular.hpp"
#include "reindsplit/cli/oracle.hpp"
#include "reindsplit/core/rng.hpp"
#include "reindsplit/splitnet/gradcheck.hpp"

using namespace rds;
using namespace rds::agent;

namespace {

void zero_params(QNetwork& q) {
    for (auto& l : q.params.layers) {
        std::fill(l.weight.data.begin(), l.weight.data.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
}

// Q-network whose outputs equal `values` for every state.
QNetwork constant_qnetwork(const std::vector<double>& values) {
    QNetwork q = make_qnetwork(2, values.size(), 1);
    zero_params(q);
    q.params.layers[1].bias = values;
    return q;
}

Transition transition(std::vector<double> s, std::size_t a, double r, std::vector<double> next, bool terminal) {
    return Transition{std::move(s), a, r, std::move(next), terminal};
}

}  // namespace

TEST_CASE("q_forward shape and degenerate weights") {
    QNetwork q = make_qnetwork(2, 5, 3);
    CHECK(q.params.spec.layers[0].out == kQHiddenWidth);
    CHECK(q.n_actions() == 5);
    CHECK_THROWS(make_qnetwork(4, 5, 3));
    CHECK_THROWS(q_forward(q, std::vector<double>{0.1, 0.2, 0.3}));
    zero_params(q);
    for (double v : q_forward(q, std::vector<double>{0.4, 0.9})) CHECK(v == 0.0);
}

TEST_CASE("q_forward matches a hand-rolled two-matrix evaluation") {
    const QNetwork q = make_qnetwork(3, 5, 9);
    const std::vector<double> s{0.3, -0.7, 0.55};
    const auto& l0 = q.params.layers[0];
    const auto& l1 = q.params.layers[1];
    std::vector<double> hidden(kQHiddenWidth);
    for (std::size_t j = 0; j < kQHiddenWidth; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < 3; ++i) acc += s[i] * l0.weight(j, i);
        acc += l0.bias[j];
        hidden[j] = acc > 0.0 ? acc : 0.0;
    }
    const auto got = q_forward(q, s);
    for (std::size_t a = 0; a < 5; ++a) {
        double acc = 0.0;
        for (std::size_t j = 0; j < kQHiddenWidth; ++j) acc += hidden[j] * l1.weight(a, j);
        acc += l1.bias[a];
        CHECK(got[a] == acc);
    }

    Matrix batch(4, 3);
    Rng rng(5);
    for (auto& v : batch.data) v = uniform01(rng);
    const Matrix out = q_forward_batch(q, batch);
    for (std::size_t r = 0; r < 4; ++r) {
        const auto row = q_forward(q, batch.row(r));
        for (std::size_t a = 0; a < 5; ++a) CHECK(out(r, a) == row[a]);
    }
}

TEST_CASE("select_action rules") {
    Rng rng(1);
    CHECK(select_action(std::vector<double>{0.1, 0.9, 0.3, 0.3, 0.2}, 0.0, rng) == 2);
    CHECK(select_action(std::vector<double>{1, 1, 0, 0, 0}, 0.0, rng) == 1);
    CHECK_THROWS(select_action(std::vector<double>{}, 0.0, rng));
    CHECK_THROWS(select_action(std::vector<double>{1.0}, 1.5, rng));

    std::vector<std::size_t> counts(6, 0);
    const std::vector<double> q{5, 4, 3, 2, 1};
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts.at(select_action(q, 1.0, rng));
    CHECK(counts[0] == 0);
    for (std::size_t a = 1; a <= 5; ++a) CHECK(std::abs(counts[a] / static_cast<double>(n) - 0.2) <= 0.01);
}

TEST_CASE("epsilon schedule") {
    const EpsilonSchedule sched{1.0, 0.05, 50};
    CHECK(sched.at(0) == 1.0);
    CHECK(sched.at(49) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(sched.at(25) < 1.0);
    CHECK(sched.at(25) > 0.05);
    for (std::size_t e = 1; e < 50; ++e) {
        CHECK(sched.at(e) <= sched.at(e - 1));
        CHECK(sched.at(e) >= 0.05);
    }
}

TEST_CASE("bellman targets") {
    const QNetwork target = constant_qnetwork({0.5, 2.0, -1.0});
    const Transition a = transition({0, 0}, 1, 1.0, {0.2, 0.3}, false);
    const Transition b = transition({0, 0}, 2, 0.25, {0.2, 0.3}, true);
    const std::vector<const Transition*> batch{&a, &b};
    const auto y = bellman_targets(batch, target, 0.99);
    CHECK(y[0] == doctest::Approx(2.98).epsilon(1e-15));
    CHECK(y[1] == 0.25);
    const auto myopic = bellman_targets(batch, target, 0.0);
    CHECK(myopic[0] == 1.0);
    CHECK(myopic[1] == 0.25);

    CHECK_THROWS(bellman_targets(std::vector<const Transition*>{}, target, 0.9));
    const Transition bad = transition({0, 0}, 1, NAN, {0, 0}, false);
    CHECK_THROWS(bellman_targets(std::vector<const Transition*>{&bad}, target, 0.9));
}

TEST_CASE("q regression gradients match finite differences") {
    const QNetwork q = make_qnetwork(3, 5, 17);
    const Matrix states = net::jittered_inputs(q.params, 6, 19);
    const std::vector<std::size_t> actions{1, 5, 3, 2, 4, 3};
    const std::vector<double> targets{0.3, -0.2, 1.1, 0.0, 0.7, -0.9};
    const auto pass = q_regression_gradients(q, states, actions, targets);
    const net::LossFn loss = [&](const net::ParamStore& p) {
        return q_regression_gradients(QNetwork{p}, states, actions, targets).loss;
    };
    const auto r = net::compare_param_gradients(q.params, pass.grads, loss, 1e-5);
    CHECK(r.checked == q.params.parameter_count());
    CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("dqn_train_step") {
    DqnSettings settings;
    settings.batch_size = 1;
    settings.opt = net::AdamWConfig{1e-3, 1e-4};

    SUBCASE("underfull buffer is a no-op") {
        QNetwork online = make_qnetwork(2, 5, 1);
        const QNetwork target = online;
        ReplayBuffer buffer(10, 2);
        const auto before = online.params;
        CHECK_FALSE(dqn_train_step(online, target, buffer, settings.opt, 0.95, 4).has_value());
        CHECK(online.params.layers[0].weight == before.layers[0].weight);
    }
    SUBCASE("single transition hand value") {
        QNetwork online = make_qnetwork(2, 5, 4);
        const QNetwork target = make_qnetwork(2, 5, 5);
        const QNetwork target_copy = target;
        ReplayBuffer buffer(1, 6);
        const std::vector<double> s{0.4, 0.6}, next{0.8, 0.1};
        buffer.push(transition(s, 3, 0.7, next, false));
        const auto qn = q_forward(target, next);
        const double y = 0.7 + 0.95 * *std::max_element(qn.begin(), qn.end());
        const double err = y - q_forward(online, s)[2];
        const auto loss = dqn_train_step(online, target, buffer, settings.opt, 0.95, 1);
        REQUIRE(loss.has_value());
        CHECK(*loss == doctest::Approx(err * err).epsilon(1e-12));
        CHECK(target.params.layers[0].weight == target_copy.params.layers[0].weight);
        CHECK(online.params.layers[0].step == 1);
    }
    SUBCASE("fixed point only decays weights") {
        QNetwork online = make_qnetwork(2, 5, 7);
        ReplayBuffer buffer(8, 8);
        Rng rng(9);
        for (int i = 0; i < 8; ++i) {
            std::vector<double> s{uniform01(rng), uniform01(rng)};
            const std::size_t a = 1 + static_cast<std::size_t>(i % 5);
            buffer.push(transition(s, a, q_forward(online, s)[a - 1], s, true));
        }
        const auto before = online.params;
        const auto loss = dqn_train_step(online, online, buffer, settings.opt, 0.95, 4);
        REQUIRE(loss.has_value());
        CHECK(*loss == 0.0);
        for (std::size_t l = 0; l < 2; ++l) {
            for (std::size_t i = 0; i < before.layers[l].weight.size(); ++i) {
                CHECK(online.params.layers[l].weight.data[i] ==
                      doctest::Approx(before.layers[l].weight.data[i] * (1.0 - 1e-3 * 1e-4)).epsilon(1e-14));
            }
            CHECK(online.params.layers[l].bias == before.layers[l].bias);
        }
    }
    SUBCASE("repeated steps overfit one batch") {
        QNetwork q = make_qnetwork(3, 5, 11);
        Matrix states(16, 3);
        Rng rng(12);
        for (auto& v : states.data) v = uniform01(rng);
        std::vector<std::size_t> actions(16);
        std::vector<double> targets(16);
        for (std::size_t i = 0; i < 16; ++i) {
            actions[i] = 1 + i % 5;
            targets[i] = uniform01(rng) * 2.0 - 1.0;
        }
        const double first = q_regression_gradients(q, states, actions, targets).loss;
        double prev = first;
        for (int step = 0; step < 100; ++step) {
            const auto pass = q_regression_gradients(q, states, actions, targets);
            prev = pass.loss;
            net::adamw_step(q.params, pass.grads, net::AdamWConfig{1e-2, 0.0});
        }
        MESSAGE("overfit loss " << first << " -> " << prev);
        CHECK(prev < 0.1 * first);
    }
}

TEST_CASE("target network sync cadence") {
    for (std::size_t every : {500, 1000}) {
        DqnSettings settings;
        settings.target_sync_every = every;
        DqnAgent agent(2, 5, settings, 1, 2);
        const std::vector<double> probe{0.3, 0.8};
        for (std::size_t i = 1; i <= 1000; ++i) {
            agent.observe(transition({0.1, 0.2}, 1, 1.0, {0.2, 0.1}, false));
            if (i % every == 0) {
                CHECK(agent.target().params.layers[1].weight == agent.online().params.layers[1].weight);
            }
            if (i % 50 == 0) agent.train_step();
        }
        CHECK(agent.syncs() == 1000 / every);
        const auto frozen = q_forward(agent.target(), probe);
        agent.train_step();
        CHECK(q_forward(agent.target(), probe) == frozen);
    }

    QNetwork a = make_qnetwork(3, 5, 1), b = make_qnetwork(3, 5, 2);
    sync_target(a, b);
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> s{uniform01(rng), uniform01(rng), uniform01(rng)};
        CHECK(q_forward(a, s) == q_forward(b, s));
    }
}

TEST_CASE("replay buffer") {
    ReplayBuffer buf(3, 1);
    CHECK_THROWS(buf.sample_indices(1));
    for (int i = 0; i < 5; ++i) buf.push(transition({0, 0}, 1, i, {0, 0}, false));
    CHECK(buf.size() == 3);
    std::vector<double> rewards;
    for (std::size_t i = 0; i < 3; ++i) rewards.push_back(buf.at(i).reward);
    std::sort(rewards.begin(), rewards.end());
    CHECK(rewards == std::vector<double>{2, 3, 4});
    CHECK_THROWS(ReplayBuffer(0, 1));

    ReplayBuffer big(100, 7);
    for (int i = 0; i < 100; ++i) big.push(transition({0, 0}, 1, i, {0, 0}, false));
    std::vector<std::size_t> counts(100, 0);
    const std::size_t n = 1000000;
    for (std::size_t i : big.sample_indices(n)) ++counts.at(i);
    const double sigma = std::sqrt(n * 0.01 * 0.99);
    for (std::size_t c : counts) CHECK(std::abs(static_cast<double>(c) - 0.01 * n) <= 5 * sigma);
}

TEST_CASE("value iteration hand cases") {
    TabularMDP one(1, 1, 0.9);
    one.p(0, 0, 0) = 1.0;
    one.r(0, 0) = 1.0;
    CHECK(value_iteration(one).value[0] == doctest::Approx(10.0).epsilon(1e-9));

    // State 0 pays 0 and moves to state 1; state 1 pays 1 and stays.
    TabularMDP chain(2, 1, 0.5);
    chain.p(0, 0, 1) = 1.0;
    chain.p(1, 0, 1) = 1.0;
    chain.r(1, 0) = 1.0;
    const auto vi = value_iteration(chain);
    CHECK(vi.value[1] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(vi.value[0] == doctest::Approx(1.0).epsilon(1e-9));

    TabularMDP undiscounted(1, 1, 1.0);
    undiscounted.p(0, 0, 0) = 1.0;
    CHECK_THROWS(value_iteration(undiscounted));
    TabularMDP leaky(1, 1, 0.5);
    leaky.p(0, 0, 0) = 0.5;
    CHECK_THROWS(leaky.validate());

    TabularMDP scaled = cli::chain_mdp();
    for (auto& r : scaled.reward) r = 3.0 * r + 2.0;
    CHECK(value_iteration(scaled).policy == value_iteration(cli::chain_mdp()).policy);
}

TEST_CASE("tabular q-learning converges to value iteration") {
    const TabularMDP mdp = cli::chain_mdp();
    const auto vi = value_iteration(mdp);
    TabularQConfig cfg;
    cfg.seed = 77;
    const QTable table = tabular_q_learning(mdp, cfg);
    CHECK(table.greedy_policy() == vi.policy);
    for (std::size_t i = 0; i < vi.q.size(); ++i) CHECK(std::abs(table.q[i] - vi.q[i]) < 1e-2);
}

TEST_CASE("greedy exploitation still covers every action under zero initialization") {
    TabularMDP mdp(1, 3, 0.5);
    for (std::size_t a = 0; a < 3; ++a) {
        mdp.p(0, a, 0) = 1.0;
        mdp.r(0, a) = -1.0 - static_cast<double>(a);
    }
    TabularQConfig cfg;
    cfg.steps = 10;
    cfg.eps_start = 0.0;
    cfg.eps_end = 0.0;
    const QTable table = tabular_q_learning(mdp, cfg);
    for (std::size_t a = 0; a < 3; ++a) CHECK(table.visits[a] >= 1);
}

TEST_CASE("learned greedy policy never picks an infeasible action") {
    // Three capacity levels; action a is feasible in state s iff a <= s. Feasible actions pay
    // more for larger a, infeasible ones pay the penalty. The next state is uniform.
    const std::size_t S = 3, A = 3;
    TabularMDP mdp(S, A, 0.9);
    std::size_t infeasible_pairs = 0;
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            for (std::size_t n = 0; n < S; ++n) mdp.p(s, a, n) = 1.0 / 3.0;
            const bool feasible = a <= s;
            infeasible_pairs += !feasible;
            mdp.r(s, a) = feasible ? 0.5 + 0.2 * static_cast<double>(a) : -1.0;
        }
    }
    mdp.validate();
    TabularQConfig cfg;
    cfg.seed = 5;
    const QTable table = tabular_q_learning(mdp, cfg);
    const auto policy = table.greedy_policy();
    for (std::size_t s = 0; s < S; ++s) {
        CHECK(policy[s] <= s);
        CHECK(policy[s] == value_iteration(mdp).policy[s]);
    }

    // Under epsilon-greedy the infeasible probability is the exploration mass on infeasible actions.
    const double eps = 0.2;
    Rng rng(8);
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<double> q(A);
        for (std::size_t a = 0; a < A; ++a) q[a] = table.at(s, a);
        const std::size_t n_infeasible = A - (s + 1);
        std::size_t hits = 0;
        const std::size_t draws = 100000;
        for (std::size_t i = 0; i < draws; ++i) hits += select_action(q, eps, rng) - 1 > s;
        const double bound = eps * static_cast<double>(n_infeasible) / static_cast<double>(A);
        CHECK(static_cast<double>(hits) / draws <= bound + 5 * std::sqrt(bound * (1 - bound) / draws) + 1e-12);
    }
    CHECK(infeasible_pairs == 3);
}
