// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/agent/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace rds::agent {

std::size_t greedy_action(std::span<const double> q_values) {
    if (q_values.empty()) throw std::invalid_argument("greedy_action: empty q-values");
    std::size_t best = 0;
    for (std::size_t a = 1; a < q_values.size(); ++a) {
        if (q_values[a] > q_values[best]) best = a;
    }
    return best + 1;
}

std::size_t select_action(std::span<const double> q_values, double epsilon, Rng& rng) {
    if (q_values.empty()) throw std::invalid_argument("select_action: empty q-values");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("select_action: epsilon outside [0, 1]");
    if (uniform01(rng) < epsilon) {
        std::uniform_int_distribution<std::size_t> pick(1, q_values.size());
        return pick(rng);
    }
    return greedy_action(q_values);
}

double EpsilonSchedule::at(std::size_t episode) const {
    if (episodes <= 1) return start;
    const double frac = std::min(1.0, static_cast<double>(episode) / static_cast<double>(episodes - 1));
    if (episode + 1 >= episodes) return end;
    if (start <= 0.0) return 0.0;
    if (end <= 0.0) return start * (1.0 - frac);
    return start * std::pow(end / start, frac);
}

}  // namespace rds::agent
