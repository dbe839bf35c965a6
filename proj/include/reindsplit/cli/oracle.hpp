// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "reindsplit/agent/tabular.hpp"

namespace rds::cli {

struct OracleCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Three states, two actions, deterministic moves; the optimal policy walks
/// 0 -> 1 -> 2 and then stays in 2 for a unit reward.
agent::TabularMDP chain_mdp();

std::vector<OracleCheck> check_tabular_q();
std::vector<OracleCheck> check_gradients();
std::vector<OracleCheck> check_split_equivalence();
std::vector<OracleCheck> check_reward_values();

std::vector<OracleCheck> run_oracle_suite();

}  // namespace rds::cli
