// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "reindsplit/core/rng.hpp"

namespace rds::agent {

struct Transition {
    std::vector<double> state;
    std::size_t action = 0;  // 1-based split index
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminal = false;
};

/// Fixed-capacity ring buffer with a uniform (with replacement) sampler.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, std::uint64_t seed);

    void push(Transition t);
    std::size_t size() const noexcept { return items_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    const Transition& at(std::size_t i) const { return items_.at(i); }

    std::vector<std::size_t> sample_indices(std::size_t n);

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> items_;
    Rng rng_;
};

}  // namespace rds::agent
