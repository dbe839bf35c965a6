// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "reindsplit/core/config.hpp"
#include "reindsplit/core/dataset.hpp"

namespace rds::orch {

using Shard = std::vector<std::size_t>;  // dataset row indices

/// Shuffled, contiguous chunks whose sizes differ by at most one.
std::vector<Shard> shard_iid(std::span<const std::size_t> rows, std::size_t n_devices, std::uint64_t seed);

/// Label-sorted rows cut into n_devices * shards_per_client pieces, dealt out
/// at random so each device sees only a few classes.
std::vector<Shard> shard_noniid(const Dataset& ds, std::span<const std::size_t> rows, std::size_t n_devices,
                                std::size_t shards_per_client, std::uint64_t seed);

std::vector<Shard> make_shards(const ExperimentConfig& cfg, const Dataset& ds);

/// Fixed per-device sample of the validation split, drawn without replacement.
std::vector<std::size_t> validation_subset(const Dataset& ds, std::size_t n, std::uint64_t seed,
                                           std::uint16_t device);

}  // namespace rds::orch
