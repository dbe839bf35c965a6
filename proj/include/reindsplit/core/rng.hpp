// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rds {

using Rng = std::mt19937_64;

// Every random decision in a run draws from a stream keyed by
// (run seed, purpose, keys...). Streams never share state, so the order in
// which devices are scheduled cannot change any draw.
enum class StreamTag : std::uint64_t {
    dataset = 1,
    data_split,
    shards,
    network_init,
    qnetwork_init,
    replay,
    device_init,
    device_drift,
    action,
    minibatch,
    validation_subset,
    probe,
    tabular,
};

std::uint64_t mix64(std::uint64_t x) noexcept;

std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag,
                          std::initializer_list<std::uint64_t> keys = {}) noexcept;

inline Rng make_rng(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> keys = {}) {
    return Rng(derive_seed(seed, tag, keys));
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace rds
