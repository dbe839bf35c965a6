// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/orchestrator/shard.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "reindsplit/core/rng.hpp"

namespace rds::orch {

namespace {

// Cut `rows` into `n` contiguous pieces with sizes differing by at most one.
std::vector<Shard> even_chunks(const std::vector<std::size_t>& rows, std::size_t n) {
    std::vector<Shard> out(n);
    const std::size_t base = rows.size() / n;
    const std::size_t extra = rows.size() % n;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t len = base + (i < extra ? 1 : 0);
        out[i].assign(rows.begin() + static_cast<std::ptrdiff_t>(pos), rows.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    return out;
}

}  // namespace

std::vector<Shard> shard_iid(std::span<const std::size_t> rows, std::size_t n_devices, std::uint64_t seed) {
    if (n_devices == 0) throw std::invalid_argument("shard_iid: n_devices must be positive");
    if (n_devices > rows.size()) {
        throw std::invalid_argument("shard_iid: " + std::to_string(n_devices) + " devices but only " +
                                    std::to_string(rows.size()) + " training rows");
    }
    std::vector<std::size_t> order(rows.begin(), rows.end());
    Rng rng = make_rng(seed, StreamTag::shards);
    std::shuffle(order.begin(), order.end(), rng);
    return even_chunks(order, n_devices);
}

std::vector<Shard> shard_noniid(const Dataset& ds, std::span<const std::size_t> rows, std::size_t n_devices,
                                std::size_t shards_per_client, std::uint64_t seed) {
    if (n_devices == 0 || shards_per_client == 0) {
        throw std::invalid_argument("shard_noniid: n_devices and shards_per_client must be positive");
    }
    const std::size_t total = n_devices * shards_per_client;
    if (rows.size() < total) {
        throw std::invalid_argument("shard_noniid: " + std::to_string(rows.size()) + " rows cannot fill " +
                                    std::to_string(total) + " shards");
    }
    std::vector<std::size_t> sorted(rows.begin(), rows.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [&](std::size_t a, std::size_t b) { return ds.labels.at(a) < ds.labels.at(b); });
    const std::vector<Shard> pieces = even_chunks(sorted, total);

    std::vector<std::size_t> deal(total);
    std::iota(deal.begin(), deal.end(), 0);
    Rng rng = make_rng(seed, StreamTag::shards);
    std::shuffle(deal.begin(), deal.end(), rng);

    std::vector<Shard> out(n_devices);
    for (std::size_t d = 0; d < n_devices; ++d) {
        for (std::size_t j = 0; j < shards_per_client; ++j) {
            const Shard& p = pieces[deal[d * shards_per_client + j]];
            out[d].insert(out[d].end(), p.begin(), p.end());
        }
    }
    return out;
}

std::vector<Shard> make_shards(const ExperimentConfig& cfg, const Dataset& ds) {
    const auto rows = ds.indices(SplitTag::train);
    if (cfg.distribution == Distribution::noniid) {
        return shard_noniid(ds, rows, cfg.n_devices, cfg.shards_per_client, cfg.seed);
    }
    return shard_iid(rows, cfg.n_devices, cfg.seed);
}

std::vector<std::size_t> validation_subset(const Dataset& ds, std::size_t n, std::uint64_t seed,
                                           std::uint16_t device) {
    std::vector<std::size_t> rows = ds.indices(SplitTag::val);
    if (rows.empty()) throw std::invalid_argument("validation_subset: dataset has no validation rows");
    Rng rng = make_rng(seed, StreamTag::validation_subset, {device});
    const std::size_t take = std::min(n, rows.size());
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, rows.size() - 1);
        std::swap(rows[i], rows[pick(rng)]);
    }
    rows.resize(take);
    return rows;
}

}  // namespace rds::orch
