// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace rds {

struct CapacityRange {
    double low = 0.5;
    double high = 7.5;
};

enum class AgentMode { shared, per_device };
enum class MergeMode { sequential, averaged };
enum class RewardMode { strict, soft };
enum class Distribution { iid, noniid };

struct EpsilonConfig {
    double start = 1.0;
    double end = 0.05;
};

struct RewardConfig {
    double alpha = 1.0;
    double beta = 0.5;
    double gamma_pen = 1.0;
    double penalty = 1.0;
    RewardMode mode = RewardMode::strict;
};

struct DataConfig {
    std::size_t classes = 5;
    std::size_t dim = 8;
    std::size_t samples = 4000;
    double spread = 0.75;
};

struct NetworkConfig {
    std::size_t hidden_width = 32;
    std::size_t layers = 6;
};

/// Explicit per-split requirement, replacing the derived linear cost map.
struct SplitCost {
    double r_req = 0.0;
    double t_req = 0.0;
};

struct ExperimentConfig {
    std::size_t n_devices = 5;
    std::size_t n_splits = 5;
    std::size_t episodes = 50;
    std::size_t steps_per_episode = 75;
    CapacityRange capacity_range;
    double unavailability_prob = 0.10;
    double drift_sigma = 0.25;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    double discount = 0.95;
    std::size_t batch_size = 32;
    std::size_t target_sync_every = 500;
    std::size_t replay_capacity = 10000;
    EpsilonConfig epsilon;
    RewardConfig reward;
    AgentMode agent_mode = AgentMode::shared;
    MergeMode merge_mode = MergeMode::sequential;
    bool state_accuracy_feature = false;
    std::uint64_t seed = 1;
    DataConfig data;
    Distribution distribution = Distribution::iid;
    std::size_t shards_per_client = 2;
    NetworkConfig network;
    std::optional<std::vector<SplitCost>> cost_table;
    std::size_t val_subsample = 256;
    std::size_t threads = 1;
};

/// Raised for any out-of-range or unknown configuration field. `field` is the
/// dotted path of the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

ExperimentConfig validate_config(const nlohmann::json& raw);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Reads a JSON config document. Throws std::system_error-derived
/// `ConfigFileError` when the file cannot be read.
nlohmann::json read_config_document(const std::filesystem::path& path);

class ConfigFileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Applies "a.b.c=value" to a config document. The value is parsed as JSON
/// when possible, otherwise taken as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// 16 hex digits of a 64-bit FNV-1a hash over the canonical JSON echo.
std::string config_hash(const ExperimentConfig& cfg);

const char* to_string(AgentMode m);
const char* to_string(MergeMode m);
const char* to_string(RewardMode m);
const char* to_string(Distribution d);

}  // namespace rds
