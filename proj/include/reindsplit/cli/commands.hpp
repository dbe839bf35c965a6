// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reindsplit/core/config.hpp"

namespace rds::cli {

enum ExitCode : int {
    kOk = 0,
    kOracleFailed = 1,
    kConfigError = 2,
    kRuntimeError = 3,
    kIoError = 4,
};

struct TrainRequest {
    std::optional<std::filesystem::path> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    std::vector<std::string> overrides;
    std::string transport = "loopback";
    std::optional<std::string> listen;
    std::optional<std::string> connect;
};

/// Config file (or defaults) plus overrides plus --seed, validated.
ExperimentConfig resolve_config(const std::optional<std::filesystem::path>& path,
                                const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed);

/// --out when given, otherwise $REINDSPLIT_OUT/seed-<seed>, otherwise runs/seed-<seed>.
std::filesystem::path run_directory_for(const std::optional<std::filesystem::path>& out, std::uint64_t seed);

int cmd_train(const TrainRequest& req, std::ostream& out, std::ostream& err);
int cmd_oracle(std::ostream& out, std::ostream& err);

struct SweepRequest {
    std::filesystem::path grid;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
};

struct SweepTrial {
    nlohmann::json overrides;  // grid values for this trial
    ExperimentConfig config;
};

/// Cartesian product of the grid axes over the base config, deduplicated by
/// config hash, in first-seen order.
std::vector<SweepTrial> expand_grid(const nlohmann::json& spec, std::optional<std::uint64_t> seed);

int cmd_sweep(const SweepRequest& req, std::ostream& out, std::ostream& err);
int cmd_report(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

/// Parses argv (without the program name) and dispatches.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rds::cli
