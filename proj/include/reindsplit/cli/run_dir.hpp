// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "reindsplit/core/records.hpp"
#include "reindsplit/orchestrator/trainer.hpp"

namespace rds::cli {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kRoundsHeader =
    "episode,step,device_id,available,R_t,T_t,action,feasible,reward,acc,client_load,straggler,epsilon,q_loss";

/// Nine significant digits, enough to round-trip a 32-bit float.
std::string format_double(double v);

std::string rounds_csv(const std::vector<RoundRecord>& records);
std::vector<RoundRecord> parse_rounds_csv(const std::string& text);

std::string split_freq_csv(const std::vector<orch::EpisodeSummary>& episodes, std::size_t n_splits);

nlohmann::json summary_json(const orch::RunArtifacts& art);

/// Writes config.json, rounds.csv, split_freq.csv and summary.json.
void write_run_directory(const std::filesystem::path& dir, const orch::RunArtifacts& art);

/// Aggregates a finished run directory into report.json and returns it.
nlohmann::json build_report(const std::filesystem::path& dir);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace rds::cli
