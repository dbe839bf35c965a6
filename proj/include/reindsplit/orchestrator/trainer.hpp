// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reindsplit/agent/dqn.hpp"
#include "reindsplit/core/config.hpp"
#include "reindsplit/core/dataset.hpp"
#include "reindsplit/core/metrics.hpp"
#include "reindsplit/core/records.hpp"
#include "reindsplit/env/device.hpp"
#include "reindsplit/orchestrator/shard.hpp"
#include "reindsplit/splitnet/catalog.hpp"
#include "reindsplit/splitnet/network.hpp"

namespace rds::orch {

struct EpisodeSummary {
    std::size_t episode = 0;
    std::vector<std::size_t> split_counts;  // index k-1
    std::size_t available_steps = 0;
    std::size_t feasible_steps = 0;
    std::size_t stragglers = 0;
    double straggler_rate = 0.0;  // stragglers / available_steps
    double mean_val_acc = 0.0;    // over feasible steps
    double mean_reward = 0.0;     // over available steps
    double mean_client_load = 0.0;
};

enum class TransportKind { loopback, stream };

struct RunOptions {
    TransportKind transport = TransportKind::loopback;
    std::string listen_address = "127.0.0.1:0";
    /// Train against a server started elsewhere with `--listen`.
    std::optional<std::string> connect_address;
    /// Called after every episode with that episode's summary.
    std::function<void(const EpisodeSummary&)> on_episode;
};

class RoundError : public std::runtime_error {
public:
    RoundError(std::uint32_t round, std::uint16_t device, const std::string& what)
        : std::runtime_error("round " + std::to_string(round) + ", device " + std::to_string(device) + ": " + what),
          round_(round), device_(device) {}
    std::uint32_t round() const noexcept { return round_; }
    std::uint16_t device() const noexcept { return device_; }

private:
    std::uint32_t round_;
    std::uint16_t device_;
};


struct GradNormSample {
    std::size_t episode = 0;
    std::size_t step = 0;
    std::uint16_t device = 0;
    double norm = 0.0;
};

struct RunArtifacts {
    ExperimentConfig config;
    net::SplitCatalog catalog;
    std::vector<RoundRecord> records;
    std::vector<EpisodeSummary> episodes;
    std::vector<GradNormSample> grad_norms;
    Metrics test_metrics;
    Metrics val_metrics;
    std::size_t transitions_pushed = 0;
    std::size_t optimizer_steps = 0;  // device-steps that trained the model
    net::ParamStore final_model;
    std::vector<agent::QNetwork> q_networks;
    double wall_time_s = 0.0;
};

net::NetworkSpec network_spec(const ExperimentConfig& cfg);
net::SplitCatalog build_catalog(const ExperimentConfig& cfg);
/// make_blobs followed by the train/val/test split.
Dataset build_dataset(const ExperimentConfig& cfg);

/// Agent observation: capacities scaled by the range maximum, plus the
/// device's last measured accuracy when enabled.
std::vector<double> agent_state(const env::DeviceState& s, const ExperimentConfig& cfg, double last_acc);

Metrics evaluate_global(const net::ParamStore& store, const Dataset& ds, SplitTag tag);

std::vector<EpisodeSummary> summarize_episodes(const std::vector<RoundRecord>& records, std::size_t n_episodes,
                                               std::size_t n_splits);

/// Drives the round loop. Owns devices, agents, data, and the server side of
/// every connection (unless connecting to a remote server).
class Simulation {
public:
    Simulation(const ExperimentConfig& cfg, const RunOptions& opts = {});
    ~Simulation();
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    /// Resamples every device state; all devices start available.
    void begin_episode(std::size_t episode);
    std::vector<RoundRecord> run_round(std::size_t episode, std::size_t step, double epsilon);
    /// Final evaluation; closes all connections.
    RunArtifacts finish();

    std::vector<env::DeviceState>& devices() noexcept { return devices_; }
    agent::DqnAgent& agent(std::size_t i = 0) { return *agents_.at(i); }
    std::size_t n_agents() const noexcept { return agents_.size(); }
    const net::SplitCatalog& catalog() const noexcept { return catalog_; }
    const Dataset& dataset() const noexcept { return data_; }
    const std::vector<Shard>& shards() const noexcept { return shards_; }
    /// Full model as served to devices, fetched over device 0's connection.
    net::ParamStore pull_model();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    ExperimentConfig cfg_;
    net::SplitCatalog catalog_;
    Dataset data_;
    std::vector<Shard> shards_;
    std::vector<env::DeviceState> devices_;
    std::vector<std::unique_ptr<agent::DqnAgent>> agents_;
};

RunArtifacts run_training(const ExperimentConfig& cfg, const RunOptions& opts = {});

struct CentralizedResult {
    net::ParamStore model;
    Metrics test_metrics;
};

/// Monolithic baseline: same data, init and optimizer, `steps` minibatch
/// updates on the full training split.
CentralizedResult train_centralized(const ExperimentConfig& cfg, std::size_t steps);

/// Runs only the parameter server; returns once `cfg.n_devices` connections
/// have been accepted and closed.
void serve_parameter_server(const ExperimentConfig& cfg, const std::string& listen_address,
                            const std::function<void(const std::string&)>& on_listening = {});

}  // namespace rds::orch
