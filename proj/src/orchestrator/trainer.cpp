// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/orchestrator/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include "reindsplit/agent/policy.hpp"
#include "reindsplit/core/rng.hpp"
#include "reindsplit/env/reward.hpp"
#include "reindsplit/orchestrator/client.hpp"
#include "reindsplit/orchestrator/server.hpp"
#include "reindsplit/splitnet/adamw.hpp"

namespace rds::orch {

net::NetworkSpec network_spec(const ExperimentConfig& cfg) {
    return net::make_network_spec(cfg.data.dim, cfg.data.classes, cfg.network.hidden_width, cfg.network.layers);
}

net::SplitCatalog build_catalog(const ExperimentConfig& cfg) {
    return net::catalog_cuts(network_spec(cfg), cfg.n_splits, cfg.capacity_range, cfg.cost_table);
}

Dataset build_dataset(const ExperimentConfig& cfg) {
    return split_train_val_test(make_blobs(cfg.data.samples, cfg.data.classes, cfg.data.dim, cfg.data.spread, cfg.seed),
                                cfg.seed);
}

std::vector<double> agent_state(const env::DeviceState& s, const ExperimentConfig& cfg, double last_acc) {
    const double scale = cfg.capacity_range.high;
    std::vector<double> state{s.resources / scale, s.time_window / scale};
    if (cfg.state_accuracy_feature) state.push_back(last_acc);
    return state;
}

Metrics evaluate_global(const net::ParamStore& store, const Dataset& ds, SplitTag tag) {
    const auto rows = ds.indices(tag);
    const Matrix x = gather_rows(ds.features, rows);
    const std::vector<int> y = gather_labels(ds.labels, rows);
    const std::vector<int> pred = net::argmax_rows(net::forward_full(store, x));
    return classification_metrics(pred, y, ds.n_classes);
}

std::vector<EpisodeSummary> summarize_episodes(const std::vector<RoundRecord>& records, std::size_t n_episodes,
                                               std::size_t n_splits) {
    std::vector<EpisodeSummary> out(n_episodes);
    std::vector<double> acc_sum(n_episodes, 0.0), reward_sum(n_episodes, 0.0), load_sum(n_episodes, 0.0);
    for (std::size_t e = 0; e < n_episodes; ++e) {
        out[e].episode = e;
        out[e].split_counts.assign(n_splits, 0);
    }
    for (const auto& r : records) {
        if (r.episode >= n_episodes || !r.available) continue;
        auto& s = out[r.episode];
        if (r.action < 1 || r.action > n_splits) throw std::out_of_range("record action outside [1, K]");
        ++s.split_counts[r.action - 1];
        ++s.available_steps;
        reward_sum[r.episode] += r.reward;
        load_sum[r.episode] += r.client_load;
        if (r.straggler) ++s.stragglers;
        if (r.feasible) {
            ++s.feasible_steps;
            acc_sum[r.episode] += r.acc;
        }
    }
    for (std::size_t e = 0; e < n_episodes; ++e) {
        auto& s = out[e];
        if (s.available_steps > 0) {
            const auto n = static_cast<double>(s.available_steps);
            s.straggler_rate = static_cast<double>(s.stragglers) / n;
            s.mean_reward = reward_sum[e] / n;
            s.mean_client_load = load_sum[e] / n;
        }
        if (s.feasible_steps > 0) s.mean_val_acc = acc_sum[e] / static_cast<double>(s.feasible_steps);
    }
    return out;
}

namespace {

net::AdamWConfig model_optimizer(const ExperimentConfig& cfg) {
    net::AdamWConfig opt;
    opt.lr = cfg.lr;
    opt.weight_decay = cfg.weight_decay;
    return opt;
}

net::ParamStore initial_model(const ExperimentConfig& cfg) {
    return net::build_network(network_spec(cfg), derive_seed(cfg.seed, StreamTag::network_init));
}

// Draws min(n, pool.size()) rows without replacement.
std::vector<std::size_t> sample_rows(const std::vector<std::size_t>& pool, std::size_t n, Rng& rng) {
    std::vector<std::size_t> rows = pool;
    const std::size_t take = std::min(n, rows.size());
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, rows.size() - 1);
        std::swap(rows[i], rows[pick(rng)]);
    }
    rows.resize(take);
    return rows;
}

double accuracy_on(const net::ParamStore& model, const Matrix& x, const std::vector<int>& y) {
    const std::vector<int> pred = net::argmax_rows(net::forward_full(model, x));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hits += pred[i] == y[i] ? 1 : 0;
    return y.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(y.size());
}

// Runs fn(i) for every i in `items`, on up to `threads` workers. Exceptions
// are rethrown in item order once all workers have finished.
template <typename Fn>
void for_each_device(const std::vector<std::size_t>& items, std::size_t threads, Fn fn) {
    std::vector<std::exception_ptr> errors(items.size());
    auto run = [&](std::size_t j) {
        try {
            fn(items[j]);
        } catch (...) {
            errors[j] = std::current_exception();
        }
    };
    const std::size_t workers = std::min(threads, items.size());
    if (workers <= 1) {
        for (std::size_t j = 0; j < items.size(); ++j) run(j);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t j = w; j < items.size(); j += workers) run(j);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

class ServerThreads {
public:
    void spawn(std::unique_ptr<proto::Endpoint> ep, SplitServer& server) {
        std::lock_guard lock(mu_);
        threads_.emplace_back([this, ep = std::move(ep), &server]() mutable {
            try {
                serve_connection(*ep, server);
            } catch (const std::exception& e) {
                std::lock_guard l(mu_);
                errors_.push_back(e.what());
            }
        });
    }

    void join() {
        std::vector<std::thread> threads;
        {
            std::lock_guard lock(mu_);
            threads.swap(threads_);
        }
        for (auto& t : threads) t.join();
    }

    std::vector<std::string> errors() {
        std::lock_guard lock(mu_);
        return errors_;
    }

private:
    std::mutex mu_;
    std::vector<std::thread> threads_;
    std::vector<std::string> errors_;
};

}  // namespace

struct Simulation::Impl {
    net::NetworkSpec spec;
    env::DeviceDynamics dynamics;
    env::RewardWeights weights;
    std::unique_ptr<SplitServer> server;
    std::unique_ptr<proto::StreamListener> listener;
    ServerThreads server_threads;
    std::vector<std::unique_ptr<DeviceClient>> clients;
    std::vector<Matrix> val_x;
    std::vector<std::vector<int>> val_y;
    std::vector<double> last_acc;
    std::vector<RoundRecord> records;
    std::vector<GradNormSample> grad_norms;
    std::size_t transitions = 0;
    std::size_t optimizer_steps = 0;
    std::uint32_t next_round = 0;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    void shutdown() {
        for (auto& c : clients) c->close();
        server_threads.join();
        if (listener) listener->close();
    }

    // Rewrites a device-side failure with the server's own diagnosis when
    // the server hung up first.
    [[noreturn]] void fail(std::uint32_t round, std::uint16_t device, const std::string& what) {
        shutdown();
        const auto errs = server_threads.errors();
        throw RoundError(round, device, errs.empty() ? what : what + " (server: " + errs.front() + ")");
    }
};

Simulation::Simulation(const ExperimentConfig& cfg, const RunOptions& opts)
    : impl_(std::make_unique<Impl>()),
      cfg_(cfg),
      catalog_(build_catalog(cfg)),
      data_(build_dataset(cfg)),
      shards_(make_shards(cfg, data_)) {
    auto& im = *impl_;
    im.spec = network_spec(cfg);
    im.dynamics = {cfg.capacity_range, cfg.drift_sigma, cfg.unavailability_prob};
    im.weights = env::RewardWeights::from(cfg.reward);
    im.last_acc.assign(cfg.n_devices, 0.0);

    for (std::size_t i = 0; i < cfg.n_devices; ++i) {
        const auto rows = validation_subset(data_, cfg.val_subsample, cfg.seed, static_cast<std::uint16_t>(i));
        im.val_x.push_back(gather_rows(data_.features, rows));
        im.val_y.push_back(gather_labels(data_.labels, rows));
    }

    agent::DqnSettings settings;
    settings.discount = cfg.discount;
    settings.batch_size = cfg.batch_size;
    settings.target_sync_every = cfg.target_sync_every;
    settings.replay_capacity = cfg.replay_capacity;
    settings.opt = model_optimizer(cfg);
    const std::size_t n_agents = cfg.agent_mode == AgentMode::shared ? 1 : cfg.n_devices;
    const std::size_t state_dim = cfg.state_accuracy_feature ? 3 : 2;
    for (std::size_t a = 0; a < n_agents; ++a) {
        agents_.push_back(std::make_unique<agent::DqnAgent>(state_dim, cfg.n_splits, settings,
                                                            derive_seed(cfg.seed, StreamTag::qnetwork_init, {a}),
                                                            derive_seed(cfg.seed, StreamTag::replay, {a})));
    }

    const auto opt = model_optimizer(cfg);
    std::vector<std::unique_ptr<proto::Endpoint>> device_ends;
    if (opts.connect_address) {
        for (std::size_t i = 0; i < cfg.n_devices; ++i) device_ends.push_back(proto::stream_connect(*opts.connect_address));
    } else {
        im.server = std::make_unique<SplitServer>(initial_model(cfg), cfg.merge_mode, opt);
        if (opts.transport == TransportKind::loopback) {
            for (std::size_t i = 0; i < cfg.n_devices; ++i) {
                auto [device_end, server_end] = proto::loopback_pair();
                im.server_threads.spawn(std::move(server_end), *im.server);
                device_ends.push_back(std::move(device_end));
            }
        } else {
            im.listener = std::make_unique<proto::StreamListener>(opts.listen_address);
            for (std::size_t i = 0; i < cfg.n_devices; ++i) {
                device_ends.push_back(proto::stream_connect(im.listener->address()));
                im.server_threads.spawn(im.listener->accept(), *im.server);
            }
        }
    }
    for (std::size_t i = 0; i < cfg.n_devices; ++i) {
        im.clients.push_back(
            std::make_unique<DeviceClient>(static_cast<std::uint16_t>(i), im.spec, std::move(device_ends[i]), opt));
    }
    begin_episode(0);
}

Simulation::~Simulation() {
    try {
        impl_->shutdown();
    } catch (...) {
    }
}

void Simulation::begin_episode(std::size_t episode) {
    Rng rng = make_rng(cfg_.seed, StreamTag::device_init, {episode});
    devices_ = env::init_devices(cfg_.n_devices, cfg_.capacity_range, rng);
}

std::vector<RoundRecord> Simulation::run_round(std::size_t episode, std::size_t step, double epsilon) {
    auto& im = *impl_;
    const std::size_t n = cfg_.n_devices;
    const auto round = static_cast<std::uint32_t>(episode * cfg_.steps_per_episode + step);
    const bool terminal = step + 1 == cfg_.steps_per_episode;

    struct Pending {
        std::vector<double> state;
        std::size_t action = 0;
        env::FeasibilityReport report;
        bool train = false;
        double acc = 0.0;
        double grad_norm = 0.0;
    };
    std::vector<Pending> pend(n);

    // Observe and act. Every device decides against the same Q snapshot.
    std::vector<std::size_t> training;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& dev = devices_[i];
        if (!dev.available) continue;
        auto& ag = *agents_[cfg_.agent_mode == AgentMode::shared ? 0 : i];
        auto& p = pend[i];
        p.state = agent_state(dev, cfg_, im.last_acc[i]);
        Rng rng = make_rng(cfg_.seed, StreamTag::action, {i, episode, step});
        p.action = agent::select_action(agent::q_forward(ag.online(), p.state), epsilon, rng);
        p.report = env::feasibility(dev, catalog_);
        p.train = p.report.feasible(p.action) || cfg_.reward.mode == RewardMode::soft;
        if (p.train) training.push_back(i);
    }

    // Split training. Sequential merging talks to the server one device at a
    // time in index order; averaged merging trains against the round-start
    // snapshot, so devices may proceed concurrently.
    auto train_one = [&](std::size_t i) {
        Rng rng = make_rng(cfg_.seed, StreamTag::minibatch, {i, episode, step});
        const auto rows = sample_rows(shards_[i], cfg_.batch_size, rng);
        const Matrix x = gather_rows(data_.features, rows);
        const auto y = gather_labels(data_.labels, rows);
        const auto res = im.clients[i]->train_step(round, catalog_.at(pend[i].action).cut_layer, x, y);
        pend[i].grad_norm = res.client_grad_norm;
    };
    const std::uint32_t eval_round = cfg_.merge_mode == MergeMode::averaged ? round + 1 : round;
    auto eval_one = [&](std::size_t i) {
        pend[i].acc = accuracy_on(im.clients[i]->pull_model(eval_round), im.val_x[i], im.val_y[i]);
    };
    const std::size_t train_threads = cfg_.merge_mode == MergeMode::averaged ? cfg_.threads : 1;
    auto attributed = [](auto fn) {
        return [fn](std::size_t i) {
            try {
                fn(i);
            } catch (const RemoteError&) {
                throw;
            } catch (const std::exception& e) {
                throw RemoteError(static_cast<std::uint16_t>(i), e.what());
            }
        };
    };
    try {
        for_each_device(training, train_threads, attributed(train_one));
        for_each_device(training, cfg_.threads, attributed(eval_one));
    } catch (const RemoteError& e) {
        im.fail(round, e.device(), e.detail());
    }
    im.next_round = std::max(im.next_round, eval_round + 1);

    // Rewards, logging, transitions, and state drift.
    std::vector<RoundRecord> out;
    out.reserve(n);
    std::vector<std::size_t> record_of(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& dev = devices_[i];
        RoundRecord r;
        r.episode = episode;
        r.step = step;
        r.device_id = dev.device_id;
        r.available = dev.available;
        r.resources = dev.resources;
        r.time_window = dev.time_window;
        r.epsilon = epsilon;

        Rng drift = make_rng(cfg_.seed, StreamTag::device_drift, {i, episode, step});
        const env::DeviceState next = env::step_device_state(dev, im.dynamics, drift);

        if (dev.available) {
            auto& p = pend[i];
            r.action = p.action;
            r.feasible = p.report.feasible(p.action);
            r.straggler = !r.feasible;
            r.client_load = catalog_.at(p.action).load_fraction;
            if (p.train) {
                r.acc = p.acc;
                im.last_acc[i] = p.acc;
                ++im.optimizer_steps;
                im.grad_norms.push_back({episode, step, dev.device_id, p.grad_norm});
            }
            r.reward = env::compute_reward(r.acc, p.report, p.action, im.weights);

            auto& ag = *agents_[cfg_.agent_mode == AgentMode::shared ? 0 : i];
            ag.observe({p.state, p.action, r.reward, agent_state(next, cfg_, im.last_acc[i]), terminal});
            ++im.transitions;
            record_of[i] = out.size();
        }
        out.push_back(r);
        devices_[i] = next;
    }

    // One Q-learning update per round and agent.
    if (cfg_.agent_mode == AgentMode::shared) {
        const auto loss = agents_[0]->train_step();
        for (auto& r : out) {
            if (r.available) r.q_loss = loss;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const auto loss = agents_[i]->train_step();
            if (record_of[i] < n) out[record_of[i]].q_loss = loss;
        }
    }

    im.records.insert(im.records.end(), out.begin(), out.end());
    return out;
}

net::ParamStore Simulation::pull_model() {
    auto& im = *impl_;
    try {
        return im.clients.at(0)->pull_model(im.next_round);
    } catch (const RemoteError& e) {
        im.fail(im.next_round, e.device(), e.detail());
    }
}

RunArtifacts Simulation::finish() {
    auto& im = *impl_;
    RunArtifacts art;
    art.config = cfg_;
    art.catalog = catalog_;
    art.final_model = pull_model();
    art.test_metrics = evaluate_global(art.final_model, data_, SplitTag::test);
    art.val_metrics = evaluate_global(art.final_model, data_, SplitTag::val);
    art.records = im.records;
    art.episodes = summarize_episodes(art.records, cfg_.episodes, cfg_.n_splits);
    art.grad_norms = im.grad_norms;
    art.transitions_pushed = im.transitions;
    art.optimizer_steps = im.optimizer_steps;
    for (const auto& a : agents_) art.q_networks.push_back(a->online());
    im.shutdown();
    if (!art.final_model.all_finite()) throw net::NonFiniteError("final model contains non-finite parameters");
    art.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - im.started).count();
    return art;
}

RunArtifacts run_training(const ExperimentConfig& cfg, const RunOptions& opts) {
    Simulation sim(cfg, opts);
    const agent::EpsilonSchedule schedule{cfg.epsilon.start, cfg.epsilon.end, cfg.episodes};
    for (std::size_t e = 0; e < cfg.episodes; ++e) {
        sim.begin_episode(e);
        const double eps = schedule.at(e);
        std::vector<RoundRecord> episode_records;
        for (std::size_t s = 0; s < cfg.steps_per_episode; ++s) {
            auto rec = sim.run_round(e, s, eps);
            episode_records.insert(episode_records.end(), rec.begin(), rec.end());
        }
        if (opts.on_episode) {
            auto summary = summarize_episodes(episode_records, e + 1, cfg.n_splits).back();
            opts.on_episode(summary);
        }
    }
    return sim.finish();
}

CentralizedResult train_centralized(const ExperimentConfig& cfg, std::size_t steps) {
    const Dataset ds = build_dataset(cfg);
    const auto train_rows = ds.indices(SplitTag::train);
    net::ParamStore model = initial_model(cfg);
    const auto opt = model_optimizer(cfg);
    for (std::size_t t = 0; t < steps; ++t) {
        Rng rng = make_rng(cfg.seed, StreamTag::minibatch, {0xFFFFu, t});
        const auto rows = sample_rows(train_rows, cfg.batch_size, rng);
        const auto pass = net::full_gradients(model, gather_rows(ds.features, rows), gather_labels(ds.labels, rows));
        net::adamw_step(model, pass.grads, opt);
    }
    Metrics test = evaluate_global(model, ds, SplitTag::test);
    return {std::move(model), test};
}

void serve_parameter_server(const ExperimentConfig& cfg, const std::string& listen_address,
                            const std::function<void(const std::string&)>& on_listening) {
    SplitServer server(initial_model(cfg), cfg.merge_mode, model_optimizer(cfg));
    proto::StreamListener listener(listen_address);
    if (on_listening) on_listening(listener.address());
    ServerThreads threads;
    for (std::size_t i = 0; i < cfg.n_devices; ++i) threads.spawn(listener.accept(), server);
    threads.join();
    const auto errs = threads.errors();
    if (!errs.empty()) throw std::runtime_error("parameter server: " + errs.front());
}

}  // namespace rds::orch
