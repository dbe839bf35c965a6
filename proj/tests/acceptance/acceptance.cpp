// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is 0 only when all criteria pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "reindsplit/agent/dqn.hpp"
#include "reindsplit/agent/policy.hpp"
#include "reindsplit/agent/tabular.hpp"
#include "reindsplit/cli/oracle.hpp"
#include "reindsplit/cli/run_dir.hpp"
#include "reindsplit/core/rng.hpp"
#include "reindsplit/env/device.hpp"
#include "reindsplit/env/reward.hpp"
#include "reindsplit/orchestrator/trainer.hpp"
#include "reindsplit/proto/codec.hpp"
#include "reindsplit/splitnet/gradcheck.hpp"
#include "reindsplit/splitnet/network.hpp"
#include "reindsplit/splitnet/split.hpp"

using namespace rds;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kSeeds = 5;

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string num(double v, int digits = 4) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + num(v[i], 3);
    return s;
}

double rel_diff(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return INFINITY;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_diff(a[i], b[i]));
    return worst;
}

double max_rel(const net::LayerGrad& a, const net::LayerGrad& b) {
    return std::max(max_rel(a.weight.data, b.weight.data), max_rel(a.bias, b.bias));
}

std::vector<int> cycling_labels(std::size_t n, int classes) {
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
    return y;
}

ExperimentConfig default_config(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.seed = seed;
    return cfg;
}

// Five default-config runs shared by criteria 4, 5, 6 and 10.
struct SharedRuns {
    std::vector<orch::RunArtifacts> runs;
    double seconds = 0.0;
};

SharedRuns& shared_runs() {
    static SharedRuns shared = [] {
        SharedRuns s;
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t seed = 1; seed <= kSeeds; ++seed) s.runs.push_back(orch::run_training(default_config(seed)));
        s.seconds = seconds_since(t0);
        return s;
    }();
    return shared;
}

Outcome split_equivalence() {
    const auto spec = net::make_network_spec(8, 5, 32, 6);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const net::ParamStore store = net::build_network(spec, 1000 + seed);
        Matrix x(32, 8);
        Rng rng(2000 + seed);
        std::normal_distribution<double> normal(0.0, 1.5);
        for (auto& v : x.data) v = normal(rng);
        const auto y = cycling_labels(32, 5);
        const Matrix logits = net::forward_full(store, x);
        const auto full = net::full_gradients(store, x, y);
        for (std::size_t k = 1; k <= 5; ++k) {
            net::ForwardCache cache;
            const auto smashed = net::forward_client(store, cache, 0, 0, k, x, y);
            const Matrix split = net::forward_segment(store, k, 6, smashed.activations, nullptr);
            const auto server = net::server_backward(store, smashed);
            const auto client = net::backward_client(store, cache, server.at_cut);
            worst = std::max(worst, max_rel(split.data, logits.data));
            worst = std::max(worst, rel_diff(server.at_cut.loss, full.loss.loss));
            for (std::size_t l = 0; l < k; ++l) worst = std::max(worst, max_rel(client.layers[l], full.grads.layers[l]));
            for (std::size_t l = k; l < 6; ++l) {
                worst = std::max(worst, max_rel(server.grads.layers[l - k], full.grads.layers[l]));
            }
        }
    }
    return {worst <= 1e-12, "cuts 1..5, 4 seeds, max relative difference " + num(worst)};
}

Outcome gradient_correctness() {
    double worst = 0.0;
    std::string where;
    auto track = [&](const net::GradCheckReport& r, const std::string& label) {
        if (r.max_rel_error >= worst) {
            worst = r.max_rel_error;
            where = label + " (" + r.worst + ")";
        }
    };
    const auto deep = net::make_network_spec(8, 5, 32, 6);
    const auto shallow = net::make_network_spec(6, 4, 10, 3);
    for (const auto& [spec, seed] : {std::pair{deep, 11ULL}, std::pair{shallow, 31ULL}}) {
        const net::ParamStore store = net::build_network(spec, seed);
        const Matrix x = net::jittered_inputs(store, 4, seed + 1);
        const auto y = cycling_labels(4, static_cast<int>(spec.output_dim()));
        for (std::size_t k = 1; k < store.n_layers(); ++k) {
            track(net::finite_diff_check(store, x, y, k), std::to_string(store.n_layers()) + "-layer cut " + std::to_string(k));
        }
    }
    for (std::size_t dim : {2, 3}) {
        const auto q = agent::make_qnetwork(dim, 5, 17 + dim);
        const Matrix states = net::jittered_inputs(q.params, 8, 19 + dim);
        std::vector<std::size_t> actions(8);
        std::vector<double> targets(8);
        for (std::size_t i = 0; i < 8; ++i) {
            actions[i] = 1 + (i * 3) % 5;
            targets[i] = std::sin(static_cast<double>(i));
        }
        const auto pass = agent::q_regression_gradients(q, states, actions, targets);
        const net::LossFn loss = [&](const net::ParamStore& p) {
            return agent::q_regression_gradients(agent::QNetwork{p}, states, actions, targets).loss;
        };
        track(net::compare_param_gradients(q.params, pass.grads, loss), "q-network state_dim " + std::to_string(dim));
    }
    return {worst < 1e-6, "max relative error " + num(worst) + " at " + where};
}

Outcome oracle_equivalence() {
    const auto mdp = cli::chain_mdp();
    const auto vi = agent::value_iteration(mdp);
    agent::TabularQConfig cfg;
    cfg.steps = 50000;
    cfg.seed = 2026;
    const auto table = agent::tabular_q_learning(mdp, cfg);
    double err = 0.0;
    for (std::size_t i = 0; i < vi.q.size(); ++i) err = std::max(err, std::abs(table.q[i] - vi.q[i]));
    const bool policy = table.greedy_policy() == vi.policy;
    return {policy && err < 1e-2,
            std::string("policy ") + (policy ? "matches" : "differs") + " in all 3 states, max |Q - Q*| " + num(err)};
}

Outcome straggler_decay() {
    auto& shared = shared_runs();
    std::vector<double> ratios, first, last;
    for (const auto& art : shared.runs) {
        double f = 0.0, l = 0.0;
        for (std::size_t e = 0; e < 10; ++e) f += art.episodes[e].straggler_rate / 10.0;
        for (std::size_t e = 40; e < 50; ++e) l += art.episodes[e].straggler_rate / 10.0;
        first.push_back(f);
        last.push_back(l);
        ratios.push_back(f > 0.0 ? l / f : INFINITY);
    }
    const double med = median(ratios);
    return {med <= 0.5 && shared.seconds < 600.0,
            "median last10/first10 " + num(med) + " over seeds 1..5 [" + join(ratios) + "], first10 [" + join(first) +
                "], last10 [" + join(last) + "], 5 runs in " + num(shared.seconds, 3) + " s"};
}

Outcome infeasible_suppression() {
    auto& shared = shared_runs();
    std::vector<double> rates;
    std::size_t empty_total = 0;
    for (const auto& art : shared.runs) {
        const auto& cfg = art.config;
        const auto& q = art.q_networks.at(0);
        Rng rng = make_rng(cfg.seed, StreamTag::probe, {5});
        std::size_t inside = 0, counted = 0;
        for (std::size_t i = 0; i < 1000; ++i) {
            const env::DeviceState dev = env::init_device(0, cfg.capacity_range, rng);
            const auto report = env::feasibility(dev, art.catalog);
            if (report.feasible_set().empty()) {
                ++empty_total;
                continue;
            }
            const std::size_t a = agent::greedy_action(agent::q_forward(q, orch::agent_state(dev, cfg, 0.0)));
            inside += report.feasible(a);
            ++counted;
        }
        rates.push_back(static_cast<double>(inside) / static_cast<double>(counted));
    }
    const double med = median(rates);
    return {med >= 0.95, "median greedy-in-F rate " + num(med) + " [" + join(rates) + "], " + std::to_string(empty_total) +
                             " of 5000 sampled states had an empty feasibility set and were excluded"};
}

Outcome learning_lift() {
    auto& shared = shared_runs();
    std::vector<double> gaps, split_acc, central_acc;
    for (const auto& art : shared.runs) {
        const auto central = orch::train_centralized(art.config, art.optimizer_steps);
        split_acc.push_back(art.test_metrics.accuracy);
        central_acc.push_back(central.test_metrics.accuracy);
        gaps.push_back(central.test_metrics.accuracy - art.test_metrics.accuracy);
    }
    const double med = median(gaps);
    return {med <= 0.03, "median centralized minus split accuracy " + num(med) + "; split [" + join(split_acc) +
                             "], centralized [" + join(central_acc) + "]"};
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "reindsplit-acceptance-determinism";
    fs::remove_all(root);
    auto csv_of = [&](const ExperimentConfig& cfg, const orch::RunOptions& opts, const std::string& name) {
        const auto art = orch::run_training(cfg, opts);
        cli::write_run_directory(root / name, art);
        return cli::read_text(root / name / "rounds.csv");
    };
    const ExperimentConfig cfg = default_config(1);
    orch::RunOptions stream;
    stream.transport = orch::TransportKind::stream;
    ExperimentConfig concurrent = cfg;
    concurrent.merge_mode = MergeMode::averaged;
    concurrent.threads = 4;

    const bool loop = csv_of(cfg, {}, "loop-a") == csv_of(cfg, {}, "loop-b");
    const bool tcp = csv_of(cfg, stream, "stream-a") == csv_of(cfg, stream, "stream-b");
    const bool cross = cli::read_text(root / "loop-a" / "rounds.csv") == cli::read_text(root / "stream-a" / "rounds.csv");
    const bool threads = csv_of(concurrent, {}, "threads-a") == csv_of(concurrent, {}, "threads-b");
    ExperimentConfig serial = concurrent;
    serial.threads = 1;
    const bool thread_count = csv_of(serial, {}, "threads-1") == cli::read_text(root / "threads-a" / "rounds.csv");
    fs::remove_all(root);
    auto yn = [](bool b) { return b ? "identical" : "DIFFERENT"; };
    return {loop && tcp && cross && threads && thread_count,
            std::string("loopback ") + yn(loop) + ", stream " + yn(tcp) + ", loopback vs stream " + yn(cross) +
                ", 4 threads " + yn(threads) + ", 4 vs 1 threads " + yn(thread_count)};
}

Outcome reward_fidelity() {
    Rng rng(8);
    const auto catalog = orch::build_catalog(default_config(1));
    std::size_t violations = 0, samples = 0;
    for (int i = 0; i < 100000; ++i) {
        env::RewardWeights w;
        w.alpha = 2.0 * uniform01(rng);
        w.beta = uniform01(rng);
        w.gamma_pen = 2.0 * uniform01(rng);
        w.penalty_magnitude = 2.0 * uniform01(rng);
        const auto report = env::feasibility(env::init_device(0, {0.5, 7.5}, rng), catalog);
        const double acc = uniform01(rng);
        for (std::size_t k = 1; k <= 5; ++k, ++samples) {
            const double r = env::compute_reward(acc, report, k, w);
            if (r < -w.gamma_pen * w.penalty_magnitude || r > w.alpha) ++violations;
            if (report.feasible(k) && r != w.alpha * acc) ++violations;
            if (!report.feasible(k) && r != -w.gamma_pen * w.penalty_magnitude) ++violations;
        }
    }
    env::FeasibilityReport fixture;
    fixture.splits = {{-1.0, 0.5, false}};
    env::RewardWeights soft{1.0, 0.5, 1.0, 1.0, RewardMode::soft};
    const double hand = env::compute_reward(0.8, fixture, 1, soft);
    const bool hand_ok = std::abs(hand - 0.30) <= 1e-12;
    return {violations == 0 && hand_ok, std::to_string(samples) + " strict-mode samples, " + std::to_string(violations) +
                                            " violations; soft fixture " + num(hand, 17)};
}

proto::Message random_message(Rng& rng) {
    proto::Message m;
    m.type = static_cast<proto::MsgType>(1 + rng() % 5);
    m.round = static_cast<std::uint32_t>(rng());
    m.device = static_cast<std::uint16_t>(rng());
    m.cut = static_cast<std::uint8_t>(rng());
    std::size_t n = 0;
    switch (m.type) {
        case proto::MsgType::smashed:
        case proto::MsgType::grad_at_cut: n = 2; break;
        case proto::MsgType::param_pull_request: n = 0; break;
        case proto::MsgType::param_segment: n = 1; break;
        case proto::MsgType::param_push: n = rng() % 2; break;
    }
    std::normal_distribution<float> normal(0.0f, 10.0f);
    for (std::size_t i = 0; i < n; ++i) {
        proto::Tensor t;
        const std::size_t rank = 1 + rng() % 4;
        for (std::size_t d = 0; d < rank; ++d) t.dims.push_back(static_cast<std::uint32_t>(rng() % 6));
        t.data.resize(t.element_count());
        for (auto& v : t.data) v = normal(rng);
        m.tensors.push_back(std::move(t));
    }
    return m;
}

Outcome codec_robustness() {
    Rng rng(99);
    std::size_t roundtrip_fail = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto m = random_message(rng);
        try {
            if (!(proto::decode(proto::encode(m)) == m)) ++roundtrip_fail;
        } catch (const std::exception&) {
            ++roundtrip_fail;
        }
    }
    std::vector<std::vector<std::uint8_t>> seeds;
    for (int i = 0; i < 64; ++i) seeds.push_back(proto::encode(random_message(rng)));
    std::size_t typed = 0, accepted = 0, untyped = 0;
    for (std::size_t i = 0; i < 1000000; ++i) {
        auto bytes = seeds[i % seeds.size()];
        switch (rng() % 5) {
            case 0:
                for (int f = 0; f < 1 + static_cast<int>(rng() % 8); ++f) bytes[rng() % bytes.size()] = static_cast<std::uint8_t>(rng());
                break;
            case 1: bytes.resize(rng() % bytes.size()); break;
            case 2:
                bytes.resize(rng() % 96);
                for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
                break;
            case 3:
                if (bytes.size() > 4) bytes[4 + rng() % (std::min<std::size_t>(bytes.size(), proto::kHeaderSize) - 4)] = static_cast<std::uint8_t>(rng());
                break;
            default:
                for (int e = 0; e < 1 + static_cast<int>(rng() % 16); ++e) bytes.push_back(static_cast<std::uint8_t>(rng()));
                break;
        }
        try {
            proto::decode(bytes);
            ++accepted;
        } catch (const proto::DecodeError&) {
            ++typed;
        } catch (...) {
            ++untyped;
        }
    }
    return {roundtrip_fail == 0 && untyped == 0,
            "10000 round-trips, " + std::to_string(roundtrip_fail) + " mismatches; 1000000 fuzzed frames: " +
                std::to_string(typed) + " typed rejections, " + std::to_string(accepted) + " accepted, " +
                std::to_string(untyped) + " untyped errors"};
}

Outcome reporting_fidelity() {
    auto& shared = shared_runs();
    const fs::path root = fs::temp_directory_path() / "reindsplit-acceptance-report";
    fs::remove_all(root);
    std::size_t mismatches = 0, out_of_range = 0, rows = 0;
    for (const auto& art : shared.runs) {
        const fs::path dir = root / ("seed-" + std::to_string(art.config.seed));
        cli::write_run_directory(dir, art);
        const auto report = cli::build_report(dir);
        const auto records = cli::parse_rounds_csv(cli::read_text(dir / "rounds.csv"));
        for (const auto& row : report.at("split_frequencies")) {
            const auto e = row.at("episode").get<std::size_t>();
            std::size_t sum = 0, logged = 0;
            for (auto c : row.at("counts").get<std::vector<std::size_t>>()) sum += c;
            for (const auto& r : records) logged += r.available && r.episode == e;
            mismatches += sum != logged;
            ++rows;
        }
        for (double v : report.at("metrics").at("normalized").get<std::vector<double>>()) {
            out_of_range += !(v >= 0.01 && v <= 1.0);
        }
    }
    fs::remove_all(root);
    return {mismatches == 0 && out_of_range == 0, std::to_string(rows) + " episode rows, " + std::to_string(mismatches) +
                                                      " count mismatches, " + std::to_string(out_of_range) +
                                                      " normalized metrics outside [0.01, 1]"};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0 when the criterion sets no runtime limit
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "split_equivalence", 10.0, split_equivalence},
        {2, "gradient_correctness", 60.0, gradient_correctness},
        {3, "oracle_equivalence", 10.0, oracle_equivalence},
        {4, "straggler_decay", 0.0, straggler_decay},
        {5, "infeasible_action_suppression", 0.0, infeasible_suppression},
        {6, "learning_lift", 0.0, learning_lift},
        {7, "determinism", 0.0, determinism},
        {8, "reward_formula_fidelity", 0.0, reward_fidelity},
        {9, "codec_robustness", 0.0, codec_robustness},
        {10, "reporting_fidelity", 0.0, reporting_fidelity},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = seconds_since(t0);
        if (c.budget_s > 0.0 && secs >= c.budget_s) {
            o.passed = false;
            o.detail += "; exceeded the " + num(c.budget_s, 3) + " s budget";
        }
        failures += !o.passed;
        std::cout << (o.passed ? "PASS" : "FAIL") << "  criterion " << c.id << " " << c.name << ": " << o.detail << " ("
                  << num(secs, 3) << " s)" << std::endl;
    }
    std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
