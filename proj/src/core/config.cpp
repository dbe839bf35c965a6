// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/core/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rds {

using nlohmann::json;

namespace {

std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

double read_number(const json& v, const std::string& field) {
    if (!v.is_number()) throw ConfigError(field, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field, "must be finite");
    return x;
}

std::size_t read_count(const json& v, const std::string& field) {
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_integer()) {
        if (v.get<long long>() < 0) throw ConfigError(field, "must be non-negative");
        return static_cast<std::size_t>(v.get<long long>());
    }
    throw ConfigError(field, "expected a non-negative integer");
}

bool read_bool(const json& v, const std::string& field) {
    if (!v.is_boolean()) throw ConfigError(field, "expected true or false");
    return v.get<bool>();
}

std::string read_string(const json& v, const std::string& field) {
    if (!v.is_string()) throw ConfigError(field, "expected a string");
    return v.get<std::string>();
}

void require_object(const json& v, const std::string& field) {
    if (!v.is_object()) throw ConfigError(field.empty() ? "<root>" : field, "expected an object");
}

[[noreturn]] void unknown_key(const std::string& field) {
    throw ConfigError(field, "unknown key '" + field + "'");
}

void parse_epsilon(const json& obj, EpsilonConfig& out) {
    require_object(obj, "epsilon");
    for (const auto& [key, v] : obj.items()) {
        const auto field = join("epsilon", key);
        if (key == "start") out.start = read_number(v, field);
        else if (key == "end") out.end = read_number(v, field);
        else unknown_key(field);
    }
}

void parse_reward(const json& obj, RewardConfig& out) {
    require_object(obj, "reward");
    for (const auto& [key, v] : obj.items()) {
        const auto field = join("reward", key);
        if (key == "alpha") out.alpha = read_number(v, field);
        else if (key == "beta") out.beta = read_number(v, field);
        else if (key == "gamma_pen") out.gamma_pen = read_number(v, field);
        else if (key == "penalty") out.penalty = read_number(v, field);
        else if (key == "mode") {
            const auto s = read_string(v, field);
            if (s == "strict") out.mode = RewardMode::strict;
            else if (s == "soft") out.mode = RewardMode::soft;
            else throw ConfigError(field, "expected 'strict' or 'soft'");
        } else unknown_key(field);
    }
}

void parse_data(const json& obj, DataConfig& out) {
    require_object(obj, "data");
    for (const auto& [key, v] : obj.items()) {
        const auto field = join("data", key);
        if (key == "classes") out.classes = read_count(v, field);
        else if (key == "dim") out.dim = read_count(v, field);
        else if (key == "samples") out.samples = read_count(v, field);
        else if (key == "spread") out.spread = read_number(v, field);
        else unknown_key(field);
    }
}

void parse_distribution(const json& v, ExperimentConfig& out) {
    // Either "iid" / "noniid" or {"kind": ..., "shards_per_client": n}.
    auto set_kind = [&](const std::string& s, const std::string& field) {
        if (s == "iid") out.distribution = Distribution::iid;
        else if (s == "noniid") out.distribution = Distribution::noniid;
        else throw ConfigError(field, "expected 'iid' or 'noniid'");
    };
    if (v.is_string()) {
        set_kind(v.get<std::string>(), "distribution");
        return;
    }
    require_object(v, "distribution");
    for (const auto& [key, item] : v.items()) {
        const auto field = join("distribution", key);
        if (key == "kind") set_kind(read_string(item, field), field);
        else if (key == "shards_per_client") out.shards_per_client = read_count(item, field);
        else unknown_key(field);
    }
}

void parse_network(const json& obj, NetworkConfig& out) {
    require_object(obj, "network");
    for (const auto& [key, v] : obj.items()) {
        const auto field = join("network", key);
        if (key == "hidden_width") out.hidden_width = read_count(v, field);
        else if (key == "layers") out.layers = read_count(v, field);
        else unknown_key(field);
    }
}

std::vector<SplitCost> parse_cost_table(const json& v) {
    if (!v.is_array()) throw ConfigError("cost_table", "expected an array of [r_req, t_req] pairs");
    std::vector<SplitCost> table;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto field = "cost_table[" + std::to_string(i) + "]";
        const auto& e = v[i];
        SplitCost c;
        if (e.is_array() && e.size() == 2) {
            c.r_req = read_number(e[0], field);
            c.t_req = read_number(e[1], field);
        } else if (e.is_object()) {
            for (const auto& [key, item] : e.items()) {
                if (key == "r_req") c.r_req = read_number(item, field + ".r_req");
                else if (key == "t_req") c.t_req = read_number(item, field + ".t_req");
                else unknown_key(field + "." + key);
            }
        } else {
            throw ConfigError(field, "expected [r_req, t_req]");
        }
        table.push_back(c);
    }
    return table;
}

void check(bool ok, const std::string& field, const std::string& message) {
    if (!ok) throw ConfigError(field, message);
}

void range_check(const ExperimentConfig& c) {
    check(c.n_devices >= 1, "n_devices", "must be at least 1");
    check(c.n_devices <= 65535, "n_devices", "must fit in 16 bits");
    check(c.n_splits >= 2, "n_splits", "must be at least 2");
    check(c.episodes >= 1, "episodes", "must be at least 1");
    check(c.steps_per_episode >= 1, "steps_per_episode", "must be at least 1");
    check(c.capacity_range.low < c.capacity_range.high, "capacity_range", "low >= high");
    check(c.capacity_range.low >= 0.0, "capacity_range", "low must be non-negative");
    check(c.unavailability_prob >= 0.0 && c.unavailability_prob < 1.0, "unavailability_prob",
          "must lie in [0, 1)");
    check(c.drift_sigma >= 0.0, "drift_sigma", "must be non-negative");
    check(c.lr > 0.0, "lr", "must be positive");
    check(c.weight_decay >= 0.0, "weight_decay", "must be non-negative");
    check(c.discount >= 0.0 && c.discount <= 1.0, "discount", "must lie in [0, 1]");
    check(c.batch_size >= 1, "batch_size", "must be at least 1");
    check(c.target_sync_every >= 1, "target_sync_every", "must be at least 1");
    check(c.replay_capacity >= c.batch_size, "replay_capacity", "must be at least batch_size");
    check(c.epsilon.start >= 0.0 && c.epsilon.start <= 1.0, "epsilon.start", "must lie in [0, 1]");
    check(c.epsilon.end >= 0.0 && c.epsilon.end <= 1.0, "epsilon.end", "must lie in [0, 1]");
    check(c.epsilon.end <= c.epsilon.start, "epsilon.end", "must not exceed epsilon.start");
    check(c.reward.alpha >= 0.0, "reward.alpha", "must be non-negative");
    check(c.reward.beta >= 0.0, "reward.beta", "must be non-negative");
    check(c.reward.gamma_pen >= 0.0, "reward.gamma_pen", "must be non-negative");
    check(c.reward.penalty >= 0.0, "reward.penalty", "must be non-negative");
    check(c.data.classes >= 2, "data.classes", "must be at least 2");
    check(c.data.classes <= 2 * c.data.dim, "data.classes", "must not exceed 2 * data.dim");
    check(c.data.dim >= 2, "data.dim", "must be at least 2");
    check(c.data.samples >= 20, "data.samples", "must be at least 20");
    check(c.data.samples >= c.data.classes, "data.samples", "fewer samples than classes");
    check(c.data.spread >= 0.0, "data.spread", "must be non-negative");
    check(c.shards_per_client >= 1, "distribution.shards_per_client", "must be at least 1");
    check(c.network.hidden_width >= 1, "network.hidden_width", "must be at least 1");
    check(c.network.layers >= c.n_splits + 1, "network.layers", "must be at least n_splits + 1");
    check(c.network.layers <= 255, "network.layers", "must fit the 8-bit cut field");
    if (c.cost_table) {
        check(c.cost_table->size() == c.n_splits, "cost_table", "needs exactly n_splits entries");
        for (std::size_t k = 0; k < c.cost_table->size(); ++k) {
            const auto& e = (*c.cost_table)[k];
            const auto field = "cost_table[" + std::to_string(k) + "]";
            check(e.r_req >= 0.0 && e.t_req >= 0.0, field, "requirements must be non-negative");
            if (k > 0) {
                const auto& prev = (*c.cost_table)[k - 1];
                check(e.r_req >= prev.r_req && e.t_req >= prev.t_req, field,
                      "requirements must be non-decreasing in the split index");
            }
        }
    }
    check(c.val_subsample >= 1, "val_subsample", "must be at least 1");
    check(c.threads >= 1, "threads", "must be at least 1");
}

}  // namespace

ExperimentConfig validate_config(const json& raw) {
    ExperimentConfig c;
    if (raw.is_null()) {
        range_check(c);
        return c;
    }
    require_object(raw, "");
    for (const auto& [key, v] : raw.items()) {
        if (key == "n_devices") c.n_devices = read_count(v, key);
        else if (key == "n_splits") c.n_splits = read_count(v, key);
        else if (key == "episodes") c.episodes = read_count(v, key);
        else if (key == "steps_per_episode") c.steps_per_episode = read_count(v, key);
        else if (key == "capacity_range") {
            if (!v.is_array() || v.size() != 2) throw ConfigError(key, "expected [low, high]");
            c.capacity_range.low = read_number(v[0], key);
            c.capacity_range.high = read_number(v[1], key);
        } else if (key == "unavailability_prob") c.unavailability_prob = read_number(v, key);
        else if (key == "drift_sigma") c.drift_sigma = read_number(v, key);
        else if (key == "lr") c.lr = read_number(v, key);
        else if (key == "weight_decay") c.weight_decay = read_number(v, key);
        else if (key == "discount") c.discount = read_number(v, key);
        else if (key == "batch_size") c.batch_size = read_count(v, key);
        else if (key == "target_sync_every") c.target_sync_every = read_count(v, key);
        else if (key == "replay_capacity") c.replay_capacity = read_count(v, key);
        else if (key == "epsilon") parse_epsilon(v, c.epsilon);
        else if (key == "reward") parse_reward(v, c.reward);
        else if (key == "agent_mode") {
            const auto s = read_string(v, key);
            if (s == "shared") c.agent_mode = AgentMode::shared;
            else if (s == "per_device") c.agent_mode = AgentMode::per_device;
            else throw ConfigError(key, "expected 'shared' or 'per_device'");
        } else if (key == "merge_mode") {
            const auto s = read_string(v, key);
            if (s == "sequential") c.merge_mode = MergeMode::sequential;
            else if (s == "averaged") c.merge_mode = MergeMode::averaged;
            else throw ConfigError(key, "expected 'sequential' or 'averaged'");
        } else if (key == "state_accuracy_feature") c.state_accuracy_feature = read_bool(v, key);
        else if (key == "seed") {
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
                throw ConfigError(key, "expected an unsigned 64-bit integer");
            c.seed = v.get<std::uint64_t>();
        } else if (key == "data") parse_data(v, c.data);
        else if (key == "distribution") parse_distribution(v, c);
        else if (key == "network") parse_network(v, c.network);
        else if (key == "cost_table") {
            if (!v.is_null()) c.cost_table = parse_cost_table(v);
        } else if (key == "val_subsample") c.val_subsample = read_count(v, key);
        else if (key == "threads") c.threads = read_count(v, key);
        else unknown_key(key);
    }
    range_check(c);
    return c;
}

const char* to_string(AgentMode m) { return m == AgentMode::shared ? "shared" : "per_device"; }
const char* to_string(MergeMode m) { return m == MergeMode::sequential ? "sequential" : "averaged"; }
const char* to_string(RewardMode m) { return m == RewardMode::strict ? "strict" : "soft"; }
const char* to_string(Distribution d) { return d == Distribution::iid ? "iid" : "noniid"; }

json to_json(const ExperimentConfig& c) {
    json j;
    j["n_devices"] = c.n_devices;
    j["n_splits"] = c.n_splits;
    j["episodes"] = c.episodes;
    j["steps_per_episode"] = c.steps_per_episode;
    j["capacity_range"] = {c.capacity_range.low, c.capacity_range.high};
    j["unavailability_prob"] = c.unavailability_prob;
    j["drift_sigma"] = c.drift_sigma;
    j["lr"] = c.lr;
    j["weight_decay"] = c.weight_decay;
    j["discount"] = c.discount;
    j["batch_size"] = c.batch_size;
    j["target_sync_every"] = c.target_sync_every;
    j["replay_capacity"] = c.replay_capacity;
    j["epsilon"] = {{"start", c.epsilon.start}, {"end", c.epsilon.end}};
    j["reward"] = {{"alpha", c.reward.alpha},       {"beta", c.reward.beta},
                   {"gamma_pen", c.reward.gamma_pen}, {"penalty", c.reward.penalty},
                   {"mode", to_string(c.reward.mode)}};
    j["agent_mode"] = to_string(c.agent_mode);
    j["merge_mode"] = to_string(c.merge_mode);
    j["state_accuracy_feature"] = c.state_accuracy_feature;
    j["seed"] = c.seed;
    j["data"] = {{"classes", c.data.classes},
                 {"dim", c.data.dim},
                 {"samples", c.data.samples},
                 {"spread", c.data.spread}};
    j["distribution"] = {{"kind", to_string(c.distribution)}, {"shards_per_client", c.shards_per_client}};
    j["network"] = {{"hidden_width", c.network.hidden_width}, {"layers", c.network.layers}};
    if (c.cost_table) {
        json table = json::array();
        for (const auto& e : *c.cost_table) table.push_back({e.r_req, e.t_req});
        j["cost_table"] = table;
    } else {
        j["cost_table"] = nullptr;
    }
    j["val_subsample"] = c.val_subsample;
    j["threads"] = c.threads;
    return j;
}

json read_config_document(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigFileError("cannot read config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", std::string("not valid JSON: ") + e.what());
    }
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like KEY=VALUE");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);

    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }

    if (doc.is_null()) doc = json::object();
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError(path, "empty path component");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        json& child = (*node)[part];
        if (child.is_null()) child = json::object();
        if (!child.is_object()) throw ConfigError(path, "cannot descend into non-object '" + part + "'");
        node = &child;
        start = dot + 1;
    }
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string text = to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

}  // namespace rds
