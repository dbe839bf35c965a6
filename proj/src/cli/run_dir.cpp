// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/cli/run_dir.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "reindsplit/core/metrics.hpp"

namespace rds::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw IoError("write failed for " + path.string());
}

std::string rounds_csv(const std::vector<RoundRecord>& records) {
    std::string s = std::string(kRoundsHeader) + "\n";
    for (const auto& r : records) {
        s += std::to_string(r.episode) + ',' + std::to_string(r.step) + ',' + std::to_string(r.device_id) + ',' +
             (r.available ? "1" : "0") + ',' + format_double(r.resources) + ',' + format_double(r.time_window) + ',';
        if (r.available) {
            s += std::to_string(r.action) + ',' + (r.feasible ? "1" : "0") + ',' + format_double(r.reward) + ',' +
                 format_double(r.acc) + ',' + format_double(r.client_load) + ',' + (r.straggler ? "1" : "0") + ',';
        } else {
            s += ",,,,,,";
        }
        s += format_double(r.epsilon) + ',';
        if (r.q_loss) s += format_double(*r.q_loss);
        s += '\n';
    }
    return s;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

double parse_double(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("rounds.csv line " + std::to_string(line) + ": bad number '" + s + "'");
    }
}

std::size_t parse_count(const std::string& s, std::size_t line) {
    const double v = parse_double(s, line);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
        throw IoError("rounds.csv line " + std::to_string(line) + ": bad integer '" + s + "'");
    }
    return static_cast<std::size_t>(v);
}

json metrics_json(const Metrics& m) {
    return {{"accuracy", m.accuracy},
            {"macro_precision", m.macro_precision},
            {"macro_recall", m.macro_recall},
            {"macro_f1", m.macro_f1},
            {"mcc", m.mcc}};
}

}  // namespace

std::vector<RoundRecord> parse_rounds_csv(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty() || lines.front() != kRoundsHeader) throw IoError("rounds.csv: missing or unexpected header");
    std::vector<RoundRecord> out;
    out.reserve(lines.size() - 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_fields(lines[i]);
        if (f.size() != 14) throw IoError("rounds.csv line " + std::to_string(i + 1) + ": expected 14 fields");
        RoundRecord r;
        r.episode = parse_count(f[0], i + 1);
        r.step = parse_count(f[1], i + 1);
        r.device_id = static_cast<std::uint16_t>(parse_count(f[2], i + 1));
        r.available = f[3] == "1";
        r.resources = parse_double(f[4], i + 1);
        r.time_window = parse_double(f[5], i + 1);
        if (r.available) {
            r.action = parse_count(f[6], i + 1);
            r.feasible = f[7] == "1";
            r.reward = parse_double(f[8], i + 1);
            r.acc = parse_double(f[9], i + 1);
            r.client_load = parse_double(f[10], i + 1);
            r.straggler = f[11] == "1";
        }
        r.epsilon = parse_double(f[12], i + 1);
        if (!f[13].empty()) r.q_loss = parse_double(f[13], i + 1);
        out.push_back(r);
    }
    return out;
}

std::string split_freq_csv(const std::vector<orch::EpisodeSummary>& episodes, std::size_t n_splits) {
    std::string s = "episode";
    for (std::size_t k = 1; k <= n_splits; ++k) s += ",k" + std::to_string(k);
    s += ",mean_val_acc\n";
    for (const auto& e : episodes) {
        s += std::to_string(e.episode);
        for (auto c : e.split_counts) s += ',' + std::to_string(c);
        s += ',' + format_double(e.mean_val_acc) + '\n';
    }
    return s;
}

json summary_json(const orch::RunArtifacts& art) {
    json episodes = json::array();
    double reward_sum = 0.0;
    std::size_t available = 0;
    for (const auto& e : art.episodes) {
        episodes.push_back({{"episode", e.episode},
                            {"available_steps", e.available_steps},
                            {"stragglers", e.stragglers},
                            {"straggler_rate", e.straggler_rate},
                            {"mean_val_acc", e.mean_val_acc},
                            {"mean_reward", e.mean_reward},
                            {"mean_client_load", e.mean_client_load}});
        reward_sum += e.mean_reward * static_cast<double>(e.available_steps);
        available += e.available_steps;
    }
    json catalog = json::array();
    for (const auto& c : art.catalog.entries()) {
        catalog.push_back(
            {{"cut_layer", c.cut_layer}, {"r_req", c.r_req}, {"t_req", c.t_req}, {"load_fraction", c.load_fraction}});
    }
    return {{"seed", art.config.seed},
            {"config_hash", config_hash(art.config)},
            {"test_metrics", metrics_json(art.test_metrics)},
            {"val_metrics", metrics_json(art.val_metrics)},
            {"mean_reward", available ? reward_sum / static_cast<double>(available) : 0.0},
            {"available_steps", available},
            {"transitions_pushed", art.transitions_pushed},
            {"optimizer_steps", art.optimizer_steps},
            {"catalog", catalog},
            {"episodes", episodes},
            {"wall_time_s", art.wall_time_s}};
}

void write_run_directory(const fs::path& dir, const orch::RunArtifacts& art) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_text(dir / "config.json", to_json(art.config).dump(2) + "\n");
    write_text(dir / "rounds.csv", rounds_csv(art.records));
    write_text(dir / "split_freq.csv", split_freq_csv(art.episodes, art.config.n_splits));
    write_text(dir / "summary.json", summary_json(art).dump(2) + "\n");
}

json build_report(const fs::path& dir) {
    for (const char* name : {"rounds.csv", "split_freq.csv", "summary.json"}) {
        if (!fs::exists(dir / name)) throw IoError("run directory " + dir.string() + " has no " + name);
    }
    const auto records = parse_rounds_csv(read_text(dir / "rounds.csv"));
    json summary;
    try {
        summary = json::parse(read_text(dir / "summary.json"));
    } catch (const json::exception& e) {
        throw IoError("summary.json: " + std::string(e.what()));
    }

    const auto freq_lines = lines_of(read_text(dir / "split_freq.csv"));
    if (freq_lines.empty()) throw IoError("split_freq.csv is empty");
    const std::size_t n_splits = split_fields(freq_lines.front()).size() - 2;
    const std::size_t n_episodes = freq_lines.size() - 1;
    const auto episodes = orch::summarize_episodes(records, n_episodes, n_splits);

    json freq = json::array();
    for (std::size_t e = 0; e < n_episodes; ++e) {
        const auto f = split_fields(freq_lines[e + 1]);
        if (f.size() != n_splits + 2) throw IoError("split_freq.csv line " + std::to_string(e + 2) + ": bad width");
        for (std::size_t k = 0; k < n_splits; ++k) {
            if (parse_count(f[k + 1], e + 2) != episodes[e].split_counts[k]) {
                throw IoError("split_freq.csv disagrees with rounds.csv in episode " + std::to_string(e));
            }
        }
        freq.push_back({{"episode", e},
                        {"counts", episodes[e].split_counts},
                        {"available_steps", episodes[e].available_steps}});
    }

    const auto& tm = summary.at("test_metrics");
    const std::vector<double> raw{tm.at("accuracy"), tm.at("macro_precision"), tm.at("macro_recall"),
                                  tm.at("macro_f1"), tm.at("mcc")};

    json pairs = json::array();
    std::vector<double> rates;
    for (const auto& e : episodes) {
        pairs.push_back({{"episode", e.episode},
                         {"mean_reward", e.mean_reward},
                         {"mean_val_acc", e.mean_val_acc},
                         {"mean_client_load", e.mean_client_load}});
        rates.push_back(e.straggler_rate);
    }
    auto window_mean = [&](std::size_t begin, std::size_t end) {
        double s = 0.0;
        std::size_t n = 0;
        for (std::size_t e = begin; e < end; ++e) {
            if (episodes[e].available_steps == 0) continue;
            s += episodes[e].straggler_rate;
            ++n;
        }
        return n ? s / static_cast<double>(n) : 0.0;
    };
    const std::size_t w = std::min<std::size_t>(10, n_episodes);
    const double first = window_mean(0, w);
    const double last = window_mean(n_episodes - w, n_episodes);

    std::size_t available = 0;
    for (const auto& e : episodes) available += e.available_steps;

    json report = {
        {"episodes", n_episodes},
        {"n_splits", n_splits},
        {"split_frequencies", freq},
        {"metrics",
         {{"names", {"accuracy", "macro_precision", "macro_recall", "macro_f1", "mcc"}},
          {"raw", raw},
          {"normalized", minmax_normalize(raw)}}},
        {"reward_accuracy", pairs},
        {"straggler",
         {{"per_episode", rates},
          {"first10", first},
          {"last10", last},
          {"ratio", first > 0.0 ? json(last / first) : json(nullptr)}}},
        {"denominators", {{"device_steps", records.size()}, {"available_steps", available}}},
    };
    write_text(dir / "report.json", report.dump(2) + "\n");
    return report;
}

}  // namespace rds::cli
