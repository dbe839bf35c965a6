// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <ostream>
#include <set>

#include "reindsplit/cli/oracle.hpp"
#include "reindsplit/cli/run_dir.hpp"
#include "reindsplit/orchestrator/trainer.hpp"
#include "reindsplit/splitnet/split.hpp"

namespace rds::cli {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentConfig resolve_config(const std::optional<fs::path>& path, const std::vector<std::string>& overrides,
                                std::optional<std::uint64_t> seed) {
    json doc = path ? read_config_document(*path) : json::object();
    for (const auto& o : overrides) apply_override(doc, o);
    if (seed) doc["seed"] = *seed;
    return validate_config(doc);
}

fs::path run_directory_for(const std::optional<fs::path>& out, std::uint64_t seed) {
    if (out) return *out;
    const char* root = std::getenv("REINDSPLIT_OUT");
    const fs::path base = root && *root ? fs::path(root) : fs::path("runs");
    return base / ("seed-" + std::to_string(seed));
}

namespace {

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

double overall_straggler_rate(const orch::RunArtifacts& art) {
    std::size_t stragglers = 0, available = 0;
    for (const auto& e : art.episodes) {
        stragglers += e.stragglers;
        available += e.available_steps;
    }
    return available ? static_cast<double>(stragglers) / static_cast<double>(available) : 0.0;
}

// Shared error mapping for the commands that load configs and run training.
template <typename Fn>
int guarded(std::ostream& err, Fn fn) {
    try {
        return fn();
    } catch (const ConfigFileError& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << "\n";
        return kRuntimeError;
    }
}

struct Axis {
    const char* name;
    double lo;
    double hi;
    std::vector<double> allowed;  // empty: any value in [lo, hi]
};

const std::vector<Axis>& sweep_axes() {
    static const std::vector<Axis> axes{
        {"lr", 1e-4, 1e-2, {}},
        {"weight_decay", 1e-6, 1e-3, {}},
        {"discount", 0.95, 0.999, {}},
        {"batch_size", 32, 64, {32, 64}},
        {"target_sync_every", 500, 1000, {500, 1000}},
    };
    return axes;
}

void check_axis_value(const Axis& axis, const json& v) {
    const std::string field = std::string("grid.") + axis.name;
    if (!v.is_number()) throw ConfigError(field, "expected numbers");
    const double x = v.get<double>();
    if (!axis.allowed.empty()) {
        if (std::find(axis.allowed.begin(), axis.allowed.end(), x) == axis.allowed.end()) {
            throw ConfigError(field, "value " + format_double(x) + " is not one of the tuned choices");
        }
    } else if (x < axis.lo || x > axis.hi) {
        throw ConfigError(field, "value " + format_double(x) + " outside [" + format_double(axis.lo) + ", " +
                                     format_double(axis.hi) + "]");
    }
}

}  // namespace

int cmd_train(const TrainRequest& req, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ExperimentConfig cfg = resolve_config(req.config, req.overrides, req.seed);
        orch::RunOptions opts;
        if (req.transport == "stream") {
            opts.transport = orch::TransportKind::stream;
        } else if (req.transport != "loopback") {
            throw ConfigError("--transport", "expected 'loopback' or 'stream'");
        }
        if (req.listen && req.connect) throw ConfigError("--listen", "cannot be combined with --connect");

        if (req.listen) {
            orch::serve_parameter_server(cfg, *req.listen, [&](const std::string& addr) {
                out << "listening on " << addr << std::endl;
            });
            return static_cast<int>(kOk);
        }
        opts.connect_address = req.connect;

        const fs::path dir = run_directory_for(req.out, cfg.seed);
        ensure_directory(dir);
        opts.on_episode = [&](const orch::EpisodeSummary& e) {
            err << "episode " << (e.episode + 1) << "/" << cfg.episodes << " straggler_rate "
                << format_double(e.straggler_rate) << " mean_reward " << format_double(e.mean_reward)
                << " val_acc " << format_double(e.mean_val_acc) << "\n";
        };
        const orch::RunArtifacts art = orch::run_training(cfg, opts);
        write_run_directory(dir, art);
        out << "test accuracy " << format_double(art.test_metrics.accuracy) << "\n";
        out << "wrote " << dir.string() << "\n";
        return static_cast<int>(kOk);
    });
}

int cmd_oracle(std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto rows = run_oracle_suite();
        std::size_t width = 0;
        for (const auto& r : rows) width = std::max(width, r.name.size());
        std::vector<std::string> failed;
        for (const auto& r : rows) {
            out << (r.passed ? "PASS  " : "FAIL  ") << r.name << std::string(width - r.name.size() + 2, ' ')
                << r.detail << "\n";
            if (!r.passed) failed.push_back(r.name);
        }
        if (failed.empty()) {
            out << rows.size() << " checks passed\n";
            return static_cast<int>(kOk);
        }
        err << failed.size() << " oracle check(s) failed:";
        for (const auto& f : failed) err << " " << f;
        err << "\n";
        return static_cast<int>(kOracleFailed);
    });
}

std::vector<SweepTrial> expand_grid(const json& spec, std::optional<std::uint64_t> seed) {
    if (!spec.is_object()) throw ConfigError("<grid>", "expected an object with 'base' and 'grid'");
    for (const auto& [key, _] : spec.items()) {
        if (key != "base" && key != "grid") throw ConfigError(key, "unknown key '" + key + "'");
    }
    const json base = spec.value("base", json::object());
    const json grid = spec.value("grid", json::object());
    if (!grid.is_object() || grid.empty()) throw ConfigError("grid", "empty grid");

    std::vector<std::pair<const Axis*, std::vector<json>>> axes;
    for (const auto& [key, values] : grid.items()) {
        const auto& all = sweep_axes();
        const auto it = std::find_if(all.begin(), all.end(), [&](const Axis& a) { return key == a.name; });
        if (it == all.end()) throw ConfigError("grid." + key, "not a sweepable hyperparameter");
        if (!values.is_array() || values.empty()) throw ConfigError("grid." + key, "empty grid axis");
        for (const auto& v : values) check_axis_value(*it, v);
    }
    for (const auto& a : sweep_axes()) {
        if (grid.contains(a.name)) axes.push_back({&a, grid.at(a.name).get<std::vector<json>>()});
    }

    std::vector<SweepTrial> trials;
    std::set<std::string> seen;
    std::vector<std::size_t> pos(axes.size(), 0);
    while (true) {
        json doc = base;
        json point = json::object();
        for (std::size_t i = 0; i < axes.size(); ++i) {
            doc[axes[i].first->name] = axes[i].second[pos[i]];
            point[axes[i].first->name] = axes[i].second[pos[i]];
        }
        if (seed) doc["seed"] = *seed;
        ExperimentConfig cfg = validate_config(doc);
        if (seen.insert(config_hash(cfg)).second) trials.push_back({point, std::move(cfg)});

        std::size_t i = axes.size();
        while (i > 0) {
            --i;
            if (++pos[i] < axes[i].second.size()) break;
            pos[i] = 0;
            if (i == 0) return trials;
        }
        if (axes.empty()) return trials;
    }
}

int cmd_sweep(const SweepRequest& req, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        json spec;
        try {
            spec = json::parse(read_text(req.grid));
        } catch (const json::parse_error& e) {
            throw ConfigError("<grid>", std::string("not valid JSON: ") + e.what());
        }
        const auto trials = expand_grid(spec, req.seed);

        struct Row {
            std::string hash;
            double accuracy, reward, straggler;
            json point;
        };
        std::vector<Row> rows;
        for (std::size_t i = 0; i < trials.size(); ++i) {
            const auto& t = trials[i];
            err << "trial " << (i + 1) << "/" << trials.size() << " " << t.overrides.dump() << "\n";
            const auto art = orch::run_training(t.config);
            rows.push_back({config_hash(t.config), art.test_metrics.accuracy,
                            summary_json(art).at("mean_reward").get<double>(), overall_straggler_rate(art),
                            t.overrides});
        }
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
            return a.hash < b.hash;
        });

        std::string csv = "config_hash,final_accuracy,mean_reward,straggler_rate,params\n";
        for (const auto& r : rows) {
            std::string params = r.point.dump();
            std::replace(params.begin(), params.end(), ',', ';');
            csv += r.hash + ',' + format_double(r.accuracy) + ',' + format_double(r.reward) + ',' +
                   format_double(r.straggler) + ',' + params + '\n';
        }
        fs::path dir;
        if (req.out) {
            dir = *req.out;
        } else {
            const char* root = std::getenv("REINDSPLIT_OUT");
            dir = (root && *root ? fs::path(root) : fs::path("runs")) / "sweep";
        }
        ensure_directory(dir);
        write_text(dir / "sweep.csv", csv);
        out << csv;
        return static_cast<int>(kOk);
    });
}

int cmd_report(const fs::path& dir, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const json report = build_report(dir);
        const auto& s = report.at("straggler");
        out << "straggler rate first10 " << format_double(s.at("first10").get<double>()) << " last10 "
            << format_double(s.at("last10").get<double>()) << "\n";
        out << "wrote " << (dir / "report.json").string() << "\n";
        return static_cast<int>(kOk);
    });
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dynamic split learning with a DQN split-point scheduler", "reindsplit"};
    app.require_subcommand(1);

    TrainRequest train;
    std::optional<std::string> config, out_dir;
    auto* t = app.add_subcommand("train", "Run the split-learning loop and write a run directory");
    t->add_option("--config", config, "JSON config file");
    t->add_option("--seed", train.seed, "Override the config seed");
    t->add_option("--out", out_dir, "Run directory");
    t->add_option("--override", train.overrides, "KEY=VALUE, dotted keys, JSON values (repeatable)");
    t->add_option("--transport", train.transport, "loopback or stream")->check(CLI::IsMember({"loopback", "stream"}));
    t->add_option("--listen", train.listen, "Serve parameters on HOST:PORT and exit when devices disconnect");
    t->add_option("--connect", train.connect, "Train against a server at HOST:PORT");

    bool inject_fault = false;
    auto* o = app.add_subcommand("oracle", "Run the verification suite");
    o->add_flag("--inject-backward-fault", inject_fault)->group("");

    SweepRequest sweep;
    std::string grid;
    std::optional<std::string> sweep_out;
    auto* s = app.add_subcommand("sweep", "Grid sweep over optimizer and DQN hyperparameters");
    s->add_option("--grid", grid, "Grid spec JSON")->required();
    s->add_option("--seed", sweep.seed, "Seed for every trial");
    s->add_option("--out", sweep_out, "Output directory");

    std::string report_dir;
    auto* r = app.add_subcommand("report", "Aggregate a run directory into report.json");
    r->add_option("run_dir", report_dir, "Run directory")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kConfigError;
    }

    if (t->parsed()) {
        if (config) train.config = *config;
        if (out_dir) train.out = *out_dir;
        return cmd_train(train, out, err);
    }
    if (o->parsed()) {
        net::testing::set_client_backward_fault(inject_fault);
        const int code = cmd_oracle(out, err);
        net::testing::set_client_backward_fault(false);
        return code;
    }
    if (s->parsed()) {
        sweep.grid = grid;
        if (sweep_out) sweep.out = *sweep_out;
        return cmd_sweep(sweep, out, err);
    }
    return cmd_report(report_dir, out, err);
}

}  // namespace rds::cli
