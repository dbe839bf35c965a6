// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/splitnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "reindsplit/core/rng.hpp"
#include "reindsplit/splitnet/split.hpp"

namespace rds::net {

double relative_error(double analytic, double numeric, double floor) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / scale;
}

namespace {

class Tracker {
public:
    explicit Tracker(GradCheckReport& r) : report_(r) {}
    void record(double analytic, double numeric, const std::string& label) {
        const double e = relative_error(analytic, numeric);
        ++report_.checked;
        if (e > report_.max_rel_error || report_.worst.empty()) {
            report_.max_rel_error = std::max(e, report_.max_rel_error);
            report_.worst = label;
        }
    }

private:
    GradCheckReport& report_;
};

template <typename F>
double central_difference(double& slot, double step, F&& eval) {
    const double orig = slot;
    slot = orig + step;
    const double up = eval();
    slot = orig - step;
    const double down = eval();
    slot = orig;
    return (up - down) / (2.0 * step);
}

void compare_into(Tracker& t, const ParamStore& store, const SegmentGrads& analytic, const LossFn& loss,
                  double step) {
    ParamStore probe = store;
    auto eval = [&] { return loss(probe); };
    for (std::size_t i = 0; i < analytic.layers.size(); ++i) {
        const std::size_t l = analytic.first_layer + i;
        auto& p = probe.layers.at(l);
        const auto& g = analytic.layers[i];
        if (g.weight.size() != p.weight.size() || g.bias.size() != p.bias.size()) {
            throw ShapeError("gradient for layer " + std::to_string(l) + " does not match the store");
        }
        for (std::size_t j = 0; j < p.weight.size(); ++j) {
            t.record(g.weight.data[j], central_difference(p.weight.data[j], step, eval),
                     "layer " + std::to_string(l) + " weight " + std::to_string(j));
        }
        for (std::size_t j = 0; j < p.bias.size(); ++j) {
            t.record(g.bias[j], central_difference(p.bias[j], step, eval),
                     "layer " + std::to_string(l) + " bias " + std::to_string(j));
        }
    }
}

}  // namespace

GradCheckReport compare_param_gradients(const ParamStore& store, const SegmentGrads& analytic, const LossFn& loss,
                                        double step) {
    GradCheckReport report;
    Tracker t(report);
    compare_into(t, store, analytic, loss, step);
    return report;
}

GradCheckReport finite_diff_check(const ParamStore& store, const Matrix& batch, std::span<const int> labels,
                                  std::size_t cut, double step) {
    ForwardCache cache;
    const SmashedBatch smashed = forward_client(store, cache, 0, 0, cut, batch, labels);
    const ServerPass server = server_backward(store, smashed);
    const SegmentGrads client = backward_client(store, cache, server.at_cut);

    GradCheckReport report;
    Tracker t(report);
    const std::vector<int> y(labels.begin(), labels.end());
    const LossFn full = [&](const ParamStore& s) { return softmax_cross_entropy(forward_full(s, batch), y).loss; };
    compare_into(t, store, client, full, step);
    compare_into(t, store, server.grads, full, step);

    Matrix act = smashed.activations;
    auto server_loss = [&] {
        return softmax_cross_entropy(forward_segment(store, cut, store.n_layers(), act, nullptr), y).loss;
    };
    for (std::size_t i = 0; i < act.size(); ++i) {
        t.record(server.at_cut.grad.data[i], central_difference(act.data[i], step, server_loss),
                 "cut activation " + std::to_string(i));
    }
    return report;
}

double kink_margin(const ParamStore& store, const Matrix& x) {
    std::vector<LayerCache> cache;
    forward_segment(store, 0, store.n_layers(), x, &cache);
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < cache.size(); ++l) {
        if (store.spec.layers[l].act != Activation::relu) continue;
        for (double v : cache[l].pre.data) margin = std::min(margin, std::abs(v));
    }
    return margin;
}

Matrix jittered_inputs(const ParamStore& store, std::size_t rows, std::uint64_t seed, double margin) {
    Rng rng = make_rng(seed, StreamTag::probe);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix x(rows, store.spec.input_dim());
    for (int attempt = 0; attempt < 10000; ++attempt) {
        for (auto& v : x.data) v = normal(rng);
        if (kink_margin(store, x) >= margin) return x;
    }
    throw std::runtime_error("jittered_inputs: no draw cleared the ReLU margin");
}

}  // namespace rds::net
