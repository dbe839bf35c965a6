// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/splitnet/network.hpp"

#include <cmath>
#include <random>
#include <string>

#include "reindsplit/core/rng.hpp"

namespace rds::net {

void NetworkSpec::validate() const {
    if (layers.empty()) throw ShapeError("network has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].in == 0 || layers[i].out == 0) {
            throw ShapeError("layer " + std::to_string(i) + " has a zero dimension");
        }
        if (i > 0 && layers[i - 1].out != layers[i].in) {
            throw ShapeError("layer " + std::to_string(i) + " expects " + std::to_string(layers[i].in) +
                             " inputs but layer " + std::to_string(i - 1) + " produces " +
                             std::to_string(layers[i - 1].out));
        }
    }
}

NetworkSpec make_network_spec(std::size_t input_dim, std::size_t n_classes, std::size_t hidden_width,
                              std::size_t n_layers) {
    if (n_layers < 2) throw ShapeError("need at least two layers");
    NetworkSpec spec;
    spec.layers.push_back({input_dim, hidden_width, Activation::relu});
    for (std::size_t i = 1; i + 1 < n_layers; ++i) spec.layers.push_back({hidden_width, hidden_width, Activation::relu});
    spec.layers.push_back({hidden_width, n_classes, Activation::none});
    spec.validate();
    return spec;
}

bool ParamStore::all_finite() const {
    auto finite = [](const std::vector<double>& v) {
        for (const double x : v) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    };
    for (const auto& l : layers) {
        if (!finite(l.weight.data) || !finite(l.bias) || !finite(l.m_weight.data) || !finite(l.v_weight.data) ||
            !finite(l.m_bias) || !finite(l.v_bias)) {
            return false;
        }
    }
    return true;
}

std::size_t ParamStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

ParamStore build_network(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParamStore store;
    store.spec = spec;
    Rng rng(seed);
    for (const auto& ls : spec.layers) {
        LayerParams p;
        p.weight = Matrix(ls.out, ls.in);
        std::normal_distribution<double> init(0.0, std::sqrt(2.0 / static_cast<double>(ls.in)));
        for (auto& w : p.weight.data) w = init(rng);
        p.bias.assign(ls.out, 0.0);
        p.m_weight = Matrix(ls.out, ls.in);
        p.v_weight = Matrix(ls.out, ls.in);
        p.m_bias.assign(ls.out, 0.0);
        p.v_bias.assign(ls.out, 0.0);
        store.layers.push_back(std::move(p));
    }
    return store;
}

double SegmentGrads::l2_norm() const {
    double sq = 0.0;
    for (const auto& l : layers) {
        for (const double g : l.weight.data) sq += g * g;
        for (const double g : l.bias) sq += g * g;
    }
    return std::sqrt(sq);
}

Matrix forward_segment(const ParamStore& store, std::size_t begin, std::size_t end, const Matrix& x,
                       std::vector<LayerCache>* cache) {
    if (begin > end || end > store.n_layers()) throw ShapeError("layer range out of bounds");
    Matrix h = x;
    for (std::size_t l = begin; l < end; ++l) {
        const auto& p = store.layers[l];
        const auto& ls = store.spec.layers[l];
        if (h.cols != ls.in) {
            throw ShapeError("layer " + std::to_string(l) + " expects width " + std::to_string(ls.in) + ", got " +
                             std::to_string(h.cols));
        }
        Matrix pre(h.rows, ls.out);
        for (std::size_t i = 0; i < h.rows; ++i) {
            const double* xi = h.data.data() + i * h.cols;
            for (std::size_t o = 0; o < ls.out; ++o) {
                const double* wo = p.weight.data.data() + o * ls.in;
                double acc = 0.0;
                for (std::size_t j = 0; j < ls.in; ++j) acc += xi[j] * wo[j];
                pre(i, o) = acc + p.bias[o];
            }
        }
        Matrix out = pre;
        if (ls.act == Activation::relu) {
            for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
        }
        if (cache) cache->push_back({std::move(h), std::move(pre)});
        h = std::move(out);
    }
    return h;
}

Matrix backward_segment(const ParamStore& store, std::size_t begin, std::size_t end,
                        std::span<const LayerCache> cache, const Matrix& grad_out, SegmentGrads& grads) {
    if (begin > end || end > store.n_layers()) throw ShapeError("layer range out of bounds");
    if (cache.size() != end - begin) throw ShapeError("cache does not match layer range");
    grads.first_layer = begin;
    grads.layers.assign(end - begin, {});

    Matrix g = grad_out;
    for (std::size_t l = end; l-- > begin;) {
        const auto& p = store.layers[l];
        const auto& ls = store.spec.layers[l];
        const auto& c = cache[l - begin];
        if (g.rows != c.pre.rows || g.cols != ls.out) throw ShapeError("gradient shape mismatch at layer " + std::to_string(l));

        Matrix dz = g;
        if (ls.act == Activation::relu) {
            for (std::size_t i = 0; i < dz.size(); ++i) {
                if (!(c.pre.data[i] > 0.0)) dz.data[i] = 0.0;
            }
        }

        auto& lg = grads.layers[l - begin];
        lg.weight = Matrix(ls.out, ls.in);
        lg.bias.assign(ls.out, 0.0);
        for (std::size_t i = 0; i < dz.rows; ++i) {
            const double* xi = c.input.data.data() + i * ls.in;
            for (std::size_t o = 0; o < ls.out; ++o) {
                const double d = dz(i, o);
                lg.bias[o] += d;
                double* gw = lg.weight.data.data() + o * ls.in;
                for (std::size_t j = 0; j < ls.in; ++j) gw[j] += d * xi[j];
            }
        }

        Matrix dx(dz.rows, ls.in);
        for (std::size_t i = 0; i < dz.rows; ++i) {
            double* dxi = dx.data.data() + i * ls.in;
            for (std::size_t o = 0; o < ls.out; ++o) {
                const double d = dz(i, o);
                const double* wo = p.weight.data.data() + o * ls.in;
                for (std::size_t j = 0; j < ls.in; ++j) dxi[j] += d * wo[j];
            }
        }
        g = std::move(dx);
    }
    return g;
}

std::vector<int> argmax_rows(const Matrix& logits) {
    std::vector<int> out(logits.rows);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols; ++c) {
            if (logits(i, c) > logits(i, best)) best = c;
        }
        out[i] = static_cast<int>(best);
    }
    return out;
}

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
    if (logits.rows != labels.size()) throw ShapeError("logits/labels row mismatch");
    if (logits.rows == 0) throw ShapeError("empty batch");
    const auto batch = static_cast<double>(logits.rows);
    LossResult r;
    r.grad_logits = Matrix(logits.rows, logits.cols);
    const auto preds = argmax_rows(logits);
    double total = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= logits.cols) throw ShapeError("label out of range");
        double mx = logits(i, 0);
        for (std::size_t c = 1; c < logits.cols; ++c) mx = std::max(mx, logits(i, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols; ++c) sum += std::exp(logits(i, c) - mx);
        const double lse = mx + std::log(sum);
        total += lse - logits(i, static_cast<std::size_t>(y));
        for (std::size_t c = 0; c < logits.cols; ++c) {
            const double prob = std::exp(logits(i, c) - lse);
            r.grad_logits(i, c) = (prob - (static_cast<int>(c) == y ? 1.0 : 0.0)) / batch;
        }
        if (preds[i] == y) ++hits;
    }
    r.loss = total / batch;
    r.accuracy = static_cast<double>(hits) / batch;
    return r;
}

Matrix forward_full(const ParamStore& store, const Matrix& x) {
    return forward_segment(store, 0, store.n_layers(), x, nullptr);
}

FullPass full_gradients(const ParamStore& store, const Matrix& x, std::span<const int> labels) {
    std::vector<LayerCache> cache;
    const Matrix logits = forward_segment(store, 0, store.n_layers(), x, &cache);
    FullPass pass;
    pass.loss = softmax_cross_entropy(logits, labels);
    backward_segment(store, 0, store.n_layers(), cache, pass.loss.grad_logits, pass.grads);
    return pass;
}

}  // namespace rds::net
