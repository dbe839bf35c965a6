// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/orchestrator/merge.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

namespace rds::orch {

namespace {

void require_layer_shape(const net::LayerParams& p, const LayerUpdate& u, std::size_t l) {
    const auto same = [](const Matrix& a, const Matrix& b) { return a.rows == b.rows && a.cols == b.cols; };
    if (!same(p.weight, u.d_weight) || !same(p.weight, u.m_weight) || !same(p.weight, u.v_weight) ||
        p.bias.size() != u.d_bias.size() || p.bias.size() != u.m_bias.size() || p.bias.size() != u.v_bias.size()) {
        throw net::ShapeError("segment update for layer " + std::to_string(l) + " does not match the store");
    }
}

void require_range(const net::ParamStore& store, const SegmentUpdate& u) {
    if (u.first_layer + u.layers.size() > store.n_layers()) {
        throw net::ShapeError("segment update covers layers beyond " + std::to_string(store.n_layers()));
    }
    for (std::size_t i = 0; i < u.layers.size(); ++i) {
        require_layer_shape(store.layers[u.first_layer + i], u.layers[i], u.first_layer + i);
    }
}

void add_into(std::vector<double>& dst, const std::vector<double>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void scale(std::vector<double>& v, double s) {
    for (auto& x : v) x *= s;
}

}  // namespace

SegmentUpdate diff_segment(const net::ParamStore& before, const net::ParamStore& after, std::size_t first,
                           std::size_t count, std::uint16_t device) {
    if (first + count > before.n_layers() || first + count > after.n_layers()) {
        throw net::ShapeError("diff_segment: layer range out of bounds");
    }
    SegmentUpdate u{device, first, {}};
    u.layers.reserve(count);
    for (std::size_t l = first; l < first + count; ++l) {
        const auto& a = before.layers[l];
        const auto& b = after.layers[l];
        if (a.weight.size() != b.weight.size() || a.bias.size() != b.bias.size()) {
            throw net::ShapeError("diff_segment: layer " + std::to_string(l) + " shapes differ");
        }
        LayerUpdate lu;
        lu.d_weight = b.weight;
        for (std::size_t i = 0; i < lu.d_weight.size(); ++i) lu.d_weight.data[i] -= a.weight.data[i];
        lu.d_bias = b.bias;
        for (std::size_t i = 0; i < lu.d_bias.size(); ++i) lu.d_bias[i] -= a.bias[i];
        lu.m_weight = b.m_weight;
        lu.v_weight = b.v_weight;
        lu.m_bias = b.m_bias;
        lu.v_bias = b.v_bias;
        lu.step = b.step;
        u.layers.push_back(std::move(lu));
    }
    return u;
}

void apply_segment_update(net::ParamStore& store, const SegmentUpdate& update) {
    require_range(store, update);
    for (std::size_t i = 0; i < update.layers.size(); ++i) {
        auto& p = store.layers[update.first_layer + i];
        const auto& u = update.layers[i];
        add_into(p.weight.data, u.d_weight.data);
        add_into(p.bias, u.d_bias);
        p.m_weight = u.m_weight;
        p.v_weight = u.v_weight;
        p.m_bias = u.m_bias;
        p.v_bias = u.v_bias;
        p.step = u.step;
    }
}

void SegmentMerger::submit(net::ParamStore& store, SegmentUpdate update) {
    require_range(store, update);
    if (mode_ == MergeMode::sequential) {
        apply_segment_update(store, update);
        return;
    }
    pending_.push_back(std::move(update));
}

void SegmentMerger::flush(net::ParamStore& store) {
    if (pending_.empty()) return;
    std::stable_sort(pending_.begin(), pending_.end(),
                     [](const SegmentUpdate& a, const SegmentUpdate& b) { return a.device < b.device; });

    std::map<std::size_t, std::vector<const LayerUpdate*>> by_layer;
    for (const auto& u : pending_) {
        for (std::size_t i = 0; i < u.layers.size(); ++i) by_layer[u.first_layer + i].push_back(&u.layers[i]);
    }
    for (const auto& [l, ups] : by_layer) {
        LayerUpdate mean = *ups.front();
        for (std::size_t j = 1; j < ups.size(); ++j) {
            add_into(mean.d_weight.data, ups[j]->d_weight.data);
            add_into(mean.d_bias, ups[j]->d_bias);
            add_into(mean.m_weight.data, ups[j]->m_weight.data);
            add_into(mean.v_weight.data, ups[j]->v_weight.data);
            add_into(mean.m_bias, ups[j]->m_bias);
            add_into(mean.v_bias, ups[j]->v_bias);
            mean.step = std::max(mean.step, ups[j]->step);
        }
        const double inv = 1.0 / static_cast<double>(ups.size());
        scale(mean.d_weight.data, inv);
        scale(mean.d_bias, inv);
        scale(mean.m_weight.data, inv);
        scale(mean.v_weight.data, inv);
        scale(mean.m_bias, inv);
        scale(mean.v_bias, inv);
        apply_segment_update(store, SegmentUpdate{0, l, {std::move(mean)}});
    }
    pending_.clear();
}

}  // namespace rds::orch
