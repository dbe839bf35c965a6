// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/splitnet/split.hpp"

#include <atomic>
#include <cmath>
#include <string>

namespace rds::net {

namespace {

std::atomic<bool> g_client_backward_fault{false};

std::string where(std::uint32_t round, std::uint16_t device) {
    return "round " + std::to_string(round) + ", device " + std::to_string(device);
}

void check_cut(const ParamStore& store, std::size_t cut) {
    if (cut < 1 || cut >= store.n_layers()) {
        throw ShapeError("cut " + std::to_string(cut) + " outside [1, " + std::to_string(store.n_layers() - 1) + "]");
    }
}

}  // namespace

namespace testing {
void set_client_backward_fault(bool enabled) { g_client_backward_fault.store(enabled); }
bool client_backward_fault() { return g_client_backward_fault.load(); }
}  // namespace testing

void ForwardCache::put(Key key, Entry entry) {
    std::lock_guard lock(mu_);
    entries_[key] = std::move(entry);
}

std::optional<ForwardCache::Entry> ForwardCache::take(Key key) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    Entry e = std::move(it->second);
    entries_.erase(it);
    return e;
}

std::size_t ForwardCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

SmashedBatch forward_client(const ParamStore& store, ForwardCache& cache, std::uint32_t round,
                            std::uint16_t device, std::size_t cut, const Matrix& batch,
                            std::span<const int> labels) {
    check_cut(store, cut);
    if (batch.cols != store.spec.input_dim()) {
        throw ShapeError("batch width " + std::to_string(batch.cols) + " does not match input dim " +
                         std::to_string(store.spec.input_dim()));
    }
    if (batch.rows == 0) throw ShapeError("empty batch");
    if (labels.size() != batch.rows) throw ShapeError("labels/batch size mismatch");

    ForwardCache::Entry entry;
    entry.cut = cut;
    SmashedBatch out;
    out.round = round;
    out.device = device;
    out.cut = cut;
    out.activations = forward_segment(store, 0, cut, batch, &entry.layers);
    out.labels.assign(labels.begin(), labels.end());
    cache.put({round, device}, std::move(entry));
    return out;
}

ServerPass server_backward(const ParamStore& store, const SmashedBatch& smashed) {
    check_cut(store, smashed.cut);
    const std::size_t width = store.spec.layers[smashed.cut - 1].out;
    if (smashed.activations.cols != width || smashed.activations.rows == 0) {
        throw ShapeError("smashed batch shape does not match width " + std::to_string(width) + " at cut " +
                         std::to_string(smashed.cut) + " (" + where(smashed.round, smashed.device) + ")");
    }
    for (const double v : smashed.activations.data) {
        if (!std::isfinite(v)) throw NonFiniteError("non-finite smashed activations (" + where(smashed.round, smashed.device) + ")");
    }

    std::vector<LayerCache> cache;
    const Matrix logits = forward_segment(store, smashed.cut, store.n_layers(), smashed.activations, &cache);
    const LossResult loss = softmax_cross_entropy(logits, smashed.labels);

    ServerPass pass;
    pass.at_cut.round = smashed.round;
    pass.at_cut.device = smashed.device;
    pass.at_cut.cut = smashed.cut;
    pass.at_cut.loss = loss.loss;
    pass.at_cut.accuracy = loss.accuracy;
    pass.at_cut.grad = backward_segment(store, smashed.cut, store.n_layers(), cache, loss.grad_logits, pass.grads);
    return pass;
}

GradAtCut forward_server_and_loss(ParamStore& store, const SmashedBatch& smashed, const AdamWConfig& opt) {
    ServerPass pass = server_backward(store, smashed);
    adamw_step(store, pass.grads, opt);
    return std::move(pass.at_cut);
}

SegmentGrads backward_client(const ParamStore& store, ForwardCache& cache, const GradAtCut& grad) {
    auto entry = cache.take({grad.round, grad.device});
    if (!entry) throw ProtocolOrderError("no cached forward pass for " + where(grad.round, grad.device));
    if (entry->cut != grad.cut) {
        throw ProtocolOrderError("gradient for cut " + std::to_string(grad.cut) + " but forward used cut " +
                                 std::to_string(entry->cut) + " (" + where(grad.round, grad.device) + ")");
    }
    const auto& last = entry->layers.back().pre;
    if (grad.grad.rows != last.rows || grad.grad.cols != last.cols) {
        throw ShapeError("gradient shape does not match cached activations (" + where(grad.round, grad.device) + ")");
    }
    SegmentGrads out;
    backward_segment(store, 0, entry->cut, entry->layers, grad.grad, out);
    if (testing::client_backward_fault()) {
        for (auto& l : out.layers) {
            for (auto& g : l.weight.data) g = -g;
            for (auto& g : l.bias) g = -g;
        }
    }
    return out;
}

}  // namespace rds::net
