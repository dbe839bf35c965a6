// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "reindsplit/splitnet/adamw.hpp"
#include "reindsplit/splitnet/network.hpp"

namespace rds::net {

/// Activations at the cut, travelling client -> server.
struct SmashedBatch {
    std::uint32_t round = 0;
    std::uint16_t device = 0;
    std::size_t cut = 0;  // client-side layer count
    Matrix activations;
    std::vector<int> labels;
};

/// Server reply: gradient w.r.t. the smashed activations.
struct GradAtCut {
    std::uint32_t round = 0;
    std::uint16_t device = 0;
    std::size_t cut = 0;
    Matrix grad;
    double loss = 0.0;
    double accuracy = 0.0;
};

class ProtocolOrderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Client-side forward caches keyed by (round, device). Thread-safe.
class ForwardCache {
public:
    struct Entry {
        std::size_t cut = 0;
        std::vector<LayerCache> layers;
    };
    using Key = std::pair<std::uint32_t, std::uint16_t>;

    void put(Key key, Entry entry);
    std::optional<Entry> take(Key key);
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::map<Key, Entry> entries_;
};

SmashedBatch forward_client(const ParamStore& store, ForwardCache& cache, std::uint32_t round,
                            std::uint16_t device, std::size_t cut, const Matrix& batch,
                            std::span<const int> labels);

struct ServerPass {
    GradAtCut at_cut;
    SegmentGrads grads;  // server layers [cut, L)
};

/// Server forward, loss and backward without touching parameters.
ServerPass server_backward(const ParamStore& store, const SmashedBatch& smashed);

/// server_backward followed by an AdamW step on the server segment.
GradAtCut forward_server_and_loss(ParamStore& store, const SmashedBatch& smashed, const AdamWConfig& opt);

/// Consumes the cached forward pass for (grad.round, grad.device).
SegmentGrads backward_client(const ParamStore& store, ForwardCache& cache, const GradAtCut& grad);

namespace testing {
/// Flips the sign of every client-side gradient. Used to prove that the
/// verification harnesses catch a broken backward pass.
void set_client_backward_fault(bool enabled);
bool client_backward_fault();
}  // namespace testing

}  // namespace rds::net
