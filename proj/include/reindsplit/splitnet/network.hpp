// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "reindsplit/core/matrix.hpp"

namespace rds::net {

enum class Activation : std::uint8_t { relu, none };

struct LayerSpec {
    std::size_t in = 0;
    std::size_t out = 0;
    Activation act = Activation::relu;
};

/// Chain of affine layers; the last one feeds a softmax cross-entropy head.
struct NetworkSpec {
    std::vector<LayerSpec> layers;

    std::size_t n_layers() const noexcept { return layers.size(); }
    std::size_t input_dim() const { return layers.front().in; }
    std::size_t output_dim() const { return layers.back().out; }
    /// Throws ShapeError when adjacent dims do not chain.
    void validate() const;
};

/// in -> width (relu) -> ... -> width (relu) -> n_classes (none).
NetworkSpec make_network_spec(std::size_t input_dim, std::size_t n_classes, std::size_t hidden_width,
                              std::size_t n_layers);

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LayerParams {
    Matrix weight;  // out x in
    std::vector<double> bias;
    Matrix m_weight, v_weight;
    std::vector<double> m_bias, v_bias;
    std::uint64_t step = 0;  // AdamW steps applied to this layer
};

/// Canonical parameters plus AdamW moments for every layer.
struct ParamStore {
    NetworkSpec spec;
    std::vector<LayerParams> layers;

    std::size_t n_layers() const noexcept { return layers.size(); }
    bool all_finite() const;
    std::size_t parameter_count() const;
};

/// Kaiming-normal weights (variance 2/fan_in), zero biases, zero moments.
ParamStore build_network(const NetworkSpec& spec, std::uint64_t seed);

struct LayerGrad {
    Matrix weight;
    std::vector<double> bias;
};

/// Gradients for the contiguous layer range [first_layer, first_layer + layers.size()).
struct SegmentGrads {
    std::size_t first_layer = 0;
    std::vector<LayerGrad> layers;

    double l2_norm() const;
};

/// Per-layer values kept by a forward pass for the matching backward pass.
struct LayerCache {
    Matrix input;
    Matrix pre;  // pre-activation
};

/// Runs layers [begin, end). When `cache` is non-null one entry per layer is appended.
Matrix forward_segment(const ParamStore& store, std::size_t begin, std::size_t end, const Matrix& x,
                       std::vector<LayerCache>* cache);

/// Backpropagates `grad_out` (gradient w.r.t. the output of layer end-1)
/// through [begin, end) using `cache` from the matching forward_segment.
/// Returns the gradient w.r.t. the segment input.
Matrix backward_segment(const ParamStore& store, std::size_t begin, std::size_t end,
                        std::span<const LayerCache> cache, const Matrix& grad_out, SegmentGrads& grads);

struct LossResult {
    double loss = 0.0;      // mean cross-entropy
    double accuracy = 0.0;  // argmax hit rate, lowest index wins ties
    Matrix grad_logits;     // d loss / d logits
};

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

std::vector<int> argmax_rows(const Matrix& logits);

/// Monolithic pass through every layer.
Matrix forward_full(const ParamStore& store, const Matrix& x);

struct FullPass {
    LossResult loss;
    SegmentGrads grads;  // all layers
};

/// Monolithic forward + backward; used as the split-equivalence reference
/// and by centralized training.
FullPass full_gradients(const ParamStore& store, const Matrix& x, std::span<const int> labels);

}  // namespace rds::net
