// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/splitnet/adamw.hpp"

#include <cmath>
#include <string>

namespace rds::net {

namespace {

void update(std::vector<double>& param, const std::vector<double>& grad, std::vector<double>& m,
            std::vector<double>& v, const AdamWConfig& cfg, double bc1, double bc2) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        param[i] -= cfg.lr * cfg.weight_decay * param[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        param[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

}  // namespace

void adamw_step(ParamStore& store, const SegmentGrads& grads, const AdamWConfig& cfg) {
    if (grads.first_layer + grads.layers.size() > store.n_layers()) throw ShapeError("gradient segment out of range");
    for (std::size_t i = 0; i < grads.layers.size(); ++i) {
        const auto& g = grads.layers[i];
        const auto& p = store.layers[grads.first_layer + i];
        if (g.weight.rows != p.weight.rows || g.weight.cols != p.weight.cols || g.bias.size() != p.bias.size()) {
            throw ShapeError("gradient shape mismatch at layer " + std::to_string(grads.first_layer + i));
        }
        for (const double x : g.weight.data) {
            if (!std::isfinite(x)) throw NonFiniteError("non-finite weight gradient at layer " + std::to_string(grads.first_layer + i));
        }
        for (const double x : g.bias) {
            if (!std::isfinite(x)) throw NonFiniteError("non-finite bias gradient at layer " + std::to_string(grads.first_layer + i));
        }
    }
    for (std::size_t i = 0; i < grads.layers.size(); ++i) {
        auto& p = store.layers[grads.first_layer + i];
        const auto& g = grads.layers[i];
        ++p.step;
        const double t = static_cast<double>(p.step);
        const double bc1 = 1.0 - std::pow(cfg.beta1, t);
        const double bc2 = 1.0 - std::pow(cfg.beta2, t);
        update(p.weight.data, g.weight.data, p.m_weight.data, p.v_weight.data, cfg, bc1, bc2);
        update(p.bias, g.bias, p.m_bias, p.v_bias, cfg, bc1, bc2);
    }
}

}  // namespace rds::net
