// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/agent/qnetwork.hpp"

#include <algorithm>
#include <string>

namespace rds::agent {

QNetwork make_qnetwork(std::size_t state_dim, std::size_t n_actions, std::uint64_t seed) {
    if (state_dim != 2 && state_dim != 3) {
        throw net::ShapeError("q-network state_dim must be 2 or 3, got " + std::to_string(state_dim));
    }
    if (n_actions < 1) throw net::ShapeError("q-network needs at least one action");
    net::NetworkSpec spec;
    spec.layers = {{state_dim, kQHiddenWidth, net::Activation::relu}, {kQHiddenWidth, n_actions, net::Activation::none}};
    return QNetwork{net::build_network(spec, seed)};
}

std::vector<double> q_forward(const QNetwork& q, std::span<const double> state) {
    if (state.size() != q.state_dim()) {
        throw net::ShapeError("state has " + std::to_string(state.size()) + " features, q-network expects " +
                              std::to_string(q.state_dim()));
    }
    Matrix x(1, state.size());
    std::copy(state.begin(), state.end(), x.data.begin());
    return net::forward_full(q.params, x).data;
}

Matrix q_forward_batch(const QNetwork& q, const Matrix& states) {
    if (states.cols != q.state_dim()) throw net::ShapeError("state batch width mismatch");
    return net::forward_full(q.params, states);
}

}  // namespace rds::agent
