// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/orchestrator/wire.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rds::orch {

namespace {

std::uint8_t cut_byte(std::size_t cut) {
    if (cut > std::numeric_limits<std::uint8_t>::max()) throw std::out_of_range("cut index does not fit in a byte");
    return static_cast<std::uint8_t>(cut);
}

void require(const proto::Message& msg, proto::MsgType type) {
    if (msg.type != type) {
        throw net::ProtocolOrderError(std::string("expected ") + proto::to_string(type) + ", got " +
                                      proto::to_string(msg.type));
    }
}

std::size_t layer_floats(const net::LayerSpec& l) { return 3 * (l.in * l.out + l.out) + 1; }

std::size_t segment_floats(const net::NetworkSpec& spec, std::size_t first, std::size_t count) {
    if (first + count > spec.n_layers()) throw net::ShapeError("segment exceeds network depth");
    std::size_t n = 0;
    for (std::size_t l = first; l < first + count; ++l) n += layer_floats(spec.layers[l]);
    return n;
}

class Flat {
public:
    explicit Flat(std::vector<float>& out) : out_(out) {}
    void put(const std::vector<double>& v) { out_.insert(out_.end(), v.begin(), v.end()); }
    void put(double x) { out_.push_back(static_cast<float>(x)); }

private:
    std::vector<float>& out_;
};

class Unflat {
public:
    explicit Unflat(const std::vector<float>& in) : in_(in) {}
    void get(std::vector<double>& v) {
        for (auto& x : v) x = in_[pos_++];
    }
    std::uint64_t get_step() {
        const float f = in_[pos_++];
        if (!(f >= 0.0f) || f != std::floor(f)) throw net::ShapeError("step counter is not a non-negative integer");
        return static_cast<std::uint64_t>(f);
    }

private:
    const std::vector<float>& in_;
    std::size_t pos_ = 0;
};

const proto::Tensor& single_tensor(const proto::Message& msg, std::size_t expect_floats) {
    const auto& t = msg.tensors.at(0);
    if (t.dims.size() != 1 || t.data.size() != expect_floats) {
        throw net::ShapeError(std::string(proto::to_string(msg.type)) + " tensor holds " +
                              std::to_string(t.data.size()) + " floats, expected " + std::to_string(expect_floats));
    }
    return t;
}

}  // namespace

proto::Message to_message(const net::SmashedBatch& batch) {
    std::vector<double> labels(batch.labels.begin(), batch.labels.end());
    return {proto::MsgType::smashed, batch.round, batch.device, cut_byte(batch.cut),
            {proto::to_tensor(batch.activations), proto::to_tensor(labels)}};
}

net::SmashedBatch smashed_from(const proto::Message& msg) {
    require(msg, proto::MsgType::smashed);
    net::SmashedBatch b;
    b.round = msg.round;
    b.device = msg.device;
    b.cut = msg.cut;
    b.activations = proto::to_matrix(msg.tensors[0]);
    const auto& lab = msg.tensors[1];
    if (lab.dims.size() != 1 || lab.data.size() != b.activations.rows) {
        throw net::ShapeError("smashed batch has " + std::to_string(lab.data.size()) + " labels for " +
                              std::to_string(b.activations.rows) + " rows");
    }
    b.labels.reserve(lab.data.size());
    for (float f : lab.data) {
        if (f < 0.0f || f != std::floor(f) || f > 1e6f) throw net::ShapeError("label is not a class index");
        b.labels.push_back(static_cast<int>(f));
    }
    return b;
}

proto::Message to_message(const net::GradAtCut& grad) {
    const double stats[2] = {grad.loss, grad.accuracy};
    return {proto::MsgType::grad_at_cut, grad.round, grad.device, cut_byte(grad.cut),
            {proto::to_tensor(grad.grad), proto::to_tensor(std::span<const double>(stats))}};
}

net::GradAtCut grad_from(const proto::Message& msg) {
    require(msg, proto::MsgType::grad_at_cut);
    net::GradAtCut g;
    g.round = msg.round;
    g.device = msg.device;
    g.cut = msg.cut;
    g.grad = proto::to_matrix(msg.tensors[0]);
    const auto& stats = msg.tensors[1];
    if (stats.dims.size() != 1 || stats.data.size() != 2) throw net::ShapeError("grad_at_cut stats must hold 2 values");
    g.loss = stats.data[0];
    g.accuracy = stats.data[1];
    return g;
}

proto::Message pull_request(std::uint32_t round, std::uint16_t device, std::size_t cut) {
    return {proto::MsgType::param_pull_request, round, device, cut_byte(cut), {}};
}

proto::Message segment_message(const net::ParamStore& store, std::uint32_t round, std::uint16_t device,
                               std::size_t cut) {
    if (cut == 0 || cut > store.n_layers()) throw net::ShapeError("segment cut out of range");
    proto::Tensor t;
    t.data.reserve(segment_floats(store.spec, 0, cut));
    Flat f(t.data);
    for (std::size_t l = 0; l < cut; ++l) {
        const auto& p = store.layers[l];
        f.put(p.weight.data);
        f.put(p.bias);
        f.put(p.m_weight.data);
        f.put(p.v_weight.data);
        f.put(p.m_bias);
        f.put(p.v_bias);
        f.put(static_cast<double>(p.step));
    }
    t.dims = {static_cast<std::uint32_t>(t.data.size())};
    return {proto::MsgType::param_segment, round, device, cut_byte(cut), {std::move(t)}};
}

void load_segment(net::ParamStore& store, const proto::Message& msg) {
    require(msg, proto::MsgType::param_segment);
    const std::size_t cut = msg.cut;
    if (cut == 0 || cut > store.n_layers()) throw net::ShapeError("segment cut out of range");
    Unflat u(single_tensor(msg, segment_floats(store.spec, 0, cut)).data);
    for (std::size_t l = 0; l < cut; ++l) {
        auto& p = store.layers[l];
        u.get(p.weight.data);
        u.get(p.bias);
        u.get(p.m_weight.data);
        u.get(p.v_weight.data);
        u.get(p.m_bias);
        u.get(p.v_bias);
        p.step = u.get_step();
    }
}

proto::Message push_message(const SegmentUpdate& update, std::uint32_t round, const net::NetworkSpec& spec) {
    if (update.first_layer != 0 || update.layers.empty()) {
        throw net::ShapeError("pushed segments start at layer 0 and are non-empty");
    }
    proto::Tensor t;
    t.data.reserve(segment_floats(spec, 0, update.layers.size()));
    Flat f(t.data);
    for (const auto& l : update.layers) {
        f.put(l.d_weight.data);
        f.put(l.d_bias);
        f.put(l.m_weight.data);
        f.put(l.v_weight.data);
        f.put(l.m_bias);
        f.put(l.v_bias);
        f.put(static_cast<double>(l.step));
    }
    t.dims = {static_cast<std::uint32_t>(t.data.size())};
    return {proto::MsgType::param_push, round, update.device, cut_byte(update.layers.size()), {std::move(t)}};
}

SegmentUpdate update_from(const proto::Message& msg, const net::NetworkSpec& spec) {
    require(msg, proto::MsgType::param_push);
    const std::size_t cut = msg.cut;
    if (cut == 0 || cut > spec.n_layers()) throw net::ShapeError("push cut out of range");
    if (msg.tensors.size() != 1) throw net::ShapeError("push carries no segment");
    Unflat u(single_tensor(msg, segment_floats(spec, 0, cut)).data);
    SegmentUpdate up{msg.device, 0, {}};
    for (std::size_t l = 0; l < cut; ++l) {
        const auto& ls = spec.layers[l];
        LayerUpdate lu;
        lu.d_weight = Matrix(ls.out, ls.in);
        lu.m_weight = Matrix(ls.out, ls.in);
        lu.v_weight = Matrix(ls.out, ls.in);
        lu.d_bias.assign(ls.out, 0.0);
        lu.m_bias.assign(ls.out, 0.0);
        lu.v_bias.assign(ls.out, 0.0);
        u.get(lu.d_weight.data);
        u.get(lu.d_bias);
        u.get(lu.m_weight.data);
        u.get(lu.v_weight.data);
        u.get(lu.m_bias);
        u.get(lu.v_bias);
        lu.step = u.get_step();
        up.layers.push_back(std::move(lu));
    }
    return up;
}

proto::Message push_ack(std::uint32_t round, std::uint16_t device, std::size_t cut) {
    return {proto::MsgType::param_push, round, device, cut_byte(cut), {}};
}

}  // namespace rds::orch
