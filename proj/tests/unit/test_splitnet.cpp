// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "reindsplit/core/dataset.hpp"
#include "reindsplit/core/rng.hpp"
#include "reindsplit/splitnet/adamw.hpp"
#include "reindsplit/splitnet/catalog.hpp"
#include "reindsplit/splitnet/gradcheck.hpp"
#include "reindsplit/splitnet/network.hpp"
#include "reindsplit/splitnet/split.hpp"

using namespace rds;
using namespace rds::net;

namespace {

NetworkSpec default_spec() { return make_network_spec(8, 5, 32, 6); }

std::vector<int> labels_for(std::size_t n, int classes) {
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i) % classes;
    return y;
}

Matrix normal_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(r, c);
    for (auto& v : m.data) v = normal(rng);
    return m;
}

// Parameters of a 1x1 linear layer with weight w.
ParamStore scalar_store(double w) {
    ParamStore s = build_network(NetworkSpec{{{1, 1, Activation::none}}}, 0);
    s.layers[0].weight.data[0] = w;
    return s;
}

SegmentGrads scalar_grad(double g) {
    SegmentGrads grads;
    LayerGrad lg;
    lg.weight = Matrix(1, 1, g);
    lg.bias = {0.0};
    grads.layers.push_back(lg);
    return grads;
}

}  // namespace

TEST_CASE("make_network_spec chains dimensions") {
    const NetworkSpec s = default_spec();
    CHECK(s.n_layers() == 6);
    CHECK(s.input_dim() == 8);
    CHECK(s.output_dim() == 5);
    CHECK(s.layers.back().act == Activation::none);
    NetworkSpec broken{{{8, 32, Activation::relu}, {16, 5, Activation::none}}};
    CHECK_THROWS_AS(broken.validate(), ShapeError);
    CHECK_THROWS_AS(build_network(broken, 1), ShapeError);
}

TEST_CASE("build_network initialization") {
    const ParamStore a = build_network(default_spec(), 7);
    const ParamStore b = build_network(default_spec(), 7);
    for (std::size_t l = 0; l < a.n_layers(); ++l) {
        CHECK(a.layers[l].weight == b.layers[l].weight);
        for (double v : a.layers[l].bias) CHECK(v == 0.0);
        for (double v : a.layers[l].m_weight.data) CHECK(v == 0.0);
        CHECK(a.layers[l].step == 0);
    }
    CHECK_FALSE(build_network(default_spec(), 8).layers[0].weight == a.layers[0].weight);

    const ParamStore wide = build_network(NetworkSpec{{{64, 256, Activation::relu}, {256, 128, Activation::none}}}, 3);
    for (const auto& layer : wide.layers) {
        const auto fan_in = static_cast<double>(layer.weight.cols);
        double sum = 0.0, sq = 0.0;
        for (double v : layer.weight.data) {
            sum += v;
            sq += v * v;
        }
        const auto n = static_cast<double>(layer.weight.size());
        const double var = sq / n - (sum / n) * (sum / n);
        CHECK(var == doctest::Approx(2.0 / fan_in).epsilon(0.10));
    }
}

TEST_CASE("catalog_cuts on the default network") {
    const auto cat = catalog_cuts(default_spec(), 5, CapacityRange{0.5, 7.5});
    REQUIRE(cat.size() == 5);
    // Multiply-accumulates per layer: 8*32, then 32*32 four times, then 32*5.
    const double macs[6] = {256, 1024, 1024, 1024, 1024, 160};
    const double total = 4512;
    double client = 0;
    for (std::size_t k = 1; k <= 5; ++k) {
        client += macs[k - 1];
        CHECK(cat.at(k).cut_layer == k);
        CHECK(cat.at(k).load_fraction == doctest::Approx(client / total).epsilon(1e-15));
        CHECK(cat.at(k).r_req == doctest::Approx(0.5 + 7.0 * client / total).epsilon(1e-15));
        CHECK(cat.at(k).t_req == cat.at(k).r_req);
        if (k > 1) {
            CHECK(cat.at(k).load_fraction > cat.at(k - 1).load_fraction);
            CHECK(cat.at(k).cut_layer > cat.at(k - 1).cut_layer);
        }
    }
    CHECK(cat.at(5).load_fraction <= 1.0);
    CHECK_THROWS_AS(cat.at(0), std::out_of_range);
    CHECK_THROWS_AS(cat.at(6), std::out_of_range);
}

TEST_CASE("catalog_cuts on uniform-width networks") {
    NetworkSpec uniform;
    for (int i = 0; i < 6; ++i) uniform.layers.push_back({16, 16, i == 5 ? Activation::none : Activation::relu});
    const auto cat = catalog_cuts(uniform, 5, CapacityRange{0.5, 7.5});
    for (std::size_t k = 1; k <= 5; ++k) CHECK(cat.at(k).load_fraction == doctest::Approx(k / 6.0).epsilon(1e-15));

    NetworkSpec four;
    for (int i = 0; i < 4; ++i) four.layers.push_back({8, 8, Activation::relu});
    const auto half = catalog_cuts(four, 3, CapacityRange{0.5, 7.5});
    CHECK(half.at(2).cut_layer == 2);
    CHECK(half.at(2).load_fraction == 0.5);
    CHECK(half.at(2).r_req == 4.0);

    // ceil(k * 12 / 4): 3, 6, 9
    NetworkSpec twelve;
    for (int i = 0; i < 12; ++i) twelve.layers.push_back({4, 4, Activation::relu});
    const auto deep = catalog_cuts(twelve, 3, CapacityRange{0.5, 7.5});
    CHECK(deep.at(1).cut_layer == 3);
    CHECK(deep.at(2).cut_layer == 6);
    CHECK(deep.at(3).cut_layer == 9);

    CHECK_THROWS(catalog_cuts(default_spec(), 6, CapacityRange{0.5, 7.5}));
    const std::vector<SplitCost> costs{{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}};
    const auto custom = catalog_cuts(default_spec(), 5, CapacityRange{0.5, 7.5}, costs);
    CHECK(custom.at(3).r_req == 3.0);
    CHECK(custom.at(3).t_req == 4.0);
}

TEST_CASE("forward_client with an identity layer passes inputs through") {
    NetworkSpec spec{{{4, 4, Activation::none}, {4, 3, Activation::none}}};
    ParamStore store = build_network(spec, 1);
    store.layers[0].weight = Matrix(4, 4);
    for (std::size_t i = 0; i < 4; ++i) store.layers[0].weight(i, i) = 1.0;
    const Matrix x = normal_matrix(5, 4, 2);
    ForwardCache cache;
    const auto smashed = forward_client(store, cache, 3, 1, 1, x, labels_for(5, 3));
    CHECK(smashed.activations == x);
    CHECK(smashed.round == 3);
    CHECK(smashed.device == 1);
    CHECK(cache.size() == 1);
}

TEST_CASE("split execution matches the monolithic pass exactly") {
    const ParamStore store = build_network(default_spec(), 21);
    const Matrix x = normal_matrix(32, 8, 22);
    const auto y = labels_for(32, 5);
    const Matrix logits = forward_full(store, x);
    const FullPass full = full_gradients(store, x, y);
    for (std::size_t k = 1; k <= 5; ++k) {
        ForwardCache cache;
        const auto smashed = forward_client(store, cache, 0, 0, k, x, y);
        CHECK(smashed.activations.cols == store.spec.layers[k - 1].out);
        CHECK(forward_segment(store, k, 6, smashed.activations, nullptr) == logits);
        const auto server = server_backward(store, smashed);
        const auto client = backward_client(store, cache, server.at_cut);
        CHECK(server.at_cut.loss == full.loss.loss);
        for (std::size_t l = 0; l < k; ++l) {
            CHECK(client.layers[l].weight == full.grads.layers[l].weight);
            CHECK(client.layers[l].bias == full.grads.layers[l].bias);
        }
        for (std::size_t l = k; l < 6; ++l) {
            CHECK(server.grads.layers[l - k].weight == full.grads.layers[l].weight);
            CHECK(server.grads.layers[l - k].bias == full.grads.layers[l].bias);
        }
    }
}

TEST_CASE("forward_client rejects bad shapes and cuts") {
    const ParamStore store = build_network(default_spec(), 1);
    ForwardCache cache;
    const auto y = labels_for(32, 5);
    CHECK_THROWS_AS(forward_client(store, cache, 0, 0, 2, Matrix(32, 7), y), ShapeError);
    CHECK_THROWS_AS(forward_client(store, cache, 0, 0, 2, Matrix(32, 8), labels_for(31, 5)), ShapeError);
    CHECK_THROWS(forward_client(store, cache, 0, 0, 0, Matrix(32, 8), y));
    CHECK_THROWS(forward_client(store, cache, 0, 0, 6, Matrix(32, 8), y));
}

TEST_CASE("server loss on degenerate logits") {
    ParamStore store = build_network(default_spec(), 4);
    const Matrix x = normal_matrix(16, 8, 5);
    const auto y = labels_for(16, 5);
    store.layers[5].weight = Matrix(5, 32);
    ForwardCache cache;
    const auto smashed = forward_client(store, cache, 0, 0, 3, x, y);
    CHECK(server_backward(store, smashed).at_cut.loss == doctest::Approx(std::log(5.0)).epsilon(1e-14));

    Matrix logits(4, 3);
    const std::vector<int> yy{0, 2, 1, 2};
    for (std::size_t i = 0; i < 4; ++i) logits(i, static_cast<std::size_t>(yy[i])) = 60.0;
    const auto sat = softmax_cross_entropy(logits, yy);
    CHECK(sat.loss < 1e-20);
    CHECK(sat.accuracy == 1.0);
}

TEST_CASE("forward_server_and_loss updates only the server segment") {
    ParamStore store = build_network(default_spec(), 6);
    const ParamStore before = store;
    const Matrix x = normal_matrix(8, 8, 7);
    ForwardCache cache;
    const auto smashed = forward_client(store, cache, 2, 4, 2, x, labels_for(8, 5));
    const GradAtCut g = forward_server_and_loss(store, smashed, AdamWConfig{1e-3, 1e-4});
    CHECK(g.round == 2);
    CHECK(g.device == 4);
    CHECK(g.cut == 2);
    CHECK(g.grad.rows == 8);
    CHECK(g.grad.cols == 32);
    for (std::size_t l = 0; l < 2; ++l) CHECK(store.layers[l].weight == before.layers[l].weight);
    for (std::size_t l = 2; l < 6; ++l) {
        CHECK_FALSE(store.layers[l].weight == before.layers[l].weight);
        CHECK(store.layers[l].step == 1);
    }
}

TEST_CASE("non-finite smashed activations name round and device") {
    ParamStore store = build_network(default_spec(), 6);
    SmashedBatch s;
    s.round = 17;
    s.device = 3;
    s.cut = 2;
    s.activations = Matrix(2, 32);
    s.activations(1, 4) = NAN;
    s.labels = {0, 1};
    try {
        forward_server_and_loss(store, s, AdamWConfig{});
        FAIL("accepted NaN activations");
    } catch (const NonFiniteError& e) {
        const std::string what = e.what();
        CHECK(what.find("17") != std::string::npos);
        CHECK(what.find("3") != std::string::npos);
    }
}

TEST_CASE("backward_client cache discipline") {
    const ParamStore store = build_network(default_spec(), 8);
    const Matrix x = normal_matrix(4, 8, 9);
    const auto y = labels_for(4, 5);
    ForwardCache cache;
    const auto a = forward_client(store, cache, 1, 0, 2, x, y);
    const auto b = forward_client(store, cache, 1, 1, 3, x, y);
    CHECK(cache.size() == 2);

    GradAtCut zero{1, 1, 3, Matrix(4, 32), 0.0, 0.0};
    const auto gz = backward_client(store, cache, zero);
    for (const auto& l : gz.layers) {
        for (double v : l.weight.data) CHECK(v == 0.0);
        for (double v : l.bias) CHECK(v == 0.0);
    }
    CHECK_THROWS_AS(backward_client(store, cache, zero), ProtocolOrderError);

    GradAtCut wrong_cut{1, 0, 3, Matrix(4, 32), 0.0, 0.0};
    CHECK_THROWS_AS(backward_client(store, cache, wrong_cut), ProtocolOrderError);
    GradAtCut missing{9, 0, 2, Matrix(4, 32), 0.0, 0.0};
    CHECK_THROWS_AS(backward_client(store, cache, missing), ProtocolOrderError);
    (void)a;
    (void)b;
}

TEST_CASE("adamw hand-evaluated steps") {
    SUBCASE("first step on a scalar") {
        ParamStore s = scalar_store(1.0);
        adamw_step(s, scalar_grad(1.0), AdamWConfig{0.1, 0.0});
        // m_hat = v_hat = 1 after bias correction
        CHECK(s.layers[0].weight.data[0] == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));
        CHECK(s.layers[0].step == 1);
    }
    SUBCASE("pure decay") {
        ParamStore s = scalar_store(2.0);
        adamw_step(s, scalar_grad(0.0), AdamWConfig{0.1, 0.1});
        CHECK(s.layers[0].weight.data[0] == doctest::Approx(2.0 * 0.99).epsilon(1e-15));
    }
    SUBCASE("fixed point") {
        ParamStore s = scalar_store(0.7);
        adamw_step(s, scalar_grad(0.0), AdamWConfig{0.1, 0.0});
        CHECK(s.layers[0].weight.data[0] == 0.7);
    }
    SUBCASE("second step uses bias-corrected moments") {
        ParamStore s = scalar_store(1.0);
        AdamWConfig opt{0.01, 0.0};
        adamw_step(s, scalar_grad(1.0), opt);
        adamw_step(s, scalar_grad(-1.0), opt);
        const double m = 0.9 * 0.1 + 0.1 * -1.0, v = 0.999 * 0.001 + 0.001;
        const double mh = m / (1 - 0.81), vh = v / (1 - 0.999 * 0.999);
        const double w1 = 1.0 - 0.01 / (1.0 + 1e-8);
        CHECK(s.layers[0].weight.data[0] == doctest::Approx(w1 - 0.01 * mh / (std::sqrt(vh) + 1e-8)).epsilon(1e-14));
    }
    SUBCASE("non-finite gradients are rejected before any change") {
        ParamStore s = scalar_store(1.0);
        CHECK_THROWS_AS(adamw_step(s, scalar_grad(INFINITY), AdamWConfig{}), NonFiniteError);
        CHECK(s.layers[0].weight.data[0] == 1.0);
        CHECK(s.layers[0].step == 0);
    }
}

TEST_CASE("one AdamW step does not increase the batch loss") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ParamStore store = build_network(default_spec(), 100 + seed);
        const Matrix x = normal_matrix(32, 8, 200 + seed);
        const auto y = labels_for(32, 5);
        const auto pass = full_gradients(store, x, y);
        adamw_step(store, pass.grads, AdamWConfig{1e-3, 1e-4});
        CHECK(softmax_cross_entropy(forward_full(store, x), y).loss <= pass.loss.loss);
    }
}

TEST_CASE("finite differences agree with analytic gradients") {
    SUBCASE("3-layer ReLU net, batch 4") {
        const ParamStore store = build_network(make_network_spec(6, 4, 10, 3), 31);
        const Matrix x = jittered_inputs(store, 4, 32);
        CHECK(kink_margin(store, x) >= 1e-3);
        for (std::size_t cut = 1; cut <= 2; ++cut) {
            const auto r = finite_diff_check(store, x, labels_for(4, 4), cut);
            CHECK(r.max_rel_error < 1e-6);
            CHECK(r.checked == store.parameter_count() + 4 * 10);
        }
    }
    SUBCASE("linear net under a squared-error loss") {
        // Every parameter enters the loss quadratically, so central differences carry no truncation error
        // and a wide step keeps rounding small.
        NetworkSpec lin{{{5, 6, Activation::none}, {6, 6, Activation::none}, {6, 3, Activation::none}}};
        const ParamStore store = build_network(lin, 41);
        const Matrix x = normal_matrix(4, 5, 42);
        const Matrix target = normal_matrix(4, 3, 43);
        const LossFn sq = [&](const ParamStore& s) {
            const Matrix out = forward_full(s, x);
            double l = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) l += 0.5 * (out.data[i] - target.data[i]) * (out.data[i] - target.data[i]);
            return l;
        };
        std::vector<LayerCache> cache;
        const Matrix out = forward_segment(store, 0, 3, x, &cache);
        Matrix grad_out = out;
        for (std::size_t i = 0; i < out.size(); ++i) grad_out.data[i] -= target.data[i];
        SegmentGrads grads;
        backward_segment(store, 0, 3, cache, grad_out, grads);
        const auto r = compare_param_gradients(store, grads, sq, 1e-2);
        MESSAGE("linear net max rel error " << r.max_rel_error);
        CHECK(r.checked == store.parameter_count());
        CHECK(r.max_rel_error < 1e-9);
    }
    SUBCASE("sign-flipped client backward is caught") {
        const ParamStore store = build_network(make_network_spec(6, 4, 10, 3), 31);
        const Matrix x = jittered_inputs(store, 4, 32);
        testing::set_client_backward_fault(true);
        const auto r = finite_diff_check(store, x, labels_for(4, 4), 2);
        testing::set_client_backward_fault(false);
        CHECK(r.max_rel_error > 0.1);
    }
}

TEST_CASE("relative_error floor") {
    CHECK(relative_error(1.0, 1.0) == 0.0);
    CHECK(relative_error(2.0, 1.0) == 0.5);
    CHECK(relative_error(0.0, 1e-9) == doctest::Approx(1e-6));
}

TEST_CASE("centralized training on separable blobs") {
    const Dataset ds = split_train_val_test(make_blobs(1000, 5, 8, 0.5, 1), 1);
    ParamStore store = build_network(make_network_spec(8, 5, 32, 3), 2);
    const auto train = ds.indices(SplitTag::train);
    Rng rng(3);
    const AdamWConfig opt{1e-2, 1e-4};
    for (int epoch = 0; epoch < 10; ++epoch) {
        std::vector<std::size_t> order = train;
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += 32) {
            const std::span<const std::size_t> rows(order.data() + start, std::min<std::size_t>(32, order.size() - start));
            const auto pass = full_gradients(store, gather_rows(ds.features, rows), gather_labels(ds.labels, rows));
            adamw_step(store, pass.grads, opt);
        }
    }
    const auto test = ds.indices(SplitTag::test);
    const auto pred = argmax_rows(forward_full(store, gather_rows(ds.features, test)));
    const auto y = gather_labels(ds.labels, test);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hits += pred[i] == y[i];
    const double acc = static_cast<double>(hits) / static_cast<double>(y.size());
    MESSAGE("centralized 3-layer test accuracy " << acc);
    CHECK(acc >= 0.95);
}
