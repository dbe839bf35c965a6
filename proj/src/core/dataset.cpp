// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "reindsplit/core/rng.hpp"

namespace rds {

std::vector<std::size_t> Dataset::indices(SplitTag tag) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tags.size(); ++i) {
        if (tags[i] == tag) out.push_back(i);
    }
    return out;
}

std::vector<double> blob_center(std::size_t cls, std::size_t dim) {
    std::vector<double> c(dim, 0.0);
    const double sign = (cls / dim) % 2 == 0 ? 1.0 : -1.0;
    c[cls % dim] = sign * kBlobRadius;
    return c;
}

Dataset make_blobs(std::size_t n_samples, std::size_t n_classes, std::size_t dim, double spread, std::uint64_t seed) {
    if (n_classes == 0) throw std::invalid_argument("make_blobs: zero classes");
    if (dim < 2) throw std::invalid_argument("make_blobs: dim must be at least 2");
    if (n_samples < n_classes) throw std::invalid_argument("make_blobs: fewer samples than classes");
    if (n_classes > 2 * dim) throw std::invalid_argument("make_blobs: more than 2*dim classes");
    if (spread < 0.0 || !std::isfinite(spread)) throw std::invalid_argument("make_blobs: bad spread");

    Rng rng = make_rng(seed, StreamTag::dataset);
    std::vector<int> labels(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) labels[i] = static_cast<int>(i % n_classes);
    std::shuffle(labels.begin(), labels.end(), rng);

    std::vector<std::vector<double>> centers;
    for (std::size_t c = 0; c < n_classes; ++c) centers.push_back(blob_center(c, dim));

    Dataset ds;
    ds.n_classes = n_classes;
    ds.features = Matrix(n_samples, dim);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const auto& center = centers[static_cast<std::size_t>(labels[i])];
        for (std::size_t d = 0; d < dim; ++d) ds.features(i, d) = center[d] + spread * noise(rng);
    }
    ds.labels = std::move(labels);
    return ds;
}

namespace {

// Hamilton apportionment of `total` across buckets proportional to `weights`,
// never exceeding `caps`. Ties go to the lower index.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<std::size_t>& weights,
                                   const std::vector<std::size_t>& caps) {
    const double wsum = static_cast<double>(std::accumulate(weights.begin(), weights.end(), std::size_t{0}));
    std::vector<std::size_t> out(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> rema;
    std::size_t given = 0;
    for (std::size_t c = 0; c < weights.size(); ++c) {
        const double quota = static_cast<double>(total) * static_cast<double>(weights[c]) / wsum;
        out[c] = std::min(static_cast<std::size_t>(std::floor(quota)), caps[c]);
        given += out[c];
        rema.emplace_back(quota - std::floor(quota), c);
    }
    std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    while (given < total) {
        bool progressed = false;
        for (const auto& [r, c] : rema) {
            if (given == total) break;
            if (out[c] < caps[c]) {
                ++out[c];
                ++given;
                progressed = true;
            }
        }
        if (!progressed) break;
    }
    return out;
}

}  // namespace

Dataset split_train_val_test(Dataset ds, std::uint64_t seed) {
    const std::size_t n = ds.size();
    if (n < ds.n_classes) throw std::invalid_argument("split_train_val_test: fewer samples than classes");
    if (n < 20) throw std::invalid_argument("split_train_val_test: need at least 20 samples, got " + std::to_string(n));

    const auto n_train = static_cast<std::size_t>(std::llround(0.75 * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::llround(0.15 * static_cast<double>(n)));

    std::vector<std::vector<std::size_t>> by_class(ds.n_classes);
    for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    std::vector<std::size_t> counts(ds.n_classes);
    for (std::size_t c = 0; c < ds.n_classes; ++c) counts[c] = by_class[c].size();

    const auto train_share = apportion(n_train, counts, counts);
    std::vector<std::size_t> left(ds.n_classes);
    for (std::size_t c = 0; c < ds.n_classes; ++c) left[c] = counts[c] - train_share[c];
    const auto val_share = apportion(n_val, counts, left);

    Rng rng = make_rng(seed, StreamTag::data_split);
    ds.tags.assign(n, SplitTag::test);
    for (std::size_t c = 0; c < ds.n_classes; ++c) {
        auto& idx = by_class[c];
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t j = 0; j < idx.size(); ++j) {
            if (j < train_share[c]) ds.tags[idx[j]] = SplitTag::train;
            else if (j < train_share[c] + val_share[c]) ds.tags[idx[j]] = SplitTag::val;
        }
    }
    return ds;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), m.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = m.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

std::vector<int> gather_labels(std::span<const int> labels, std::span<const std::size_t> rows) {
    std::vector<int> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = labels[rows[i]];
    return out;
}

}  // namespace rds
