// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "reindsplit/core/matrix.hpp"

namespace rds {

enum class SplitTag : std::uint8_t { train = 0, val = 1, test = 2 };

struct Dataset {
    Matrix features;          // one row per sample
    std::vector<int> labels;  // dense ids in [0, n_classes)
    std::size_t n_classes = 0;
    std::vector<SplitTag> tags;  // empty until split_train_val_test

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return features.cols; }
    std::vector<std::size_t> indices(SplitTag tag) const;
};

/// Isotropic Gaussian clusters, one per class.
///
/// Class c is centred at `kBlobRadius * sign * e_(c mod dim)`, with the sign
/// flipping once every `dim` classes, so up to 2*dim classes get pairwise
/// distinct, equidistant-from-origin centres. Per-class counts differ by at
/// most one.
Dataset make_blobs(std::size_t n_samples, std::size_t n_classes, std::size_t dim, double spread,
                   std::uint64_t seed);

inline constexpr double kBlobRadius = 2.0;

std::vector<double> blob_center(std::size_t cls, std::size_t dim);

/// Stratified 75/15/10 split. Global counts are round(0.75 n), round(0.15 n)
/// and the remainder; per-class shares are apportioned by largest remainder.
Dataset split_train_val_test(Dataset ds, std::uint64_t seed);

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);
std::vector<int> gather_labels(std::span<const int> labels, std::span<const std::size_t> rows);

}  // namespace rds
