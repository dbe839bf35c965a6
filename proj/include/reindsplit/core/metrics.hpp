// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rds {

struct Metrics {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double mcc = 0.0;

    /// accuracy, precision, recall, f1, mcc in that order.
    std::vector<double> as_vector() const { return {accuracy, macro_precision, macro_recall, macro_f1, mcc}; }
};

/// Macro-averaged precision/recall/F1 and multiclass MCC.
///
/// Classes that appear in neither `preds` nor `labels` are left out of the
/// macro averages. Per-class ratios with a zero denominator count as 0, and
/// so does MCC when its denominator vanishes (e.g. a constant predictor).
Metrics classification_metrics(std::span<const int> preds, std::span<const int> labels, std::size_t n_classes);

/// Linear map of `values` onto [lo, hi]; a constant list maps to `hi`.
std::vector<double> minmax_normalize(std::span<const double> values, double lo = 0.01, double hi = 1.0);

}  // namespace rds
