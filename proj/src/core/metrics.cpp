// Copyright (c) 2026, The reindsplit Authors
// SPDX-License-Identifier: Apache-2.0

#include "reindsplit/core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rds {

Metrics classification_metrics(std::span<const int> preds, std::span<const int> labels, std::size_t n_classes) {
    if (preds.size() != labels.size()) {
        throw std::invalid_argument("classification_metrics: " + std::to_string(preds.size()) +
                                    " predictions vs " + std::to_string(labels.size()) + " labels");
    }
    if (preds.empty()) throw std::invalid_argument("classification_metrics: empty input");
    if (n_classes == 0) throw std::invalid_argument("classification_metrics: zero classes");

    std::vector<double> tp(n_classes, 0.0), pred_count(n_classes, 0.0), true_count(n_classes, 0.0);
    double correct = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const int p = preds[i];
        const int t = labels[i];
        if (p < 0 || t < 0 || static_cast<std::size_t>(p) >= n_classes || static_cast<std::size_t>(t) >= n_classes) {
            throw std::invalid_argument("classification_metrics: class id out of range at index " +
                                        std::to_string(i));
        }
        pred_count[p] += 1.0;
        true_count[t] += 1.0;
        if (p == t) {
            tp[p] += 1.0;
            correct += 1.0;
        }
    }

    const double total = static_cast<double>(preds.size());
    Metrics m;
    m.accuracy = correct / total;

    double sum_p = 0.0, sum_r = 0.0, sum_f = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (pred_count[c] == 0.0 && true_count[c] == 0.0) continue;
        ++present;
        const double precision = pred_count[c] > 0.0 ? tp[c] / pred_count[c] : 0.0;
        const double recall = true_count[c] > 0.0 ? tp[c] / true_count[c] : 0.0;
        const double f1 = (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        sum_p += precision;
        sum_r += recall;
        sum_f += f1;
    }
    m.macro_precision = sum_p / static_cast<double>(present);
    m.macro_recall = sum_r / static_cast<double>(present);
    m.macro_f1 = sum_f / static_cast<double>(present);

    // Gorodkin's R_K statistic over the full confusion matrix.
    double pt = 0.0, pp = 0.0, tt = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        pt += pred_count[c] * true_count[c];
        pp += pred_count[c] * pred_count[c];
        tt += true_count[c] * true_count[c];
    }
    const double cov = correct * total - pt;
    const double denom = std::sqrt((total * total - pp) * (total * total - tt));
    m.mcc = denom > 0.0 ? std::clamp(cov / denom, -1.0, 1.0) : 0.0;
    return m;
}

std::vector<double> minmax_normalize(std::span<const double> values, double lo, double hi) {
    if (values.empty()) throw std::invalid_argument("minmax_normalize: empty input");
    for (const double v : values) {
        if (!std::isfinite(v)) throw std::invalid_argument("minmax_normalize: non-finite input");
    }
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double low = *mn, high = *mx;
    std::vector<double> out(values.size(), hi);
    if (high == low) return out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double t = (values[i] - low) / (high - low);
        out[i] = std::clamp(lo + (hi - lo) * t, lo, hi);
    }
    return out;
}

}  // namespace rds
