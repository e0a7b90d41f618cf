#pragma once

#include <span>
#include <vector>

#include "ssnp/matrix.hpp"

namespace ssnp {

using LabelSet = std::vector<int>;

struct Confusion {
    long tp = 0;
    long fp = 0;
    long fn = 0;
};

/// TP/FP/FN pooled over every (instance, label) pair.
Confusion micro_confusion(std::span<const LabelSet> pred, std::span<const LabelSet> truth);

/// 2TP / (2TP + FP + FN); 0 when the denominator is 0.
double micro_f1(std::span<const LabelSet> pred, std::span<const LabelSet> truth);

/// Argmax per row (first index wins ties) for single-label data, or every
/// class with probability >= threshold for multi-label data.
std::vector<LabelSet> predict_labels(const Matrix& probs, bool multi_label, double threshold = 0.5);

}  // namespace ssnp
