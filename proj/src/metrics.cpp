#include "ssnp/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace ssnp {

Confusion micro_confusion(std::span<const LabelSet> pred, std::span<const LabelSet> truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("micro_f1: prediction and truth lengths differ");
    Confusion c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        LabelSet p = pred[i];
        LabelSet t = truth[i];
        std::sort(p.begin(), p.end());
        p.erase(std::unique(p.begin(), p.end()), p.end());
        std::sort(t.begin(), t.end());
        t.erase(std::unique(t.begin(), t.end()), t.end());
        LabelSet both;
        std::set_intersection(p.begin(), p.end(), t.begin(), t.end(), std::back_inserter(both));
        const auto hit = static_cast<long>(both.size());
        c.tp += hit;
        c.fp += static_cast<long>(p.size()) - hit;
        c.fn += static_cast<long>(t.size()) - hit;
    }
    return c;
}

double micro_f1(std::span<const LabelSet> pred, std::span<const LabelSet> truth) {
    const auto c = micro_confusion(pred, truth);
    const long denom = 2 * c.tp + c.fp + c.fn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

std::vector<LabelSet> predict_labels(const Matrix& probs, bool multi_label, double threshold) {
    std::vector<LabelSet> out(probs.rows);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        const auto r = probs.row(i);
        if (multi_label) {
            for (std::size_t c = 0; c < r.size(); ++c) {
                if (r[c] >= threshold) out[i].push_back(static_cast<int>(c));
            }
        } else if (!r.empty()) {
            out[i].push_back(static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin()));
        }
    }
    return out;
}

}  // namespace ssnp
