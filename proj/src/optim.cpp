#include "ssnp/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssnp {

void Adam::step(ParamStore& params, double lr) {
    if (m_.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto& v = params.tensor(i).value();
            m_.emplace_back(v.rows, v.cols);
            v_.emplace_back(v.rows, v.cols);
        }
    }
    if (m_.size() != params.size()) throw std::logic_error("Adam: parameter set changed between steps");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params.tensor(i);
        if (!p.has_grad()) throw std::logic_error("Adam: parameter '" + params.name(i) + "' has no gradient");
        const auto& g = p.grad().data;
        auto& w = p.mutable_value().data;
        auto& m = m_[i].data;
        auto& v = v_[i].data;
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
            w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
        }
    }
}

double ReduceLrOnPlateau::step(double val_loss) {
    if (!has_best_ || val_loss < best_ - opts_.threshold) {
        best_ = val_loss;
        has_best_ = true;
        bad_epochs_ = 0;
        return lr_;
    }
    if (++bad_epochs_ > opts_.patience) {
        lr_ = std::max(lr_ * opts_.factor, opts_.min_lr);
        bad_epochs_ = 0;
    }
    return lr_;
}

}  // namespace ssnp
